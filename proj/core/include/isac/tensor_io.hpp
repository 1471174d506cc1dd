#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "isac/sensing_dft.hpp"
#include "isac/tensor.hpp"
#include "isac/waveform.hpp"

namespace isac {

/// Container layout:
///
///   ISACTENSOR 1
///   kind: echo
///   dtype: complex128
///   shape: 8 16 16
///   seed: 42
///   config_hash: 0123456789abcdef
///   <any further "key: value" metadata lines>
///   end
///   <raw little-endian float64 (re, im) pairs, row-major>
struct TensorHeader {
  std::string kind;
  std::vector<int> shape;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::map<std::string, std::string> extra;
};

struct TensorFile {
  TensorHeader header;
  std::vector<std::complex<double>> data;
};

void write_tensor(const std::filesystem::path& path, const TensorHeader& header,
                  std::span<const std::complex<double>> data);
TensorFile read_tensor(const std::filesystem::path& path);

void save_echo(const std::filesystem::path& path, const EchoCube& y, std::uint64_t seed,
               const std::string& config_hash);
EchoCube load_echo(const std::filesystem::path& path);

/// The bin-axis offsets and periods travel as header metadata.
void save_processed(const std::filesystem::path& path, const ProcessedCube& cube, std::uint64_t seed,
                    const std::string& config_hash);
ProcessedCube load_processed(const std::filesystem::path& path);

/// Stored as shape (N_s, N_t, K); path metadata goes into the header.
void save_channel(const std::filesystem::path& path, const ChannelSet& h, const std::string& config_hash);
ChannelSet load_channel(const std::filesystem::path& path);

}  // namespace isac

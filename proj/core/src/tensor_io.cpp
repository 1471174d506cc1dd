#include "isac/tensor_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "isac/errors.hpp"

namespace isac {

namespace {

constexpr const char* kMagic = "ISACTENSOR 1";

static_assert(std::endian::native == std::endian::little, "tensor container assumes a little-endian host");

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw FormatError("bad number '" + s + "'");
  return v;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

std::size_t element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw FormatError("negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

}  // namespace

void write_tensor(const std::filesystem::path& path, const TensorHeader& header,
                  std::span<const std::complex<double>> data) {
  if (element_count(header.shape) != data.size()) throw DimensionError("write_tensor: shape does not match data size");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << kMagic << '\n';
  out << "kind: " << header.kind << '\n';
  out << "dtype: complex128\n";
  out << "shape:";
  for (int d : header.shape) out << ' ' << d;
  out << '\n';
  out << "seed: " << header.seed << '\n';
  out << "config_hash: " << header.config_hash << '\n';
  for (const auto& [k, v] : header.extra) {
    if (k.find(':') != std::string::npos || k.find('\n') != std::string::npos || v.find('\n') != std::string::npos)
      throw FormatError("write_tensor: metadata key/value may not contain ':' or newlines");
    out << k << ": " << v << '\n';
  }
  out << "end\n";
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(std::complex<double>)));
  if (!out) throw FormatError("write failed for " + path.string());
}

TensorFile read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw FormatError(path.string() + ": not a tensor container");

  TensorFile file;
  bool have_shape = false;
  while (true) {
    if (!std::getline(in, line)) throw FormatError(path.string() + ": header not terminated");
    if (line == "end") break;
    const auto colon = line.find(": ");
    if (colon == std::string::npos) throw FormatError(path.string() + ": malformed header line '" + line + "'");
    const std::string key = line.substr(0, colon);
    const std::string value = line.substr(colon + 2);
    if (key == "kind") {
      file.header.kind = value;
    } else if (key == "dtype") {
      if (value != "complex128") throw FormatError("unsupported dtype " + value);
    } else if (key == "shape") {
      for (const auto& tok : split_ws(value)) file.header.shape.push_back(std::stoi(tok));
      have_shape = true;
    } else if (key == "seed") {
      file.header.seed = std::stoull(value);
    } else if (key == "config_hash") {
      file.header.config_hash = value;
    } else {
      file.header.extra[key] = value;
    }
  }
  if (!have_shape) throw FormatError(path.string() + ": missing shape");
  file.data.resize(element_count(file.header.shape));
  in.read(reinterpret_cast<char*>(file.data.data()),
          static_cast<std::streamsize>(file.data.size() * sizeof(std::complex<double>)));
  if (in.gcount() != static_cast<std::streamsize>(file.data.size() * sizeof(std::complex<double>)))
    throw FormatError(path.string() + ": truncated payload");
  return file;
}

void save_echo(const std::filesystem::path& path, const EchoCube& y, std::uint64_t seed,
               const std::string& config_hash) {
  TensorHeader h;
  h.kind = "echo";
  h.shape = {y.dim(0), y.dim(1), y.dim(2)};
  h.seed = seed;
  h.config_hash = config_hash;
  write_tensor(path, h, y.data());
}

EchoCube load_echo(const std::filesystem::path& path) {
  const auto f = read_tensor(path);
  if (f.header.kind != "echo" || f.header.shape.size() != 3) throw FormatError(path.string() + ": not an echo cube");
  EchoCube y(f.header.shape[0], f.header.shape[1], f.header.shape[2]);
  std::copy(f.data.begin(), f.data.end(), y.data().begin());
  return y;
}

namespace {

void put_axis(TensorHeader& h, const std::string& name, const BinAxis& axis) {
  h.extra[name + ".first"] = std::to_string(axis.first);
  h.extra[name + ".period"] = std::to_string(axis.period);
}

BinAxis get_axis(const TensorFile& f, const std::string& name, int count) {
  const auto first = f.header.extra.find(name + ".first");
  const auto period = f.header.extra.find(name + ".period");
  if (first == f.header.extra.end() || period == f.header.extra.end())
    throw FormatError("processed cube: missing " + name + " axis metadata");
  try {
    return BinAxis{std::stoi(first->second), count, std::stoi(period->second)};
  } catch (const std::exception&) {
    throw FormatError("processed cube: bad " + name + " axis metadata");
  }
}

}  // namespace

void save_processed(const std::filesystem::path& path, const ProcessedCube& cube, std::uint64_t seed,
                    const std::string& config_hash) {
  TensorHeader h;
  h.kind = "processed";
  h.shape = {cube.values.dim(0), cube.values.dim(1), cube.values.dim(2)};
  h.seed = seed;
  h.config_hash = config_hash;
  put_axis(h, "angle", cube.angle);
  put_axis(h, "delay", cube.delay);
  put_axis(h, "doppler", cube.doppler);
  write_tensor(path, h, cube.values.data());
}

ProcessedCube load_processed(const std::filesystem::path& path) {
  const auto f = read_tensor(path);
  if (f.header.kind != "processed" || f.header.shape.size() != 3)
    throw FormatError(path.string() + ": not a processed cube");
  ProcessedCube c;
  c.values = Cube3(f.header.shape[0], f.header.shape[1], f.header.shape[2]);
  std::copy(f.data.begin(), f.data.end(), c.values.data().begin());
  c.angle = get_axis(f, "angle", f.header.shape[0]);
  c.delay = get_axis(f, "delay", f.header.shape[1]);
  c.doppler = get_axis(f, "doppler", f.header.shape[2]);
  return c;
}

void save_channel(const std::filesystem::path& path, const ChannelSet& h, const std::string& config_hash) {
  if (h.h.empty()) throw DimensionError("save_channel: empty channel set");
  const int n_s = h.num_subcarriers();
  const int n_t = static_cast<int>(h.h[0].rows());
  const int k = static_cast<int>(h.h[0].cols());
  TensorHeader hdr;
  hdr.kind = "channel";
  hdr.shape = {n_s, n_t, k};
  hdr.seed = h.seed;
  hdr.config_hash = config_hash;
  for (std::size_t u = 0; u < h.users.size(); ++u) {
    const auto& user = h.users[u];
    const std::string base = "user." + std::to_string(u);
    hdr.extra[base] = fmt_double(user.d) + " " + fmt_double(user.theta) + " " + fmt_double(user.delta.real()) + " " +
                      fmt_double(user.delta.imag());
    for (std::size_t p = 0; p < user.scatterers.size(); ++p) {
      const auto& s = user.scatterers[p];
      hdr.extra[base + ".path." + std::to_string(p)] = fmt_double(s.d) + " " + fmt_double(s.theta) + " " +
                                                        fmt_double(s.delta.real()) + " " + fmt_double(s.delta.imag());
    }
  }
  std::vector<std::complex<double>> flat;
  flat.reserve(static_cast<std::size_t>(n_s * n_t * k));
  for (const auto& hi : h.h)
    for (int r = 0; r < n_t; ++r)
      for (int c = 0; c < k; ++c) flat.push_back(hi(r, c));
  write_tensor(path, hdr, flat);
}

ChannelSet load_channel(const std::filesystem::path& path) {
  const auto f = read_tensor(path);
  if (f.header.kind != "channel" || f.header.shape.size() != 3) throw FormatError(path.string() + ": not a channel set");
  const int n_s = f.header.shape[0], n_t = f.header.shape[1], k = f.header.shape[2];
  ChannelSet out;
  out.seed = f.header.seed;
  std::size_t idx = 0;
  for (int i = 0; i < n_s; ++i) {
    Eigen::MatrixXcd hi(n_t, k);
    for (int r = 0; r < n_t; ++r)
      for (int c = 0; c < k; ++c) hi(r, c) = f.data[idx++];
    out.h.push_back(std::move(hi));
  }
  auto parse4 = [&](const std::string& v) {
    const auto toks = split_ws(v);
    if (toks.size() != 4) throw FormatError("bad path metadata '" + v + "'");
    return std::array<double, 4>{parse_double(toks[0]), parse_double(toks[1]), parse_double(toks[2]),
                                 parse_double(toks[3])};
  };
  for (int u = 0;; ++u) {
    const std::string base = "user." + std::to_string(u);
    const auto it = f.header.extra.find(base);
    if (it == f.header.extra.end()) break;
    const auto v = parse4(it->second);
    UserPaths user;
    user.d = v[0];
    user.theta = v[1];
    user.delta = {v[2], v[3]};
    for (int p = 0;; ++p) {
      const auto pit = f.header.extra.find(base + ".path." + std::to_string(p));
      if (pit == f.header.extra.end()) break;
      const auto pv = parse4(pit->second);
      user.scatterers.push_back({pv[0], pv[1], {pv[2], pv[3]}});
    }
    out.users.push_back(std::move(user));
  }
  return out;
}

}  // namespace isac

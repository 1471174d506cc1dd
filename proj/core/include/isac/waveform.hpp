#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "isac/config.hpp"
#include "isac/physics.hpp"
#include "isac/tensor.hpp"

namespace isac {

/// Unit-average-power QAM symbols, one K x L matrix per subcarrier
/// (column l is s_i[l]).
struct SymbolTensor {
  std::vector<Eigen::MatrixXcd> s;

  int num_subcarriers() const { return static_cast<int>(s.size()); }
};

/// Per-subcarrier precoders W_i (N_t x K).
struct PrecoderSet {
  std::vector<Eigen::MatrixXcd> w;

  int num_subcarriers() const { return static_cast<int>(w.size()); }
  double total_power() const;
  static PrecoderSet zeros(int n_s, int n_t, int k);
};

struct ScatterPath {
  double d = 0.0;
  double theta = 0.0;
  cdouble delta{0.0, 0.0};
};

struct UserPaths {
  double d = 0.0;      // LoS length, m
  double theta = 0.0;  // LoS direction, rad
  cdouble delta{1.0, 0.0};
  std::vector<ScatterPath> scatterers;
};

/// Frequency-domain downlink channels; h[i] is N_t x K with column k = h_{i,k}.
struct ChannelSet {
  std::vector<Eigen::MatrixXcd> h;
  std::vector<UserPaths> users;
  std::uint64_t seed = 0;

  int num_subcarriers() const { return static_cast<int>(h.size()); }
};

/// Parameter laws of the LoS + scattering channel model. Defaults follow the
/// simulation setup: one LoS path with unit gain, five scatterers with
/// CN(0.1, 0.01) gains, LoS length U(50, 100) m, LoS angle U(-90, 90) deg,
/// scatterer length within +-15 m and angle within +-10 deg of the LoS.
struct ChannelModel {
  int num_scatterers = 5;
  cdouble los_gain{1.0, 0.0};
  cdouble scatter_mean{0.1, 0.0};
  double scatter_variance = 0.01;
  double d_min = 50.0;
  double d_max = 100.0;
  double d_spread = 15.0;
  double theta_min = -kPi / 2;
  double theta_max = kPi / 2;
  double theta_spread = 10.0 * kPi / 180.0;
  int max_redraws = 100;
  double rank_tolerance = 1e-9;  // relative singular-value floor
};

/// Gray-labelled square QAM normalized to unit average power; index = bit label.
std::vector<cdouble> qam_constellation(int order);

SymbolTensor generate_symbols(const SystemConfig& cfg, std::uint64_t seed);

/// x_i = W_i s_i.
Eigen::VectorXcd precode(const Eigen::MatrixXcd& w, const Eigen::VectorXcd& s);

/// Transmitted block X_i = W_i S_i (N_t x L) for every subcarrier.
std::vector<Eigen::MatrixXcd> transmit_blocks(const PrecoderSet& w, const SymbolTensor& s);

/// Channel of one user on subcarrier i from its path list.
Eigen::VectorXcd user_channel(const UserPaths& user, int i, const SystemConfig& cfg);

ChannelSet generate_channel(const SystemConfig& cfg, std::uint64_t seed, const ChannelModel& model = {});

/// True when every H_i has numerical column rank K.
bool full_column_rank(const ChannelSet& h, double rel_tol = 1e-9);

/// Signal-to-interference-plus-noise ratio of user k on subcarrier i.
double user_sinr(const Eigen::MatrixXcd& h_i, const Eigen::MatrixXcd& w_i, int k, double sigma_c_sq);

/// Total downlink sum rate in bit/s/Hz over all subcarriers and users (log base 2).
double sum_rate(const ChannelSet& h, const PrecoderSet& w, double sigma_c_sq);

/// Noiseless or noisy echo cube y(m, i, l), shape N_r x N_s x L.
EchoCube generate_echo(const TargetScene& scene, const PrecoderSet& w, const SymbolTensor& s,
                       const SystemConfig& cfg, std::uint64_t seed, bool noiseless);

/// Same model from precomputed transmit blocks X_i.
EchoCube generate_echo(const TargetScene& scene, const std::vector<Eigen::MatrixXcd>& x,
                       const SystemConfig& cfg, std::uint64_t seed, bool noiseless);

}  // namespace isac

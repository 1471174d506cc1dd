#include "isac/waveform.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "isac/errors.hpp"
#include "isac/rng.hpp"

namespace isac {

double PrecoderSet::total_power() const {
  double p = 0.0;
  for (const auto& wi : w) p += wi.squaredNorm();
  return p;
}

PrecoderSet PrecoderSet::zeros(int n_s, int n_t, int k) {
  PrecoderSet out;
  out.w.assign(static_cast<std::size_t>(n_s), Eigen::MatrixXcd::Zero(n_t, k));
  return out;
}

namespace {

int gray_to_binary(int g) {
  int b = 0;
  for (; g != 0; g >>= 1) b ^= g;
  return b;
}

int log2_exact(int v) {
  int bits = 0;
  while ((1 << bits) < v) ++bits;
  return bits;
}

}  // namespace

std::vector<cdouble> qam_constellation(int order) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
  if (order < 4 || (order & (order - 1)) != 0 || side * side != order)
    throw ConfigError("unsupported QAM order " + std::to_string(order));
  const int bits_per_axis = log2_exact(side);
  const double scale = 1.0 / std::sqrt(2.0 * (order - 1) / 3.0);
  std::vector<cdouble> points(static_cast<std::size_t>(order));
  for (int label = 0; label < order; ++label) {
    const int i_bits = label >> bits_per_axis;
    const int q_bits = label & (side - 1);
    const double i_level = 2.0 * gray_to_binary(i_bits) - (side - 1);
    const double q_level = 2.0 * gray_to_binary(q_bits) - (side - 1);
    points[static_cast<std::size_t>(label)] = cdouble(i_level * scale, q_level * scale);
  }
  return points;
}

SymbolTensor generate_symbols(const SystemConfig& cfg, std::uint64_t seed) {
  const auto points = qam_constellation(cfg.qam_order);
  Rng rng(stream_seed(seed, Stream::kSymbols));
  std::uniform_int_distribution<int> pick(0, cfg.qam_order - 1);
  SymbolTensor out;
  out.s.reserve(static_cast<std::size_t>(cfg.n_s));
  for (int i = 0; i < cfg.n_s; ++i) {
    Eigen::MatrixXcd si(cfg.k, cfg.l);
    for (int l = 0; l < cfg.l; ++l)
      for (int k = 0; k < cfg.k; ++k) si(k, l) = points[static_cast<std::size_t>(pick(rng))];
    out.s.push_back(std::move(si));
  }
  return out;
}

Eigen::VectorXcd precode(const Eigen::MatrixXcd& w, const Eigen::VectorXcd& s) {
  if (w.cols() != s.size())
    throw DimensionError("precode: W has " + std::to_string(w.cols()) + " columns but s has " +
                         std::to_string(s.size()) + " entries");
  return w * s;
}

std::vector<Eigen::MatrixXcd> transmit_blocks(const PrecoderSet& w, const SymbolTensor& s) {
  if (w.w.empty() || s.s.empty()) throw DimensionError("transmit_blocks: empty precoder or symbol set");
  if (w.w.size() != s.s.size()) throw DimensionError("transmit_blocks: subcarrier count mismatch");
  std::vector<Eigen::MatrixXcd> x;
  x.reserve(w.w.size());
  for (std::size_t i = 0; i < w.w.size(); ++i) {
    if (w.w[i].cols() != s.s[i].rows()) throw DimensionError("transmit_blocks: K mismatch");
    x.push_back(w.w[i] * s.s[i]);
  }
  return x;
}

Eigen::VectorXcd user_channel(const UserPaths& user, int i, const SystemConfig& cfg) {
  const double f = cfg.f_c + i * cfg.delta_f;
  auto spatial = [&](double theta) { return 2.0 * kPi * cfg.d_t * std::sin(theta) * f / kSpeedOfLight; };
  Eigen::VectorXcd h = user.delta * std::sqrt(path_loss(user.d, cfg)) * steering_vector(spatial(user.theta), cfg.n_t);
  for (const auto& p : user.scatterers)
    h += p.delta * std::sqrt(path_loss(p.d, cfg)) * steering_vector(spatial(p.theta), cfg.n_t);
  return h;
}

namespace {

bool matrix_full_column_rank(const Eigen::MatrixXcd& h, double rel_tol) {
  if (h.cols() > h.rows()) return false;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return false;
  return sv(sv.size() - 1) > rel_tol * sv(0);
}

std::vector<ScatterPath> draw_scatterers(Rng& rng, const UserPaths& user, const ChannelModel& model) {
  std::vector<ScatterPath> out;
  for (int l = 0; l < model.num_scatterers; ++l) {
    ScatterPath p;
    // Path lengths below 1 m are outside the path-loss model; clamp the draw window.
    const double lo = std::max(user.d - model.d_spread, 1.0);
    p.d = uniform(rng, lo, user.d + model.d_spread);
    p.theta = uniform(rng, user.theta - model.theta_spread, user.theta + model.theta_spread);
    p.delta = complex_normal(rng, model.scatter_mean, model.scatter_variance);
    out.push_back(p);
  }
  return out;
}

}  // namespace

ChannelSet generate_channel(const SystemConfig& cfg, std::uint64_t seed, const ChannelModel& model) {
  Rng rng(stream_seed(seed, Stream::kChannel));
  ChannelSet out;
  out.seed = seed;
  out.users.resize(static_cast<std::size_t>(cfg.k));
  for (auto& u : out.users) {
    u.d = uniform(rng, model.d_min, model.d_max);
    u.theta = uniform(rng, model.theta_min, model.theta_max);
    u.delta = model.los_gain;
    u.scatterers = draw_scatterers(rng, u, model);
  }

  auto assemble = [&]() {
    out.h.assign(static_cast<std::size_t>(cfg.n_s), Eigen::MatrixXcd(cfg.n_t, cfg.k));
    for (int i = 0; i < cfg.n_s; ++i)
      for (int k = 0; k < cfg.k; ++k)
        out.h[static_cast<std::size_t>(i)].col(k) = user_channel(out.users[static_cast<std::size_t>(k)], i, cfg);
  };

  assemble();
  for (int attempt = 0; !full_column_rank(out, model.rank_tolerance); ++attempt) {
    if (attempt >= model.max_redraws)
      throw GenerationError("generate_channel: channel matrices rank-deficient after " +
                            std::to_string(model.max_redraws) + " scatterer redraws");
    for (auto& u : out.users) u.scatterers = draw_scatterers(rng, u, model);
    assemble();
  }
  return out;
}

bool full_column_rank(const ChannelSet& h, double rel_tol) {
  for (const auto& hi : h.h)
    if (!matrix_full_column_rank(hi, rel_tol)) return false;
  return true;
}

double user_sinr(const Eigen::MatrixXcd& h_i, const Eigen::MatrixXcd& w_i, int k, double sigma_c_sq) {
  const Eigen::VectorXcd hk = h_i.col(k);
  double signal = 0.0;
  double interference = 0.0;
  for (int j = 0; j < w_i.cols(); ++j) {
    const double g = std::norm(hk.dot(w_i.col(j)));  // |h^H w_j|^2
    (j == k ? signal : interference) += g;
  }
  return signal / (interference + sigma_c_sq);
}

double sum_rate(const ChannelSet& h, const PrecoderSet& w, double sigma_c_sq) {
  if (h.h.size() != w.w.size()) throw DimensionError("sum_rate: subcarrier count mismatch");
  double rate = 0.0;
  for (std::size_t i = 0; i < h.h.size(); ++i) {
    const auto& hi = h.h[i];
    const auto& wi = w.w[i];
    if (hi.rows() != wi.rows() || hi.cols() != wi.cols()) throw DimensionError("sum_rate: H_i / W_i shape mismatch");
    for (int k = 0; k < hi.cols(); ++k) rate += std::log2(1.0 + user_sinr(hi, wi, k, sigma_c_sq));
  }
  return rate;
}

EchoCube generate_echo(const TargetScene& scene, const PrecoderSet& w, const SymbolTensor& s,
                       const SystemConfig& cfg, std::uint64_t seed, bool noiseless) {
  return generate_echo(scene, transmit_blocks(w, s), cfg, seed, noiseless);
}

EchoCube generate_echo(const TargetScene& scene, const std::vector<Eigen::MatrixXcd>& x,
                       const SystemConfig& cfg, std::uint64_t seed, bool noiseless) {
  if (x.empty()) throw DimensionError("generate_echo: empty transmit signal");
  if (static_cast<int>(x.size()) != cfg.n_s) throw DimensionError("generate_echo: subcarrier count mismatch");
  for (const auto& xi : x)
    if (xi.rows() != cfg.n_t || xi.cols() != cfg.l) throw DimensionError("generate_echo: X_i must be N_t x L");

  const double r_max = unambiguous_range(cfg);
  const double v_max = unambiguous_velocity(cfg);
  for (const auto& tgt : scene.targets) {
    if (tgt.d < cfg.d_ref) throw DomainError("generate_echo: target range below reference distance");
    if (tgt.d >= r_max) throw DomainError("generate_echo: target range beyond unambiguous range");
    if (std::abs(tgt.v) > v_max) throw DomainError("generate_echo: target velocity beyond unambiguous velocity");
  }

  EchoCube y(cfg.n_r, cfg.n_s, cfg.l);
  for (const auto& tgt : scene.targets) {
    const auto f = digital_frequencies(tgt.theta, tgt.d, tgt.v, cfg);
    const cdouble gain = tgt.beta * std::sqrt(path_loss(2.0 * tgt.d, cfg));
    const Eigen::VectorXcd a_t = steering_vector(f.omega_t, cfg.n_t);
    const Eigen::VectorXcd rx = steering_vector(f.omega_r, cfg.n_r);
    const Eigen::VectorXcd doppler = steering_vector(f.omega_v, cfg.l);
    for (int i = 0; i < cfg.n_s; ++i) {
      const cdouble delay = std::polar(1.0, i * f.omega_d);
      // a^H x_i[l] for every slot at once.
      const Eigen::RowVectorXcd beam = a_t.adjoint() * x[static_cast<std::size_t>(i)];
      for (int m = 0; m < cfg.n_r; ++m) {
        const cdouble c = gain * rx(m) * delay;
        for (int l = 0; l < cfg.l; ++l) y(m, i, l) += c * beam(l) * doppler(l);
      }
    }
  }

  if (!noiseless) {
    for (int i = 0; i < cfg.n_s; ++i) {
      Rng rng(derive_seed(stream_seed(seed, Stream::kEchoNoise), {static_cast<std::uint64_t>(i)}));
      for (int m = 0; m < cfg.n_r; ++m)
        for (int l = 0; l < cfg.l; ++l) y(m, i, l) += complex_normal(rng, {0.0, 0.0}, cfg.sigma_s_sq);
    }
  }
  return y;
}

}  // namespace isac

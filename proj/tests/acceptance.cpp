// Acceptance run: one PASS/FAIL line per criterion.
//
//   isac_acceptance [--out DIR] [N ...]
//
// With no numbers every criterion runs. Exit status is nonzero if any
// criterion that ran failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "isac/beamforming.hpp"
#include "isac/config.hpp"
#include "isac/cubic.hpp"
#include "isac/harness.hpp"
#include "isac/rng.hpp"
#include "isac/sensing_dft.hpp"
#include "isac/sparse_recovery.hpp"
#include "isac/waveform.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace isac;
using oracle::cd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path g_out = "acceptance_out";
constexpr std::uint64_t kMaster = 20240607;

// ---------------------------------------------------------------- 1
Outcome dft_oracles() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> small(1, 16), big(0, 48);
  double worst_spatial = 0, worst_doppler = 0, worst_delay = 0, worst_paths = 0, worst_f = 0;

  for (int trial = 0; trial < 50; ++trial) {
    const int n_r = small(rng), n_s = small(rng), l = small(rng);
    const int n_a = std::min(64, n_r + big(rng)), n_v = std::min(64, l + big(rng)), n_d = std::min(64, n_s + big(rng));

    EchoCube y(n_r, n_s, l);
    for (auto& v : y.data()) v = oracle::random_cvec(rng, 1)(0);
    const auto ang = spatial_dft(y, n_a);
    const auto abins = oracle::centered_bins(n_a);
    for (int i = 0; i < n_s; ++i)
      for (int s = 0; s < l; ++s) {
        std::vector<cd> col(static_cast<std::size_t>(n_r));
        for (int m = 0; m < n_r; ++m) col[static_cast<std::size_t>(m)] = y(m, i, s);
        const auto ref = oracle::dft(col, abins, n_a, 1.0 / n_r);
        for (std::size_t a = 0; a < abins.size(); ++a)
          worst_spatial = std::max(worst_spatial,
                                   std::abs(ang.values(i, s, ang.angle.storage(abins[a])) - ref[a]));
      }

    const auto dop = doppler_dft(ang, n_v);
    const auto vbins = oracle::centered_bins(n_v);
    for (int i = 0; i < n_s; ++i)
      for (int a = 0; a < ang.angle.count; ++a) {
        std::vector<cd> seq(static_cast<std::size_t>(l));
        for (int s = 0; s < l; ++s) seq[static_cast<std::size_t>(s)] = ang.values(i, s, a);
        const auto ref = oracle::dft(seq, vbins, n_v, 1.0 / l);
        for (std::size_t v = 0; v < vbins.size(); ++v)
          worst_doppler = std::max(worst_doppler, std::abs(dop.values(i, a, dop.doppler.storage(vbins[v])) - ref[v]));
      }

    const auto sum_path = delay_dft(dop, n_d);
    const auto mat_path = delay_dft_matrix(dop, n_d);
    const auto dbins = oracle::delay_bins(n_d);
    for (int a = 0; a < dop.angle.count; ++a)
      for (int v = 0; v < dop.doppler.count; ++v) {
        std::vector<cd> seq(static_cast<std::size_t>(n_s));
        for (int i = 0; i < n_s; ++i) seq[static_cast<std::size_t>(i)] = dop.values(i, a, v);
        const auto ref = oracle::dft(seq, dbins, n_d, 1.0 / n_s);
        for (int d = 0; d < n_d; ++d) {
          const int st = sum_path.delay.storage(dbins[static_cast<std::size_t>(d)]);
          worst_delay = std::max(worst_delay, std::abs(sum_path.values(a, st, v) - ref[static_cast<std::size_t>(d)]));
          worst_paths = std::max(worst_paths, std::abs(sum_path.values(a, st, v) - mat_path.values(a, st, v)));
        }
      }

    const DelayDftMatrix f(n_d);
    const Eigen::MatrixXcd ffh = f.matrix() * f.matrix().adjoint();
    worst_f = std::max(worst_f, (ffh - static_cast<double>(n_d) * Eigen::MatrixXcd::Identity(n_d, n_d)).cwiseAbs().maxCoeff());
  }
  const double worst = std::max({worst_spatial, worst_doppler, worst_delay, worst_paths, worst_f});
  return {worst <= 1e-10, "max err spatial " + fmt("%.1e", worst_spatial) + " doppler " + fmt("%.1e", worst_doppler) +
                              " delay " + fmt("%.1e", worst_delay) + " sum-vs-matrix " + fmt("%.1e", worst_paths) +
                              " FF^H " + fmt("%.1e", worst_f)};
}

// ---------------------------------------------------------------- 2, 3
struct OnGridScene {
  int n_a, n_d, n_v;
  TargetScene scene;
  std::uint64_t seed;
};

std::vector<OnGridScene> on_grid_scenes(const SystemConfig& cfg) {
  std::vector<OnGridScene> out;
  for (int t = 0; t < 20; ++t) {
    const auto seed = derive_seed(kMaster, {0x6f6e, static_cast<std::uint64_t>(t)});
    std::mt19937_64 rng(seed);
    // Keep |sin theta| < 1 and the range at or above d_ref.
    const int na = std::uniform_int_distribution<int>(-cfg.n_a / 2 + 1, cfg.n_a / 2 - 1)(rng);
    const int nd = std::uniform_int_distribution<int>(-cfg.n_d + 1, -1)(rng);
    const int nv = std::uniform_int_distribution<int>(-cfg.n_v / 2 + 1, cfg.n_v / 2 - 1)(rng);
    const double sin_t = -na * oracle::kC / (cfg.n_a * cfg.d_r * cfg.f_c);
    const double d = -static_cast<double>(nd) / cfg.n_d * oracle::kC / (2.0 * cfg.delta_f);
    const double v = static_cast<double>(nv) / cfg.n_v * oracle::kC / (2.0 * cfg.t * cfg.f_c);
    const auto beta = oracle::random_cvec(rng, 1)(0);
    out.push_back({na, nd, nv, TargetScene{{Target{std::asin(sin_t), d, v, beta}}}, seed});
  }
  return out;
}

struct ChainInputs {
  EchoCube y;
  std::vector<Eigen::MatrixXcd> x;
};

ChainInputs noiseless_echo(const SystemConfig& cfg, const OnGridScene& s) {
  const auto spec = make_sensing_spec(cfg, cfg.n_s);
  const auto w = initialize(cfg, spec, nullptr).precoders();
  auto x = transmit_blocks(w, generate_symbols(cfg, s.seed));
  auto y = generate_echo(s.scene, x, cfg, s.seed, true);
  return {std::move(y), std::move(x)};
}

bool same_bin(const EstimationResult& r, int na, int nd, int nv) {
  return !r.estimates.empty() && r.estimates[0].n_a == na && r.estimates[0].n_d == nd && r.estimates[0].n_v == nv;
}

Outcome on_grid_exactness() {
  const auto cfg = desk_profile();
  int exact = 0;
  double worst_param = 0.0;
  for (const auto& s : on_grid_scenes(cfg)) {
    const auto in = noiseless_echo(cfg, s);
    const auto est = detect_and_invert(dft_process(in.y, in.x, cfg), cfg, 1, cfg.detection.min_rel_peak);
    if (same_bin(est, s.n_a, s.n_d, s.n_v)) {
      ++exact;
      const auto& e = est.estimates[0];
      const auto& t = s.scene.targets[0];
      worst_param = std::max({worst_param, std::abs(e.theta - t.theta), std::abs(e.d - t.d) / t.d,
                              std::abs(e.v - t.v) / std::max(1.0, std::abs(t.v))});
    }
  }
  return {exact == 20 && worst_param < 1e-9,
          std::to_string(exact) + "/20 scenes at the exact bin, worst parameter error " + fmt("%.1e", worst_param)};
}

Outcome cs_equivalence() {
  const auto cfg = desk_profile();
  int agree = 0;
  for (const auto& s : on_grid_scenes(cfg)) {
    const auto in = noiseless_echo(cfg, s);
    const auto full = detect_and_invert(dft_process(in.y, in.x, cfg), cfg, 1, cfg.detection.min_rel_peak);
    auto cs_cfg = cfg;
    cs_cfg.n_sel = cfg.n_s / 4;
    const auto mask = make_selection_mask(cs_cfg, s.seed);
    const auto cs = detect_and_invert(cs_process(in.y, in.x, mask, cs_cfg).cube, cs_cfg, 1, cfg.detection.min_rel_peak);
    if (!full.estimates.empty() && same_bin(cs, full.estimates[0].n_a, full.estimates[0].n_d, full.estimates[0].n_v))
      ++agree;
  }

  // Noiseless 1-sparse fibers, N_d = 32, 16 selected rows.
  int good = 0;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto seed = derive_seed(kMaster, {0x6270, static_cast<std::uint64_t>(t)});
    std::mt19937_64 rng(seed);
    const auto mask = make_selection_mask(32, 32, 16, seed);
    const auto a = measurement_operator(mask);
    Eigen::VectorXcd truth = Eigen::VectorXcd::Zero(32);
    truth(std::uniform_int_distribution<int>(0, 31)(rng)) = oracle::random_cvec(rng, 1)(0);
    const auto sol = basis_pursuit(a, a * truth, 32);
    const double err = (sol.y_hat - truth).norm();
    worst = std::max(worst, err);
    if (err <= 1e-4) ++good;
  }
  return {agree >= 19 && good >= 198, std::to_string(agree) + "/20 scenes agree with full DFT; " +
                                          std::to_string(good) + "/200 fibers within 1e-4 (worst " +
                                          fmt("%.1e", worst) + ")"};
}

// ---------------------------------------------------------------- 4
Outcome solver_step_oracles() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::string detail;
  bool ok = true;

  // Gamma and p updates on random solver states vs. projection oracles built
  // from independently evaluated surrogates.
  double worst_gamma = 0.0, worst_p = 0.0;
  auto cfg = desk_profile();
  cfg.n_s = 6;
  cfg.n_d = 6;
  cfg.n_sel = 3;
  cfg.n_t = 3;
  cfg.n_r = 3;
  cfg.n_a = 3;
  cfg.k = 2;
  cfg.g = 3;
  for (int t = 0; t < 500; ++t) {
    const auto mask = make_selection_mask(cfg, static_cast<std::uint64_t>(t) + 1);
    auto spec = make_sensing_spec(cfg, cfg.n_sel);
    spec.threshold_rhs *= std::exp(3.0 * u(rng));  // exercise both active and inactive cases
    auto s = initialize(cfg, spec, &mask);
    for (auto& w : s.w) w += oracle::random_cvec(rng, cfg.n_t * cfg.k, 0.3);
    const auto mm = mm_terms(s, spec);  // expansion point: the perturbed w
    std::vector<Eigen::VectorXcd> w_t = s.w;
    for (auto& w : s.w) w += oracle::random_cvec(rng, cfg.n_t * cfg.k, 0.1);
    for (Eigen::Index j = 0; j < s.gamma_dual.rows(); ++j)
      for (Eigen::Index g = 0; g < s.gamma_dual.cols(); ++g) s.gamma_dual(j, g) = 10.0 * u(rng);
    for (auto& x : s.x) x = oracle::random_cvec(rng, cfg.n_t * cfg.k, 0.5);
    for (auto& nu : s.nu) nu = 50.0 * u(rng);

    update_gamma(s, mm, spec);
    for (int g = 0; g < cfg.g; ++g) {
      std::vector<double> hat;
      for (std::size_t j = 0; j < s.selected.size(); ++j) {
        const auto i = static_cast<std::size_t>(s.selected[j]);
        hat.push_back(oracle::mm_surrogate_value(w_t[i], s.w[i], spec.steering[static_cast<std::size_t>(g)], cfg.k) +
                      s.gamma_dual(static_cast<Eigen::Index>(j), g) / s.rho_3);
      }
      const auto ref = oracle::project_sum_at_least(hat, spec.threshold_rhs);
      for (std::size_t j = 0; j < ref.size(); ++j)
        worst_gamma = std::max(worst_gamma, std::abs(s.gamma_var(static_cast<Eigen::Index>(j), g) - ref[j]) /
                                                std::max(1.0, std::abs(ref[j])));
    }

    const double p_0 = std::exp(2.0 * u(rng));
    update_p(s, p_0);
    std::vector<double> hat;
    for (std::size_t i = 0; i < s.x.size(); ++i) hat.push_back(s.x[i].squaredNorm() + s.nu[i] / s.rho_2);
    const auto ref = oracle::project_sum_at_most(hat, p_0);
    for (std::size_t i = 0; i < ref.size(); ++i)
      worst_p = std::max(worst_p, std::abs(s.p[i] - ref[i]) / std::max(1.0, std::abs(ref[i])));
  }
  ok = ok && worst_gamma <= 1e-9 && worst_p <= 1e-9;
  detail += "gamma " + fmt("%.1e", worst_gamma) + ", p " + fmt("%.1e", worst_p);

  // x-update vs. a 200-point radial grid along +-(w - mu/rho_1).
  double worst_x = -1e300;
  for (int t = 0; t < 200; ++t) {
    const auto w = oracle::random_cvec(rng, 4, std::exp(u(rng)));
    const auto mu = oracle::random_cvec(rng, 4, 10.0 * std::exp(u(rng)));
    const double rho_1 = std::exp(3.0 * u(rng)) * 10.0, rho_2 = std::exp(3.0 * u(rng)) * 10.0;
    const double p = 2.0 * u(rng) + 1.0, nu = 5.0 * u(rng);
    const auto res = update_x(w, p, mu, nu, rho_1, rho_2);
    const double h_star = oracle::x_objective(res.x, w, p, mu, nu, rho_1, rho_2);
    const Eigen::VectorXcd c = w - mu / rho_1;
    const Eigen::VectorXcd dir = c.norm() > 0 ? Eigen::VectorXcd(c / c.norm()) : Eigen::VectorXcd(oracle::random_cvec(rng, 4).normalized());
    const double radius = 2.0 * std::max({c.norm(), std::sqrt(std::abs(p) + std::abs(nu) / rho_2), 1.0});
    double grid_min = 1e300;
    for (int k = 0; k < 200; ++k) {
      const double r = -radius + 2.0 * radius * k / 199.0;
      grid_min = std::min(grid_min, oracle::x_objective(r * dir, w, p, mu, nu, rho_1, rho_2));
    }
    worst_x = std::max(worst_x, (h_star - grid_min) / std::max(1.0, std::abs(grid_min)));
  }
  ok = ok && worst_x <= 1e-6;
  detail += ", x-update minus grid " + fmt("%.1e", worst_x);

  // Cubic roots vs. companion-matrix eigenvalues.
  double worst_cubic = 0.0;
  int count_mismatch = 0;
  for (int t = 0; t < 2000; ++t) {
    const double c3 = u(rng) * std::exp(2 * u(rng)), c2 = u(rng), c1 = u(rng) * 3, c0 = u(rng) * 2;
    const auto got = real_cubic_roots(c3, c2, c1, c0);
    const auto ref = oracle::companion_roots(c3, c2, c1, c0);
    if (got.size() != ref.size()) {
      ++count_mismatch;
      continue;
    }
    for (std::size_t k = 0; k < got.size(); ++k)
      worst_cubic = std::max(worst_cubic, std::abs(got[k] - ref[k]) / std::max(1.0, std::abs(ref[k])));
  }
  ok = ok && worst_cubic <= 1e-8 && count_mismatch == 0;
  detail += ", cubic " + fmt("%.1e", worst_cubic) + " (" + std::to_string(count_mismatch) + " count mismatches)";

  // update_w: stationarity and local minimality on assembled blocks.
  double worst_stat = 0.0;
  int probe_failures = 0;
  for (int t = 0; t < 100; ++t) {
    const int n_t = 4, k = 2;
    const Eigen::MatrixXcd h = oracle::random_cmat(rng, n_t, k);
    const Eigen::MatrixXcd w0 = oracle::random_cmat(rng, n_t, k);
    const auto fp = fp_update(w0, h, 0.1);
    const Eigen::VectorXcd x = oracle::random_cvec(rng, n_t * k), mu = oracle::random_cvec(rng, n_t * k);
    BlockInputs in{&h, &fp, &x, &mu, {}, {}, {}};
    if (t % 2 == 0) {
      for (int g = 0; g < 3; ++g) {
        in.mm.push_back(mm_surrogate(vec(w0), oracle::steering(u(rng) * 3.0, n_t), k));
        in.gamma_var.push_back(u(rng) + 1.0);
        in.gamma_dual.push_back(u(rng));
      }
    }
    const auto q = assemble_quadratic(in, 2.0 * std::exp(u(rng)), 0.5 * std::exp(u(rng)));
    const Eigen::VectorXd w_hat = stack_real(update_w(q));
    worst_stat = std::max(worst_stat, (q.a_sym * w_hat - q.b).norm() / (1.0 + q.b.norm()));
    const double f0 = w_objective_real(q, w_hat);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int d = 0; d < 100; ++d) {
      Eigen::VectorXd dir(w_hat.size());
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = g(rng);
      if (w_objective_real(q, w_hat + 1e-3 * dir.normalized()) < f0 - 1e-12 * std::max(1.0, std::abs(f0)))
        ++probe_failures;
    }
  }
  ok = ok && worst_stat <= 1e-8 && probe_failures == 0;
  detail += ", w stationarity " + fmt("%.1e", worst_stat) + ", " + std::to_string(probe_failures) +
            " descent probes";
  return {ok, detail};
}

// ---------------------------------------------------------------- 5
StopRule fixed_iterations(int n) { return StopRule{n, 1e-300, 1e-300}; }

Outcome mm_invariants() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_tight = 0.0, worst_minor = -1e300;
  for (int t = 0; t < 1000; ++t) {
    const int n_t = 1 + t % 8, k = 1 + t % 3;
    const auto a = oracle::steering(u(rng) * oracle::kPi, n_t);
    const Eigen::VectorXcd w_t = oracle::random_cvec(rng, n_t * k, std::exp(2 * u(rng)));
    const Eigen::VectorXcd w = oracle::random_cvec(rng, n_t * k, std::exp(2 * u(rng)));
    const auto mm = mm_surrogate(w_t, a, k);
    const double at_t = mm.b.dot(w_t).real() + mm.c, true_t = oracle::beampattern(w_t, a, k);
    const double at_w = mm.b.dot(w).real() + mm.c, true_w = oracle::beampattern(w, a, k);
    const double scale = std::max(1.0, true_t + true_w);
    worst_tight = std::max(worst_tight, std::abs(at_t - true_t) / scale);
    worst_minor = std::max(worst_minor, (at_w - true_w) / scale);
  }

  const auto cfg = desk_profile();
  const auto h = generate_channel(cfg, 1);
  const auto mask = make_selection_mask(cfg, 1);
  const auto spec = make_sensing_spec(cfg, cfg.n_sel);
  const auto res = solve(cfg, h, spec, &mask, fixed_iterations(300), SolveOptions{true, false});
  const auto& inv = res.invariants;
  const bool ok = worst_tight <= 1e-9 && worst_minor <= 1e-9 && res.iterations == 300 &&
                  inv.max_psd_violation <= 1e-9 && inv.max_asymmetry <= 1e-12 && inv.max_dual_imag < 1e-14 &&
                  inv.max_minorization_gap <= 1e-9 && inv.max_tightness_error <= 1e-9;
  return {ok, "probes: tightness " + fmt("%.1e", worst_tight) + " minorization " + fmt("%.1e", worst_minor) +
                  "; solve (" + std::to_string(res.iterations) + " it, " + std::to_string(inv.blocks_checked) +
                  " blocks): psd " + fmt("%.1e", inv.max_psd_violation) + " asym " +
                  fmt("%.1e", inv.max_asymmetry) + " minor " + fmt("%.1e", inv.max_minorization_gap) + " tight " +
                  fmt("%.1e", inv.max_tightness_error) + " imag " + fmt("%.1e", inv.max_dual_imag)};
}

// ---------------------------------------------------------------- 6
Outcome convergence_trend() {
  auto cfg = desk_profile();  // N_t=8, K=2, G=4, -5 dB, 10 W
  cfg.n_s = 16;
  cfg.n_d = 16;
  cfg.n_sel = 4;
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto h = generate_channel(cfg, seed);
    const auto mask = make_selection_mask(cfg, seed);
    const auto spec = make_sensing_spec(cfg, cfg.n_sel);
    const auto res = solve(cfg, h, spec, &mask, fixed_iterations(300), SolveOptions{false, true});
    std::vector<double> r;
    for (const auto& row : res.trace) r.push_back(row.r_primal);
    double r_min = r.front();
    for (double v : r) r_min = std::min(r_min, v);
    const double m_first = oracle::median({r.begin(), r.begin() + 50});
    const double m_last = oracle::median({r.end() - 50, r.end()});
    const bool pass = r.size() == 300 && r_min < 1e-2 * r.front() && m_last < m_first;
    ok = ok && pass;
    detail += (seed > 1 ? "; " : "") + std::string("seed ") + std::to_string(seed) + " drop " +
              fmt("%.0fx", r.front() / r_min) + " medians " + fmt("%.3g", m_first) + "->" + fmt("%.3g", m_last);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------- 7
double snr_oracle(const PrecoderSet& w, double theta, double d, const std::vector<int>& selected,
                  const SystemConfig& cfg) {
  const double pl = cfg.c_ref * std::pow(2.0 * d / cfg.d_ref, -cfg.alpha);
  const auto a = oracle::steering(2.0 * oracle::kPi * cfg.d_t * std::sin(theta) * cfg.f_c / oracle::kC, cfg.n_t);
  double sum = 0.0;
  for (int i : selected) sum += oracle::beampattern(vec(w.w[static_cast<std::size_t>(i)]), a, cfg.k);
  return cfg.sigma_beta_sq * pl * sum / (static_cast<double>(selected.size()) * cfg.sigma_s_sq);
}

Outcome constraint_satisfaction() {
  const auto cfg = desk_profile();
  int converged = 0, violations = 0, runs = 0;
  double worst_power = 0.0, worst_snr = 1e300;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto h = generate_channel(cfg, seed);
    for (bool cs : {true, false}) {
      const auto mask = cs ? make_selection_mask(cfg, seed) : full_selection(cfg.n_s, cfg.n_d);
      const auto spec = make_sensing_spec(cfg, mask.n_sel());
      const auto res = solve(cfg, h, spec, &mask, stop_rule(cfg), SolveOptions{false, false});
      ++runs;
      if (!res.converged) continue;
      ++converged;
      double power = 0.0;
      for (const auto& w : res.w.w) power += w.squaredNorm();
      double min_ratio = 1e300;
      for (double theta : spec.theta_grid)
        min_ratio = std::min(min_ratio, snr_oracle(res.w, theta, cfg.d_0, mask.selected, cfg) / cfg.gamma_0);
      worst_power = std::max(worst_power, power / cfg.p_0);
      worst_snr = std::min(worst_snr, min_ratio);
      if (power > cfg.p_0 * (1 + 1e-6) || min_ratio < 1 - 1e-2) ++violations;
    }
  }
  return {converged > 0 && violations == 0,
          std::to_string(converged) + "/" + std::to_string(runs) + " runs converged; max power/P_0 " +
              fmt("%.8f", worst_power) + ", min SNR/Gamma_0 " + fmt("%.4f", worst_snr) + ", " +
              std::to_string(violations) + " violations"};
}

// ---------------------------------------------------------------- 8, 9, 10
struct Means {
  std::map<std::pair<Strategy, double>, AggregateRow> rows;
  const AggregateRow& at(Strategy s, double v) const { return rows.at({s, v}); }
};

Means index(const SweepResult& r) {
  Means m;
  for (const auto& row : r.means) m.rows[{row.strategy, row.sweep_value}] = row;
  return m;
}

void print_means(const SweepResult& r, SweepAxis axis) {
  for (const auto& m : r.means) {
    std::printf("    %-16s %s=%-5s rate %.4f", std::string(to_string(m.strategy)).c_str(),
                std::string(to_string(axis)).c_str(), format_double(m.sweep_value).c_str(), m.sum_rate_bits);
    if (m.rmse_theta_rad)
      std::printf("  rmse theta %.4f d %.2f v %.2f", *m.rmse_theta_rad, *m.rmse_d_m, *m.rmse_v_mps);
    std::printf("  converged %.2f  failures %d\n", m.converged, m.failures);
  }
}

ExperimentPlan gamma_plan(int workers) {
  ExperimentPlan p;
  p.base = desk_profile();
  p.axis = SweepAxis::kGamma0Db;
  p.values = {-15, -10, -5};
  p.trials = 20;
  p.master_seed = kMaster;
  p.out_dir = g_out / ("gamma_0_db_w" + std::to_string(workers));
  p.workers = workers;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome gamma_trends() {
  const auto plan = gamma_plan(1);
  const auto res = run_sweep(plan);
  print_means(res, plan.axis);
  const auto m = index(res);
  std::vector<std::string> fails;
  int failures = 0;
  for (const auto& row : res.means) failures += row.failures;
  if (failures > 0) fails.push_back(std::to_string(failures) + " trial errors");

  const Strategy sensing[] = {Strategy::kCsAssisted, Strategy::kFullSubcarrier};
  for (auto s : sensing) {
    const std::string name(to_string(s));
    for (std::size_t k = 0; k + 1 < plan.values.size(); ++k) {
      const auto& lo = m.at(s, plan.values[k]);
      const auto& hi = m.at(s, plan.values[k + 1]);
      const std::string at = " at " + format_double(plan.values[k]) + "->" + format_double(plan.values[k + 1]);
      if (hi.sum_rate_bits > lo.sum_rate_bits) fails.push_back(name + " rate rises" + at);
      if (!lo.rmse_theta_rad || !hi.rmse_theta_rad) {
        fails.push_back(name + " missing RMSE" + at);
        continue;
      }
      if (*hi.rmse_theta_rad > *lo.rmse_theta_rad) fails.push_back(name + " theta RMSE rises" + at);
      if (*hi.rmse_d_m > *lo.rmse_d_m) fails.push_back(name + " d RMSE rises" + at);
      if (*hi.rmse_v_mps > *lo.rmse_v_mps) fails.push_back(name + " v RMSE rises" + at);
    }
  }
  const double last = plan.values.back();
  if (m.at(Strategy::kCommOnly, last).sum_rate_bits < m.at(Strategy::kCsAssisted, last).sum_rate_bits)
    fails.push_back("comm_only below cs_assisted");
  if (m.at(Strategy::kCsAssisted, last).sum_rate_bits < m.at(Strategy::kFullSubcarrier, last).sum_rate_bits)
    fails.push_back("cs_assisted below full_subcarrier");
  for (double v : plan.values) {
    const auto& cs = m.at(Strategy::kCsAssisted, v);
    const auto& full = m.at(Strategy::kFullSubcarrier, v);
    if (!cs.rmse_theta_rad || !full.rmse_theta_rad) continue;
    const std::pair<double, double> pairs[] = {{*cs.rmse_theta_rad, *full.rmse_theta_rad},
                                               {*cs.rmse_d_m, *full.rmse_d_m},
                                               {*cs.rmse_v_mps, *full.rmse_v_mps}};
    const char* names[] = {"theta", "d", "v"};
    for (int k = 0; k < 3; ++k)
      if (std::abs(pairs[k].first - pairs[k].second) > 0.2 * pairs[k].second)
        fails.push_back(std::string("cs ") + names[k] + " RMSE not within 20% at " + format_double(v));
  }
  std::string detail = fails.empty() ? "all trend checks hold" : "";
  for (std::size_t k = 0; k < fails.size(); ++k) detail += (k ? "; " : "") + fails[k];
  return {fails.empty(), detail};
}

Outcome axis_trends() {
  struct Axis {
    SweepAxis axis;
    std::vector<double> values;
  };
  const Axis axes[] = {{SweepAxis::kP0, {2, 5, 10}}, {SweepAxis::kNt, {6, 8, 12}}, {SweepAxis::kK, {1, 2, 3}}};
  std::vector<std::string> fails;
  std::string times;
  for (const auto& ax : axes) {
    ExperimentPlan p;
    p.base = desk_profile();
    p.axis = ax.axis;
    p.values = ax.values;
    p.trials = 20;
    p.strategies = {Strategy::kCsAssisted, Strategy::kCommOnly};
    p.master_seed = kMaster;
    p.out_dir = g_out / std::string(to_string(ax.axis));
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = run_sweep(p);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    print_means(res, p.axis);
    times += (times.empty() ? "" : ", ") + std::string(to_string(ax.axis)) + " " + fmt("%.0fs", secs);
    if (secs > 45 * 60) fails.push_back(std::string(to_string(ax.axis)) + " exceeded 45 min");
    const auto m = index(res);
    for (auto s : p.strategies) {
      for (std::size_t k = 0; k + 1 < p.values.size(); ++k) {
        const double lo = m.at(s, p.values[k]).sum_rate_bits, hi = m.at(s, p.values[k + 1]).sum_rate_bits;
        if (hi < lo)
          fails.push_back(std::string(to_string(s)) + " rate falls in " + std::string(to_string(ax.axis)) + " at " +
                          format_double(p.values[k]) + "->" + format_double(p.values[k + 1]));
      }
      for (double v : p.values)
        if (m.at(s, v).failures > 0) fails.push_back(std::string(to_string(s)) + " trial errors");
    }
  }
  std::string detail = fails.empty() ? "rates non-decreasing on every axis (" + times + ")" : "";
  for (std::size_t k = 0; k < fails.size(); ++k) detail += (k ? "; " : "") + fails[k];
  return {fails.empty(), detail};
}

Outcome determinism() {
  const auto first = gamma_plan(1);
  if (!fs::exists(first.out_dir / "metrics.csv")) run_sweep(first);
  const auto again = gamma_plan(2);  // different pool size, same master seed
  run_sweep(again);
  const auto a = slurp(first.out_dir / "metrics.csv");
  const auto b = slurp(again.out_dir / "metrics.csv");

  // A single trial repeated in-process must give the identical record too.
  const auto cfg = desk_profile();
  const auto r1 = run_trial(cfg, Strategy::kCsAssisted, 99);
  const auto r2 = run_trial(cfg, Strategy::kCsAssisted, 99);
  const bool same_trial = r1.sum_rate_bits == r2.sum_rate_bits && r1.rmse_d_m == r2.rmse_d_m &&
                          r1.rmse_theta_rad == r2.rmse_theta_rad && r1.rmse_v_mps == r2.rmse_v_mps &&
                          r1.iterations == r2.iterations;
  return {!a.empty() && a == b && same_trial, "metrics.csv " + std::to_string(a.size()) + " bytes, " +
                                                  (a == b ? "identical" : "DIFFERENT") +
                                                  " across runs with 1 and 2 workers; repeated trial " +
                                                  (same_trial ? "identical" : "DIFFERENT")};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--out" && i + 1 < argc) {
      g_out = argv[++i];
    } else {
      only.insert(std::atoi(arg.c_str()));
    }
  }
  fs::create_directories(g_out);

  const std::vector<Criterion> criteria = {
      {1, "DFT-chain oracle equivalence", 10, dft_oracles},
      {2, "on-grid exactness", 30, on_grid_exactness},
      {3, "CS equivalence", 300, cs_equivalence},
      {4, "solver-step oracles", 120, solver_step_oracles},
      {5, "MM surrogate and block invariants", 120, mm_invariants},
      {6, "convergence behaviour", 300, convergence_trend},
      {7, "constraint satisfaction", 1e9, constraint_satisfaction},
      {8, "gamma_0 sweep trends", 1800, gamma_trends},
      {9, "P_0 / N_t / K sweep trends", 3 * 2700, axis_trends},
      {10, "determinism", 1e9, determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_s) {
      o.pass = false;
      o.detail += " (over the " + fmt("%.0f", c.limit_s) + " s budget)";
    }
    std::printf("criterion %2d %-36s %s  %7.1fs  %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", secs,
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

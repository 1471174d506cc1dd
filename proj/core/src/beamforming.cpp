#include "isac/beamforming.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "isac/cubic.hpp"
#include "isac/errors.hpp"

namespace isac {

SensingSpec make_sensing_spec(const SystemConfig& cfg, int n_sel) {
  if (cfg.g < 2) throw ConfigError("sensing grid needs G >= 2");
  if (n_sel <= 0) throw ConfigError("sensing spec needs N_sel > 0");
  SensingSpec s;
  s.d_0 = cfg.d_0;
  s.gamma_0 = cfg.gamma_0;
  s.n_sel = n_sel;
  for (int g = 0; g < cfg.g; ++g) {
    const double theta = cfg.theta_a + g * (cfg.theta_b - cfg.theta_a) / (cfg.g - 1);
    s.theta_grid.push_back(theta);
    s.steering.push_back(steering_vector(transmit_frequency(theta, cfg), cfg.n_t));
  }
  s.threshold_rhs = n_sel * cfg.sigma_s_sq * cfg.gamma_0 / (cfg.sigma_beta_sq * path_loss(2.0 * cfg.d_0, cfg));
  return s;
}

double received_snr(const PrecoderSet& w, double theta, double d, const SelectionMask& mask, const SystemConfig& cfg) {
  if (mask.n_sel() == 0) throw ConfigError("received_snr: N_sel = 0");
  if (d < cfg.d_ref) throw DomainError("received_snr: d below the reference distance");
  if (mask.n_s() != w.num_subcarriers()) throw DimensionError("received_snr: mask / precoder size mismatch");
  const Eigen::VectorXcd a = steering_vector(transmit_frequency(theta, cfg), cfg.n_t);
  double acc = 0.0;
  for (int i : mask.selected) acc += (w.w[static_cast<std::size_t>(i)].adjoint() * a).squaredNorm();
  return cfg.sigma_beta_sq * path_loss(2.0 * d, cfg) * acc / (mask.n_sel() * cfg.sigma_s_sq);
}

double min_sensing_ratio(const PrecoderSet& w, const SensingSpec& spec, const SelectionMask& mask,
                         const SystemConfig& cfg) {
  double m = std::numeric_limits<double>::infinity();
  for (double theta : spec.theta_grid) m = std::min(m, received_snr(w, theta, spec.d_0, mask, cfg) / spec.gamma_0);
  return m;
}

Eigen::VectorXcd vec(const Eigen::MatrixXcd& w) { return Eigen::Map<const Eigen::VectorXcd>(w.data(), w.size()); }

Eigen::MatrixXcd unvec(const Eigen::VectorXcd& w, int n_t, int k) {
  if (w.size() != static_cast<Eigen::Index>(n_t) * k) throw DimensionError("unvec: length is not N_t K");
  return Eigen::Map<const Eigen::MatrixXcd>(w.data(), n_t, k);
}

MmTerm mm_surrogate(const Eigen::VectorXcd& w_t, const Eigen::VectorXcd& a, int k) {
  const Eigen::Index n_t = a.size();
  if (w_t.size() != n_t * k) throw DimensionError("mm_surrogate: w length is not N_t K");
  MmTerm m;
  m.b.resize(w_t.size());
  for (int j = 0; j < k; ++j) {
    const cdouble proj = a.dot(w_t.segment(j * n_t, n_t));  // a^H w_j
    m.b.segment(j * n_t, n_t) = 2.0 * proj * a;
    m.c -= std::norm(proj);
  }
  return m;
}

double beampattern(const Eigen::VectorXcd& w, const Eigen::VectorXcd& a, int k) {
  const Eigen::Index n_t = a.size();
  double acc = 0.0;
  for (int j = 0; j < k; ++j) acc += std::norm(a.dot(w.segment(j * n_t, n_t)));
  return acc;
}

FpTerms fp_update(const Eigen::MatrixXcd& w_i, const Eigen::MatrixXcd& h_i, double sigma_c_sq) {
  if (w_i.rows() != h_i.rows() || w_i.cols() != h_i.cols()) throw DimensionError("fp_update: W / H shape mismatch");
  const int k = static_cast<int>(h_i.cols());
  const Eigen::MatrixXcd g = h_i.adjoint() * w_i;  // g(k, j) = h_k^H w_j
  FpTerms out{Eigen::VectorXd(k), Eigen::VectorXcd(k)};
  for (int u = 0; u < k; ++u) {
    const double total = g.row(u).squaredNorm() + sigma_c_sq;
    const double signal = std::norm(g(u, u));
    out.r(u) = signal / (total - signal);
    out.t(u) = std::sqrt(1.0 + out.r(u)) * g(u, u) / total;
  }
  return out;
}

Eigen::VectorXd stack_real(const Eigen::VectorXcd& v) {
  Eigen::VectorXd out(2 * v.size());
  out << v.real(), v.imag();
  return out;
}

Eigen::VectorXcd unstack_real(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size() / 2;
  Eigen::VectorXcd out(n);
  out.real() = v.head(n);
  out.imag() = v.tail(n);
  return out;
}

QuadraticBlock assemble_quadratic(const BlockInputs& in, double rho_1, double rho_3) {
  if (!in.h || !in.fp || !in.x || !in.mu) throw DimensionError("assemble_quadratic: missing inputs");
  const Eigen::MatrixXcd& h = *in.h;
  const Eigen::Index n_t = h.rows();
  const int k = static_cast<int>(h.cols());
  const Eigen::Index n = n_t * k;
  if (in.fp->t.size() != k || in.x->size() != n || in.mu->size() != n)
    throw DimensionError("assemble_quadratic: inconsistent block sizes");
  if (in.gamma_var.size() != in.mm.size() || in.gamma_dual.size() != in.mm.size())
    throw DimensionError("assemble_quadratic: sensing terms inconsistent");

  QuadraticBlock q;
  Eigen::MatrixXcd inner = Eigen::MatrixXcd::Zero(n_t, n_t);
  for (int j = 0; j < k; ++j) inner += std::norm(in.fp->t(j)) * (h.col(j) * h.col(j).adjoint());
  // Exact Hermitian symmetry regardless of rounding in the outer products.
  inner = 0.5 * (inner + inner.adjoint()).eval();
  q.t = Eigen::MatrixXcd::Zero(n, n);
  for (int j = 0; j < k; ++j) q.t.block(j * n_t, j * n_t, n_t, n_t) = inner;
  q.h_hat.resize(n);
  for (int j = 0; j < k; ++j) q.h_hat.segment(j * n_t, n_t) = std::sqrt(1.0 + in.fp->r(j)) * in.fp->t(j) * h.col(j);

  const Eigen::MatrixXcd m = q.t + 0.5 * rho_1 * Eigen::MatrixXcd::Identity(n, n);
  q.a_sym.resize(2 * n, 2 * n);
  q.a_sym << 2.0 * m.real(), -2.0 * m.imag(), 2.0 * m.imag(), 2.0 * m.real();

  Eigen::VectorXcd lin = 2.0 * q.h_hat + rho_1 * (*in.x) + (*in.mu);
  q.b = stack_real(lin);
  for (std::size_t g = 0; g < in.mm.size(); ++g) {
    const Eigen::VectorXd beta = stack_real(in.mm[g].b);
    q.a_sym.noalias() += rho_3 * beta * beta.transpose();
    const double e = in.mm[g].c - in.gamma_var[g] + in.gamma_dual[g] / rho_3;
    q.b -= rho_3 * e * beta;
  }
  return q;
}

double w_objective(const BlockInputs& in, const QuadraticBlock& q, const Eigen::VectorXcd& w, double rho_1,
                   double rho_3) {
  double f = (w.adjoint() * q.t * w)(0).real() - 2.0 * q.h_hat.dot(w).real();
  f += 0.5 * rho_1 * (*in.x - w + *in.mu / rho_1).squaredNorm();
  for (std::size_t g = 0; g < in.mm.size(); ++g) {
    const double e = in.mm[g].b.dot(w).real() + in.mm[g].c - in.gamma_var[g] + in.gamma_dual[g] / rho_3;
    f += 0.5 * rho_3 * e * e;
  }
  return f;
}

double w_objective_real(const QuadraticBlock& q, const Eigen::VectorXd& w_real) {
  return 0.5 * w_real.dot(q.a_sym * w_real) - q.b.dot(w_real);
}

Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& s, double rel_cutoff) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  if (eig.info() != Eigen::Success) throw SolverConsistencyError("symmetric_pinv: eigendecomposition failed");
  const Eigen::VectorXd& lam = eig.eigenvalues();
  const double cutoff = rel_cutoff * lam.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv(lam.size());
  for (Eigen::Index j = 0; j < lam.size(); ++j) inv(j) = std::abs(lam(j)) > cutoff ? 1.0 / lam(j) : 0.0;
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::VectorXcd update_w(const QuadraticBlock& q) {
  const Eigen::VectorXd w = symmetric_pinv(q.a_sym) * q.b;
  const double res = (q.a_sym * w - q.b).norm();
  if (!(res <= 1e-8 * (1.0 + q.b.norm())))
    throw SolverConsistencyError("update_w: stationarity residual " + std::to_string(res) + " too large");
  return unstack_real(w);
}

double x_objective(const Eigen::VectorXcd& x, const Eigen::VectorXcd& w, double p, const Eigen::VectorXcd& mu,
                   double nu, double rho_1, double rho_2) {
  const double e = x.squaredNorm() - p + nu / rho_2;
  return 0.5 * rho_1 * (x - w + mu / rho_1).squaredNorm() + 0.5 * rho_2 * e * e;
}

XUpdate update_x(const Eigen::VectorXcd& w, double p, const Eigen::VectorXcd& mu, double nu, double rho_1,
                 double rho_2) {
  if (rho_1 <= 0.0 || rho_2 <= 0.0) throw ConfigError("update_x: penalties must be positive");
  const Eigen::VectorXcd v = w - mu / rho_1;
  const double k = v.norm();
  const double a = 1.0 - 2.0 * rho_2 / rho_1 * p + 2.0 * nu / rho_1;
  const double b = 2.0 * rho_2 / rho_1;

  std::vector<Eigen::VectorXcd> cands;
  auto stationary = [&](const Eigen::VectorXcd& x) {
    const Eigen::VectorXcd g = rho_1 * (x - v) + 2.0 * rho_2 * (x.squaredNorm() - p + nu / rho_2) * x;
    return g.norm() <= 1e-8 * std::max({1.0, rho_1 * k, rho_1 * x.norm()});
  };

  if (k == 0.0) {
    cands.push_back(Eigen::VectorXcd::Zero(v.size()));
    if (a < 0.0 && v.size() > 0) {
      // Any x on the sphere ||x||^2 = -a/b is stationary; all share one value of h.
      Eigen::VectorXcd x = Eigen::VectorXcd::Zero(v.size());
      x(0) = std::sqrt(-a / b);
      cands.push_back(x);
    }
  } else {
    for (double sign : {-1.0, 1.0}) {
      // n (a + b n^2) = -sign * k
      for (double n : real_cubic_roots(b, 0.0, a, sign * k)) {
        if (n < 0.0) continue;
        const double denom = a + b * n * n;
        if (denom == 0.0) continue;
        const Eigen::VectorXcd x = v / denom;
        if (stationary(x)) cands.push_back(x);
      }
    }
  }

  XUpdate out;
  out.objective = std::numeric_limits<double>::infinity();
  for (const auto& x : cands) {
    const double h = x_objective(x, w, p, mu, nu, rho_1, rho_2);
    if (h < out.objective) {
      out.objective = h;
      out.x = x;
    }
  }
  if (cands.empty()) {
    out.x = v;
    out.objective = x_objective(v, w, p, mu, nu, rho_1, rho_2);
    out.degenerate = true;
  }
  return out;
}

std::vector<double> project_sum_at_least(const std::vector<double>& gamma_hat, double rhs) {
  if (gamma_hat.empty()) throw DimensionError("project_sum_at_least: empty input");
  double sum = 0.0;
  for (double g : gamma_hat) sum += g;
  const double lift = std::max((rhs - sum) / static_cast<double>(gamma_hat.size()), 0.0);
  std::vector<double> out(gamma_hat);
  for (double& g : out) g += lift;
  return out;
}

std::vector<double> project_sum_at_most(const std::vector<double>& p_hat, double budget) {
  if (p_hat.empty()) throw DimensionError("project_sum_at_most: empty input");
  double sum = 0.0;
  for (double p : p_hat) sum += p;
  const double shift = std::max((sum - budget) / static_cast<double>(p_hat.size()), 0.0);
  std::vector<double> out(p_hat);
  for (double& p : out) p -= shift;
  return out;
}

PrecoderSet SolverState::precoders() const {
  PrecoderSet out;
  out.w.reserve(w.size());
  for (const auto& wi : w) out.w.push_back(unvec(wi, n_t, k));
  return out;
}

SolverState initialize(const SystemConfig& cfg, const SensingSpec& spec, const SelectionMask* mask) {
  if (cfg.k < 1) throw ConfigError("initialize: K must be >= 1");
  SolverState s;
  s.n_t = cfg.n_t;
  s.k = cfg.k;
  s.rho_1 = cfg.rho_1;
  s.rho_2 = cfg.rho_2;
  s.rho_3 = cfg.rho_3;

  Eigen::MatrixXcd w0(cfg.n_t, cfg.k);
  const double amp = std::sqrt(cfg.p_0 / (static_cast<double>(cfg.n_s) * cfg.n_t * cfg.k));
  for (int j = 0; j < cfg.k; ++j) {
    const double theta = cfg.k == 1 ? 0.5 * (cfg.theta_a + cfg.theta_b)
                                    : cfg.theta_a + j * (cfg.theta_b - cfg.theta_a) / (cfg.k - 1);
    w0.col(j) = amp * steering_vector(transmit_frequency(theta, cfg), cfg.n_t);
  }
  const Eigen::VectorXcd w0v = vec(w0);
  const Eigen::Index n = w0v.size();
  s.w.assign(static_cast<std::size_t>(cfg.n_s), w0v);
  s.x = s.w;
  s.mu.assign(static_cast<std::size_t>(cfg.n_s), Eigen::VectorXcd::Zero(n));
  s.p.assign(static_cast<std::size_t>(cfg.n_s), w0v.squaredNorm());
  s.nu.assign(static_cast<std::size_t>(cfg.n_s), 0.0);

  if (mask && mask->n_sel() > 0) {
    if (mask->n_s() != cfg.n_s) throw DimensionError("initialize: mask length differs from N_s");
    s.selected = mask->selected;
  }
  const auto n_sel = static_cast<Eigen::Index>(s.selected.size());
  const auto n_g = static_cast<Eigen::Index>(spec.steering.size());
  s.gamma_var = Eigen::MatrixXd::Zero(n_sel, n_g);
  s.gamma_dual = Eigen::MatrixXd::Zero(n_sel, n_g);
  for (Eigen::Index j = 0; j < n_sel; ++j)
    for (Eigen::Index g = 0; g < n_g; ++g)
      s.gamma_var(j, g) = beampattern(s.w[static_cast<std::size_t>(s.selected[static_cast<std::size_t>(j)])],
                                      spec.steering[static_cast<std::size_t>(g)], cfg.k);
  return s;
}

std::vector<std::vector<MmTerm>> mm_terms(const SolverState& s, const SensingSpec& spec) {
  std::vector<std::vector<MmTerm>> out(s.selected.size());
  for (std::size_t j = 0; j < s.selected.size(); ++j)
    for (const auto& a : spec.steering)
      out[j].push_back(mm_surrogate(s.w[static_cast<std::size_t>(s.selected[j])], a, s.k));
  return out;
}

void update_gamma(SolverState& s, const std::vector<std::vector<MmTerm>>& mm, const SensingSpec& spec) {
  const std::size_t n_sel = s.selected.size();
  if (n_sel == 0) return;
  std::vector<double> hat(n_sel);
  for (Eigen::Index g = 0; g < s.gamma_var.cols(); ++g) {
    for (std::size_t j = 0; j < n_sel; ++j) {
      const auto& t = mm[j][static_cast<std::size_t>(g)];
      hat[j] = t.b.dot(s.w[static_cast<std::size_t>(s.selected[j])]).real() + t.c +
               s.gamma_dual(static_cast<Eigen::Index>(j), g) / s.rho_3;
    }
    const auto proj = project_sum_at_least(hat, spec.threshold_rhs);
    for (std::size_t j = 0; j < n_sel; ++j) s.gamma_var(static_cast<Eigen::Index>(j), g) = proj[j];
  }
}

void update_p(SolverState& s, double p_0) {
  std::vector<double> hat(s.x.size());
  for (std::size_t i = 0; i < s.x.size(); ++i) hat[i] = s.x[i].squaredNorm() + s.nu[i] / s.rho_2;
  s.p = project_sum_at_most(hat, p_0);
}

namespace {

double sensing_gap(const SolverState& s, const std::vector<std::vector<MmTerm>>& mm, std::size_t j, Eigen::Index g) {
  const auto& t = mm[j][static_cast<std::size_t>(g)];
  return t.b.dot(s.w[static_cast<std::size_t>(s.selected[j])]).real() + t.c - s.gamma_var(static_cast<Eigen::Index>(j), g);
}

}  // namespace

void update_duals(SolverState& s, const std::vector<std::vector<MmTerm>>& mm) {
  for (std::size_t i = 0; i < s.w.size(); ++i) {
    s.mu[i] += s.rho_1 * (s.x[i] - s.w[i]);
    s.nu[i] += s.rho_2 * (s.x[i].squaredNorm() - s.p[i]);
  }
  for (std::size_t j = 0; j < s.selected.size(); ++j)
    for (Eigen::Index g = 0; g < s.gamma_dual.cols(); ++g)
      s.gamma_dual(static_cast<Eigen::Index>(j), g) += s.rho_3 * sensing_gap(s, mm, j, g);
}

Residuals residual_norms(const SolverState& now, const SolverState& prev, const std::vector<std::vector<MmTerm>>& mm) {
  if (now.w.size() != prev.w.size() || now.selected != prev.selected)
    throw DimensionError("residual_norms: states have different shapes");
  double r2 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < now.w.size(); ++i) {
    const double gap = now.x[i].squaredNorm() - now.p[i];
    r2 += (now.x[i] - now.w[i]).squaredNorm() + gap * gap;
    s2 += (now.rho_1 * (now.w[i] - prev.w[i])).squaredNorm();
    const double dp = now.rho_2 * (now.p[i] - prev.p[i]);
    s2 += dp * dp;
  }
  for (std::size_t j = 0; j < now.selected.size(); ++j)
    for (Eigen::Index g = 0; g < now.gamma_var.cols(); ++g) {
      const double gap = sensing_gap(now, mm, j, g);
      r2 += gap * gap;
      const double dg = now.gamma_var(static_cast<Eigen::Index>(j), g) - prev.gamma_var(static_cast<Eigen::Index>(j), g);
      s2 += (now.rho_3 * dg * mm[j][static_cast<std::size_t>(g)].b).squaredNorm();
    }
  return {std::sqrt(r2), std::sqrt(s2)};
}

StopRule stop_rule(const SystemConfig& cfg) {
  StopRule r;
  r.max_iter = cfg.solver.max_iter;
  const double def = 1e-3 * std::sqrt(static_cast<double>(cfg.n_s) * cfg.n_t * cfg.k);
  r.eps_primal = cfg.solver.eps_primal > 0.0 ? cfg.solver.eps_primal : def;
  r.eps_dual = cfg.solver.eps_dual > 0.0 ? cfg.solver.eps_dual : def;
  return r;
}

SolveResult solve(const SystemConfig& cfg, const ChannelSet& h, const SensingSpec& spec, const SelectionMask* mask,
                  const StopRule& stop, const SolveOptions& opt) {
  if (h.num_subcarriers() != cfg.n_s) throw DimensionError("solve: channel set has the wrong subcarrier count");
  for (const auto& hi : h.h)
    if (hi.rows() != cfg.n_t || hi.cols() != cfg.k) throw DimensionError("solve: H_i must be N_t x K");
  if (stop.max_iter < 1) throw ConfigError("solve: max_iter must be >= 1");
  const bool sensing = mask && mask->n_sel() > 0;
  if (sensing && spec.steering.empty()) throw ConfigError("solve: sensing requested without a grid");

  const auto t0 = std::chrono::steady_clock::now();
  SolverState s = initialize(cfg, spec, mask);
  SolveResult res;
  // Imaginary parts the dual variables would carry if kept complex.
  std::vector<double> nu_shadow_im(s.nu.size(), 0.0);
  Eigen::MatrixXd gamma_shadow_im = Eigen::MatrixXd::Zero(s.gamma_dual.rows(), s.gamma_dual.cols());

  std::vector<int> sel_index(static_cast<std::size_t>(cfg.n_s), -1);
  for (std::size_t j = 0; j < s.selected.size(); ++j) sel_index[static_cast<std::size_t>(s.selected[j])] = static_cast<int>(j);

  for (int it = 1; it <= stop.max_iter; ++it) {
    const SolverState prev = s;
    const auto mm = mm_terms(s, spec);

    std::vector<FpTerms> fp;
    fp.reserve(s.w.size());
    for (std::size_t i = 0; i < s.w.size(); ++i) fp.push_back(fp_update(unvec(s.w[i], cfg.n_t, cfg.k), h.h[i], cfg.sigma_c_sq));

    for (std::size_t i = 0; i < s.w.size(); ++i) {
      BlockInputs in;
      in.h = &h.h[i];
      in.fp = &fp[i];
      in.x = &s.x[i];
      in.mu = &s.mu[i];
      const int j = sel_index[i];
      if (j >= 0) {
        in.mm = mm[static_cast<std::size_t>(j)];
        for (Eigen::Index g = 0; g < s.gamma_var.cols(); ++g) {
          in.gamma_var.push_back(s.gamma_var(j, g));
          in.gamma_dual.push_back(s.gamma_dual(j, g));
        }
      }
      const QuadraticBlock q = assemble_quadratic(in, s.rho_1, s.rho_3);
      if (opt.check_invariants) {
        const double norm = q.a_sym.norm();
        res.invariants.max_asymmetry =
            std::max(res.invariants.max_asymmetry, (q.a_sym - q.a_sym.transpose()).cwiseAbs().maxCoeff() / norm);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q.a_sym, Eigen::EigenvaluesOnly);
        res.invariants.max_psd_violation = std::max(res.invariants.max_psd_violation, -eig.eigenvalues()(0) / norm);
        ++res.invariants.blocks_checked;
      }
      s.w[i] = update_w(q);
      if (opt.check_invariants && j >= 0) {
        for (std::size_t g = 0; g < spec.steering.size(); ++g) {
          const auto& t = mm[static_cast<std::size_t>(j)][g];
          const double at_old = t.b.dot(prev.w[i]).real() + t.c;
          const double true_old = beampattern(prev.w[i], spec.steering[g], cfg.k);
          const double at_new = t.b.dot(s.w[i]).real() + t.c;
          const double true_new = beampattern(s.w[i], spec.steering[g], cfg.k);
          res.invariants.max_tightness_error =
              std::max(res.invariants.max_tightness_error, std::abs(at_old - true_old));
          res.invariants.max_minorization_gap = std::max(res.invariants.max_minorization_gap, at_new - true_new);
        }
      }
    }

    for (std::size_t i = 0; i < s.w.size(); ++i) s.x[i] = update_x(s.w[i], s.p[i], s.mu[i], s.nu[i], s.rho_1, s.rho_2).x;
    update_gamma(s, mm, spec);
    update_p(s, cfg.p_0);
    if (opt.check_invariants) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        const cdouble sq = s.x[i].dot(s.x[i]);
        nu_shadow_im[i] += s.rho_2 * sq.imag();
        res.invariants.max_dual_imag = std::max(res.invariants.max_dual_imag, std::abs(nu_shadow_im[i]));
      }
      for (std::size_t j = 0; j < s.selected.size(); ++j)
        for (std::size_t g = 0; g < spec.steering.size(); ++g) {
          const auto& t = mm[j][g];
          const auto& wi = s.w[static_cast<std::size_t>(s.selected[j])];
          const cdouble re_part = 0.5 * (t.b.dot(wi) + wi.dot(t.b));
          const auto jj = static_cast<Eigen::Index>(j);
          const auto gg = static_cast<Eigen::Index>(g);
          gamma_shadow_im(jj, gg) += s.rho_3 * re_part.imag();
          res.invariants.max_dual_imag = std::max(res.invariants.max_dual_imag, std::abs(gamma_shadow_im(jj, gg)));
        }
    }
    update_duals(s, mm);
    s.iteration = it;

    const Residuals rn = residual_norms(s, prev, mm);
    res.final_residuals = rn;
    res.iterations = it;
    if (opt.record_trace) {
      TraceRow row;
      row.iteration = it;
      const PrecoderSet w = s.precoders();
      row.sum_rate_bits = sum_rate(h, w, cfg.sigma_c_sq);
      row.r_primal = rn.r_primal;
      row.s_dual = rn.s_dual;
      if (sensing) row.min_sensing_surplus_db = linear_to_db(min_sensing_ratio(w, spec, *mask, cfg));
      row.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      res.trace.push_back(row);
    }
    if (rn.r_primal < stop.eps_primal && rn.s_dual < stop.eps_dual) {
      res.converged = true;
      break;
    }
  }

  res.w = s.precoders();
  const double power = res.w.total_power();
  if (power > cfg.p_0) {
    const double scale = std::sqrt(cfg.p_0 / power);
    for (auto& wi : res.w.w) wi *= scale;
  }
  res.feasible = res.w.total_power() <= cfg.p_0 * (1.0 + 1e-6);
  if (sensing) {
    res.min_sensing_ratio = min_sensing_ratio(res.w, spec, *mask, cfg);
    if (res.min_sensing_ratio < 1.0 - 1e-2) res.feasible = false;
  }
  return res;
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,sum_rate_bits,r_primal,s_dual,min_sensing_surplus_db,wall_time_ms\n";
  for (const auto& r : trace) {
    out << r.iteration << ',' << r.sum_rate_bits << ',' << r.r_primal << ',' << r.s_dual << ',';
    if (r.min_sensing_surplus_db) out << *r.min_sensing_surplus_db;
    out << ',' << r.wall_time_ms << '\n';
  }
  return out.str();
}

}  // namespace isac

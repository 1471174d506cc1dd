#include "isac/sparse_recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/QR>
#include <json.hpp>

#include "isac/errors.hpp"
#include "isac/rng.hpp"

namespace isac {

std::vector<int> SelectionMask::rows() const {
  std::vector<int> r = selected;
  for (int p = n_s(); p < n_d; ++p) r.push_back(p);
  return r;
}

SelectionMask make_selection_mask(int n_s, int n_d, int n_sel, std::uint64_t seed) {
  if (n_sel <= 0 || n_sel > n_s) throw ConfigError("selection mask: need 0 < N_sel <= N_s");
  if (n_d < n_s) throw ConfigError("selection mask: need N_d >= N_s");
  SelectionMask m;
  m.n_d = n_d;
  m.seed = seed;
  m.phi.assign(static_cast<std::size_t>(n_s), 0);
  std::vector<int> idx(static_cast<std::size_t>(n_s));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(stream_seed(seed, Stream::kMask));
  // Partial Fisher-Yates: the first n_sel slots form the subset.
  for (int j = 0; j < n_sel; ++j) {
    std::uniform_int_distribution<int> pick(j, n_s - 1);
    std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  m.selected.assign(idx.begin(), idx.begin() + n_sel);
  std::sort(m.selected.begin(), m.selected.end());
  for (int s : m.selected) m.phi[static_cast<std::size_t>(s)] = 1;
  return m;
}

SelectionMask make_selection_mask(const SystemConfig& cfg, std::uint64_t seed) {
  return make_selection_mask(cfg.n_s, cfg.n_d, cfg.n_sel, seed);
}

SelectionMask full_selection(int n_s, int n_d) {
  if (n_s <= 0 || n_d < n_s) throw ConfigError("full_selection: need 0 < N_s <= N_d");
  SelectionMask m;
  m.n_d = n_d;
  m.phi.assign(static_cast<std::size_t>(n_s), 1);
  m.selected.resize(static_cast<std::size_t>(n_s));
  std::iota(m.selected.begin(), m.selected.end(), 0);
  return m;
}

std::string mask_to_json(const SelectionMask& mask) {
  nlohmann::ordered_json j;
  j["seed"] = mask.seed;
  j["n_s"] = mask.n_s();
  j["n_d"] = mask.n_d;
  j["selected"] = mask.selected;
  return j.dump(2) + "\n";
}

SelectionMask mask_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("mask: ") + e.what());
  }
  if (!j.is_object() || !j.contains("n_s") || !j.contains("n_d") || !j.contains("selected"))
    throw FormatError("mask: expected keys n_s, n_d, selected");
  SelectionMask m;
  m.seed = j.value("seed", std::uint64_t{0});
  m.n_d = j.at("n_d").get<int>();
  const int n_s = j.at("n_s").get<int>();
  if (n_s <= 0 || m.n_d < n_s) throw FormatError("mask: need 0 < n_s <= n_d");
  m.phi.assign(static_cast<std::size_t>(n_s), 0);
  for (int s : j.at("selected").get<std::vector<int>>()) {
    if (s < 0 || s >= n_s || m.phi[static_cast<std::size_t>(s)]) throw FormatError("mask: bad or repeated index");
    m.phi[static_cast<std::size_t>(s)] = 1;
  }
  for (int s = 0; s < n_s; ++s)
    if (m.phi[static_cast<std::size_t>(s)]) m.selected.push_back(s);
  if (m.selected.empty()) throw FormatError("mask: empty selection");
  return m;
}

Eigen::MatrixXcd measurement_operator(const SelectionMask& mask) {
  const DelayDftMatrix f(mask.n_d);
  const Eigen::MatrixXcd finv = f.inverse();
  const auto rows = mask.rows();
  Eigen::MatrixXcd a(static_cast<Eigen::Index>(rows.size()), mask.n_d);
  for (std::size_t r = 0; r < rows.size(); ++r) a.row(static_cast<Eigen::Index>(r)) = finv.row(rows[r]);
  const Eigen::MatrixXcd gram = a * a.adjoint();
  const Eigen::MatrixXcd ref =
      Eigen::MatrixXcd::Identity(a.rows(), a.rows()) / static_cast<double>(mask.n_d);
  if ((gram - ref).cwiseAbs().maxCoeff() > 1e-10)
    throw SolverConsistencyError("measurement_operator: A A^H != I / N_d");
  return a;
}

namespace {

double l1(const Eigen::VectorXcd& v) { return v.cwiseAbs().sum(); }

Eigen::VectorXcd soft_threshold(const Eigen::VectorXcd& v, double tau) {
  Eigen::VectorXcd out(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double m = std::abs(v(j));
    out(j) = m > tau ? v(j) * ((m - tau) / m) : cdouble{};
  }
  return out;
}

// Least-squares refit on the support of z; kept only if it is feasible and
// no worse in l1 than the ADMM iterate.
bool polish(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b, const Eigen::VectorXcd& z, Eigen::VectorXcd& y) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < z.size(); ++j)
    if (z(j) != cdouble{}) support.push_back(j);
  if (support.empty() || static_cast<Eigen::Index>(support.size()) > a.rows()) return false;
  Eigen::MatrixXcd as(a.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t c = 0; c < support.size(); ++c) as.col(static_cast<Eigen::Index>(c)) = a.col(support[c]);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(as);
  if (qr.rank() < as.cols()) return false;
  const Eigen::VectorXcd coef = qr.solve(b);
  Eigen::VectorXcd cand = Eigen::VectorXcd::Zero(z.size());
  for (std::size_t c = 0; c < support.size(); ++c) cand(support[c]) = coef(static_cast<Eigen::Index>(c));
  const double res = (a * cand - b).norm();
  if (res > 1e-10 * std::max(b.norm(), 1e-300) || l1(cand) > l1(y) * (1.0 + 1e-12)) return false;
  y = cand;
  return true;
}

}  // namespace

BpSolution basis_pursuit(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b, int n_d,
                         const BasisPursuitOptions& opt) {
  if (a.cols() != n_d || a.rows() != b.size()) throw DimensionError("basis_pursuit: operator / data shape mismatch");
  if (opt.penalty <= 0.0 || opt.max_iter < 1 || opt.tol_eq <= 0.0)
    throw ConfigError("basis_pursuit: penalty, tolerance and max_iter must be positive");
  BpSolution sol;
  sol.y_hat = Eigen::VectorXcd::Zero(n_d);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    sol.converged = true;
    return sol;
  }

  // The problem is positively homogeneous in b: solve at unit scale of the
  // minimum-norm solution and rescale.
  const double nd = static_cast<double>(n_d);
  const Eigen::MatrixXcd ah = a.adjoint();
  const Eigen::VectorXcd y_ln = nd * (ah * b);
  const double scale = y_ln.cwiseAbs().maxCoeff();
  const Eigen::VectorXcd bs = b / scale;
  const Eigen::VectorXcd q = nd * (ah * bs);  // projection offset
  const Eigen::MatrixXcd proj = Eigen::MatrixXcd::Identity(n_d, n_d) - nd * (ah * a);

  const double rho = opt.penalty;
  const double tau = 1.0 / rho;
  Eigen::VectorXcd x = q;
  Eigen::VectorXcd z = soft_threshold(x, tau);
  Eigen::VectorXcd u = x - z;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    x = proj * (z - u) + q;
    const Eigen::VectorXcd z_old = z;
    z = soft_threshold(x + u, tau);
    u += x - z;
    const double r = (x - z).norm();
    const double s = rho * (z - z_old).norm();
    const double size = std::max({x.norm(), z.norm(), 1.0});
    if (r <= opt.tol_eq * size && s <= opt.tol_eq * size) {
      sol.converged = true;
      ++it;
      break;
    }
  }
  sol.iterations = it;
  Eigen::VectorXcd y = x;
  polish(a, bs, z, y);
  sol.y_hat = y * scale;
  sol.objective = l1(sol.y_hat);
  sol.residual = (a * sol.y_hat - b).norm();
  return sol;
}

OmpResult omp_oracle(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b, int sparsity) {
  if (a.rows() != b.size()) throw DimensionError("omp_oracle: operator / data shape mismatch");
  if (sparsity < 0 || sparsity > a.rows()) throw ConfigError("omp_oracle: sparsity must lie in [0, rows]");
  OmpResult out;
  out.values = Eigen::VectorXcd(0);
  const double bnorm = b.norm();
  if (sparsity == 0 || bnorm == 0.0) return out;

  const Eigen::VectorXd col_norms = a.colwise().norm().transpose();
  Eigen::VectorXcd residual = b;
  std::vector<bool> used(static_cast<std::size_t>(a.cols()), false);
  for (int step = 0; step < sparsity; ++step) {
    const Eigen::VectorXcd corr = a.adjoint() * residual;
    Eigen::Index best = -1;
    double best_val = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (used[static_cast<std::size_t>(j)] || col_norms(j) == 0.0) continue;
      const double c = std::abs(corr(j)) / col_norms(j);
      if (c > best_val) {
        best_val = c;
        best = j;
      }
    }
    // No correlation left: the residual is already explained.
    if (best < 0 || best_val <= 1e-14 * bnorm) break;

    out.support.push_back(static_cast<int>(best));
    used[static_cast<std::size_t>(best)] = true;
    Eigen::MatrixXcd as(a.rows(), static_cast<Eigen::Index>(out.support.size()));
    for (std::size_t c = 0; c < out.support.size(); ++c) as.col(static_cast<Eigen::Index>(c)) = a.col(out.support[c]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(as);
    if (qr.rank() < as.cols()) {
      out.support.pop_back();
      out.rank_deficient = true;
      break;
    }
    out.values = qr.solve(b);
    residual = b - as * out.values;
  }
  return out;
}

CsResult cs_estimate(const DopplerSpectra& spectra, const SelectionMask& mask, const SystemConfig& cfg) {
  const int n_s = spectra.values.dim(0), a_count = spectra.values.dim(1), v_count = spectra.values.dim(2);
  if (mask.n_s() != n_s || mask.n_d != cfg.n_d) throw DimensionError("cs_estimate: mask does not match the spectra");
  const Eigen::MatrixXcd a = measurement_operator(mask);
  const auto rows = mask.rows();

  CsResult out{ProcessedCube{Cube3(a_count, cfg.n_d, v_count), spectra.angle, delay_axis(cfg.n_d), spectra.doppler},
               0, 0};
  Eigen::VectorXcd b(static_cast<Eigen::Index>(rows.size()));
  for (int ia = 0; ia < a_count; ++ia)
    for (int iv = 0; iv < v_count; ++iv) {
      const Eigen::VectorXcd fiber = delay_fiber(spectra, ia, iv, cfg.n_d);
      for (std::size_t r = 0; r < rows.size(); ++r) b(static_cast<Eigen::Index>(r)) = fiber(rows[r]);
      const BpSolution sol = basis_pursuit(a, b, cfg.n_d, cfg.basis_pursuit);
      ++out.fibers;
      if (!sol.converged) ++out.nonconverged;
      for (int d = 0; d < cfg.n_d; ++d) out.cube.values(ia, d, iv) = sol.y_hat(d);
    }
  return out;
}

CsResult cs_process(const EchoCube& y, const std::vector<Eigen::MatrixXcd>& x, const SelectionMask& mask,
                    const SystemConfig& cfg) {
  const auto spatial = spatial_dft(y, cfg.n_a);
  const auto removed = remove_coefficients(spatial, x, cfg, mask.phi);
  const auto doppler = doppler_dft(removed.spectra, cfg.n_v);
  return cs_estimate(doppler, mask, cfg);
}

}  // namespace isac

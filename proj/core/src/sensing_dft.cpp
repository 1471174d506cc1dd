#include "isac/sensing_dft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "isac/errors.hpp"

namespace isac {

namespace {

// exp(-j 2 pi k / n) with k reduced modulo n first so large products stay exact.
cdouble twiddle(long long k, int n) {
  long long r = k % n;
  if (r < 0) r += n;
  return std::polar(1.0, -2.0 * kPi * static_cast<double>(r) / static_cast<double>(n));
}

}  // namespace

BinAxis centered_axis(int n) {
  const int half = n / 2;
  return BinAxis{-half, 2 * half, n};
}

BinAxis delay_axis(int n_d) { return BinAxis{-n_d + 1, n_d, n_d}; }

DelayDftMatrix::DelayDftMatrix(int n_d) : f_(n_d, n_d) {
  if (n_d < 1) throw DimensionError("DelayDftMatrix: N_d must be >= 1");
  for (int r = 0; r < n_d; ++r)
    for (int c = 0; c < n_d; ++c)
      f_(r, c) = twiddle(static_cast<long long>(c) * (r + 1 - n_d), n_d);
  if (orthogonality_error() > 1e-10 * n_d)
    throw SolverConsistencyError("DelayDftMatrix: F F^H != N_d I");
}

double DelayDftMatrix::orthogonality_error() const {
  const Eigen::MatrixXcd g = f_ * f_.adjoint();
  const Eigen::MatrixXcd ref = static_cast<double>(size()) * Eigen::MatrixXcd::Identity(size(), size());
  return (g - ref).cwiseAbs().maxCoeff();
}

AngleSpectra spatial_dft(const EchoCube& y, int n_a) {
  const int n_r = y.dim(0), n_s = y.dim(1), l_count = y.dim(2);
  if (n_a < n_r) throw ConfigError("spatial_dft: N_a must be >= N_r");
  AngleSpectra out{Cube3(n_s, l_count, 2 * (n_a / 2)), centered_axis(n_a)};
  const BinAxis& ax = out.angle;
  // tw(a, m) = exp(-j m 2 pi n_a / N_a) / N_r
  Eigen::MatrixXcd tw(ax.count, n_r);
  for (int a = 0; a < ax.count; ++a)
    for (int m = 0; m < n_r; ++m)
      tw(a, m) = twiddle(static_cast<long long>(m) * ax.bin(a), n_a) / static_cast<double>(n_r);
  for (int i = 0; i < n_s; ++i)
    for (int l = 0; l < l_count; ++l)
      for (int a = 0; a < ax.count; ++a) {
        cdouble acc{};
        for (int m = 0; m < n_r; ++m) acc += tw(a, m) * y(m, i, l);
        out.values(i, l, a) = acc;
      }
  return out;
}

CoefficientRemoval remove_coefficients(const AngleSpectra& spectra, const std::vector<Eigen::MatrixXcd>& x,
                                       const SystemConfig& cfg, std::span<const std::uint8_t> active) {
  const int n_s = spectra.values.dim(0), l_count = spectra.values.dim(1);
  const BinAxis& ax = spectra.angle;
  if (static_cast<int>(x.size()) != n_s) throw DimensionError("remove_coefficients: subcarrier count mismatch");
  if (!active.empty() && static_cast<int>(active.size()) != n_s)
    throw DimensionError("remove_coefficients: mask length mismatch");
  for (const auto& xi : x)
    if (xi.cols() != l_count || xi.rows() != cfg.n_t) throw DimensionError("remove_coefficients: X_i must be N_t x L");
  auto is_active = [&](int i) { return active.empty() || active[static_cast<std::size_t>(i)] != 0; };

  CoefficientRemoval out{AngleSpectra{Cube3(n_s, l_count, ax.count), ax}, std::vector<double>(ax.count, 1.0), {}};
  std::vector<cdouble> divisor(static_cast<std::size_t>(n_s * l_count));
  for (int a = 0; a < ax.count; ++a) {
    const int n_a = ax.bin(a);
    const double omega = -cfg.d_t * n_a * 2.0 * kPi / (cfg.d_r * ax.period);
    const Eigen::VectorXcd steer = steering_vector(omega, cfg.n_t);

    double mean_mag = 0.0;
    int used = 0;
    for (int i = 0; i < n_s; ++i) {
      if (!is_active(i)) continue;
      const Eigen::RowVectorXcd d = steer.adjoint() * x[static_cast<std::size_t>(i)];
      for (int l = 0; l < l_count; ++l) {
        divisor[static_cast<std::size_t>(i * l_count + l)] = d(l);
        mean_mag += std::abs(d(l));
        ++used;
      }
    }
    if (used == 0) continue;
    mean_mag /= used;
    const double floor = 1e-9 * mean_mag;

    double num = 0.0, den = 0.0;
    for (int i = 0; i < n_s; ++i) {
      if (!is_active(i)) continue;
      for (int l = 0; l < l_count; ++l) {
        const cdouble d = divisor[static_cast<std::size_t>(i * l_count + l)];
        if (!(std::abs(d) > floor)) {
          out.flagged.push_back({i, l, n_a});
          continue;
        }
        const cdouble yv = spectra.values(i, l, a);
        num += std::norm(yv / d);
        den += std::norm(yv);
      }
    }
    // 0/0 for bins without energy: leave alpha at 1.
    const double alpha = den > 0.0 ? std::sqrt(num / den) : 1.0;
    out.alpha[static_cast<std::size_t>(a)] = alpha;

    for (int i = 0; i < n_s; ++i) {
      if (!is_active(i)) continue;
      for (int l = 0; l < l_count; ++l) {
        const cdouble d = divisor[static_cast<std::size_t>(i * l_count + l)];
        if (!(std::abs(d) > floor)) continue;
        out.spectra.values(i, l, a) = alpha > 0.0 ? spectra.values(i, l, a) / (alpha * d) : cdouble{};
      }
    }
  }
  return out;
}

DopplerSpectra doppler_dft(const AngleSpectra& spectra, int n_v) {
  const int n_s = spectra.values.dim(0), l_count = spectra.values.dim(1), a_count = spectra.values.dim(2);
  if (n_v < l_count) throw ConfigError("doppler_dft: N_v must be >= L");
  DopplerSpectra out{Cube3(n_s, a_count, 2 * (n_v / 2)), spectra.angle, centered_axis(n_v)};
  const BinAxis& vx = out.doppler;
  Eigen::MatrixXcd tw(vx.count, l_count);
  for (int v = 0; v < vx.count; ++v)
    for (int l = 0; l < l_count; ++l)
      tw(v, l) = twiddle(static_cast<long long>(l) * vx.bin(v), n_v) / static_cast<double>(l_count);
  for (int i = 0; i < n_s; ++i)
    for (int a = 0; a < a_count; ++a)
      for (int v = 0; v < vx.count; ++v) {
        cdouble acc{};
        for (int l = 0; l < l_count; ++l) acc += tw(v, l) * spectra.values(i, l, a);
        out.values(i, a, v) = acc;
      }
  return out;
}

Eigen::VectorXcd delay_fiber(const DopplerSpectra& spectra, int a, int v, int n_d) {
  const int n_s = spectra.values.dim(0);
  if (n_d < n_s) throw ConfigError("delay_fiber: N_d must be >= N_s");
  Eigen::VectorXcd f = Eigen::VectorXcd::Zero(n_d);
  for (int i = 0; i < n_s; ++i) f(i) = spectra.values(i, a, v) / static_cast<double>(n_s);
  return f;
}

ProcessedCube delay_dft(const DopplerSpectra& spectra, int n_d) {
  const int n_s = spectra.values.dim(0), a_count = spectra.values.dim(1), v_count = spectra.values.dim(2);
  if (n_d < n_s) throw ConfigError("delay_dft: N_d must be >= N_s");
  ProcessedCube out{Cube3(a_count, n_d, v_count), spectra.angle, delay_axis(n_d), spectra.doppler};
  Eigen::MatrixXcd tw(n_d, n_s);
  for (int d = 0; d < n_d; ++d)
    for (int i = 0; i < n_s; ++i)
      tw(d, i) = twiddle(static_cast<long long>(i) * out.delay.bin(d), n_d) / static_cast<double>(n_s);
  for (int a = 0; a < a_count; ++a)
    for (int v = 0; v < v_count; ++v)
      for (int d = 0; d < n_d; ++d) {
        cdouble acc{};
        for (int i = 0; i < n_s; ++i) acc += tw(d, i) * spectra.values(i, a, v);
        out.values(a, d, v) = acc;
      }
  return out;
}

ProcessedCube delay_dft_matrix(const DopplerSpectra& spectra, int n_d) {
  const int a_count = spectra.values.dim(1), v_count = spectra.values.dim(2);
  const DelayDftMatrix f(n_d);
  ProcessedCube out{Cube3(a_count, n_d, v_count), spectra.angle, delay_axis(n_d), spectra.doppler};
  for (int a = 0; a < a_count; ++a)
    for (int v = 0; v < v_count; ++v) {
      const Eigen::VectorXcd y = f.matrix() * delay_fiber(spectra, a, v, n_d);
      for (int d = 0; d < n_d; ++d) out.values(a, d, v) = y(d);
    }
  return out;
}

ProcessedCube dft_process(const EchoCube& y, const std::vector<Eigen::MatrixXcd>& x, const SystemConfig& cfg) {
  const auto spatial = spatial_dft(y, cfg.n_a);
  const auto removed = remove_coefficients(spatial, x, cfg);
  const auto doppler = doppler_dft(removed.spectra, cfg.n_v);
  return delay_dft(doppler, cfg.n_d);
}

double bin_to_angle(int n_a, const SystemConfig& cfg) {
  const double s = -static_cast<double>(n_a) * kSpeedOfLight / (cfg.n_a * cfg.d_r * cfg.f_c);
  if (std::abs(s) > 1.0) return std::numeric_limits<double>::quiet_NaN();
  return std::asin(s);
}

double bin_to_range(int n_d, const SystemConfig& cfg) {
  return -(static_cast<double>(n_d) / cfg.n_d) * kSpeedOfLight / (2.0 * cfg.delta_f);
}

double bin_to_velocity(int n_v, const SystemConfig& cfg) {
  return (static_cast<double>(n_v) / cfg.n_v) * kSpeedOfLight / (2.0 * cfg.t * cfg.f_c);
}

double angle_for_bin(int n_a, const SystemConfig& cfg) { return bin_to_angle(n_a, cfg); }
double range_for_bin(int n_d, const SystemConfig& cfg) { return bin_to_range(n_d, cfg); }
double velocity_for_bin(int n_v, const SystemConfig& cfg) { return bin_to_velocity(n_v, cfg); }

EstimationResult detect_and_invert(const ProcessedCube& cube, const SystemConfig& cfg, int max_targets,
                                   double min_rel_peak) {
  EstimationResult result;
  if (!cube.values.all_finite()) throw DomainError("detect_and_invert: cube has non-finite entries");
  const int na = cube.values.dim(0), nd = cube.values.dim(1), nv = cube.values.dim(2);
  if (max_targets <= 0 || cube.values.size() == 0) return result;

  std::vector<double> mag(cube.values.size());
  for (std::size_t idx = 0; idx < mag.size(); ++idx) mag[idx] = std::abs(cube.values.data()[idx]);
  const double global_max = *std::max_element(mag.begin(), mag.end());
  if (!(global_max > 0.0)) return result;
  const double threshold = min_rel_peak * global_max;

  // Neighbour index along one axis, or -1 past a non-wrapping edge.
  auto step = [](int s, int delta, const BinAxis& ax) {
    int t = s + delta;
    if (t >= 0 && t < ax.count) return t;
    if (!ax.wraps() || ax.count < 3) return -1;
    return (t + ax.count) % ax.count;
  };

  std::vector<Estimate> peaks;
  for (int a = 0; a < na; ++a)
    for (int d = 0; d < nd; ++d)
      for (int v = 0; v < nv; ++v) {
        const std::size_t here = cube.values.index(a, d, v);
        const double m = mag[here];
        if (m < threshold) continue;
        bool is_peak = true;
        for (int da = -1; da <= 1 && is_peak; ++da)
          for (int dd = -1; dd <= 1 && is_peak; ++dd)
            for (int dv = -1; dv <= 1 && is_peak; ++dv) {
              if (da == 0 && dd == 0 && dv == 0) continue;
              const int a2 = step(a, da, cube.angle), d2 = step(d, dd, cube.delay), v2 = step(v, dv, cube.doppler);
              if (a2 < 0 || d2 < 0 || v2 < 0) continue;
              const std::size_t there = cube.values.index(a2, d2, v2);
              if (there == here) continue;
              // Plateaus: the lowest storage index wins.
              if (mag[there] > m || (mag[there] == m && there < here)) is_peak = false;
            }
        if (!is_peak) continue;
        Estimate e;
        e.n_a = cube.angle.bin(a);
        e.n_d = cube.delay.bin(d);
        e.n_v = cube.doppler.bin(v);
        e.theta = bin_to_angle(e.n_a, cfg);
        if (std::isnan(e.theta)) continue;  // aliased angle bin
        e.d = bin_to_range(e.n_d, cfg);
        e.v = bin_to_velocity(e.n_v, cfg);
        e.magnitude = m;
        peaks.push_back(e);
      }

  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Estimate& x, const Estimate& y) { return x.magnitude > y.magnitude; });
  if (static_cast<int>(peaks.size()) > max_targets) peaks.resize(static_cast<std::size_t>(max_targets));
  result.estimates = std::move(peaks);
  return result;
}

RmseScales default_rmse_scales(const SystemConfig& cfg) {
  RmseScales s;
  s.theta = std::max(cfg.theta_b - cfg.theta_a, 1e-3);
  s.d = cfg.d_0;
  s.v = std::max(cfg.scene.max_speed_mps, 1.0);
  return s;
}

RmseResult rmse(const std::vector<Estimate>& estimates, const std::vector<Target>& truth, const RmseScales& scales,
                double miss_penalty) {
  if (truth.empty()) throw DomainError("rmse: truth list must be non-empty");
  RmseResult r;
  if (estimates.empty()) {
    r.theta = r.d = r.v = std::numeric_limits<double>::quiet_NaN();
    r.misses = static_cast<int>(truth.size());
    r.penalty = r.misses * miss_penalty;
    return r;
  }

  struct Pair {
    double dist;
    std::size_t t, e;
  };
  std::vector<Pair> pairs;
  for (std::size_t t = 0; t < truth.size(); ++t)
    for (std::size_t e = 0; e < estimates.size(); ++e) {
      const double dt = (estimates[e].theta - truth[t].theta) / scales.theta;
      const double dd = (estimates[e].d - truth[t].d) / scales.d;
      const double dv = (estimates[e].v - truth[t].v) / scales.v;
      pairs.push_back({dt * dt + dd * dd + dv * dv, t, e});
    }
  // Global greedy matching: closest pair first, independent of list order
  // except for exact distance ties.
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.dist < y.dist; });
  std::vector<bool> t_used(truth.size(), false), e_used(estimates.size(), false);
  double st = 0.0, sd = 0.0, sv = 0.0;
  for (const auto& p : pairs) {
    if (t_used[p.t] || e_used[p.e]) continue;
    t_used[p.t] = e_used[p.e] = true;
    const double dt = estimates[p.e].theta - truth[p.t].theta;
    const double dd = estimates[p.e].d - truth[p.t].d;
    const double dv = estimates[p.e].v - truth[p.t].v;
    st += dt * dt;
    sd += dd * dd;
    sv += dv * dv;
    ++r.matched;
  }
  r.theta = std::sqrt(st / r.matched);
  r.d = std::sqrt(sd / r.matched);
  r.v = std::sqrt(sv / r.matched);
  r.misses = static_cast<int>(truth.size()) - r.matched;
  r.penalty = r.misses * miss_penalty;
  return r;
}

std::string estimates_to_csv(const EstimationResult& result) {
  std::ostringstream out;
  out.precision(17);
  out << "theta_rad,d_m,v_mps,peak_magnitude\n";
  for (const auto& e : result.estimates) out << e.theta << ',' << e.d << ',' << e.v << ',' << e.magnitude << '\n';
  return out.str();
}

}  // namespace isac

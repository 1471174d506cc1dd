#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "isac/config.hpp"
#include "isac/physics.hpp"
#include "isac/tensor.hpp"

namespace isac {

/// Contiguous range of signed DFT bin indices [first, first + count).
/// `period` is the DFT length; when count == period the axis wraps.
struct BinAxis {
  int first = 0;
  int count = 0;
  int period = 0;

  int storage(int bin) const { return bin - first; }
  int bin(int storage_index) const { return first + storage_index; }
  int last() const { return first + count - 1; }
  bool wraps() const { return count == period; }
};

/// n in [-floor(N/2), floor(N/2) - 1]; used for angle and Doppler bins.
BinAxis centered_axis(int n);

/// n_d in [-N_d + 1, 0].
BinAxis delay_axis(int n_d);

/// Per-(i, l) angle spectra; values(i, l, a) with a the storage index on `angle`.
struct AngleSpectra {
  Cube3 values;
  BinAxis angle;
};

/// Per-subcarrier angle-Doppler maps; values(i, a, v).
struct DopplerSpectra {
  Cube3 values;
  BinAxis angle;
  BinAxis doppler;
};

/// Y(n_a, n_d, n_v) after all three transforms, stored by storage index with
/// the signed bin offsets carried by the three axes.
struct ProcessedCube {
  Cube3 values;
  BinAxis angle;
  BinAxis delay;
  BinAxis doppler;

  std::complex<double> at(int n_a, int n_d, int n_v) const {
    return values(angle.storage(n_a), delay.storage(n_d), doppler.storage(n_v));
  }
};

/// F(m, n) = exp(-j (n - 1)(m - N_d) 2 pi / N_d), 1-based. Row m maps to
/// delay bin n_d = m - N_d. Construction asserts F F^H = N_d I.
class DelayDftMatrix {
 public:
  explicit DelayDftMatrix(int n_d);

  int size() const { return static_cast<int>(f_.rows()); }
  const Eigen::MatrixXcd& matrix() const { return f_; }
  /// F^{-1} = F^H / N_d.
  Eigen::MatrixXcd inverse() const { return f_.adjoint() / static_cast<double>(size()); }
  /// Max-abs deviation of F F^H from N_d I.
  double orthogonality_error() const;

 private:
  Eigen::MatrixXcd f_;
};

/// Y_{i,l}(n_a) = (1/N_r) sum_m y(m,i,l) exp(-j m 2 pi n_a / N_a).
AngleSpectra spatial_dft(const EchoCube& y, int n_a);

struct FlaggedBin {
  int i = 0;
  int l = 0;
  int n_a = 0;
};

struct CoefficientRemoval {
  AngleSpectra spectra;
  std::vector<double> alpha;  // per angle storage index
  std::vector<FlaggedBin> flagged;
};

/// Divide out a(-d_t n_a 2 pi / (d_r N_a))^H x_i[l] and rescale each angle bin
/// by alpha so its energy is preserved. Divisors below 1e-9 times their mean
/// magnitude are flagged, zeroed and excluded from alpha. When `active` is
/// given, only subcarriers with active[i] contribute; the rest are zeroed.
CoefficientRemoval remove_coefficients(const AngleSpectra& spectra, const std::vector<Eigen::MatrixXcd>& x,
                                       const SystemConfig& cfg, std::span<const std::uint8_t> active = {});

/// Y_i(n_a, n_v) = (1/L) sum_l y_{i,l}(n_a) exp(-j l 2 pi n_v / N_v).
DopplerSpectra doppler_dft(const AngleSpectra& spectra, int n_v);

/// Zero-padded, 1/N_s-scaled delay fiber
/// yhat = (1/N_s) [Y_0, ..., Y_{N_s-1}, 0, ..., 0] of length N_d at angle
/// storage index a and Doppler storage index v.
Eigen::VectorXcd delay_fiber(const DopplerSpectra& spectra, int a, int v, int n_d);

/// Delay DFT by direct summation over subcarriers with 1/N_s normalization.
ProcessedCube delay_dft(const DopplerSpectra& spectra, int n_d);

/// Same transform as F_{N_d} applied to every scaled fiber; must agree with
/// delay_dft to rounding.
ProcessedCube delay_dft_matrix(const DopplerSpectra& spectra, int n_d);

/// Full DFT estimator chain from echo to processed cube.
ProcessedCube dft_process(const EchoCube& y, const std::vector<Eigen::MatrixXcd>& x, const SystemConfig& cfg);

struct Estimate {
  double theta = 0.0;
  double d = 0.0;
  double v = 0.0;
  double magnitude = 0.0;
  int n_a = 0;
  int n_d = 0;
  int n_v = 0;
};

struct EstimationResult {
  std::vector<Estimate> estimates;  // magnitude descending
};

/// sin(theta) = -n_a c / (N_a d_r f_c); NaN when |sin| > 1.
double bin_to_angle(int n_a, const SystemConfig& cfg);
double bin_to_range(int n_d, const SystemConfig& cfg);
double bin_to_velocity(int n_v, const SystemConfig& cfg);

/// Inverse maps used to build on-grid scenes.
double angle_for_bin(int n_a, const SystemConfig& cfg);
double range_for_bin(int n_d, const SystemConfig& cfg);
double velocity_for_bin(int n_v, const SystemConfig& cfg);

/// 26-neighbour local maxima of |Y| that reach min_rel_peak of the global
/// maximum, mapped to (theta, d, v). Aliased angle bins are discarded.
EstimationResult detect_and_invert(const ProcessedCube& cube, const SystemConfig& cfg, int max_targets,
                                   double min_rel_peak);

struct RmseScales {
  double theta = 1.0;  // rad
  double d = 1.0;      // m
  double v = 1.0;      // m/s
};

RmseScales default_rmse_scales(const SystemConfig& cfg);

struct RmseResult {
  double theta = 0.0;
  double d = 0.0;
  double v = 0.0;
  int matched = 0;
  int misses = 0;      // truth entries without an estimate
  double penalty = 0.0;  // misses * miss_penalty, kept out of the RMSE values
};

/// Nearest-neighbour assignment in scale-normalized (theta, d, v) space,
/// then per-dimension root mean squared error over the matched pairs.
/// An empty estimate list yields NaN errors with every truth counted as a miss.
RmseResult rmse(const std::vector<Estimate>& estimates, const std::vector<Target>& truth, const RmseScales& scales,
                double miss_penalty = 1.0);

/// One row per estimate: theta_rad,d_m,v_mps,peak_magnitude
std::string estimates_to_csv(const EstimationResult& result);

}  // namespace isac

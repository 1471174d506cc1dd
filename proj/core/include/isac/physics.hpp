#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "isac/config.hpp"

namespace isac {

using cdouble = std::complex<double>;

/// Uniform linear array response: element m equals exp(j * m * omega).
Eigen::VectorXcd steering_vector(double omega, int n);

/// PL(d) = c_ref * (d / d_ref)^(-alpha). Throws DomainError for d <= 0.
double path_loss(double d, const SystemConfig& cfg);

struct DigitalFrequencies {
  double omega_t = 0.0;  // transmit spatial
  double omega_r = 0.0;  // receive spatial
  double omega_d = 0.0;  // range (per subcarrier)
  double omega_v = 0.0;  // velocity (per OFDM symbol)
};

DigitalFrequencies digital_frequencies(double theta, double d, double v, const SystemConfig& cfg);

/// Transmit spatial frequency alone; the beamforming code only needs this one.
double transmit_frequency(double theta, const SystemConfig& cfg);

/// c / (2 delta_f): ranges beyond this alias in the delay DFT.
double unambiguous_range(const SystemConfig& cfg);

/// c / (4 T f_c): |v| beyond this aliases in the Doppler DFT.
double unambiguous_velocity(const SystemConfig& cfg);

struct Target {
  double theta = 0.0;  // rad
  double d = 1.0;      // m
  double v = 0.0;      // m/s
  cdouble beta{1.0, 0.0};
};

struct TargetScene {
  std::vector<Target> targets;
};

}  // namespace isac

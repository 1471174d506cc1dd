#include "isac/physics.hpp"

#include <cmath>
#include <string>

#include "isac/errors.hpp"

namespace isac {

Eigen::VectorXcd steering_vector(double omega, int n) {
  if (n < 1) throw DimensionError("steering_vector: element count must be >= 1, got " + std::to_string(n));
  Eigen::VectorXcd a(n);
  a(0) = cdouble(1.0, 0.0);
  for (int m = 1; m < n; ++m) a(m) = std::polar(1.0, m * omega);
  return a;
}

double path_loss(double d, const SystemConfig& cfg) {
  if (!(d > 0.0)) throw DomainError("path_loss: distance must be positive, got " + std::to_string(d));
  return cfg.c_ref * std::pow(d / cfg.d_ref, -cfg.alpha);
}

double transmit_frequency(double theta, const SystemConfig& cfg) {
  return 2.0 * kPi * cfg.d_t * std::sin(theta) * cfg.f_c / kSpeedOfLight;
}

DigitalFrequencies digital_frequencies(double theta, double d, double v, const SystemConfig& cfg) {
  DigitalFrequencies f;
  const double s = std::sin(theta);
  f.omega_t = 2.0 * kPi * cfg.d_t * s * cfg.f_c / kSpeedOfLight;
  f.omega_r = -2.0 * kPi * cfg.d_r * s * cfg.f_c / kSpeedOfLight;
  f.omega_d = -2.0 * kPi * cfg.delta_f * 2.0 * d / kSpeedOfLight;
  f.omega_v = 4.0 * kPi * cfg.t * v * cfg.f_c / kSpeedOfLight;
  return f;
}

double unambiguous_range(const SystemConfig& cfg) { return kSpeedOfLight / (2.0 * cfg.delta_f); }

double unambiguous_velocity(const SystemConfig& cfg) { return kSpeedOfLight / (4.0 * cfg.t * cfg.f_c); }

}  // namespace isac

#include "isac/cubic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace isac {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<double> quadratic_roots(double a, double b, double c) {
  if (a == 0.0) {
    if (b == 0.0) return {};
    return {-c / b};
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return {};
  // Avoid cancellation: q = -(b + sign(b) sqrt(disc)) / 2.
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  std::vector<double> r;
  if (q != 0.0) {
    r = {q / a, c / q};
  } else {
    r = {0.0, 0.0};
  }
  std::sort(r.begin(), r.end());
  return r;
}

double polish(double x, double c3, double c2, double c1, double c0) {
  for (int it = 0; it < 4; ++it) {
    const double f = ((c3 * x + c2) * x + c1) * x + c0;
    const double df = (3.0 * c3 * x + 2.0 * c2) * x + c1;
    if (df == 0.0) break;
    const double nx = x - f / df;
    // Only accept a step that does not make the residual worse.
    const double nf = ((c3 * nx + c2) * nx + c1) * nx + c0;
    if (!(std::abs(nf) < std::abs(f))) break;
    x = nx;
  }
  return x;
}

}  // namespace

std::vector<double> real_cubic_roots(double c3, double c2, double c1, double c0) {
  const double scale = std::max({std::abs(c2), std::abs(c1), std::abs(c0)});
  if (c3 == 0.0 || std::abs(c3) <= std::numeric_limits<double>::epsilon() * 1e-3 * scale)
    return quadratic_roots(c2, c1, c0);

  // Depressed cubic t^3 + p t + q with x = t - a/3.
  const double a = c2 / c3, b = c1 / c3, c = c0 / c3;
  const double shift = a / 3.0;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double half_q = q / 2.0;
  const double third_p = p / 3.0;
  const double disc = half_q * half_q + third_p * third_p * third_p;

  std::vector<double> roots;
  if (p == 0.0 && q == 0.0) {
    roots = {0.0, 0.0, 0.0};
  } else if (disc > 0.0) {
    // One real root; pick the cube-root branch without cancellation.
    const double u = -std::copysign(std::cbrt(std::abs(half_q) + std::sqrt(disc)), half_q);
    const double v = u != 0.0 ? -third_p / u : 0.0;
    roots = {u + v};
  } else {
    const double m = 2.0 * std::sqrt(-third_p);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    roots = {m * std::cos(phi), m * std::cos(phi - kTwoPi / 3.0), m * std::cos(phi - 2.0 * kTwoPi / 3.0)};
  }
  for (double& r : roots) r = polish(r - shift, c3, c2, c1, c0);
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace isac

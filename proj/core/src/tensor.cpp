#include "isac/tensor.hpp"

#include <cmath>
#include <string>

#include "isac/errors.hpp"

namespace isac {

Cube3::Cube3(int d0, int d1, int d2) : dims_{d0, d1, d2} {
  if (d0 < 0 || d1 < 0 || d2 < 0) throw DimensionError("Cube3: negative dimension");
  data_.assign(static_cast<std::size_t>(d0) * static_cast<std::size_t>(d1) * static_cast<std::size_t>(d2),
               std::complex<double>{});
}

double Cube3::energy() const {
  double e = 0.0;
  for (const auto& v : data_) e += std::norm(v);
  return e;
}

bool Cube3::all_finite() const {
  for (const auto& v : data_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

Cube3& Cube3::operator+=(const Cube3& other) {
  if (other.dims_ != dims_) throw DimensionError("Cube3 +=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Cube3& Cube3::operator*=(std::complex<double> s) {
  for (auto& v : data_) v *= s;
  return *this;
}

}  // namespace isac

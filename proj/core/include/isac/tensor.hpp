#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace isac {

/// Dense complex 3-D tensor, row-major over (d0, d1, d2).
class Cube3 {
 public:
  Cube3() = default;
  Cube3(int d0, int d1, int d2);

  int dim(int axis) const { return dims_[static_cast<std::size_t>(axis)]; }
  const std::array<int, 3>& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }

  std::complex<double>& operator()(int a, int b, int c) { return data_[index(a, b, c)]; }
  const std::complex<double>& operator()(int a, int b, int c) const { return data_[index(a, b, c)]; }

  std::span<std::complex<double>> data() { return data_; }
  std::span<const std::complex<double>> data() const { return data_; }

  std::size_t index(int a, int b, int c) const {
    return (static_cast<std::size_t>(a) * static_cast<std::size_t>(dims_[1]) + static_cast<std::size_t>(b)) *
               static_cast<std::size_t>(dims_[2]) +
           static_cast<std::size_t>(c);
  }

  double energy() const;
  bool all_finite() const;

  Cube3& operator+=(const Cube3& other);
  Cube3& operator*=(std::complex<double> s);

 private:
  std::array<int, 3> dims_{0, 0, 0};
  std::vector<std::complex<double>> data_;
};

/// Received echo y(m, i, l): receive antenna m, subcarrier i, OFDM symbol l.
using EchoCube = Cube3;

}  // namespace isac

#pragma once
#include <complex>
#include <numbers>
#include <vector>

namespace qilab {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

// Floor used when forming relative quantities: denominators are clamped to
// this value so that exact-zero reference solutions do not produce Inf/NaN.
inline constexpr double kEpsFloor = 1e-12;

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

}  // namespace qilab

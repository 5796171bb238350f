#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

namespace bb84sec {

// Dense row-major 2x2 real matrix. Everything in this library lives in the
// one-photon polarisation space, so no general matrix type is needed.
struct Mat2 {
  double m00 = 0.0, m01 = 0.0, m10 = 0.0, m11 = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 zero() { return {}; }

  // Rotation by `angle` radians (determinant +1).
  static Mat2 rotation(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c, -s, s, c};
  }

  // Rank-1 projector onto (cos angle, sin angle).
  static Mat2 projector(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * c, c * s, s * c, s * s};
  }

  constexpr Mat2 transposed() const { return {m00, m10, m01, m11}; }
  constexpr double trace() const { return m00 + m11; }
  constexpr double determinant() const { return m00 * m11 - m01 * m10; }

  constexpr double max_abs() const {
    return std::max({std::abs(m00), std::abs(m01), std::abs(m10), std::abs(m11)});
  }

  constexpr Mat2& operator+=(const Mat2& o) {
    m00 += o.m00; m01 += o.m01; m10 += o.m10; m11 += o.m11;
    return *this;
  }
  constexpr Mat2& operator-=(const Mat2& o) {
    m00 -= o.m00; m01 -= o.m01; m10 -= o.m10; m11 -= o.m11;
    return *this;
  }
  constexpr Mat2& operator*=(double s) {
    m00 *= s; m01 *= s; m10 *= s; m11 *= s;
    return *this;
  }

  friend constexpr Mat2 operator+(Mat2 a, const Mat2& b) { return a += b; }
  friend constexpr Mat2 operator-(Mat2 a, const Mat2& b) { return a -= b; }
  friend constexpr Mat2 operator*(Mat2 a, double s) { return a *= s; }
  friend constexpr Mat2 operator*(double s, Mat2 a) { return a *= s; }
  friend constexpr Mat2 operator-(const Mat2& a) { return a * -1.0; }

  friend constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
            a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
  }

  friend constexpr bool operator==(const Mat2&, const Mat2&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Mat2& m) {
    return os << "[[" << m.m00 << ", " << m.m01 << "], [" << m.m10 << ", " << m.m11 << "]]";
  }
};

// Tr(a * b) without forming the product.
constexpr double trace_product(const Mat2& a, const Mat2& b) {
  return a.m00 * b.m00 + a.m01 * b.m10 + a.m10 * b.m01 + a.m11 * b.m11;
}

// a * x * a^T
constexpr Mat2 sandwich(const Mat2& a, const Mat2& x) { return a * x * a.transposed(); }

constexpr double max_abs_diff(const Mat2& a, const Mat2& b) { return (a - b).max_abs(); }

}  // namespace bb84sec

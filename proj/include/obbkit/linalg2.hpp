#pragma once

#include <algorithm>
#include <cmath>

namespace obbkit {

/// Point or free vector in image coordinates (x right, y down).
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point operator*(Point a, double s) { return {a.x * s, a.y * s}; }
  friend constexpr Point operator*(double s, Point a) { return {a.x * s, a.y * s}; }
  friend constexpr bool operator==(Point, Point) = default;
};

constexpr double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

/// Dense 2x2 matrix, row-major.
struct Mat2 {
  double xx = 0.0, xy = 0.0;
  double yx = 0.0, yy = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 diag(double a, double b) { return {a, 0.0, 0.0, b}; }

  constexpr double trace() const { return xx + yy; }
  constexpr double det() const { return xx * yy - xy * yx; }
  constexpr Mat2 transposed() const { return {xx, yx, xy, yy}; }

  /// Caller guarantees det() != 0.
  constexpr Mat2 inverse() const {
    const double d = det();
    return {yy / d, -xy / d, -yx / d, xx / d};
  }

  friend constexpr Mat2 operator+(const Mat2& a, const Mat2& b) {
    return {a.xx + b.xx, a.xy + b.xy, a.yx + b.yx, a.yy + b.yy};
  }
  friend constexpr Mat2 operator-(const Mat2& a, const Mat2& b) {
    return {a.xx - b.xx, a.xy - b.xy, a.yx - b.yx, a.yy - b.yy};
  }
  friend constexpr Mat2 operator*(const Mat2& a, double s) {
    return {a.xx * s, a.xy * s, a.yx * s, a.yy * s};
  }
  friend constexpr Mat2 operator*(double s, const Mat2& a) { return a * s; }
  friend constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {a.xx * b.xx + a.xy * b.yx, a.xx * b.xy + a.xy * b.yy,
            a.yx * b.xx + a.yy * b.yx, a.yx * b.xy + a.yy * b.yy};
  }
  friend constexpr Point operator*(const Mat2& a, Point v) {
    return {a.xx * v.x + a.xy * v.y, a.yx * v.x + a.yy * v.y};
  }
  friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

/// Quadratic form v^T m v.
constexpr double quad_form(const Mat2& m, Point v) { return dot(v, m * v); }

/// Rotation by theta in image coordinates: [[cos, -sin], [sin, cos]].
inline Mat2 rotation(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c, -s, s, c};
}

/// Eigen-decomposition of a symmetric matrix (only the upper off-diagonal is
/// read). `major` >= `minor`; `angle` is the direction of the major axis.
struct SymEigen {
  double major = 0.0;
  double minor = 0.0;
  double angle = 0.0;
};

inline SymEigen sym_eigen(const Mat2& m) {
  const double mean = 0.5 * (m.xx + m.yy);
  const double half_diff = 0.5 * (m.xx - m.yy);
  const double radius = std::hypot(half_diff, m.xy);
  return {mean + radius, mean - radius, 0.5 * std::atan2(2.0 * m.xy, m.xx - m.yy)};
}

/// Principal square root of a symmetric PSD matrix.
///
/// Uses the 2x2 closed form (M + sqrt(det M) I) / sqrt(tr M + 2 sqrt(det M)),
/// and falls back to eigen-decomposition when that denominator is below 1e-12.
inline Mat2 sqrtm_psd(const Mat2& m) {
  const double s = std::sqrt(std::max(m.det(), 0.0));
  const double t = std::sqrt(std::max(m.trace() + 2.0 * s, 0.0));
  if (t >= 1e-12) {
    return (m + Mat2::diag(s, s)) * (1.0 / t);
  }
  const SymEigen e = sym_eigen(m);
  const Mat2 r = rotation(e.angle);
  const Mat2 d = Mat2::diag(std::sqrt(std::max(e.major, 0.0)),
                            std::sqrt(std::max(e.minor, 0.0)));
  return r * d * r.transposed();
}

}  // namespace obbkit

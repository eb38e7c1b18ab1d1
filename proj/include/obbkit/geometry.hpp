#pragma once

// Oriented box representations and conversions among box, quadrilateral and
// Gaussian forms.
//
// Angle sense: theta is measured clockwise from +x in image coordinates
// (y down), and a box's corners are center + R(theta) * (+-w/2, +-h/2) with
// R(theta) = [[cos, -sin], [sin, cos]]. A box and the same box with theta + pi
// share one corner set; the three conventions pick a unique representative:
//
//   OC     theta in [-pi/2, 0), no ordering between w and h
//   LE90   theta in [-pi/2, pi/2), w >= h
//   LE135  theta in [-pi/4, 3pi/4), w >= h

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "obbkit/errors.hpp"
#include "obbkit/linalg2.hpp"

namespace obbkit {

inline constexpr double kPi = std::numbers::pi;

enum class AngleConvention { OC, LE90, LE135 };

inline constexpr std::array<AngleConvention, 3> kAllConventions = {
    AngleConvention::OC, AngleConvention::LE90, AngleConvention::LE135};

/// Half-open admissible interval [lo, hi) and the reduction period.
struct AngleRange {
  double lo;
  double hi;
  double period;

  constexpr bool contains(double theta) const { return theta >= lo && theta < hi; }
};

constexpr AngleRange angle_range(AngleConvention c) {
  switch (c) {
    case AngleConvention::OC:
      return {-kPi / 2, -kPi / 2 + kPi / 2, kPi / 2};
    case AngleConvention::LE90:
      return {-kPi / 2, -kPi / 2 + kPi, kPi};
    case AngleConvention::LE135:
      return {-kPi / 4, -kPi / 4 + kPi, kPi};
  }
  return {0.0, 0.0, 0.0};
}

constexpr bool is_long_edge(AngleConvention c) { return c != AngleConvention::OC; }

constexpr std::string_view to_string(AngleConvention c) {
  switch (c) {
    case AngleConvention::OC:
      return "oc";
    case AngleConvention::LE90:
      return "le90";
    case AngleConvention::LE135:
      return "le135";
  }
  return "?";
}

/// Case-insensitive "oc" / "le90" / "le135".
inline std::optional<AngleConvention> parse_convention(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (AngleConvention c : kAllConventions) {
    if (lower == to_string(c)) return c;
  }
  return std::nullopt;
}

struct RotatedBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  double theta = 0.0;  // radians
  AngleConvention convention = AngleConvention::LE90;

  double area() const { return w * h; }
  Point center() const { return {cx, cy}; }

  friend bool operator==(const RotatedBox&, const RotatedBox&) = default;
};

/// Four-vertex polygon; DOTA's native annotation form. Not necessarily convex.
struct QuadPoly {
  std::array<Point, 4> vertices{};

  /// Shoelace area; positive when the vertices run counter-clockwise in the
  /// x-right / y-up sense.
  double signed_area() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      acc += cross(vertices[i], vertices[(i + 1) % 4]);
    }
    return 0.5 * acc;
  }

  double area() const { return std::abs(signed_area()); }

  friend bool operator==(const QuadPoly&, const QuadPoly&) = default;
};

struct Gaussian2D {
  Point mu;
  Mat2 sigma;
};

// ---------------------------------------------------------------------------
// validation

inline void require_finite(const RotatedBox& b) {
  if (!std::isfinite(b.cx) || !std::isfinite(b.cy) || !std::isfinite(b.w) ||
      !std::isfinite(b.h) || !std::isfinite(b.theta)) {
    throw NonFiniteInput("rotated box has a non-finite field");
  }
  if (b.w < 0.0 || b.h < 0.0) {
    throw InvalidArgument("rotated box has negative width or height");
  }
}

inline void require_finite(const QuadPoly& q) {
  for (const Point& p : q.vertices) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw NonFiniteInput("quadrilateral has a non-finite vertex");
    }
  }
}

/// True when the box satisfies its own convention's range and long-edge rule.
inline bool is_canonical(const RotatedBox& b) {
  if (!angle_range(b.convention).contains(b.theta)) return false;
  return !is_long_edge(b.convention) || b.w >= b.h;
}

/// Throws NotPSD unless sigma is symmetric within 1e-9 with eigenvalues
/// >= -1e-9.
inline void require_psd(const Gaussian2D& g) {
  const Mat2& s = g.sigma;
  if (!std::isfinite(g.mu.x) || !std::isfinite(g.mu.y) || !std::isfinite(s.xx) ||
      !std::isfinite(s.xy) || !std::isfinite(s.yx) || !std::isfinite(s.yy)) {
    throw NonFiniteInput("gaussian has a non-finite entry");
  }
  if (std::abs(s.xy - s.yx) > 1e-9) throw NotPSD("covariance is not symmetric");
  if (sym_eigen(s).minor < -1e-9) throw NotPSD("covariance has a negative eigenvalue");
}

// ---------------------------------------------------------------------------
// angle conventions

namespace detail {

struct Reduced {
  double theta;
  long long turns;  // number of periods subtracted
};

/// Reduces theta into range.contains(). The result is pinned to lo when
/// rounding would otherwise land it on hi.
inline Reduced reduce_angle(double theta, const AngleRange& range) {
  const double k = std::floor((theta - range.lo) / range.period);
  double t = theta - k * range.period;
  long long turns = static_cast<long long>(k);
  if (t < range.lo) {
    t += range.period;
    --turns;
  }
  if (t >= range.hi) {
    t -= range.period;
    ++turns;
  }
  if (!range.contains(t)) t = range.lo;
  return {t, turns};
}

}  // namespace detail

/// Re-expresses `box` in `target` without moving its corners. May swap w/h
/// with a quarter-turn shift and reduces theta modulo the convention period.
inline RotatedBox normalize(const RotatedBox& box, AngleConvention target) {
  require_finite(box);
  RotatedBox out = box;
  out.convention = target;
  const AngleRange range = angle_range(target);
  if (is_long_edge(target)) {
    if (out.w < out.h) {
      std::swap(out.w, out.h);
      out.theta += kPi / 2;
    }
    out.theta = detail::reduce_angle(out.theta, range).theta;
  } else {
    // Each quarter turn exchanges the roles of w and h.
    const detail::Reduced r = detail::reduce_angle(out.theta, range);
    out.theta = r.theta;
    if (r.turns % 2 != 0) std::swap(out.w, out.h);
  }
  return out;
}

/// Converts between conventions. The input may be in any state normalize()
/// accepts; the output satisfies `target`'s invariants.
inline RotatedBox convert(const RotatedBox& box, AngleConvention target) {
  return normalize(box, target);
}

// ---------------------------------------------------------------------------
// corner form

/// Reorients to counter-clockwise (positive signed area) and rotates the list
/// so the lexicographically smallest vertex (x, then y) comes first.
/// Zero-area quads keep their orientation. No vertex is ever dropped.
inline QuadPoly canonicalize(const QuadPoly& quad) {
  QuadPoly q = quad;
  if (q.signed_area() < 0.0) std::reverse(q.vertices.begin(), q.vertices.end());
  const auto first = std::min_element(
      q.vertices.begin(), q.vertices.end(),
      [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  std::rotate(q.vertices.begin(), first, q.vertices.end());
  return q;
}

/// Corners in counter-clockwise order, unrotated to canonical start.
inline std::array<Point, 4> box_corners(const RotatedBox& box) {
  const double c = std::cos(box.theta);
  const double s = std::sin(box.theta);
  const double hw = 0.5 * box.w;
  const double hh = 0.5 * box.h;
  const std::array<Point, 4> local = {
      Point{-hw, -hh}, Point{hw, -hh}, Point{hw, hh}, Point{-hw, hh}};
  std::array<Point, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {box.cx + c * local[i].x - s * local[i].y,
              box.cy + s * local[i].x + c * local[i].y};
  }
  return out;
}

inline QuadPoly rbox_to_quad(const RotatedBox& box) {
  require_finite(box);
  return canonicalize(QuadPoly{box_corners(box)});
}

/// Convex hull (Andrew's monotone chain), counter-clockwise, no repeated or
/// collinear points.
inline std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(),
            [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;

  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    const Point& p = pts[i];
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

/// Minimum-area rectangle enclosing the quad (rotating calipers over the
/// convex hull's edge directions), expressed in `target`.
///
/// A quad whose vertices all coincide yields a zero-size box at that point
/// with theta at the bottom of `target`'s range.
inline RotatedBox quad_to_rbox(const QuadPoly& quad, AngleConvention target) {
  require_finite(quad);
  const std::vector<Point> hull =
      convex_hull({quad.vertices.begin(), quad.vertices.end()});

  if (hull.size() == 1) {
    return {hull[0].x, hull[0].y, 0.0, 0.0, angle_range(target).lo, target};
  }

  RotatedBox best;
  double best_area = -1.0;
  const std::size_t n = hull.size() == 2 ? 1 : hull.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point edge = hull[(i + 1) % hull.size()] - hull[i];
    const double len = norm(edge);
    if (len == 0.0) continue;
    const Point u = edge * (1.0 / len);
    const Point v{-u.y, u.x};
    double umin = INFINITY, umax = -INFINITY, vmin = INFINITY, vmax = -INFINITY;
    for (const Point& p : hull) {
      const double pu = dot(p, u);
      const double pv = dot(p, v);
      umin = std::min(umin, pu);
      umax = std::max(umax, pu);
      vmin = std::min(vmin, pv);
      vmax = std::max(vmax, pv);
    }
    const double area = (umax - umin) * (vmax - vmin);
    if (best_area < 0.0 || area < best_area) {
      best_area = area;
      const Point c = u * (0.5 * (umin + umax)) + v * (0.5 * (vmin + vmax));
      best = {c.x, c.y, umax - umin, vmax - vmin, std::atan2(u.y, u.x), target};
    }
  }
  return normalize(best, target);
}

// ---------------------------------------------------------------------------
// Gaussian form

/// mu = center, Sigma = R diag(w^2/4, h^2/4) R^T. Independent of convention.
inline Gaussian2D rbox_to_gaussian(const RotatedBox& box) {
  require_finite(box);
  const double a = 0.25 * box.w * box.w;
  const double b = 0.25 * box.h * box.h;
  const double c = std::cos(box.theta);
  const double s = std::sin(box.theta);
  const double xy = (a - b) * c * s;
  return {{box.cx, box.cy}, {a * c * c + b * s * s, xy, xy, a * s * s + b * c * c}};
}

/// Inverse of rbox_to_gaussian. Square boxes (|w - h| <= 1e-9) have no
/// defined orientation and come back with theta at the bottom of `target`'s
/// range.
inline RotatedBox gaussian_to_rbox(const Gaussian2D& g, AngleConvention target) {
  require_psd(g);
  const SymEigen e = sym_eigen(g.sigma);
  const double w = 2.0 * std::sqrt(std::max(e.major, 0.0));
  const double h = 2.0 * std::sqrt(std::max(e.minor, 0.0));
  if (w - h <= 1e-9) {
    return {g.mu.x, g.mu.y, w, h, angle_range(target).lo, target};
  }
  return normalize({g.mu.x, g.mu.y, w, h, e.angle, target}, target);
}

}  // namespace obbkit

#pragma once

// Exact rotated IoU by Sutherland-Hodgman clipping, batched IoU matrices and
// greedy rotated NMS.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "obbkit/geometry.hpp"

namespace obbkit {

/// A point within this distance of a clipping line counts as inside.
inline constexpr double kClipTolerance = 1e-9;

/// Convex polygon, counter-clockwise. Result of clipping two boxes.
struct ConvexPoly {
  std::vector<Point> vertices;

  double area() const {
    double acc = 0.0;
    for (std::size_t i = 0, n = vertices.size(); i < n; ++i) {
      acc += cross(vertices[i], vertices[(i + 1) % n]);
    }
    return std::max(0.0, 0.5 * acc);
  }
};

struct ScoredBox {
  RotatedBox box;
  double score = 0.0;
  std::size_t index = 0;
};

namespace detail {

/// Fixed-capacity polygon for the clipping hot path. Sixteen vertices cover a
/// (possibly non-convex) quadrilateral clipped by four half-planes.
struct SmallPoly {
  static constexpr std::size_t kCapacity = 16;
  std::array<Point, kCapacity> pts;
  std::size_t size = 0;

  void push(Point p) {
    assert(size < kCapacity);
    pts[size++] = p;
  }
};

inline double shoelace(const SmallPoly& poly) {
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size; ++i) {
    acc += cross(poly.pts[i], poly.pts[(i + 1) % poly.size]);
  }
  return 0.5 * acc;
}

/// Clips `subject` by the left half-plane of the directed line from -> to.
inline void clip_half_plane(const SmallPoly& subject, Point from, Point to, SmallPoly& out) {
  out.size = 0;
  if (subject.size == 0) return;
  const Point edge = to - from;
  const double len = norm(edge);
  if (len == 0.0) return;
  const double inv = 1.0 / len;
  auto dist = [&](Point p) { return cross(edge, p - from) * inv; };

  Point prev = subject.pts[subject.size - 1];
  double dprev = dist(prev);
  for (std::size_t i = 0; i < subject.size; ++i) {
    const Point cur = subject.pts[i];
    const double dcur = dist(cur);
    const bool prev_in = dprev >= -kClipTolerance;
    const bool cur_in = dcur >= -kClipTolerance;
    if (prev_in != cur_in) {
      const double t = dprev / (dprev - dcur);
      out.push(prev + (cur - prev) * t);
    }
    if (cur_in) out.push(cur);
    prev = cur;
    dprev = dcur;
  }
}

/// Clips `subject` by a convex counter-clockwise `clip` polygon.
template <std::size_t N>
SmallPoly clip_convex(const SmallPoly& subject, const std::array<Point, N>& clip) {
  SmallPoly a = subject;
  SmallPoly b;
  for (std::size_t i = 0; i < N; ++i) {
    clip_half_plane(a, clip[i], clip[(i + 1) % N], b);
    std::swap(a, b);
    if (a.size == 0) break;
  }
  return a;
}

/// Box corners plus the circumradius used for an exact early reject.
struct PreparedBox {
  std::array<Point, 4> corners;
  Point center;
  double radius = 0.0;
  double area = 0.0;
};

inline PreparedBox prepare(const RotatedBox& box) {
  require_finite(box);
  return {box_corners(box), box.center(), 0.5 * std::hypot(box.w, box.h), box.area()};
}

inline double intersect_area(const PreparedBox& a, const PreparedBox& b) {
  if (a.area <= 0.0 || b.area <= 0.0) return 0.0;
  const Point d = a.center - b.center;
  const double reach = a.radius + b.radius;
  if (dot(d, d) > reach * reach) return 0.0;
  SmallPoly subject;
  for (const Point& p : a.corners) subject.push(p);
  return std::max(0.0, shoelace(clip_convex(subject, b.corners)));
}

inline double iou(const PreparedBox& a, const PreparedBox& b) {
  const double inter = intersect_area(a, b);
  const double uni = a.area + b.area - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace detail

/// The polygon a ∩ b. Empty when the boxes are disjoint or degenerate.
inline ConvexPoly intersection_polygon(const RotatedBox& a, const RotatedBox& b) {
  const detail::PreparedBox pa = detail::prepare(a);
  const detail::PreparedBox pb = detail::prepare(b);
  ConvexPoly out;
  if (pa.area <= 0.0 || pb.area <= 0.0) return out;
  detail::SmallPoly subject;
  for (const Point& p : pa.corners) subject.push(p);
  const detail::SmallPoly clipped = detail::clip_convex(subject, pb.corners);
  out.vertices.assign(clipped.pts.begin(), clipped.pts.begin() + clipped.size);
  return out;
}

/// Area of a ∩ b in px^2. Zero-area boxes intersect nothing.
inline double intersect_area(const RotatedBox& a, const RotatedBox& b) {
  return detail::intersect_area(detail::prepare(a), detail::prepare(b));
}

/// Intersection over union in [0, 1]; 0 when the union is empty.
inline double rotated_iou(const RotatedBox& a, const RotatedBox& b) {
  return detail::iou(detail::prepare(a), detail::prepare(b));
}

/// Row-major |as| x |bs| matrix of rotated IoUs.
class IouMatrix {
 public:
  IouMatrix() = default;
  IouMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline IouMatrix iou_matrix(std::span<const RotatedBox> as, std::span<const RotatedBox> bs) {
  std::vector<detail::PreparedBox> pb;
  pb.reserve(bs.size());
  for (const RotatedBox& b : bs) pb.push_back(detail::prepare(b));

  IouMatrix m(as.size(), bs.size());
  for (std::size_t i = 0; i < as.size(); ++i) {
    const detail::PreparedBox pa = detail::prepare(as[i]);
    for (std::size_t j = 0; j < pb.size(); ++j) m(i, j) = detail::iou(pa, pb[j]);
  }
  return m;
}

/// Greedy rotated non-maximum suppression.
///
/// Boxes are visited by descending score, equal scores by ascending `index`.
/// A visited box that survives is kept and suppresses every later box whose
/// IoU with it is strictly greater than `iou_thr`. Returns the kept boxes'
/// `index` fields in keep order.
inline std::vector<std::size_t> rotated_nms(std::span<const ScoredBox> dets, double iou_thr) {
  if (!(iou_thr >= 0.0 && iou_thr <= 1.0)) {
    throw InvalidArgument("nms iou threshold must lie in [0, 1]");
  }
  for (const ScoredBox& d : dets) {
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw InvalidArgument("nms score must lie in [0, 1]");
    }
  }

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return dets[a].index < dets[b].index;
  });

  std::vector<detail::PreparedBox> prepared;
  prepared.reserve(order.size());
  for (std::size_t i : order) prepared.push_back(detail::prepare(dets[i].box));

  std::vector<std::size_t> keep;
  std::vector<char> suppressed(order.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (suppressed[i]) continue;
    keep.push_back(dets[order[i]].index);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (!suppressed[j] && detail::iou(prepared[i], prepared[j]) > iou_thr) suppressed[j] = 1;
    }
  }
  return keep;
}

}  // namespace obbkit

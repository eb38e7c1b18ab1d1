#pragma once

// DOTA v1.0 annotation files, Task1 result files, huge-image split planning
// with annotation clipping, and merging of per-window detections.
//
// Annotation line:  x1 y1 x2 y2 x3 y3 x4 y4 category difficult
// Result line:      image_id score x1 y1 x2 y2 x3 y3 x4 y4   (Task1_<category>.txt)
// Window image ids: <image>__<scale>__<x0>___<y0>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "obbkit/errors.hpp"
#include "obbkit/eval.hpp"
#include "obbkit/geometry.hpp"
#include "obbkit/overlap.hpp"
#include "obbkit/text.hpp"

namespace obbkit {

struct AnnotationRecord {
  QuadPoly quad;
  std::string category;
  bool difficult = false;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct AnnotationFile {
  std::string image_id;
  std::vector<AnnotationRecord> records;
};

/// Half-open pixel window [x0, x1) x [y0, y1).
struct Window {
  long x0 = 0;
  long y0 = 0;
  long x1 = 0;
  long y1 = 0;

  long width() const { return x1 - x0; }
  long height() const { return y1 - y0; }
  friend bool operator==(const Window&, const Window&) = default;
};

struct SplitPlan {
  long image_width = 0;
  long image_height = 0;
  long window = 0;
  long gap = 0;
  std::vector<Window> windows;
};

struct WindowAnnotation {
  Window window;
  double scale = 1.0;
  AnnotationFile annotation;  // window-local coordinates
};

struct PatchDetection {
  std::string image_id;  // parent image; empty keeps each detection's own id
  double x0 = 0.0;
  double y0 = 0.0;
  double scale = 1.0;
  std::vector<DetectionRecord> detections;  // window-local, scaled coordinates
};

inline constexpr long kDefaultWindow = 1024;
inline constexpr long kDefaultGap = 200;
inline constexpr double kDefaultKeepFrac = 0.7;
inline constexpr double kDefaultMergeNmsThr = 0.1;

// ---------------------------------------------------------------------------
// files

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

/// Regular files in `dir` accepted by `pred`, sorted by name.
template <typename Pred>
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, Pred&& pred) {
  std::error_code ec;
  std::filesystem::directory_iterator it(dir, ec);
  if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : it) {
    if (entry.is_regular_file() && pred(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

inline QuadPoly parse_quad(std::span<const std::string_view> tokens, const std::string& source,
                           std::size_t line) {
  QuadPoly q;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto x = text::parse_double(tokens[2 * i]);
    const auto y = text::parse_double(tokens[2 * i + 1]);
    if (!x || !y) throw ParseError(source, line, "non-numeric coordinate");
    q.vertices[i] = {*x, *y};
  }
  return q;
}

inline std::string format_quad(const QuadPoly& q) {
  std::string out;
  for (std::size_t i = 0; i < 4; ++i) {
    if (i) out += ' ';
    out += text::format_fixed(q.vertices[i].x) + " " + text::format_fixed(q.vertices[i].y);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// annotations

/// Parses DOTA v1.0 annotation text. Blank lines and metadata lines starting
/// with "imagesource" or "gsd" are skipped.
inline AnnotationFile parse_annotation(std::string_view content, std::string image_id,
                                       const std::string& source = {}) {
  AnnotationFile ann{std::move(image_id), {}};
  text::for_each_line(content, [&](std::size_t line_no, std::string_view raw) {
    const std::string_view line = text::trim(raw);
    if (line.empty() || line.starts_with("imagesource") || line.starts_with("gsd")) return;
    const auto tokens = text::split_ws(line);
    if (tokens.size() != 10) {
      throw ParseError(source, line_no,
                       "expected 10 fields, got " + std::to_string(tokens.size()));
    }
    AnnotationRecord rec;
    rec.quad = detail::parse_quad(tokens, source, line_no);
    rec.category = std::string(tokens[8]);
    if (tokens[9] == "0") {
      rec.difficult = false;
    } else if (tokens[9] == "1") {
      rec.difficult = true;
    } else {
      throw ParseError(source, line_no, "difficult flag must be 0 or 1");
    }
    ann.records.push_back(std::move(rec));
  });
  return ann;
}

inline std::string format_annotation(const AnnotationFile& ann) {
  std::string out;
  for (const AnnotationRecord& r : ann.records) {
    out += detail::format_quad(r.quad) + " " + r.category + (r.difficult ? " 1\n" : " 0\n");
  }
  return out;
}

/// Reads one annotation file; the image id is the file stem.
inline AnnotationFile read_annotation_file(const std::filesystem::path& path) {
  return parse_annotation(read_file(path), path.stem().string(), path.string());
}

/// Every *.txt annotation file in `dir`, sorted by name.
inline std::vector<AnnotationFile> read_annotation_dir(const std::filesystem::path& dir) {
  std::vector<AnnotationFile> out;
  for (const auto& p : list_files(dir, [](const auto& p) { return p.extension() == ".txt"; })) {
    out.push_back(read_annotation_file(p));
  }
  return out;
}

/// Converts annotation quads into rotated boxes (minimum-area rectangles).
inline std::vector<GroundTruthRecord> to_ground_truth(
    std::span<const AnnotationFile> files, AngleConvention conv = AngleConvention::LE90) {
  std::vector<GroundTruthRecord> out;
  for (const AnnotationFile& f : files) {
    for (const AnnotationRecord& r : f.records) {
      out.push_back({f.image_id, quad_to_rbox(r.quad, conv), r.category, r.difficult});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Task1 results

inline std::string result_file_name(const std::string& category) {
  return "Task1_" + category + ".txt";
}

/// One result line, coordinates and score printed as %.6f.
inline std::string format_result_line(const DetectionRecord& det) {
  return det.image_id + " " + text::format_fixed(det.score) + " " +
         detail::format_quad(rbox_to_quad(det.box)) + "\n";
}

/// File contents keyed by category, lines in input order.
inline std::map<std::string, std::string> format_results(std::span<const DetectionRecord> dets) {
  std::map<std::string, std::string> files;
  for (const DetectionRecord& d : dets) files[d.category] += format_result_line(d);
  return files;
}

/// Writes Task1_<category>.txt for every category present; returns the paths.
inline std::vector<std::filesystem::path> write_results(std::span<const DetectionRecord> dets,
                                                        const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& [category, content] : format_results(dets)) {
    written.push_back(dir / result_file_name(category));
    write_file(written.back(), content);
  }
  return written;
}

inline std::vector<DetectionRecord> parse_result_text(
    std::string_view content, const std::string& category, const std::string& source = {},
    AngleConvention conv = AngleConvention::LE90) {
  std::vector<DetectionRecord> out;
  text::for_each_line(content, [&](std::size_t line_no, std::string_view raw) {
    const std::string_view line = text::trim(raw);
    if (line.empty()) return;
    const auto tokens = text::split_ws(line);
    if (tokens.size() != 10) {
      throw ParseError(source, line_no,
                       "expected 10 fields, got " + std::to_string(tokens.size()));
    }
    const auto score = text::parse_double(tokens[1]);
    if (!score) throw ParseError(source, line_no, "non-numeric score");
    if (*score < 0.0 || *score > 1.0) throw ParseError(source, line_no, "score outside [0, 1]");
    const QuadPoly quad =
        detail::parse_quad(std::span(tokens).subspan(2, 8), source, line_no);
    out.push_back({std::string(tokens[0]), quad_to_rbox(quad, conv), category, *score});
  });
  return out;
}

/// Reads every Task1_<category>.txt in `dir` (sorted by name). The category
/// comes from the file name; vocabulary checks are left to the caller.
inline std::vector<DetectionRecord> parse_results(const std::filesystem::path& dir,
                                                  AngleConvention conv = AngleConvention::LE90) {
  auto is_result = [](const std::filesystem::path& p) {
    const std::string name = p.filename().string();
    return name.starts_with("Task1_") && p.extension() == ".txt" && name.size() > 10;
  };
  std::vector<DetectionRecord> out;
  for (const auto& p : list_files(dir, is_result)) {
    const std::string stem = p.stem().string();
    auto recs = parse_result_text(read_file(p), stem.substr(6), p.string(), conv);
    out.insert(out.end(), std::make_move_iterator(recs.begin()),
               std::make_move_iterator(recs.end()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// window naming

struct PatchId {
  std::string image;
  double scale = 1.0;
  long x0 = 0;
  long y0 = 0;
};

inline std::string patch_image_id(const std::string& image, double scale, long x0, long y0) {
  return image + "__" + text::format_shortest(scale) + "__" + std::to_string(x0) + "___" +
         std::to_string(y0);
}

inline std::optional<PatchId> parse_patch_image_id(std::string_view name) {
  const auto y_sep = name.rfind("___");
  if (y_sep == std::string_view::npos) return std::nullopt;
  const std::string_view head = name.substr(0, y_sep);
  const auto x_sep = head.rfind("__");
  if (x_sep == std::string_view::npos) return std::nullopt;
  const auto s_sep = head.substr(0, x_sep).rfind("__");
  if (s_sep == std::string_view::npos || s_sep == 0) return std::nullopt;

  const auto scale = text::parse_double(head.substr(s_sep + 2, x_sep - s_sep - 2));
  const auto x0 = text::parse_double(head.substr(x_sep + 2));
  const auto y0 = text::parse_double(name.substr(y_sep + 3));
  if (!scale || !x0 || !y0 || *scale <= 0.0) return std::nullopt;
  if (*x0 != std::floor(*x0) || *y0 != std::floor(*y0)) return std::nullopt;
  return PatchId{std::string(head.substr(0, s_sep)), *scale, static_cast<long>(*x0),
                 static_cast<long>(*y0)};
}

// ---------------------------------------------------------------------------
// split planning

namespace detail {

inline std::vector<long> axis_starts(long length, long window, long stride) {
  std::vector<long> starts;
  for (long s = 0;; s += stride) {
    if (s + window > length) s = std::max(0L, length - window);
    if (starts.empty() || starts.back() != s) starts.push_back(s);
    if (s + window >= length) break;
  }
  return starts;
}

}  // namespace detail

/// Overlapping windows of side `window` with `gap` px of overlap. Per axis,
/// starts step by window - gap; a window that would overrun the border is
/// shifted back to end at it. Windows are ordered x-major.
inline SplitPlan split_plan(long width, long height, long window = kDefaultWindow,
                            long gap = kDefaultGap) {
  if (width <= 0 || height <= 0) throw InvalidGeometry("image size must be positive");
  if (window <= 0) throw InvalidGeometry("window must be positive");
  if (gap < 0 || gap >= window) throw InvalidGeometry("gap must satisfy 0 <= gap < window");

  SplitPlan plan{width, height, window, gap, {}};
  const long stride = window - gap;
  const auto xs = detail::axis_starts(width, window, stride);
  const auto ys = detail::axis_starts(height, window, stride);
  for (long x : xs) {
    for (long y : ys) {
      plan.windows.push_back({x, y, std::min(x + window, width), std::min(y + window, height)});
    }
  }
  return plan;
}

/// Image side length at `scale`, rounded to the nearest pixel.
inline long scaled_length(long length, double scale) {
  return std::max(1L, std::lround(static_cast<double>(length) * scale));
}

inline AnnotationFile scale_annotation(const AnnotationFile& ann, double scale) {
  AnnotationFile out = ann;
  for (AnnotationRecord& r : out.records) {
    for (Point& p : r.quad.vertices) p = p * scale;
  }
  return out;
}

/// Fraction of the quad's area inside `w`. Zero-area quads count as wholly
/// inside or outside depending on their centroid.
inline double window_overlap_ratio(const QuadPoly& quad, const Window& w) {
  const std::array<Point, 4> clip = {
      Point{static_cast<double>(w.x0), static_cast<double>(w.y0)},
      Point{static_cast<double>(w.x1), static_cast<double>(w.y0)},
      Point{static_cast<double>(w.x1), static_cast<double>(w.y1)},
      Point{static_cast<double>(w.x0), static_cast<double>(w.y1)}};
  const double area = quad.area();
  if (area <= 0.0) {
    Point c;
    for (const Point& p : quad.vertices) c = c + p * 0.25;
    return (c.x >= clip[0].x && c.x <= clip[2].x && c.y >= clip[0].y && c.y <= clip[2].y) ? 1.0
                                                                                            : 0.0;
  }
  detail::SmallPoly subject;
  for (const Point& p : quad.vertices) subject.push(p);
  const double inside = std::abs(detail::shoelace(detail::clip_convex(subject, clip)));
  return std::clamp(inside / area, 0.0, 1.0);
}

/// Assigns annotations to windows. A record whose in-window area ratio
/// reaches `keep_frac` keeps its difficult flag; one that overlaps the window
/// less than that is kept but marked difficult. Quads are translated to
/// window-local coordinates without being cut. Output has one entry per
/// window, in plan order.
inline std::vector<WindowAnnotation> clip_annotations(const AnnotationFile& ann,
                                                      const SplitPlan& plan,
                                                      double keep_frac = kDefaultKeepFrac,
                                                      double scale = 1.0) {
  if (!(keep_frac > 0.0 && keep_frac <= 1.0)) {
    throw InvalidArgument("keep_frac must lie in (0, 1]");
  }
  constexpr double kEps = 1e-12;
  std::vector<WindowAnnotation> out;
  out.reserve(plan.windows.size());
  for (const Window& w : plan.windows) {
    WindowAnnotation wa{w, scale, {patch_image_id(ann.image_id, scale, w.x0, w.y0), {}}};
    const Point shift{-static_cast<double>(w.x0), -static_cast<double>(w.y0)};
    for (const AnnotationRecord& r : ann.records) {
      const double ratio = window_overlap_ratio(r.quad, w);
      if (ratio <= kEps) continue;
      AnnotationRecord local = r;
      for (Point& p : local.quad.vertices) p = p + shift;
      if (ratio < keep_frac - kEps) local.difficult = true;
      wa.annotation.records.push_back(std::move(local));
    }
    out.push_back(std::move(wa));
  }
  return out;
}

/// Multi-scale split: for each scale, plans windows over the scaled image and
/// clips the scaled annotations. Coordinate arithmetic only.
inline std::vector<WindowAnnotation> split_multiscale(const AnnotationFile& ann, long width,
                                                      long height, std::span<const double> scales,
                                                      long window = kDefaultWindow,
                                                      long gap = kDefaultGap,
                                                      double keep_frac = kDefaultKeepFrac) {
  std::vector<WindowAnnotation> out;
  for (double s : scales) {
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("scale must be positive");
    const SplitPlan plan =
        split_plan(scaled_length(width, s), scaled_length(height, s), window, gap);
    auto part = clip_annotations(scale_annotation(ann, s), plan, keep_frac, s);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// merging

/// Maps window detections back to image coordinates, then runs rotated NMS
/// per (image, category). Output is sorted by descending score; ties keep
/// (image, category, keep) order.
inline std::vector<DetectionRecord> merge_results(std::span<const PatchDetection> patches,
                                                  double nms_thr = kDefaultMergeNmsThr) {
  using Key = std::pair<std::string, std::string>;
  std::map<Key, std::vector<DetectionRecord>> groups;
  for (const PatchDetection& patch : patches) {
    if (!(patch.scale > 0.0)) throw InvalidArgument("patch scale must be positive");
    const double inv = 1.0 / patch.scale;
    for (DetectionRecord d : patch.detections) {
      if (!patch.image_id.empty()) d.image_id = patch.image_id;
      d.box.cx = (d.box.cx + patch.x0) * inv;
      d.box.cy = (d.box.cy + patch.y0) * inv;
      d.box.w *= inv;
      d.box.h *= inv;
      groups[{d.image_id, d.category}].push_back(std::move(d));
    }
  }

  std::vector<DetectionRecord> merged;
  for (auto& [key, dets] : groups) {
    std::vector<ScoredBox> scored;
    scored.reserve(dets.size());
    for (std::size_t i = 0; i < dets.size(); ++i) scored.push_back({dets[i].box, dets[i].score, i});
    for (std::size_t i : rotated_nms(scored, nms_thr)) merged.push_back(std::move(dets[i]));
  }
  std::stable_sort(merged.begin(), merged.end(),
                   [](const DetectionRecord& a, const DetectionRecord& b) { return a.score > b.score; });
  return merged;
}

/// Groups detections whose image ids follow the window naming scheme into
/// patches. Ids that do not parse are treated as whole-image detections.
inline std::vector<PatchDetection> patches_from_ids(std::span<const DetectionRecord> dets) {
  std::map<std::string, PatchDetection> by_id;
  for (const DetectionRecord& d : dets) {
    auto [it, inserted] = by_id.try_emplace(d.image_id);
    if (inserted) {
      if (const auto id = parse_patch_image_id(d.image_id)) {
        it->second = {id->image, static_cast<double>(id->x0), static_cast<double>(id->y0),
                      id->scale, {}};
      } else {
        it->second.image_id = d.image_id;
      }
    }
    it->second.detections.push_back(d);
  }
  std::vector<PatchDetection> out;
  for (auto& [id, patch] : by_id) out.push_back(std::move(patch));
  return out;
}

}  // namespace obbkit

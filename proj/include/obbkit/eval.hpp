#pragma once

// Rotated-detection evaluation: greedy IoU matching, VOC-style average
// precision, dataset mAP and a class confusion matrix.
//
// Difficult ground truth follows PASCAL semantics: it does not count toward
// recall, and a detection that lands on it is neither a true nor a false
// positive.

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "obbkit/errors.hpp"
#include "obbkit/geometry.hpp"
#include "obbkit/overlap.hpp"

namespace obbkit {

struct GroundTruthRecord {
  std::string image_id;
  RotatedBox box;
  std::string category;
  bool difficult = false;
};

struct DetectionRecord {
  std::string image_id;
  RotatedBox box;
  std::string category;
  double score = 0.0;
};

enum class MatchLabel { TP, FP, Ignored };

struct MatchResult {
  std::vector<MatchLabel> labels;  // one per detection, input order
  std::vector<bool> gt_matched;    // one per ground truth, input order
};

enum class ApMode { VOC07, CONTINUOUS };

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> categories)
      : categories_(std::move(categories)),
        counts_((categories_.size() + 1) * (categories_.size() + 1), 0) {}

  /// Rows are ground-truth classes, columns detected classes; index
  /// background() is the extra background row/column.
  std::size_t& at(std::size_t gt_class, std::size_t det_class) {
    return counts_[gt_class * dim() + det_class];
  }
  std::size_t at(std::size_t gt_class, std::size_t det_class) const {
    return counts_[gt_class * dim() + det_class];
  }

  std::size_t background() const { return categories_.size(); }
  std::size_t dim() const { return categories_.size() + 1; }
  const std::vector<std::string>& categories() const { return categories_; }

  std::optional<std::size_t> index_of(const std::string& category) const {
    const auto it = std::find(categories_.begin(), categories_.end(), category);
    if (it == categories_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - categories_.begin());
  }

  std::size_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }

 private:
  std::vector<std::string> categories_;
  std::vector<std::size_t> counts_;
};

struct ClassSummary {
  std::size_t num_gt = 0;  // non-difficult
  std::size_t num_det = 0;
};

struct EvalReport {
  /// Only categories with at least one non-difficult ground truth.
  std::map<std::string, double> per_class_ap;
  double map = 0.0;
  std::map<std::string, std::vector<PrPoint>> pr_curves;
  /// Every category seen in either input.
  std::map<std::string, ClassSummary> summary;
  std::optional<ConfusionMatrix> confusion;
};

namespace detail {

/// Indices of `dets` sorted by descending score, ties in input order.
template <typename Dets>
std::vector<std::size_t> score_order(const Dets& dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  return order;
}

}  // namespace detail

/// Greedy one-to-one matching for a single (image, category) group.
///
/// Detections are visited by descending score (ties in input order). Each is
/// compared with every unmatched ground truth and every difficult one; if the
/// best IoU (ties to the earlier ground truth) reaches `iou_thr` the
/// detection is a TP and consumes that ground truth, or is Ignored when it is
/// difficult. Otherwise it is an FP.
inline MatchResult match_detections(std::span<const DetectionRecord> dets,
                                    std::span<const GroundTruthRecord> gts, double iou_thr) {
  const std::string* image = nullptr;
  const std::string* category = nullptr;
  auto check = [&](const std::string& img, const std::string& cat) {
    if (!image) {
      image = &img;
      category = &cat;
    } else if (img != *image || cat != *category) {
      throw MixedImageOrCategory("match_detections requires one image and one category");
    }
  };
  for (const auto& d : dets) check(d.image_id, d.category);
  for (const auto& g : gts) check(g.image_id, g.category);

  std::vector<detail::PreparedBox> gt_boxes;
  gt_boxes.reserve(gts.size());
  for (const auto& g : gts) gt_boxes.push_back(detail::prepare(g.box));

  MatchResult result{std::vector<MatchLabel>(dets.size(), MatchLabel::FP),
                     std::vector<bool>(gts.size(), false)};
  for (std::size_t di : detail::score_order(dets)) {
    const detail::PreparedBox pd = detail::prepare(dets[di].box);
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (result.gt_matched[gi] && !gts[gi].difficult) continue;
      const double v = detail::iou(pd, gt_boxes[gi]);
      if (v > best_iou) {
        best_iou = v;
        best = gi;
      }
    }
    if (best && best_iou >= iou_thr) {
      if (gts[*best].difficult) {
        result.labels[di] = MatchLabel::Ignored;
      } else {
        result.labels[di] = MatchLabel::TP;
        result.gt_matched[*best] = true;
      }
    }
  }
  return result;
}

/// Recall/precision after each ranked TP or FP. Ignored labels are skipped.
inline std::vector<PrPoint> pr_curve(std::span<const MatchLabel> ranked, std::size_t num_gt) {
  std::vector<PrPoint> curve;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (MatchLabel l : ranked) {
    if (l == MatchLabel::Ignored) continue;
    ++seen;
    if (l == MatchLabel::TP) ++tp;
    const double recall = num_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(num_gt);
    curve.push_back({recall, static_cast<double>(tp) / static_cast<double>(seen)});
  }
  return curve;
}

/// Average precision of a score-ordered label list. Undefined (nullopt) when
/// there is no ground truth.
///
/// VOC07 averages, over recall thresholds 0, 0.1, ..., 1, the best precision
/// at recall >= threshold. CONTINUOUS integrates the monotone precision
/// envelope over recall.
inline std::optional<double> average_precision(std::span<const MatchLabel> ranked,
                                               std::size_t num_gt, ApMode mode) {
  if (num_gt == 0) return std::nullopt;
  const std::vector<PrPoint> curve = pr_curve(ranked, num_gt);

  if (mode == ApMode::VOC07) {
    double acc = 0.0;
    for (int i = 0; i <= 10; ++i) {
      const double t = i / 10.0;
      double best = 0.0;
      for (const PrPoint& p : curve) {
        if (p.recall >= t) best = std::max(best, p.precision);
      }
      acc += best;
    }
    return acc / 11.0;
  }

  std::vector<double> rec{0.0};
  std::vector<double> prec{0.0};
  for (const PrPoint& p : curve) {
    rec.push_back(p.recall);
    prec.push_back(p.precision);
  }
  rec.push_back(1.0);
  prec.push_back(0.0);
  for (std::size_t i = prec.size() - 1; i-- > 0;) prec[i] = std::max(prec[i], prec[i + 1]);
  double ap = 0.0;
  for (std::size_t i = 0; i + 1 < rec.size(); ++i) {
    if (rec[i + 1] != rec[i]) ap += (rec[i + 1] - rec[i]) * prec[i + 1];
  }
  return ap;
}

/// Class-agnostic greedy matching per image. Detections scoring at least
/// `score_thr` are paired with ground truth by descending IoU (IoU must reach
/// `iou_thr`; ties by ground-truth then detection input order). Each pair
/// counts in (gt class, det class); leftovers count against background.
inline ConfusionMatrix confusion_matrix(std::span<const DetectionRecord> dets,
                                        std::span<const GroundTruthRecord> gts,
                                        const std::vector<std::string>& categories,
                                        double iou_thr, double score_thr) {
  ConfusionMatrix cm(categories);
  auto index = [&](const std::string& c) {
    const auto i = cm.index_of(c);
    if (!i) throw UnknownCategory(c);
    return *i;
  };

  std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> by_image;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    index(gts[i].category);
    by_image[gts[i].image_id].first.push_back(i);
  }
  for (std::size_t i = 0; i < dets.size(); ++i) {
    index(dets[i].category);
    if (dets[i].score >= score_thr) by_image[dets[i].image_id].second.push_back(i);
  }

  struct Pair {
    double iou;
    std::size_t gt;
    std::size_t det;
  };
  for (const auto& [image, members] : by_image) {
    const auto& [gt_idx, det_idx] = members;
    std::vector<detail::PreparedBox> det_boxes;
    det_boxes.reserve(det_idx.size());
    for (std::size_t d : det_idx) det_boxes.push_back(detail::prepare(dets[d].box));

    std::vector<Pair> pairs;
    for (std::size_t gi = 0; gi < gt_idx.size(); ++gi) {
      const detail::PreparedBox pg = detail::prepare(gts[gt_idx[gi]].box);
      for (std::size_t dj = 0; dj < det_idx.size(); ++dj) {
        const double v = detail::iou(pg, det_boxes[dj]);
        if (v >= iou_thr && v > 0.0) pairs.push_back({v, gi, dj});
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      return std::tie(b.iou, a.gt, a.det) < std::tie(a.iou, b.gt, b.det);
    });

    std::vector<bool> gt_used(gt_idx.size(), false);
    std::vector<bool> det_used(det_idx.size(), false);
    for (const Pair& p : pairs) {
      if (gt_used[p.gt] || det_used[p.det]) continue;
      gt_used[p.gt] = det_used[p.det] = true;
      ++cm.at(index(gts[gt_idx[p.gt]].category), index(dets[det_idx[p.det]].category));
    }
    for (std::size_t gi = 0; gi < gt_idx.size(); ++gi) {
      if (!gt_used[gi]) ++cm.at(index(gts[gt_idx[gi]].category), cm.background());
    }
    for (std::size_t dj = 0; dj < det_idx.size(); ++dj) {
      if (!det_used[dj]) ++cm.at(cm.background(), index(dets[det_idx[dj]].category));
    }
  }
  return cm;
}

struct EvalOptions {
  double iou_thr = 0.5;
  ApMode mode = ApMode::VOC07;
  /// When set, the report also carries a confusion matrix over the sorted
  /// category vocabulary, using this score threshold.
  std::optional<double> confusion_score_thr;
};

/// Dataset evaluation: per-(image, category) matching, per-category AP over
/// the globally score-ranked detections, and mAP over categories that have
/// ground truth.
inline EvalReport evaluate(std::span<const DetectionRecord> dets,
                           std::span<const GroundTruthRecord> gts, const EvalOptions& opts = {}) {
  using Key = std::pair<std::string, std::string>;  // (category, image)
  std::map<Key, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
  EvalReport report;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    groups[{gts[i].category, gts[i].image_id}].second.push_back(i);
    auto& s = report.summary[gts[i].category];
    if (!gts[i].difficult) ++s.num_gt;
  }
  for (std::size_t i = 0; i < dets.size(); ++i) {
    groups[{dets[i].category, dets[i].image_id}].first.push_back(i);
    ++report.summary[dets[i].category].num_det;
  }

  std::vector<MatchLabel> labels(dets.size(), MatchLabel::FP);
  for (const auto& [key, members] : groups) {
    std::vector<DetectionRecord> group_dets;
    std::vector<GroundTruthRecord> group_gts;
    for (std::size_t i : members.first) group_dets.push_back(dets[i]);
    for (std::size_t i : members.second) group_gts.push_back(gts[i]);
    const MatchResult m = match_detections(group_dets, group_gts, opts.iou_thr);
    for (std::size_t k = 0; k < members.first.size(); ++k) labels[members.first[k]] = m.labels[k];
  }

  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i : detail::score_order(dets)) by_class[dets[i].category].push_back(i);

  double ap_sum = 0.0;
  for (const auto& [category, s] : report.summary) {
    std::vector<MatchLabel> ranked;
    if (auto it = by_class.find(category); it != by_class.end()) {
      for (std::size_t i : it->second) ranked.push_back(labels[i]);
    }
    const std::optional<double> ap = average_precision(ranked, s.num_gt, opts.mode);
    if (!ap) continue;
    report.per_class_ap[category] = *ap;
    report.pr_curves[category] = pr_curve(ranked, s.num_gt);
    ap_sum += *ap;
  }
  if (!report.per_class_ap.empty()) {
    report.map = ap_sum / static_cast<double>(report.per_class_ap.size());
  }

  if (opts.confusion_score_thr) {
    std::vector<std::string> vocab;
    for (const auto& [category, s] : report.summary) vocab.push_back(category);
    report.confusion = confusion_matrix(dets, gts, vocab, opts.iou_thr, *opts.confusion_score_thr);
  }
  return report;
}

inline EvalReport evaluate(std::span<const DetectionRecord> dets,
                           std::span<const GroundTruthRecord> gts, double iou_thr, ApMode mode) {
  return evaluate(dets, gts, EvalOptions{iou_thr, mode, std::nullopt});
}

}  // namespace obbkit

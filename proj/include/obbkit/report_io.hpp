#pragma once

// CSV and JSON renderings of an EvalReport.

#include <string>

#include "json.hpp"
#include "obbkit/eval.hpp"
#include "obbkit/text.hpp"

namespace obbkit {

/// Header "category,num_gt,num_det,ap", one row per category with ground
/// truth (sorted by name), then a closing "mAP" row carrying the totals.
inline std::string report_csv(const EvalReport& report, int precision = 6) {
  std::string out = "category,num_gt,num_det,ap\n";
  std::size_t total_gt = 0;
  std::size_t total_det = 0;
  for (const auto& [category, ap] : report.per_class_ap) {
    const ClassSummary& s = report.summary.at(category);
    total_gt += s.num_gt;
    total_det += s.num_det;
    out += category + "," + std::to_string(s.num_gt) + "," + std::to_string(s.num_det) + "," +
           text::format_fixed(ap, precision) + "\n";
  }
  out += "mAP," + std::to_string(total_gt) + "," + std::to_string(total_det) + "," +
         text::format_fixed(report.map, precision) + "\n";
  return out;
}

inline std::string confusion_csv(const ConfusionMatrix& cm) {
  std::string out = "gt\\det";
  for (const auto& c : cm.categories()) out += "," + c;
  out += ",background\n";
  for (std::size_t r = 0; r < cm.dim(); ++r) {
    out += r == cm.background() ? std::string("background") : cm.categories()[r];
    for (std::size_t c = 0; c < cm.dim(); ++c) out += "," + std::to_string(cm.at(r, c));
    out += "\n";
  }
  return out;
}

inline nlohmann::ordered_json report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["map"] = report.map;
  auto& classes = j["classes"] = nlohmann::ordered_json::array();
  for (const auto& [category, ap] : report.per_class_ap) {
    const ClassSummary& s = report.summary.at(category);
    nlohmann::ordered_json c;
    c["category"] = category;
    c["num_gt"] = s.num_gt;
    c["num_det"] = s.num_det;
    c["ap"] = ap;
    auto& pr = c["pr_curve"] = nlohmann::ordered_json::array();
    for (const PrPoint& p : report.pr_curves.at(category)) pr.push_back({p.recall, p.precision});
    classes.push_back(std::move(c));
  }
  if (report.confusion) {
    const ConfusionMatrix& cm = *report.confusion;
    nlohmann::ordered_json m;
    m["categories"] = cm.categories();
    auto& rows = m["counts"] = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < cm.dim(); ++r) {
      auto row = nlohmann::ordered_json::array();
      for (std::size_t c = 0; c < cm.dim(); ++c) row.push_back(cm.at(r, c));
      rows.push_back(std::move(row));
    }
    j["confusion"] = std::move(m);
  }
  return j;
}

}  // namespace obbkit

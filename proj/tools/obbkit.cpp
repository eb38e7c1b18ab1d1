// obbkit command-line tool: box conversion, rotated IoU / NMS, Gaussian
// distances, DOTA evaluation, confusion matrices, and huge-image split/merge.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <filesystem>
#include <iostream>
#include <iterator>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "obbkit/obbkit.hpp"

namespace fs = std::filesystem;

namespace obbkit::cli {
namespace {

constexpr double kDegPerRad = 180.0 / kPi;

struct BoxRow {
  RotatedBox box;
  std::optional<double> score;
};

std::string read_input(const std::string& path) {
  if (path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  }
  return read_file(path);
}

void write_output(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    std::cout.flush();
    if (!std::cout) throw IoError("cannot write to stdout");
    return;
  }
  write_file(path, content);
}

/// Box CSV: optional header, then cx,cy,w,h,theta,conv[,score]. An empty conv
/// field falls back to `default_conv`.
std::vector<BoxRow> read_box_csv(const std::string& path, bool degrees, bool with_score,
                                 std::optional<AngleConvention> default_conv) {
  const std::string source = path == "-" ? "<stdin>" : path;
  const std::size_t arity = with_score ? 7 : 6;
  std::vector<BoxRow> rows;
  bool first = true;
  text::for_each_line(read_input(path), [&](std::size_t line_no, std::string_view raw) {
    const std::string_view line = text::trim(raw);
    if (line.empty() || line.starts_with('#')) return;
    const auto fields = text::split(line, ',');
    const bool header = first && !fields.empty() && fields[0] == "cx";
    first = false;
    if (header) return;
    if (fields.size() != arity) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(arity) + " fields, got " +
                           std::to_string(fields.size()));
    }
    double v[5];
    for (std::size_t i = 0; i < 5; ++i) {
      const auto parsed = text::parse_double(fields[i]);
      if (!parsed) throw ParseError(source, line_no, "non-numeric field " + std::to_string(i + 1));
      v[i] = *parsed;
    }
    std::optional<AngleConvention> conv =
        fields[5].empty() ? default_conv : parse_convention(fields[5]);
    if (!conv) throw ParseError(source, line_no, "unknown convention '" + std::string(fields[5]) + "'");
    if (default_conv && conv != default_conv) {
      throw ParseError(source, line_no,
                       "row convention " + std::string(to_string(*conv)) + " does not match --from " +
                           std::string(to_string(*default_conv)));
    }
    if (v[2] < 0.0 || v[3] < 0.0) throw ParseError(source, line_no, "negative box size");
    BoxRow row{{v[0], v[1], v[2], v[3], degrees ? v[4] / kDegPerRad : v[4], *conv}, std::nullopt};
    if (with_score) {
      row.score = text::parse_double(fields[6]);
      if (!row.score || *row.score < 0.0 || *row.score > 1.0) {
        throw ParseError(source, line_no, "score must be a number in [0, 1]");
      }
    }
    rows.push_back(row);
  });
  return rows;
}

std::string format_box_row(const RotatedBox& b, bool degrees) {
  return text::format_shortest(b.cx) + "," + text::format_shortest(b.cy) + "," +
         text::format_shortest(b.w) + "," + text::format_shortest(b.h) + "," +
         text::format_shortest(degrees ? b.theta * kDegPerRad : b.theta) + "," +
         std::string(to_string(b.convention)) + "\n";
}

std::vector<std::pair<RotatedBox, RotatedBox>> pair_rows(const std::vector<BoxRow>& rows,
                                                         const std::string& path) {
  if (rows.size() % 2 != 0) {
    throw ParseError(path == "-" ? "<stdin>" : path, rows.size(),
                     "box pairs need an even number of rows");
  }
  std::vector<std::pair<RotatedBox, RotatedBox>> pairs;
  for (std::size_t i = 0; i < rows.size(); i += 2) pairs.emplace_back(rows[i].box, rows[i + 1].box);
  return pairs;
}

std::vector<std::string> categories_of(const std::vector<GroundTruthRecord>& gts,
                                       const std::vector<DetectionRecord>& dets) {
  std::set<std::string> cats;
  for (const auto& g : gts) cats.insert(g.category);
  for (const auto& d : dets) cats.insert(d.category);
  return {cats.begin(), cats.end()};
}

const CLI::Validator kConventionCheck{
    [](const std::string& v) {
      return parse_convention(v) ? std::string{} : "unknown convention '" + v + "' (oc, le90, le135)";
    },
    "oc|le90|le135"};

int run(int argc, char** argv) {
  CLI::App app{"obbkit: oriented bounding box toolkit"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(36);

  // convert
  std::string convert_in = "-", convert_out = "-";
  std::string convert_from, convert_to;
  bool convert_degrees = false;
  auto* convert = app.add_subcommand("convert", "Convert a box CSV between angle conventions");
  convert->add_option("--input,-i", convert_in, "Box CSV (cx,cy,w,h,theta,conv); - for stdin")
      ->capture_default_str();
  convert->add_option("--output,-o", convert_out, "Output CSV; - for stdout")->capture_default_str();
  convert->add_option("--from", convert_from, "Source convention (rows must match it)")
      ->check(kConventionCheck);
  convert->add_option("--to", convert_to, "Target convention")
      ->required()
      ->check(kConventionCheck);
  convert->add_flag("--degrees", convert_degrees, "Angles in degrees instead of radians");

  // iou
  std::string iou_in = "-", iou_out = "-";
  bool iou_degrees = false;
  auto* iou = app.add_subcommand("iou", "Rotated IoU of consecutive box rows (1&2, 3&4, ...)");
  iou->add_option("--input,-i", iou_in, "Box CSV; - for stdin")->capture_default_str();
  iou->add_option("--output,-o", iou_out, "Output; - for stdout")->capture_default_str();
  iou->add_flag("--degrees", iou_degrees, "Angles in degrees");

  // nms
  std::string nms_in = "-", nms_out = "-";
  double nms_thr = kDefaultMergeNmsThr;
  bool nms_degrees = false;
  auto* nms = app.add_subcommand("nms", "Rotated NMS over a scored box CSV; prints kept row indices");
  nms->add_option("--input,-i", nms_in, "Box CSV with a trailing score column; - for stdin")
      ->capture_default_str();
  nms->add_option("--output,-o", nms_out, "Output; - for stdout")->capture_default_str();
  nms->add_option("--iou-thr", nms_thr, "Suppress when IoU is strictly greater")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  nms->add_flag("--degrees", nms_degrees, "Angles in degrees");

  // dist
  std::string dist_in = "-", dist_out = "-";
  std::string dist_kind_name;
  bool dist_degrees = false, dist_loss = false;
  double dist_tau = 1.0;
  auto* dist = app.add_subcommand("dist", "Gaussian distance of consecutive box rows");
  dist->add_option("--input,-i", dist_in, "Box CSV; - for stdin")->capture_default_str();
  dist->add_option("--output,-o", dist_out, "Output; - for stdout")->capture_default_str();
  dist->add_option("--kind", dist_kind_name, "gwd | kld | kld-sym | kfiou")
      ->required()
      ->check(CLI::IsMember({"gwd", "kld", "kld-sym", "kfiou"}));
  dist->add_flag("--loss", dist_loss, "Emit 1 - 1/(tau + ln(1 + d)) instead of d");
  dist->add_option("--tau", dist_tau, "Loss normalization offset")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  dist->add_flag("--degrees", dist_degrees, "Angles in degrees");

  // eval
  std::string eval_gt, eval_det, eval_json, eval_mode = "voc07";
  double eval_iou = 0.5;
  std::optional<double> eval_confusion;
  auto* eval = app.add_subcommand("eval", "Evaluate DOTA Task1 results against annotations");
  eval->add_option("--gt", eval_gt, "Directory of <image_id>.txt annotation files")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval->add_option("--det", eval_det, "Directory of Task1_<category>.txt result files")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval->add_option("--iou-thr", eval_iou, "Match threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  eval->add_option("--mode", eval_mode, "voc07 | continuous")
      ->check(CLI::IsMember({"voc07", "continuous"}))
      ->capture_default_str();
  eval->add_option("--json", eval_json, "Also write the full report as JSON");
  eval->add_option("--confusion-score-thr", eval_confusion,
                   "Include a confusion matrix in the JSON at this score threshold")
      ->check(CLI::Range(0.0, 1.0));

  // confusion
  std::string conf_gt, conf_det, conf_cats;
  double conf_iou = 0.5, conf_score = 0.3;
  auto* confusion = app.add_subcommand("confusion", "Class confusion matrix with background");
  confusion->add_option("--gt", conf_gt, "Annotation directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  confusion->add_option("--det", conf_det, "Task1 result directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  confusion->add_option("--categories", conf_cats,
                        "Comma-separated vocabulary (default: every category seen)");
  confusion->add_option("--iou-thr", conf_iou, "Match threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  confusion->add_option("--score-thr", conf_score, "Ignore detections scoring below this")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  // split
  std::string split_ann, split_out, split_image = "image";
  long split_w = 0, split_h = 0, split_window = kDefaultWindow, split_gap = kDefaultGap;
  double split_keep = kDefaultKeepFrac;
  std::vector<double> split_scales{1.0};
  auto* split = app.add_subcommand("split", "Plan overlapping windows and clip annotations");
  split->add_option("--width", split_w, "Image width (px)")->required()->check(CLI::PositiveNumber);
  split->add_option("--height", split_h, "Image height (px)")->required()->check(CLI::PositiveNumber);
  split->add_option("--window", split_window, "Window side (px)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  split->add_option("--gap", split_gap, "Overlap between windows (px)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  split->add_option("--keep-frac", split_keep, "Min in-window area ratio to stay non-difficult")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  split->add_option("--scales", split_scales, "Scale factors for multi-scale splitting")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  split->add_option("--ann", split_ann, "Annotation file to clip (image id = file stem)")
      ->check(CLI::ExistingFile);
  split->add_option("--image-id", split_image, "Image id when no --ann is given")
      ->capture_default_str();
  split->add_option("--out-dir", split_out, "Write one annotation file per window here");

  // merge
  std::string merge_det, merge_out;
  double merge_thr = kDefaultMergeNmsThr;
  auto* merge = app.add_subcommand("merge", "Merge window-level Task1 results into image coordinates");
  merge->add_option("--det", merge_det, "Directory of window-level Task1_<category>.txt files")
      ->required()
      ->check(CLI::ExistingDirectory);
  merge->add_option("--out", merge_out, "Output directory for merged Task1 files")->required();
  merge->add_option("--nms-thr", merge_thr, "Per-class NMS threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  if (*convert) {
    std::string out = "cx,cy,w,h,theta,conv\n";
    for (const BoxRow& r : read_box_csv(
             convert_in, convert_degrees, false,
             convert_from.empty() ? std::nullopt : parse_convention(convert_from))) {
      out += format_box_row(obbkit::convert(r.box, *parse_convention(convert_to)), convert_degrees);
    }
    write_output(convert_out, out);
  } else if (*iou) {
    std::string out;
    for (const auto& [a, b] : pair_rows(read_box_csv(iou_in, iou_degrees, false, {}), iou_in)) {
      out += text::format_shortest(rotated_iou(a, b)) + "\n";
    }
    write_output(iou_out, out);
  } else if (*nms) {
    const auto rows = read_box_csv(nms_in, nms_degrees, true, {});
    std::vector<ScoredBox> dets;
    for (std::size_t i = 0; i < rows.size(); ++i) dets.push_back({rows[i].box, *rows[i].score, i});
    std::string out;
    for (std::size_t k : rotated_nms(dets, nms_thr)) out += std::to_string(k) + "\n";
    write_output(nms_out, out);
  } else if (*dist) {
    const GaussianDistanceKind kind = *parse_distance_kind(dist_kind_name);
    std::string out;
    for (const auto& [a, b] : pair_rows(read_box_csv(dist_in, dist_degrees, false, {}), dist_in)) {
      const double d = box_distance(kind, a, b);
      out += text::format_shortest(dist_loss ? loss_transform(d, dist_tau) : d) + "\n";
    }
    write_output(dist_out, out);
  } else if (*eval) {
    const auto gts = to_ground_truth(read_annotation_dir(eval_gt));
    const auto dets = parse_results(eval_det);
    EvalOptions opts{eval_iou, eval_mode == "voc07" ? ApMode::VOC07 : ApMode::CONTINUOUS,
                     eval_confusion};
    const EvalReport report = evaluate(dets, gts, opts);
    write_output("-", report_csv(report));
    if (!eval_json.empty()) write_file(eval_json, report_json(report).dump(2) + "\n");
  } else if (*confusion) {
    const auto gts = to_ground_truth(read_annotation_dir(conf_gt));
    const auto dets = parse_results(conf_det);
    std::vector<std::string> cats;
    if (conf_cats.empty()) {
      cats = categories_of(gts, dets);
    } else {
      for (auto c : text::split(conf_cats, ',')) {
        if (!c.empty()) cats.emplace_back(c);
      }
    }
    write_output("-", confusion_csv(confusion_matrix(dets, gts, cats, conf_iou, conf_score)));
  } else if (*split) {
    if (split_gap >= split_window) {
      std::cerr << "error: --gap must be smaller than --window\n";
      return 1;
    }
    const AnnotationFile ann =
        split_ann.empty() ? AnnotationFile{split_image, {}} : read_annotation_file(split_ann);
    const auto windows =
        split_multiscale(ann, split_w, split_h, split_scales, split_window, split_gap, split_keep);
    if (!split_out.empty()) fs::create_directories(split_out);
    std::string out = "image_id,scale,x0,y0,x1,y1,objects\n";
    for (const WindowAnnotation& w : windows) {
      out += w.annotation.image_id + "," + text::format_shortest(w.scale) + "," +
             std::to_string(w.window.x0) + "," + std::to_string(w.window.y0) + "," +
             std::to_string(w.window.x1) + "," + std::to_string(w.window.y1) + "," +
             std::to_string(w.annotation.records.size()) + "\n";
      if (!split_out.empty()) {
        write_file(fs::path(split_out) / (w.annotation.image_id + ".txt"),
                   format_annotation(w.annotation));
      }
    }
    write_output("-", out);
  } else if (*merge) {
    const auto dets = parse_results(merge_det);
    const auto merged = merge_results(patches_from_ids(dets), merge_thr);
    write_results(merged, merge_out);
    std::cout << merged.size() << " detections merged from " << dets.size() << "\n";
  }
  return 0;
}

}  // namespace
}  // namespace obbkit::cli

int main(int argc, char** argv) {
  try {
    return obbkit::cli::run(argc, argv);
  } catch (const obbkit::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const obbkit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

#include "detkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "detkit/parallel.hpp"
#include "json.hpp"

namespace detkit {

namespace {

using nlohmann::json;

constexpr size_t kNumThresholds = kIouThresholds.size();
constexpr size_t kNumSizes = 3;

/// Detection sort: score descending, ties by (image id, x1) ascending.
struct ScoredFlag {
  double score = 0.0;
  int64_t image_id = 0;
  double x1 = 0.0;
  bool tp = false;
  SizeClass size = SizeClass::Small;  // matched truth's size for TPs, own size for FPs
};

bool scored_before(const ScoredFlag& a, const ScoredFlag& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.image_id != b.image_id) return a.image_id < b.image_id;
  return a.x1 < b.x1;
}

}  // namespace

double ClassEval::ap() const {
  double sum = 0.0;
  for (double v : ap_by_threshold) sum += v;
  return sum / static_cast<double>(ap_by_threshold.size());
}

std::vector<int> match_indices(const std::vector<Detection>& dets, const std::vector<Box>& truths,
                               double iou_thr) {
  std::vector<int> assigned(dets.size(), -1);
  std::vector<bool> used(truths.size(), false);
  for (size_t d = 0; d < dets.size(); ++d) {
    int best = -1;
    double best_iou = 0.0;
    for (size_t t = 0; t < truths.size(); ++t) {
      if (used[t]) continue;
      const double v = iou(dets[d].box, truths[t]);
      if (v >= iou_thr && v > best_iou) {
        best = static_cast<int>(t);
        best_iou = v;
      }
    }
    if (best >= 0) {
      assigned[d] = best;
      used[best] = true;
    }
  }
  return assigned;
}

MatchResult match(const std::vector<Detection>& dets, const std::vector<Box>& truths,
                  double iou_thr) {
  const std::vector<int> assigned = match_indices(dets, truths, iou_thr);
  MatchResult r;
  r.flags.reserve(dets.size());
  size_t matched = 0;
  for (size_t d = 0; d < dets.size(); ++d) {
    r.flags.emplace_back(dets[d], assigned[d] >= 0);
    if (assigned[d] >= 0) ++matched;
  }
  r.unmatched_truths = truths.size() - matched;
  return r;
}

double average_precision(const std::vector<uint8_t>& tp_flags, size_t total_truths) {
  if (total_truths == 0) return 0.0;
  const size_t n = tp_flags.size();
  if (n == 0) return 0.0;

  std::vector<double> precision(n), recall(n);
  size_t tp = 0;
  for (size_t k = 0; k < n; ++k) {
    tp += tp_flags[k] ? 1 : 0;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / static_cast<double>(total_truths);
  }
  // Monotone envelope from the right: max precision at recall >= each point.
  for (size_t k = n - 1; k-- > 0;) precision[k] = std::max(precision[k], precision[k + 1]);

  double sum = 0.0;
  size_t k = 0;
  for (int i = 0; i < kRecallPoints; ++i) {
    const double r = static_cast<double>(i) / (kRecallPoints - 1);
    while (k < n && recall[k] < r) ++k;
    if (k == n) break;
    sum += precision[k];
  }
  return sum / kRecallPoints;
}

EvalReport evaluate(const ResultSet& results, const Annotations& anns, const EvalOptions& opts) {
  std::unordered_map<int64_t, const AnnotatedImage*> img_index;
  for (const auto& img : anns.images) img_index[img.id] = &img;
  for (const auto& e : results.entries)
    if (!img_index.count(e.image_id))
      throw DataError("evaluate: results reference unknown image id " + std::to_string(e.image_id));

  // Group detections and truths by (image, class); ordered maps keep the
  // accumulation order fixed.
  std::map<std::pair<int64_t, int>, std::vector<Detection>> dets_by_cell;
  for (const auto& e : results.entries)
    dets_by_cell[{e.image_id, e.det.label}].push_back(e.det);

  std::map<int, size_t> truth_count;                              // per class
  std::map<int, std::array<size_t, kNumSizes>> truth_size_count;  // per class per size
  std::map<std::pair<int64_t, int>, std::vector<Box>> truths_by_cell;
  std::map<std::pair<int64_t, int>, std::vector<SizeClass>> truth_sizes_by_cell;
  for (const auto& img : anns.images) {
    for (const auto& gt : img.truths) {
      const auto key = std::make_pair(img.id, gt.label);
      truths_by_cell[key].push_back(gt.box);
      truth_sizes_by_cell[key].push_back(size_class(gt.box, img.width, img.height));
      truth_count[gt.label]++;
      truth_size_count.try_emplace(gt.label);
      truth_size_count[gt.label][static_cast<size_t>(truth_sizes_by_cell[key].back())]++;
    }
  }

  // Cells that have detections, truths, or both.
  std::map<std::pair<int64_t, int>, bool> cell_set;
  for (const auto& [key, _] : dets_by_cell) cell_set[key] = true;
  for (const auto& [key, _] : truths_by_cell) cell_set[key] = true;
  std::vector<std::pair<int64_t, int>> cells;
  cells.reserve(cell_set.size());
  for (const auto& [key, _] : cell_set) cells.push_back(key);

  // Match every cell at every threshold.
  struct CellResult {
    std::array<std::vector<ScoredFlag>, kNumThresholds> flags;
  };
  std::vector<CellResult> cell_results(cells.size());
  parallel_for(cells.size(), opts.threads, [&](size_t ci) {
    const auto [image_id, label] = cells[ci];
    const AnnotatedImage* img = img_index.at(image_id);

    std::vector<Detection> dets;
    if (auto it = dets_by_cell.find(cells[ci]); it != dets_by_cell.end()) dets = it->second;
    std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.box.x1 < b.box.x1;
    });
    if (opts.max_dets > 0 && static_cast<int>(dets.size()) > opts.max_dets)
      dets.resize(opts.max_dets);

    static const std::vector<Box> no_truths;
    static const std::vector<SizeClass> no_sizes;
    const auto truths_it = truths_by_cell.find(cells[ci]);
    const std::vector<Box>& truths = truths_it == truths_by_cell.end() ? no_truths : truths_it->second;
    const std::vector<SizeClass>& sizes =
        truths_it == truths_by_cell.end() ? no_sizes : truth_sizes_by_cell.at(cells[ci]);

    for (size_t t = 0; t < kNumThresholds; ++t) {
      const std::vector<int> assigned = match_indices(dets, truths, kIouThresholds[t]);
      auto& out = cell_results[ci].flags[t];
      out.reserve(dets.size());
      for (size_t d = 0; d < dets.size(); ++d) {
        ScoredFlag f;
        f.score = dets[d].score;
        f.image_id = image_id;
        f.x1 = dets[d].box.x1;
        f.tp = assigned[d] >= 0;
        f.size = f.tp ? sizes[assigned[d]] : size_class(dets[d].box, img->width, img->height);
        out.push_back(f);
      }
    }
  });

  // Accumulate per class: pool flags across images, sort, take AP.
  std::map<int, std::array<std::vector<ScoredFlag>, kNumThresholds>> class_flags;
  for (size_t ci = 0; ci < cells.size(); ++ci) {
    const int label = cells[ci].second;
    auto& dst = class_flags[label];
    for (size_t t = 0; t < kNumThresholds; ++t) {
      auto& src = cell_results[ci].flags[t];
      dst[t].insert(dst[t].end(), src.begin(), src.end());
    }
  }

  EvalReport report;
  std::array<double, kNumSizes> size_ap_sum{};
  std::array<size_t, kNumSizes> size_class_count{};
  for (const auto& [label, G] : truth_count) {
    if (G == 0) continue;
    ClassEval ce;
    ce.category_id = label;
    ce.num_truths = G;

    std::array<std::array<double, kNumThresholds>, kNumSizes> size_ap{};
    auto flags_it = class_flags.find(label);
    for (size_t t = 0; t < kNumThresholds; ++t) {
      std::vector<ScoredFlag> flags;
      if (flags_it != class_flags.end()) flags = flags_it->second[t];
      std::sort(flags.begin(), flags.end(), scored_before);

      std::vector<uint8_t> tp;
      tp.reserve(flags.size());
      for (const auto& f : flags) tp.push_back(f.tp ? 1 : 0);
      ce.ap_by_threshold[t] = average_precision(tp, G);

      for (size_t s = 0; s < kNumSizes; ++s) {
        const size_t Gs = truth_size_count[label][s];
        if (Gs == 0) continue;
        std::vector<uint8_t> tp_s;
        for (const auto& f : flags)
          if (static_cast<size_t>(f.size) == s) tp_s.push_back(f.tp ? 1 : 0);
        size_ap[s][t] = average_precision(tp_s, Gs);
      }
    }

    for (size_t s = 0; s < kNumSizes; ++s) {
      if (truth_size_count[label][s] == 0) continue;
      double mean = 0.0;
      for (size_t t = 0; t < kNumThresholds; ++t) mean += size_ap[s][t];
      size_ap_sum[s] += mean / kNumThresholds;
      size_class_count[s]++;
    }
    report.per_class.push_back(ce);
  }

  if (!report.per_class.empty()) {
    double sum = 0.0, sum50 = 0.0, sum75 = 0.0;
    for (const auto& ce : report.per_class) {
      sum += ce.ap();
      sum50 += ce.ap_by_threshold[0];
      sum75 += ce.ap_by_threshold[5];
    }
    const auto n = static_cast<double>(report.per_class.size());
    report.ap = sum / n;
    report.ap50 = sum50 / n;
    report.ap75 = sum75 / n;
  }
  report.ap_small = size_class_count[0] ? size_ap_sum[0] / size_class_count[0] : 0.0;
  report.ap_medium = size_class_count[1] ? size_ap_sum[1] / size_class_count[1] : 0.0;
  report.ap_large = size_class_count[2] ? size_ap_sum[2] / size_class_count[2] : 0.0;
  return report;
}

std::string report_to_json(const EvalReport& report, int model_id) {
  json root;
  root["model_id"] = model_id;
  root["ap"] = report.ap;
  root["ap50"] = report.ap50;
  root["ap75"] = report.ap75;
  root["ap_small"] = report.ap_small;
  root["ap_medium"] = report.ap_medium;
  root["ap_large"] = report.ap_large;
  json per_class = json::array();
  for (const auto& ce : report.per_class) {
    json jc;
    jc["category_id"] = ce.category_id;
    jc["num_truths"] = ce.num_truths;
    jc["ap"] = ce.ap();
    jc["ap_by_threshold"] = ce.ap_by_threshold;
    per_class.push_back(std::move(jc));
  }
  root["per_class"] = std::move(per_class);
  return root.dump(2) + "\n";
}

std::pair<int, EvalReport> report_from_json(const std::string& content, const std::string& context) {
  json root;
  try {
    root = json::parse(content);
  } catch (const json::parse_error& e) {
    throw DataError(context + ": " + e.what());
  }
  try {
    EvalReport report;
    const int model_id = root.at("model_id").get<int>();
    report.ap = root.at("ap").get<double>();
    report.ap50 = root.at("ap50").get<double>();
    report.ap75 = root.at("ap75").get<double>();
    report.ap_small = root.at("ap_small").get<double>();
    report.ap_medium = root.at("ap_medium").get<double>();
    report.ap_large = root.at("ap_large").get<double>();
    for (const auto& jc : root.at("per_class")) {
      ClassEval ce;
      ce.category_id = jc.at("category_id").get<int>();
      ce.num_truths = jc.at("num_truths").get<size_t>();
      ce.ap_by_threshold = jc.at("ap_by_threshold").get<std::array<double, kNumThresholds>>();
      report.per_class.push_back(std::move(ce));
    }
    return {model_id, report};
  } catch (const json::exception& e) {
    throw DataError(context + ": malformed report: " + e.what());
  }
}

std::pair<int, EvalReport> load_report(const std::string& path) {
  return report_from_json(read_text_file(path), path);
}

std::string format_report_table(const EvalReport& report) {
  auto pct = [](double v) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(1);
    ss << v * 100.0;
    return ss.str();
  };
  std::ostringstream out;
  out << "AP@0.50:0.95 " << pct(report.ap) << "\n"
      << "AP@0.50      " << pct(report.ap50) << "\n"
      << "AP@0.75      " << pct(report.ap75) << "\n"
      << "AP@(small)   " << pct(report.ap_small) << "\n"
      << "AP@(medium)  " << pct(report.ap_medium) << "\n"
      << "AP@(large)   " << pct(report.ap_large) << "\n";
  return out.str();
}

}  // namespace detkit

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "detkit/box.hpp"
#include "detkit/data_io.hpp"

namespace detkit {

/// The ten IoU thresholds 0.50:0.05:0.95.
inline constexpr std::array<double, 10> kIouThresholds = {0.50, 0.55, 0.60, 0.65, 0.70,
                                                          0.75, 0.80, 0.85, 0.90, 0.95};
inline constexpr int kRecallPoints = 101;

struct ClassEval {
  int category_id = 0;
  size_t num_truths = 0;
  std::array<double, kIouThresholds.size()> ap_by_threshold{};

  double ap() const;  // mean over thresholds
};

/// Per-class and aggregate average precision, plus size-stratified APs.
struct EvalReport {
  double ap = 0.0;    // AP@0.50:0.95
  double ap50 = 0.0;  // AP@0.50
  double ap75 = 0.0;  // AP@0.75
  double ap_small = 0.0;
  double ap_medium = 0.0;
  double ap_large = 0.0;
  std::vector<ClassEval> per_class;  // classes with at least one ground truth
};

/// Greedy matching for one image and class. Detections must be sorted by
/// score descending; each takes the unmatched truth of highest IoU >= thr
/// (first on ties). Returns per-detection TP flags and the count of truths
/// left unmatched.
struct MatchResult {
  std::vector<std::pair<Detection, bool>> flags;
  size_t unmatched_truths = 0;
};
MatchResult match(const std::vector<Detection>& dets, const std::vector<Box>& truths,
                  double iou_thr);

/// Same matching, exposing which truth each detection took (-1 for FP).
std::vector<int> match_indices(const std::vector<Detection>& dets, const std::vector<Box>& truths,
                               double iou_thr);

/// 101-point interpolated AP from TP/FP flags already sorted by score
/// descending. G is the number of ground truths; G = 0 yields 0.
double average_precision(const std::vector<uint8_t>& tp_flags, size_t total_truths);

struct EvalOptions {
  int max_dets = 0;  // per image and class; 0 disables the cap
  int threads = 1;
};

/// Full report over a dataset. Every result image id must have annotations.
EvalReport evaluate(const ResultSet& results, const Annotations& anns,
                    const EvalOptions& opts = {});

std::string report_to_json(const EvalReport& report, int model_id);
std::pair<int, EvalReport> report_from_json(const std::string& content, const std::string& context);
std::pair<int, EvalReport> load_report(const std::string& path);

/// Metrics table with percentages at one decimal.
std::string format_report_table(const EvalReport& report);

}  // namespace detkit

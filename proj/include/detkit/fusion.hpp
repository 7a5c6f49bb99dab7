#pragma once

#include <cstddef>
#include <vector>

#include "detkit/box.hpp"
#include "detkit/eval.hpp"

namespace detkit {

/// How a fused cluster's confidence is derived from its members.
enum class ConfMode { Average, Max };

struct FusionParams {
  double iou_thr = 0.55;
  double skip_thr = 0.0;
  ConfMode conf_mode = ConfMode::Average;
  /// Per-model weights; empty means every model weighs 1.
  std::vector<double> weights;
};

/// Greedy non-maximum suppression within each label. Detections are
/// visited in descending score order; a detection is dropped when it
/// overlaps an already kept same-label detection with IoU > iou_thr.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_thr);

/// Weighted box fusion over the per-model detection lists.
/// Same-label detections whose boxes overlap the running fused box with
/// IoU >= iou_thr are merged; fused coordinates are the score-weighted
/// mean over cluster members and the fused score is rescaled by
/// min(T, N)/N for T members over N models.
std::vector<Detection> wbf(const std::vector<std::vector<Detection>>& per_model,
                           const FusionParams& params = {});

/// One candidate model in an ensemble selection pool.
struct RankedModel {
  int model_id = 0;
  double ap = 0.0;
  double ap50 = 0.0;
};

/// Orders models by (ap desc, ap50 desc, model_id asc) and keeps the
/// top k (all of them when k exceeds the pool). Throws DataError on an
/// empty pool or k < 1.
std::vector<RankedModel> rank_and_select(std::vector<RankedModel> pool, int k);

}  // namespace detkit

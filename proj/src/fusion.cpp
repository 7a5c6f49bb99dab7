#include "detkit/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "detkit/data_io.hpp"

namespace detkit {

namespace {

bool score_order(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.label != b.label) return a.label < b.label;
  if (a.box.x1 != b.box.x1) return a.box.x1 < b.box.x1;
  if (a.box.y1 != b.box.y1) return a.box.y1 < b.box.y1;
  return a.model_id < b.model_id;
}

struct Cluster {
  int label = 0;
  Box fused;
  double fused_score = 0.0;
  std::vector<Detection> members;  // scores already weighted

  void refresh(ConfMode mode) {
    double wsum = 0.0;
    Box acc{0.0, 0.0, 0.0, 0.0};
    double ssum = 0.0, smax = 0.0;
    for (const auto& m : members) {
      acc.x1 += m.box.x1 * m.score;
      acc.y1 += m.box.y1 * m.score;
      acc.x2 += m.box.x2 * m.score;
      acc.y2 += m.box.y2 * m.score;
      wsum += m.score;
      ssum += m.score;
      smax = std::max(smax, m.score);
    }
    if (wsum > 0.0) {
      fused.x1 = acc.x1 / wsum;
      fused.y1 = acc.y1 / wsum;
      fused.x2 = acc.x2 / wsum;
      fused.y2 = acc.y2 / wsum;
    } else if (!members.empty()) {
      fused = members.front().box;
    }
    fused_score = mode == ConfMode::Average ? ssum / members.size() : smax;
  }
};

}  // namespace

std::vector<Detection> nms(std::vector<Detection> dets, double iou_thr) {
  std::stable_sort(dets.begin(), dets.end(), score_order);
  std::vector<Detection> kept;
  kept.reserve(dets.size());
  for (const auto& d : dets) {
    bool suppressed = false;
    for (const auto& k : kept) {
      if (k.label == d.label && iou(k.box, d.box) >= iou_thr) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

std::vector<Detection> wbf(const std::vector<std::vector<Detection>>& per_model,
                           const FusionParams& params) {
  const size_t n_models = per_model.size();
  if (n_models == 0) throw DataError("wbf: no model detection lists");
  if (!params.weights.empty() && params.weights.size() != n_models)
    throw DataError("wbf: weight count does not match model count");
  for (double w : params.weights)
    if (w <= 0.0) throw DataError("wbf: weights must be positive");

  std::vector<Detection> pool;
  for (size_t m = 0; m < n_models; ++m) {
    const double w = params.weights.empty() ? 1.0 : params.weights[m];
    for (Detection d : per_model[m]) {
      if (d.score < params.skip_thr) continue;
      d.score *= w;
      d.model_id = static_cast<int>(m);
      pool.push_back(d);
    }
  }
  std::stable_sort(pool.begin(), pool.end(), score_order);

  std::vector<Cluster> clusters;
  for (const auto& d : pool) {
    int best = -1;
    double best_iou = 0.0;
    for (size_t c = 0; c < clusters.size(); ++c) {
      if (clusters[c].label != d.label) continue;
      const double v = iou(clusters[c].fused, d.box);
      if (v >= params.iou_thr && v > best_iou) {
        best = static_cast<int>(c);
        best_iou = v;
      }
    }
    if (best < 0) {
      Cluster c;
      c.label = d.label;
      c.members.push_back(d);
      c.refresh(params.conf_mode);
      clusters.push_back(std::move(c));
    } else {
      clusters[best].members.push_back(d);
      clusters[best].refresh(params.conf_mode);
    }
  }

  std::vector<Detection> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) {
    Detection d;
    d.box = c.fused;
    d.label = c.label;
    d.model_id = -1;
    const double T = static_cast<double>(c.members.size());
    const double N = static_cast<double>(n_models);
    d.score = c.fused_score * std::min(T, N) / N;
    d.score = std::clamp(d.score, 0.0, 1.0);
    out.push_back(d);
  }
  std::stable_sort(out.begin(), out.end(), score_order);
  return out;
}

std::vector<RankedModel> rank_and_select(std::vector<RankedModel> pool, int k) {
  if (pool.empty()) throw DataError("rank_and_select: empty model pool");
  if (k < 1) throw DataError("rank_and_select: k must be positive");
  std::sort(pool.begin(), pool.end(), [](const RankedModel& a, const RankedModel& b) {
    if (a.ap != b.ap) return a.ap > b.ap;
    if (a.ap50 != b.ap50) return a.ap50 > b.ap50;
    return a.model_id < b.model_id;
  });
  if (static_cast<size_t>(k) < pool.size()) pool.resize(k);
  return pool;
}

}  // namespace detkit

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "detkit/fusion.hpp"
#include "detkit/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace detkit;

namespace {

Detection det(double x1, double y1, double x2, double y2, int label, double score) {
  return Detection{Box{x1, y1, x2, y2}, label, score, 0};
}

std::vector<std::vector<Detection>> random_instance(Rng& rng, int max_models, int max_boxes) {
  const int n_models = rng.uniform_int(1, max_models);
  std::vector<std::vector<Detection>> per_model(n_models);
  const int total = rng.uniform_int(0, max_boxes);
  for (int i = 0; i < total; ++i) {
    const double x1 = rng.uniform(0.0, 0.8);
    const double y1 = rng.uniform(0.0, 0.8);
    Detection d;
    d.box = Box{x1, y1, x1 + rng.uniform(0.05, 1.0 - x1), y1 + rng.uniform(0.05, 1.0 - y1)};
    d.label = rng.uniform_int(1, 2);
    d.score = rng.uniform(0.05, 1.0);
    per_model[rng.uniform_int(0, n_models - 1)].push_back(d);
  }
  return per_model;
}

bool same_det(const Detection& a, const Detection& b, double tol) {
  return a.label == b.label && std::abs(a.score - b.score) <= tol &&
         std::abs(a.box.x1 - b.box.x1) <= tol && std::abs(a.box.y1 - b.box.y1) <= tol &&
         std::abs(a.box.x2 - b.box.x2) <= tol && std::abs(a.box.y2 - b.box.y2) <= tol;
}

}  // namespace

TEST_CASE("nms keeps the top-scored of identical boxes") {
  std::vector<Detection> dets = {det(0.1, 0.1, 0.5, 0.5, 1, 0.9), det(0.1, 0.1, 0.5, 0.5, 1, 0.8)};
  const auto kept = nms(dets, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].score == 0.9);
}

TEST_CASE("nms suppresses per label only") {
  std::vector<Detection> dets = {det(0.1, 0.1, 0.5, 0.5, 1, 0.9), det(0.1, 0.1, 0.5, 0.5, 2, 0.8)};
  CHECK(nms(dets, 0.5).size() == 2);
  CHECK(nms({}, 0.5).empty());
}

TEST_CASE("nms output is a subset with untouched scores") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    auto per_model = random_instance(rng, 1, 8);
    const auto& input = per_model[0];
    const auto kept = nms(input, 0.5);
    CHECK(kept.size() <= input.size());
    for (const auto& k : kept) {
      const bool found = std::any_of(input.begin(), input.end(),
                                     [&](const Detection& d) { return same_det(d, k, 0.0); });
      CHECK(found);
    }
  }
}

TEST_CASE("wbf hand case: identical boxes from two models average to 0.7") {
  std::vector<std::vector<Detection>> per_model = {{det(0.2, 0.2, 0.6, 0.6, 1, 0.8)},
                                                   {det(0.2, 0.2, 0.6, 0.6, 1, 0.6)}};
  const auto fused = wbf(per_model);
  REQUIRE(fused.size() == 1);
  CHECK(fused[0].score == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(fused[0].box.x1 == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(fused[0].box.x2 == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(fused[0].label == 1);
}

TEST_CASE("wbf hand case: weighted-mean coordinates") {
  std::vector<std::vector<Detection>> per_model = {{det(0.0, 0.0, 1.0, 1.0, 1, 0.9)},
                                                   {det(0.0, 0.0, 0.8, 0.8, 1, 0.1)}};
  const auto fused = wbf(per_model);  // IoU 0.64 >= 0.55 joins the cluster
  REQUIRE(fused.size() == 1);
  CHECK(fused[0].box.x1 == doctest::Approx(0.0));
  CHECK(fused[0].box.y1 == doctest::Approx(0.0));
  CHECK(fused[0].box.x2 == doctest::Approx(0.98).epsilon(1e-12));
  CHECK(fused[0].box.y2 == doctest::Approx(0.98).epsilon(1e-12));
  CHECK(fused[0].score == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("wbf hand case: single model with disjoint boxes is the identity") {
  std::vector<std::vector<Detection>> per_model = {
      {det(0.0, 0.0, 0.2, 0.2, 1, 0.9), det(0.5, 0.5, 0.7, 0.7, 1, 0.4),
       det(0.8, 0.8, 0.9, 0.9, 2, 0.6)}};
  const auto fused = wbf(per_model);
  REQUIRE(fused.size() == 3);
  // output is sorted by score descending
  CHECK(same_det(fused[0], det(0.0, 0.0, 0.2, 0.2, 1, 0.9), 1e-12));
  CHECK(same_det(fused[1], det(0.8, 0.8, 0.9, 0.9, 2, 0.6), 1e-12));
  CHECK(same_det(fused[2], det(0.5, 0.5, 0.7, 0.7, 1, 0.4), 1e-12));
}

TEST_CASE("wbf validates inputs") {
  CHECK_THROWS_AS(wbf({}), DataError);

  FusionParams bad_weight;
  bad_weight.weights = {1.0, 0.0};
  CHECK_THROWS_AS(wbf({{}, {}}, bad_weight), DataError);

  FusionParams miscount;
  miscount.weights = {1.0};
  CHECK_THROWS_AS(wbf({{}, {}}, miscount), DataError);
}

TEST_CASE("wbf skip threshold drops low scores at intake") {
  FusionParams params;
  params.skip_thr = 0.5;
  std::vector<std::vector<Detection>> per_model = {
      {det(0.1, 0.1, 0.3, 0.3, 1, 0.4), det(0.5, 0.5, 0.7, 0.7, 1, 0.6)}};
  const auto fused = wbf(per_model, params);
  REQUIRE(fused.size() == 1);
  CHECK(fused[0].box.x1 == doctest::Approx(0.5));
}

TEST_CASE("wbf clusters across labels never mix") {
  std::vector<std::vector<Detection>> per_model = {{det(0.1, 0.1, 0.5, 0.5, 1, 0.9)},
                                                   {det(0.1, 0.1, 0.5, 0.5, 2, 0.8)}};
  const auto fused = wbf(per_model);
  CHECK(fused.size() == 2);
}

TEST_CASE("wbf fused coordinates stay inside the member hull") {
  Rng rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    const auto per_model = random_instance(rng, 3, 6);
    // pool bounds per label
    double lo_x1 = 1e9, hi_x2 = -1e9;
    size_t total = 0;
    for (const auto& list : per_model)
      for (const auto& d : list) {
        lo_x1 = std::min(lo_x1, d.box.x1);
        hi_x2 = std::max(hi_x2, d.box.x2);
        ++total;
      }
    for (const auto& f : wbf(per_model)) {
      CHECK(f.score >= 0.0);
      CHECK(f.score <= 1.0);
      if (total > 0) {
        CHECK(f.box.x1 >= lo_x1 - 1e-12);
        CHECK(f.box.x2 <= hi_x2 + 1e-12);
      }
    }
  }
}

TEST_CASE("wbf is permutation-invariant over model list order") {
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    auto per_model = random_instance(rng, 3, 6);
    FusionParams params;  // weight-free so models are interchangeable
    const auto a = wbf(per_model, params);
    std::reverse(per_model.begin(), per_model.end());
    const auto b = wbf(per_model, params);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(same_det(a[i], b[i], 1e-12));
  }
}

TEST_CASE("wbf matches the exhaustive oracle on random instances") {
  Rng rng(34);
  for (int trial = 0; trial < 500; ++trial) {
    const auto per_model = random_instance(rng, 3, 6);
    FusionParams params;
    params.iou_thr = rng.uniform(0.3, 0.7);
    params.skip_thr = rng.uniform() < 0.3 ? rng.uniform(0.0, 0.3) : 0.0;
    params.conf_mode = rng.uniform() < 0.5 ? ConfMode::Average : ConfMode::Max;
    if (rng.uniform() < 0.3) {
      for (size_t m = 0; m < per_model.size(); ++m)
        params.weights.push_back(rng.uniform(0.5, 2.0));
    }
    const auto got = wbf(per_model, params);
    const auto want = oracle::wbf_brute(per_model, params);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(same_det(got[i], want[i], 1e-9));
  }
}

TEST_CASE("wbf max confidence mode takes the member maximum") {
  FusionParams params;
  params.conf_mode = ConfMode::Max;
  std::vector<std::vector<Detection>> per_model = {{det(0.2, 0.2, 0.6, 0.6, 1, 0.8)},
                                                   {det(0.2, 0.2, 0.6, 0.6, 1, 0.6)}};
  const auto fused = wbf(per_model, params);
  REQUIRE(fused.size() == 1);
  CHECK(fused[0].score == doctest::Approx(0.8));
}

TEST_CASE("rank_and_select orders by ap then ap50 then id") {
  std::vector<RankedModel> pool = {
      {3, 0.30, 0.62},
      {1, 0.31, 0.50},
      {2, 0.30, 0.64},
      {4, 0.30, 0.64},
  };
  const auto top = rank_and_select(pool, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0].model_id == 1);  // highest ap
  CHECK(top[1].model_id == 2);  // ap tie, ap50 0.64, lower id
  CHECK(top[2].model_id == 4);

  CHECK(rank_and_select(pool, 30).size() == 4);  // k beyond pool keeps all
  CHECK(rank_and_select(pool, 1).size() == 1);
  CHECK(rank_and_select(pool, 1)[0].model_id == 1);

  CHECK_THROWS_AS(rank_and_select({}, 5), DataError);
  CHECK_THROWS_AS(rank_and_select(pool, 0), DataError);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "detkit/box.hpp"
#include "detkit/rng.hpp"
#include "doctest.h"

using namespace detkit;

TEST_CASE("iou of the worked 1/7 pair") {
  const Box a{0.0, 0.0, 0.2, 0.2};
  const Box b{0.1, 0.1, 0.3, 0.3};
  CHECK(iou(a, b) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  CHECK(iou(b, a) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("iou basic identities") {
  const Box a{0.2, 0.2, 0.6, 0.6};
  CHECK(iou(a, a) == doctest::Approx(1.0));
  CHECK(iou(a, Box{0.7, 0.7, 0.9, 0.9}) == 0.0);
  // touching edges intersect with zero area
  CHECK(iou(a, Box{0.6, 0.2, 0.9, 0.6}) == 0.0);
  // degenerate boxes have empty union
  CHECK(iou(Box{0.5, 0.5, 0.5, 0.5}, Box{0.5, 0.5, 0.5, 0.5}) == 0.0);
}

TEST_CASE("iou bounds and symmetry on random boxes") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Box a = clip(Box{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()});
    const Box b = clip(Box{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()});
    const double v = iou(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0 + 1e-15);
    CHECK(v == iou(b, a));
  }
}

TEST_CASE("clip clamps and reorders") {
  const Box c = clip(Box{1.2, 0.5, 1.4, 0.6});
  CHECK(c.x1 == 1.0);
  CHECK(c.y1 == 0.5);
  CHECK(c.x2 == 1.0);
  CHECK(c.y2 == 0.6);

  const Box swapped = clip(Box{0.8, 0.9, 0.2, 0.1});
  CHECK(swapped.x1 == 0.2);
  CHECK(swapped.y1 == 0.1);
  CHECK(swapped.x2 == 0.8);
  CHECK(swapped.y2 == 0.9);

  const Box inside = clip(Box{0.1, 0.2, 0.3, 0.4});
  CHECK(inside.x1 == 0.1);
  CHECK(inside.x2 == 0.3);
}

TEST_CASE("size classes at the COCO pixel-area boundaries") {
  // full-image boxes on images sized right at the bucket edges
  const Box full{0.0, 0.0, 1.0, 1.0};
  CHECK(size_class(full, 31, 31) == SizeClass::Small);
  CHECK(size_class(full, 32, 32) == SizeClass::Medium);  // 1024 is not < 1024
  CHECK(size_class(full, 64, 64) == SizeClass::Medium);
  CHECK(size_class(full, 96, 96) == SizeClass::Large);
  CHECK(size_class(full, 100, 100) == SizeClass::Large);

  // fractional box: area scales with image dims
  const Box half{0.0, 0.0, 0.5, 0.5};
  CHECK(size_class(half, 62, 62) == SizeClass::Small);  // 31x31 pixels
  CHECK(size_class(half, 128, 128) == SizeClass::Medium);
  CHECK(size_class(half, 200, 200) == SizeClass::Large);
}

TEST_CASE("size class names") {
  CHECK(std::string(size_class_name(SizeClass::Small)) == "small");
  CHECK(std::string(size_class_name(SizeClass::Medium)) == "medium");
  CHECK(std::string(size_class_name(SizeClass::Large)) == "large");
}

TEST_CASE("box accessors") {
  const Box b{0.1, 0.2, 0.5, 0.8};
  CHECK(b.width() == doctest::Approx(0.4));
  CHECK(b.height() == doctest::Approx(0.6));
  CHECK(b.area() == doctest::Approx(0.24));
}

TEST_CASE("rng determinism and ranges") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const uint64_t va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_diff = any_diff || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff);

  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const int k = r.uniform_int(3, 7);
    CHECK(k >= 3);
    CHECK(k <= 7);
  }
}

TEST_CASE("uniform_int covers every value") {
  Rng r(5);
  std::array<int, 4> hits{};
  for (int i = 0; i < 4000; ++i) hits[r.uniform_int(0, 3)]++;
  for (int h : hits) CHECK(h > 800);  // expectation 1000
}

TEST_CASE("normal and gamma moments are roughly right") {
  Rng r(11);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    sum += v;
    sq += v * v;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.05);

  double gsum = 0.0;
  for (int i = 0; i < n; ++i) gsum += r.gamma(3.0);
  CHECK(gsum / n == doctest::Approx(3.0).epsilon(0.03));

  double g_small = 0.0;
  for (int i = 0; i < n; ++i) g_small += r.gamma(0.4);
  CHECK(g_small / n == doctest::Approx(0.4).epsilon(0.05));
}

TEST_CASE("beta concentrates near its mean") {
  Rng r(13);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = r.beta(32.0, 32.0);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    sum += v;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("sample_without_replacement is a valid k-subset") {
  Rng r(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + r.uniform_int(0, 19);
    const int k = r.uniform_int(0, n);
    const std::vector<int> s = r.sample_without_replacement(n, k);
    CHECK(s.size() == static_cast<size_t>(k));
    std::vector<bool> seen(n, false);
    for (int v : s) {
      CHECK(v >= 0);
      CHECK(v < n);
      CHECK(!seen[v]);
      seen[v] = true;
    }
  }
}

TEST_CASE("sample_without_replacement is uniform over elements") {
  Rng r(19);
  std::array<int, 10> hits{};
  const int trials = 10000;
  for (int i = 0; i < trials; ++i)
    for (int v : r.sample_without_replacement(10, 3)) hits[v]++;
  for (int h : hits) {
    CHECK(h > 2700);  // expectation 3000
    CHECK(h < 3300);
  }
}

TEST_CASE("mix_seed decorrelates items") {
  CHECK(mix_seed(42, 0) != mix_seed(42, 1));
  CHECK(mix_seed(42, 0) != mix_seed(43, 0));
  CHECK(mix_seed(42, 7) == mix_seed(42, 7));
}

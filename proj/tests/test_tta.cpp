#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "detkit/rng.hpp"
#include "detkit/tta.hpp"
#include "doctest.h"

using namespace detkit;

namespace {

Box random_box(Rng& rng) {
  const double x1 = rng.uniform(0.0, 0.9);
  const double y1 = rng.uniform(0.0, 0.9);
  return Box{x1, y1, x1 + rng.uniform(0.01, 1.0 - x1), y1 + rng.uniform(0.01, 1.0 - y1)};
}

bool approx_box(const Box& a, const Box& b, double tol = 1e-6) {
  return std::abs(a.x1 - b.x1) <= tol && std::abs(a.y1 - b.y1) <= tol &&
         std::abs(a.x2 - b.x2) <= tol && std::abs(a.y2 - b.y2) <= tol;
}

/// Bounding box of all pixels that differ from a background color.
Box detect_foreground(const Image& img, uint8_t bg) {
  int min_x = img.width, min_y = img.height, max_x = -1, max_y = -1;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const uint8_t* p = img.px(x, y);
      if (p[0] != bg || p[1] != bg || p[2] != bg) {
        min_x = std::min(min_x, x);
        min_y = std::min(min_y, y);
        max_x = std::max(max_x, x);
        max_y = std::max(max_y, y);
      }
    }
  if (max_x < 0) return Box{0, 0, 0, 0};
  return Box{double(min_x) / img.width, double(min_y) / img.height, double(max_x + 1) / img.width,
             double(max_y + 1) / img.height};
}

}  // namespace

TEST_CASE("view parsing round trips") {
  CHECK(parse_view("identity").kind == ViewKind::identity);
  CHECK(parse_view("hflip").kind == ViewKind::hflip);

  const ViewTransform lb = parse_view("letterbox:1.25");
  CHECK(lb.kind == ViewKind::letterbox);
  CHECK(lb.scale == doctest::Approx(1.25));
  CHECK(lb.target_w == 0);

  const ViewTransform sz = parse_view("letterbox:640x480");
  CHECK(sz.target_w == 640);
  CHECK(sz.target_h == 480);

  CHECK(view_name(parse_view("identity")) == "identity");
  CHECK(view_name(parse_view("hflip")) == "hflip");
  CHECK(view_name(parse_view("letterbox:1.25")) == "letterbox:1.25");
  CHECK(view_name(parse_view("letterbox:640x480")) == "letterbox:640x480");

  CHECK_THROWS_AS(parse_view("vflip"), std::exception);
  CHECK_THROWS_AS(parse_view("letterbox:"), std::exception);
  CHECK_THROWS_AS(parse_view("letterbox:0"), std::exception);
}

TEST_CASE("default view set") {
  const auto views = default_views();
  REQUIRE(views.size() == 4);
  CHECK(views[0].kind == ViewKind::identity);
  CHECK(views[1].kind == ViewKind::hflip);
  CHECK(views[2].scale == doctest::Approx(1.25));
  CHECK(views[3].scale == doctest::Approx(0.75));
}

TEST_CASE("every registered view inverts its forward map within 1e-6") {
  Rng rng(21);
  std::vector<ViewTransform> views = default_views();
  views.push_back(ViewTransform::letterbox_size(320, 200));
  for (const auto& view : views) {
    const ViewRecord rec = make_record(view, 97, 153);
    for (int i = 0; i < 1000; ++i) {
      const Box b = random_box(rng);
      CHECK(approx_box(rec.inverse(rec.forward(b)), b, 1e-6));
    }
  }
}

TEST_CASE("hflip view maps the worked detection back") {
  const ViewRecord rec = make_record(ViewTransform::hflip(), 100, 100);
  std::vector<std::vector<Detection>> per_view = {
      {Detection{Box{0.6, 0.2, 0.9, 0.5}, 3, 0.8, 0}}};
  const auto merged = invert_detections(per_view, {rec});
  REQUIRE(merged.size() == 1);
  CHECK(approx_box(merged[0].box, Box{0.1, 0.2, 0.4, 0.5}, 1e-12));
  CHECK(merged[0].label == 3);
  CHECK(merged[0].score == 0.8);
}

TEST_CASE("apply_views produces one image per view with records") {
  Image img = Image::filled(10, 8, 50, 60, 70);
  img.set_px(2, 3, 255, 0, 0);

  const auto single = apply_views(img, {ViewTransform::identity()});
  REQUIRE(single.size() == 1);
  CHECK(single[0].image.rgb == img.rgb);
  CHECK(single[0].record.view_w == 10);

  const auto pair = apply_views(img, {ViewTransform::identity(), ViewTransform::hflip()});
  REQUIRE(pair.size() == 2);
  CHECK(pair[1].image.px(10 - 1 - 2, 3)[0] == 255);
  CHECK(pair[1].image.px(2, 3)[0] != 255);

  // letterbox view dims follow the scale
  const auto scaled = apply_views(img, {ViewTransform::identity(),
                                        ViewTransform::letterbox_scale(1.25)});
  CHECK(scaled[1].record.view_w == 13);  // lround(12.5) rounds away from zero
  CHECK(scaled[1].record.view_h == 10);

  // first view must be identity
  CHECK_THROWS_AS(apply_views(img, {ViewTransform::hflip()}), std::exception);
  CHECK_THROWS_AS(apply_views(img, std::vector<ViewTransform>{}), std::exception);
}

TEST_CASE("invert_detections validates counts and concatenates") {
  const ViewRecord ident = make_record(ViewTransform::identity(), 50, 50);
  const ViewRecord flip = make_record(ViewTransform::hflip(), 50, 50);

  std::vector<std::vector<Detection>> per_view = {
      {Detection{Box{0.1, 0.1, 0.2, 0.2}, 1, 0.9, 0}, Detection{Box{0.3, 0.3, 0.4, 0.4}, 2, 0.8, 0}},
      {Detection{Box{0.5, 0.5, 0.6, 0.6}, 1, 0.7, 0}},
  };
  const auto merged = invert_detections(per_view, {ident, flip});
  CHECK(merged.size() == 3);
  CHECK(merged[0].score == 0.9);
  CHECK(merged[2].label == 1);

  CHECK_THROWS_AS(invert_detections(per_view, {ident}), std::exception);
}

TEST_CASE("identity view leaves detections untouched") {
  Rng rng(22);
  const ViewRecord rec = make_record(ViewTransform::identity(), 64, 64);
  for (int i = 0; i < 100; ++i) {
    const Box b = random_box(rng);
    std::vector<std::vector<Detection>> per_view = {{Detection{b, 1, 0.5, 0}}};
    const auto merged = invert_detections(per_view, {rec});
    CHECK(approx_box(merged[0].box, b, 0.0));
  }
}

TEST_CASE("pixel detector agrees across identity and hflip views") {
  // plant a rectangle, detect by scanning pixels on both views, invert:
  // hflip is pixel-exact so the two answers must agree to machine precision
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const int W = 40 + 2 * rng.uniform_int(0, 10);
    const int H = 30 + 2 * rng.uniform_int(0, 10);
    Image img = Image::filled(W, H, 20, 20, 20);
    const int x0 = rng.uniform_int(2, W / 2);
    const int y0 = rng.uniform_int(2, H / 2);
    const int bw = rng.uniform_int(3, W / 3);
    const int bh = rng.uniform_int(3, H / 3);
    for (int y = y0; y < y0 + bh; ++y)
      for (int x = x0; x < x0 + bw; ++x) img.set_px(x, y, 200, 40, 40);

    const auto views = apply_views(img, {ViewTransform::identity(), ViewTransform::hflip()});
    std::vector<std::vector<Detection>> per_view;
    for (const auto& v : views)
      per_view.push_back({Detection{detect_foreground(v.image, 20), 1, 0.9, 0}});

    std::vector<ViewRecord> records;
    for (const auto& v : views) records.push_back(v.record);
    const auto merged = invert_detections(per_view, records);
    REQUIRE(merged.size() == 2);
    CHECK(approx_box(merged[0].box, merged[1].box, 1e-6));
  }
}

TEST_CASE("geometric mock detector agrees across all default views") {
  // the mock forward-maps a known ground box through each view's geometry,
  // exactly what an ideal detector would output on the transformed image
  Rng rng(24);
  for (int trial = 0; trial < 50; ++trial) {
    const int W = rng.uniform_int(40, 200);
    const int H = rng.uniform_int(40, 200);
    const Box truth = random_box(rng);

    const auto views = default_views();
    std::vector<std::vector<Detection>> per_view;
    std::vector<ViewRecord> records;
    for (const auto& view : views) {
      const ViewRecord rec = make_record(view, W, H);
      records.push_back(rec);
      per_view.push_back({Detection{rec.forward(truth), 2, 0.6, 0}});
    }
    const auto merged = invert_detections(per_view, records);
    REQUIRE(merged.size() == views.size());
    for (const auto& det : merged) {
      CHECK(approx_box(det.box, truth, 1e-6));
      CHECK(det.label == 2);
      CHECK(det.score == 0.6);
    }
  }
}

TEST_CASE("letterbox view record reproduces the augment placement") {
  const ViewRecord rec = make_record(ViewTransform::letterbox_size(200, 200), 100, 200);
  const LetterboxPlacement place = letterbox_placement(100, 200, 200, 200);
  CHECK(rec.placement.scale == place.scale);
  CHECK(rec.placement.pad_x == place.pad_x);
  CHECK(rec.placement.pad_y == place.pad_y);
  const Box b{0.0, 0.0, 0.5, 0.5};
  CHECK(approx_box(rec.forward(b), place.forward(b), 0.0));
}

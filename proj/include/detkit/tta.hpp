#pragma once

#include <string>
#include <vector>

#include "detkit/augment.hpp"
#include "detkit/box.hpp"
#include "detkit/image.hpp"

namespace detkit {

enum class ViewKind { identity, hflip, letterbox };

/// A test-time view of an image. Letterbox targets are either explicit or a
/// scale factor of the native size, resolved per image.
struct ViewTransform {
  ViewKind kind = ViewKind::identity;
  double scale = 0.0;  // letterbox, target = round(scale * native) when target_w == 0
  int target_w = 0;
  int target_h = 0;

  static ViewTransform identity() { return {}; }
  static ViewTransform hflip() { return {ViewKind::hflip}; }
  static ViewTransform letterbox_scale(double s) { return {ViewKind::letterbox, s}; }
  static ViewTransform letterbox_size(int w, int h) { return {ViewKind::letterbox, 0.0, w, h}; }
};

/// identity, hflip, letterbox at 1.25x and 0.75x of native size.
std::vector<ViewTransform> default_views();

/// "identity" | "hflip" | "letterbox:1.25" | "letterbox:640x480"
ViewTransform parse_view(const std::string& text);
std::string view_name(const ViewTransform& v);

/// A view bound to one image's dimensions; holds the exact inverse box map.
struct ViewRecord {
  ViewKind kind = ViewKind::identity;
  int src_w = 0, src_h = 0;
  int view_w = 0, view_h = 0;
  LetterboxPlacement placement;  // kind == letterbox only

  Box forward(const Box& b) const;
  Box inverse(const Box& b) const;
};

ViewRecord make_record(const ViewTransform& view, int src_w, int src_h);

struct ViewImage {
  Image image;
  ViewRecord record;
};

/// One transformed image per view. The first view must be identity.
std::vector<ViewImage> apply_views(const Image& img, const std::vector<ViewTransform>& views);

/// Map every view's detections back to original coordinates, concatenate,
/// and clip. Scores and labels pass through untouched.
std::vector<Detection> invert_detections(const std::vector<std::vector<Detection>>& per_view,
                                         const std::vector<ViewRecord>& records);

}  // namespace detkit

#include "detkit/box.hpp"

#include <algorithm>

namespace detkit {

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) {
    // No overlap; still 0 when the union itself is empty.
    return 0.0;
  }
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Box clip(const Box& b) {
  auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
  Box r{clamp01(b.x1), clamp01(b.y1), clamp01(b.x2), clamp01(b.y2)};
  if (r.x1 > r.x2) std::swap(r.x1, r.x2);
  if (r.y1 > r.y2) std::swap(r.y1, r.y2);
  return r;
}

SizeClass size_class(const Box& b, int img_w, int img_h) {
  const double px_area = b.area() * img_w * img_h;
  if (px_area < 32.0 * 32.0) return SizeClass::Small;
  if (px_area < 96.0 * 96.0) return SizeClass::Medium;
  return SizeClass::Large;
}

const char* size_class_name(SizeClass s) {
  switch (s) {
    case SizeClass::Small: return "small";
    case SizeClass::Medium: return "medium";
    case SizeClass::Large: return "large";
  }
  return "unknown";
}

}  // namespace detkit

#include "detkit/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace detkit {

namespace {

uint8_t to_byte(double v) {
  const long r = std::lround(v);
  return static_cast<uint8_t>(std::clamp(r, 0L, 255L));
}

}  // namespace

void rgb_to_hsv(uint8_t r8, uint8_t g8, uint8_t b8, double* h, double* s, double* v) {
  const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  *v = mx;
  *s = mx > 0.0 ? d / mx : 0.0;
  if (d <= 0.0) {
    *h = 0.0;
    return;
  }
  double hh;
  if (mx == r)
    hh = (g - b) / d;
  else if (mx == g)
    hh = 2.0 + (b - r) / d;
  else
    hh = 4.0 + (r - g) / d;
  hh *= 60.0;
  if (hh < 0.0) hh += 360.0;
  *h = hh;
}

void hsv_to_rgb(double h, double s, double v, uint8_t* r, uint8_t* g, uint8_t* b) {
  if (s <= 0.0) {
    *r = *g = *b = to_byte(v * 255.0);
    return;
  }
  if (h >= 360.0) h -= 360.0;
  const double hh = h / 60.0;
  const int i = std::min(5, static_cast<int>(hh));
  const double f = hh - i;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  double rr, gg, bb;
  switch (i) {
    case 0: rr = v; gg = t; bb = p; break;
    case 1: rr = q; gg = v; bb = p; break;
    case 2: rr = p; gg = v; bb = t; break;
    case 3: rr = p; gg = q; bb = v; break;
    case 4: rr = t; gg = p; bb = v; break;
    default: rr = v; gg = p; bb = q; break;
  }
  *r = to_byte(rr * 255.0);
  *g = to_byte(gg * 255.0);
  *b = to_byte(bb * 255.0);
}

AugSample color_jitter(const AugSample& s, double gain_h, double gain_s, double gain_v) {
  AugSample out = s;
  for (size_t i = 0; i < out.image.rgb.size(); i += 3) {
    double h, sat, val;
    rgb_to_hsv(out.image.rgb[i], out.image.rgb[i + 1], out.image.rgb[i + 2], &h, &sat, &val);
    h = std::clamp(h * (1.0 + gain_h), 0.0, 360.0);
    sat = std::clamp(sat * (1.0 + gain_s), 0.0, 1.0);
    val = std::clamp(val * (1.0 + gain_v), 0.0, 1.0);
    hsv_to_rgb(h, sat, val, &out.image.rgb[i], &out.image.rgb[i + 1], &out.image.rgb[i + 2]);
  }
  return out;
}

AugSample hflip(const AugSample& s) {
  AugSample out;
  out.image.width = s.image.width;
  out.image.height = s.image.height;
  out.image.rgb.resize(s.image.rgb.size());
  for (int y = 0; y < s.image.height; ++y) {
    for (int x = 0; x < s.image.width; ++x) {
      const uint8_t* p = s.image.px(s.image.width - 1 - x, y);
      out.image.set_px(x, y, p[0], p[1], p[2]);
    }
  }
  out.boxes.reserve(s.boxes.size());
  for (const auto& gb : s.boxes)
    out.boxes.push_back(GtBox{Box{1.0 - gb.box.x2, gb.box.y1, 1.0 - gb.box.x1, gb.box.y2},
                              gb.label});
  return out;
}

LetterboxPlacement letterbox_placement(int src_w, int src_h, int target_w, int target_h) {
  if (src_w <= 0 || src_h <= 0 || target_w <= 0 || target_h <= 0)
    throw std::invalid_argument("letterbox: dimensions must be positive");
  LetterboxPlacement p;
  p.src_w = src_w;
  p.src_h = src_h;
  p.target_w = target_w;
  p.target_h = target_h;
  p.scale = std::min(static_cast<double>(target_w) / src_w, static_cast<double>(target_h) / src_h);
  const int content_w = std::clamp(static_cast<int>(std::lround(src_w * p.scale)), 1, target_w);
  const int content_h = std::clamp(static_cast<int>(std::lround(src_h * p.scale)), 1, target_h);
  p.pad_x = (target_w - content_w) / 2;  // integer left pad, remainder on the right
  p.pad_y = (target_h - content_h) / 2;
  return p;
}

Box LetterboxPlacement::forward(const Box& b) const {
  return Box{(pad_x + b.x1 * src_w * scale) / target_w, (pad_y + b.y1 * src_h * scale) / target_h,
             (pad_x + b.x2 * src_w * scale) / target_w, (pad_y + b.y2 * src_h * scale) / target_h};
}

Box LetterboxPlacement::inverse(const Box& b) const {
  return Box{(b.x1 * target_w - pad_x) / (src_w * scale), (b.y1 * target_h - pad_y) / (src_h * scale),
             (b.x2 * target_w - pad_x) / (src_w * scale), (b.y2 * target_h - pad_y) / (src_h * scale)};
}

Image resize_nearest(const Image& src, int dst_w, int dst_h) {
  Image dst;
  dst.width = dst_w;
  dst.height = dst_h;
  dst.rgb.resize(static_cast<size_t>(3) * dst_w * dst_h);
  for (int y = 0; y < dst_h; ++y) {
    const int sy = std::min(src.height - 1,
                            static_cast<int>((y + 0.5) * src.height / dst_h));
    for (int x = 0; x < dst_w; ++x) {
      const int sx = std::min(src.width - 1,
                              static_cast<int>((x + 0.5) * src.width / dst_w));
      const uint8_t* p = src.px(sx, sy);
      dst.set_px(x, y, p[0], p[1], p[2]);
    }
  }
  return dst;
}

AugSample letterbox(const AugSample& s, int target_w, int target_h, uint8_t pad_value,
                    LetterboxPlacement* placement) {
  const LetterboxPlacement p = letterbox_placement(s.image.width, s.image.height, target_w, target_h);
  const int content_w = std::clamp(static_cast<int>(std::lround(s.image.width * p.scale)), 1, target_w);
  const int content_h = std::clamp(static_cast<int>(std::lround(s.image.height * p.scale)), 1, target_h);
  const int px = static_cast<int>(p.pad_x);
  const int py = static_cast<int>(p.pad_y);

  AugSample out;
  out.image = Image::filled(target_w, target_h, pad_value, pad_value, pad_value);
  const Image content = resize_nearest(s.image, content_w, content_h);
  for (int y = 0; y < content_h; ++y)
    std::copy_n(content.px(0, y), static_cast<size_t>(3) * content_w, out.image.px(px, py + y));

  out.boxes.reserve(s.boxes.size());
  for (const auto& gb : s.boxes) out.boxes.push_back(GtBox{p.forward(gb.box), gb.label});
  if (placement) *placement = p;
  return out;
}

std::vector<GtBox> filter_min_area(std::vector<GtBox> boxes, double min_area) {
  std::erase_if(boxes, [min_area](const GtBox& gb) { return gb.box.area() < min_area; });
  return boxes;
}

AugSample mosaic(std::span<const AugSample> sources, double cx, double cy, int out_size,
                 double min_area) {
  if (sources.size() != 4) throw std::invalid_argument("mosaic: exactly 4 sources required");
  if (out_size <= 0) throw std::invalid_argument("mosaic: out_size must be positive");
  if (cx < 0.0 || cx > 1.0 || cy < 0.0 || cy > 1.0)
    throw std::invalid_argument("mosaic: center must lie in [0,1]^2");

  const int S = out_size;
  const int Cx = std::clamp(static_cast<int>(std::lround(cx * S)), 0, S);
  const int Cy = std::clamp(static_cast<int>(std::lround(cy * S)), 0, S);
  const double ncx = static_cast<double>(Cx) / S;  // pixel-snapped center
  const double ncy = static_cast<double>(Cy) / S;

  AugSample out;
  out.image = Image::filled(S, S, 0, 0, 0);

  // Per quadrant: canvas rect [qx0,qx1) x [qy0,qy1), pixel offset into the
  // scaled source, and the normalized box translation.
  struct Quadrant {
    int qx0, qy0, qx1, qy1;
    int src_off_x, src_off_y;
    double box_dx, box_dy;
  };
  const Quadrant quads[4] = {
      {0, 0, Cx, Cy, S - Cx, S - Cy, ncx - 1.0, ncy - 1.0},  // TL: bottom-right region
      {Cx, 0, S, Cy, -Cx, S - Cy, ncx, ncy - 1.0},           // TR: bottom-left region
      {0, Cy, Cx, S, S - Cx, -Cy, ncx - 1.0, ncy},           // BL: top-right region
      {Cx, Cy, S, S, -Cx, -Cy, ncx, ncy},                    // BR: top-left region
  };

  for (int i = 0; i < 4; ++i) {
    const Quadrant& q = quads[i];
    if (q.qx1 <= q.qx0 || q.qy1 <= q.qy0) continue;
    const Image scaled = resize_nearest(sources[i].image, S, S);
    for (int y = q.qy0; y < q.qy1; ++y) {
      const uint8_t* src_row = scaled.px(q.qx0 + q.src_off_x, y + q.src_off_y);
      std::copy_n(src_row, static_cast<size_t>(3) * (q.qx1 - q.qx0), out.image.px(q.qx0, y));
    }
    const Box quad_box{static_cast<double>(q.qx0) / S, static_cast<double>(q.qy0) / S,
                       static_cast<double>(q.qx1) / S, static_cast<double>(q.qy1) / S};
    for (const auto& gb : sources[i].boxes) {
      Box b{gb.box.x1 + q.box_dx, gb.box.y1 + q.box_dy, gb.box.x2 + q.box_dx, gb.box.y2 + q.box_dy};
      b.x1 = std::clamp(b.x1, quad_box.x1, quad_box.x2);
      b.x2 = std::clamp(b.x2, quad_box.x1, quad_box.x2);
      b.y1 = std::clamp(b.y1, quad_box.y1, quad_box.y2);
      b.y2 = std::clamp(b.y2, quad_box.y1, quad_box.y2);
      if (b.area() >= min_area) out.boxes.push_back(GtBox{b, gb.label});
    }
  }
  return out;
}

AugSample mixup(const AugSample& a, const AugSample& b, double lambda) {
  if (a.image.width != b.image.width || a.image.height != b.image.height)
    throw std::invalid_argument("mixup: image dimensions must match");
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("mixup: lambda must be in [0,1]");
  AugSample out;
  out.image.width = a.image.width;
  out.image.height = a.image.height;
  out.image.rgb.resize(a.image.rgb.size());
  for (size_t i = 0; i < a.image.rgb.size(); ++i)
    out.image.rgb[i] = to_byte(lambda * a.image.rgb[i] + (1.0 - lambda) * b.image.rgb[i]);
  out.boxes = a.boxes;
  out.boxes.insert(out.boxes.end(), b.boxes.begin(), b.boxes.end());
  return out;
}

}  // namespace detkit

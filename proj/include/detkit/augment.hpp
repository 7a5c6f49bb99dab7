#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "detkit/box.hpp"
#include "detkit/data_io.hpp"
#include "detkit/image.hpp"

namespace detkit {

/// Boxes whose normalized area falls below this after clipping are dropped.
inline constexpr double kMinBoxArea = 1e-6;

/// One training sample flowing through the augmentation chain.
struct AugSample {
  Image image;
  std::vector<GtBox> boxes;
};

/// Aspect-preserving resize placement: scale r plus left/top padding in
/// target pixels. Box maps are exact closed forms in both directions.
struct LetterboxPlacement {
  int src_w = 0, src_h = 0;
  int target_w = 0, target_h = 0;
  double scale = 1.0;
  double pad_x = 0.0, pad_y = 0.0;

  Box forward(const Box& b) const;
  Box inverse(const Box& b) const;
};

LetterboxPlacement letterbox_placement(int src_w, int src_h, int target_w, int target_h);

/// HSV gains are fractional perturbations in [-1,1]; each channel is
/// multiplied by (1+gain) and clamped to its valid range. Boxes untouched.
AugSample color_jitter(const AugSample& s, double gain_h, double gain_s, double gain_v);

/// Mirror columns; boxes map to [1-x2, y1, 1-x1, y2].
AugSample hflip(const AugSample& s);

AugSample letterbox(const AugSample& s, int target_w, int target_h, uint8_t pad_value,
                    LetterboxPlacement* placement = nullptr);

/// Compose four sources around a normalized center point on a square canvas.
/// Source i is scaled to out_size then cropped so its corner abuts the
/// center: TL keeps its bottom-right region, TR its bottom-left, BL its
/// top-right, BR its top-left. Boxes are translated, clipped to their
/// quadrant, and min-area filtered.
AugSample mosaic(std::span<const AugSample> sources, double cx, double cy, int out_size,
                 double min_area = kMinBoxArea);

/// pixel = round(lambda * a + (1 - lambda) * b); boxes concatenated.
AugSample mixup(const AugSample& a, const AugSample& b, double lambda);

/// Drop clipped/degenerate boxes below min_area.
std::vector<GtBox> filter_min_area(std::vector<GtBox> boxes, double min_area = kMinBoxArea);

/// Nearest-neighbor scale to exactly dst_w x dst_h.
Image resize_nearest(const Image& src, int dst_w, int dst_h);

// 8-bit RGB <-> HSV (h in [0,360), s and v in [0,1]).
void rgb_to_hsv(uint8_t r, uint8_t g, uint8_t b, double* h, double* s, double* v);
void hsv_to_rgb(double h, double s, double v, uint8_t* r, uint8_t* g, uint8_t* b);

}  // namespace detkit

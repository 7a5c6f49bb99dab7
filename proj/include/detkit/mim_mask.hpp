#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "detkit/box.hpp"
#include "detkit/image.hpp"
#include "detkit/rng.hpp"

namespace detkit {

inline constexpr int kDefaultMaskScales = 4;

/// Boolean position map shared by mask plans and feature maps. 1 = visible.
struct Visibility {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> map;

  static Visibility all_visible(int w, int h) { return {w, h, std::vector<uint8_t>(size_t(w) * h, 1)}; }
  bool at(int x, int y) const { return map[static_cast<size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool visible) { map[static_cast<size_t>(y) * width + x] = visible ? 1 : 0; }
};

/// Which patches of an image are hidden, plus the visibility of each finer
/// scale (scale s has grid dims times 2^s, filled by block replication).
struct MaskPlan {
  int grid_w = 0;
  int grid_h = 0;
  int patch_size = 0;
  double ratio = 0.0;
  std::vector<int> masked;               // sorted row-major patch indices
  std::vector<Visibility> scale_masks;   // scale_masks[0] is the patch grid
  int origin_x = 0, origin_y = 0;        // pixel offset of the grid (nonzero for region crops)

  bool is_masked(int gx, int gy) const;
};

/// Draw round(ratio * cells) distinct patches uniformly without replacement.
MaskPlan sample_mask(int grid_w, int grid_h, double ratio, Rng& rng, int patch_size = 32,
                     int num_scales = kDefaultMaskScales);

enum class MaskMode { whole, cut };

struct MaskRequest {
  int image_w = 0;
  int image_h = 0;
  int patch_size = 32;
  double ratio = 0.60;
  int num_scales = kDefaultMaskScales;
};

/// mode=whole masks over the full image grid; mode=cut crops the image to
/// region first and recomputes the patch grid over the crop.
MaskPlan restrict_to_region(const MaskRequest& req, const Box& region, MaskMode mode, Rng& rng);

/// Per-patch zero-mean unit-variance pixel values, the reconstruction target.
/// Patches with variance below 1e-12 are emitted as all zeros.
struct PatchTarget {
  int grid_w = 0;
  int grid_h = 0;
  int patch_size = 0;
  std::vector<double> values;  // grid_h*grid_w patches, 3*patch^2 values each

  size_t patch_elems() const { return static_cast<size_t>(3) * patch_size * patch_size; }
  size_t num_patches() const { return static_cast<size_t>(grid_w) * grid_h; }
  std::span<double> patch(size_t idx) { return {values.data() + idx * patch_elems(), patch_elems()}; }
  std::span<const double> patch(size_t idx) const {
    return {values.data() + idx * patch_elems(), patch_elems()};
  }
};

/// Image dims must be divisible by patch_size (see pad_to_multiple).
PatchTarget per_patch_normalize(const Image& img, int patch_size);

/// Mean over masked patches of the mean squared per-element difference.
/// Visible patches are excluded entirely.
double masked_l2_loss(const PatchTarget& pred, const PatchTarget& target, const MaskPlan& plan);

/// Dense real-valued map with a visibility mask. Values are laid out CHW.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;
  Visibility visibility;

  static FeatureMap zeros(int channels, int height, int width);
  double at(int c, int y, int x) const {
    return values[(static_cast<size_t>(c) * height + y) * width + x];
  }
  double& at(int c, int y, int x) {
    return values[(static_cast<size_t>(c) * height + y) * width + x];
  }
};

struct SparseEntry {
  int x = 0;
  int y = 0;
  std::vector<double> features;
};

/// Visible positions in row-major order with their channel vectors.
std::vector<SparseEntry> sparse_gather(const FeatureMap& fm);

/// Densify sparse entries; every masked position receives embed verbatim.
/// Visible positions absent from entries hold zeros.
FeatureMap scatter_with_embedding(const std::vector<SparseEntry>& entries,
                                  const Visibility& visibility,
                                  const std::vector<double>& embed);

/// Convolution weights, shape (out_channels, in_channels, size, size).
struct Kernel {
  int out_channels = 0;
  int in_channels = 0;
  int size = 0;
  std::vector<double> weights;

  double at(int oc, int ic, int ky, int kx) const {
    return weights[((static_cast<size_t>(oc) * in_channels + ic) * size + ky) * size + kx];
  }
};

/// Reference sparse 2-D convolution: only taps landing on visible input
/// positions contribute; values stored at masked positions are never read.
/// Output visibility is the input's downsampled by stride (top-left
/// representative); masked output positions are forced to 0.
FeatureMap sparse_conv2d(const FeatureMap& fm, const Kernel& kernel, int stride, int padding);

/// Extend right/bottom edges by replication so dims divide `multiple`.
Image pad_to_multiple(const Image& img, int multiple);

/// Copy of the image with masked patches painted mid-gray.
Image render_mask_viz(const Image& img, const MaskPlan& plan);

}  // namespace detkit

#include "detkit/mim_mask.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace detkit {

bool MaskPlan::is_masked(int gx, int gy) const {
  return !scale_masks.empty() && !scale_masks[0].at(gx, gy);
}

MaskPlan sample_mask(int grid_w, int grid_h, double ratio, Rng& rng, int patch_size,
                     int num_scales) {
  if (grid_w <= 0 || grid_h <= 0) throw std::invalid_argument("sample_mask: empty grid");
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("sample_mask: ratio must be in (0,1)");
  if (num_scales < 1) throw std::invalid_argument("sample_mask: need at least one scale");

  const int cells = grid_w * grid_h;
  const int count = static_cast<int>(std::floor(ratio * cells + 0.5));  // round half up

  MaskPlan plan;
  plan.grid_w = grid_w;
  plan.grid_h = grid_h;
  plan.patch_size = patch_size;
  plan.ratio = ratio;
  plan.masked = rng.sample_without_replacement(cells, count);
  std::sort(plan.masked.begin(), plan.masked.end());

  Visibility base = Visibility::all_visible(grid_w, grid_h);
  for (int idx : plan.masked) base.map[idx] = 0;
  plan.scale_masks.push_back(std::move(base));
  for (int s = 1; s < num_scales; ++s) {
    const int w = grid_w << s;
    const int h = grid_h << s;
    Visibility v{w, h, std::vector<uint8_t>(static_cast<size_t>(w) * h)};
    const Visibility& v0 = plan.scale_masks[0];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        v.set(x, y, v0.at(x >> s, y >> s));
    plan.scale_masks.push_back(std::move(v));
  }
  return plan;
}

MaskPlan restrict_to_region(const MaskRequest& req, const Box& region, MaskMode mode, Rng& rng) {
  if (req.image_w <= 0 || req.image_h <= 0 || req.patch_size <= 0)
    throw std::invalid_argument("restrict_to_region: bad image/patch dimensions");

  auto grid_cells = [&](int px) { return (px + req.patch_size - 1) / req.patch_size; };

  if (mode == MaskMode::whole) {
    return sample_mask(grid_cells(req.image_w), grid_cells(req.image_h), req.ratio, rng,
                       req.patch_size, req.num_scales);
  }

  const int rx1 = static_cast<int>(std::lround(region.x1 * req.image_w));
  const int ry1 = static_cast<int>(std::lround(region.y1 * req.image_h));
  const int rx2 = static_cast<int>(std::lround(region.x2 * req.image_w));
  const int ry2 = static_cast<int>(std::lround(region.y2 * req.image_h));
  const int crop_w = rx2 - rx1;
  const int crop_h = ry2 - ry1;
  if (crop_w < req.patch_size || crop_h < req.patch_size)
    throw std::invalid_argument("restrict_to_region: region smaller than one patch");

  MaskPlan plan = sample_mask(grid_cells(crop_w), grid_cells(crop_h), req.ratio, rng,
                              req.patch_size, req.num_scales);
  plan.origin_x = rx1;
  plan.origin_y = ry1;
  return plan;
}

PatchTarget per_patch_normalize(const Image& img, int patch_size) {
  if (!img.valid()) throw std::invalid_argument("per_patch_normalize: invalid image");
  if (patch_size <= 0 || img.width % patch_size != 0 || img.height % patch_size != 0)
    throw std::invalid_argument("per_patch_normalize: image dims must divide patch_size");

  PatchTarget t;
  t.grid_w = img.width / patch_size;
  t.grid_h = img.height / patch_size;
  t.patch_size = patch_size;
  t.values.resize(t.num_patches() * t.patch_elems());

  const size_t n = t.patch_elems();
  for (int gy = 0; gy < t.grid_h; ++gy) {
    for (int gx = 0; gx < t.grid_w; ++gx) {
      auto out = t.patch(static_cast<size_t>(gy) * t.grid_w + gx);
      size_t k = 0;
      double sum = 0.0;
      for (int y = 0; y < patch_size; ++y) {
        const uint8_t* row = img.px(gx * patch_size, gy * patch_size + y);
        for (int i = 0; i < 3 * patch_size; ++i) {
          out[k++] = row[i];
          sum += row[i];
        }
      }
      const double mean = sum / n;
      double var = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const double d = out[i] - mean;
        var += d * d;
      }
      var /= n;
      if (var < 1e-12) {
        std::fill(out.begin(), out.end(), 0.0);
      } else {
        const double inv_std = 1.0 / std::sqrt(var);
        for (size_t i = 0; i < n; ++i) out[i] = (out[i] - mean) * inv_std;
      }
    }
  }
  return t;
}

double masked_l2_loss(const PatchTarget& pred, const PatchTarget& target, const MaskPlan& plan) {
  if (pred.grid_w != target.grid_w || pred.grid_h != target.grid_h ||
      pred.patch_size != target.patch_size)
    throw std::invalid_argument("masked_l2_loss: pred/target shapes differ");
  if (pred.grid_w != plan.grid_w || pred.grid_h != plan.grid_h)
    throw std::invalid_argument("masked_l2_loss: plan grid does not match targets");
  if (plan.masked.empty()) throw std::invalid_argument("masked_l2_loss: no masked patches");

  const size_t n = pred.patch_elems();
  double total = 0.0;
  for (int idx : plan.masked) {
    auto p = pred.patch(idx);
    auto q = target.patch(idx);
    double sq = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double d = p[i] - q[i];
      sq += d * d;
    }
    total += sq / static_cast<double>(n);
  }
  return total / static_cast<double>(plan.masked.size());
}

FeatureMap FeatureMap::zeros(int channels, int height, int width) {
  FeatureMap fm;
  fm.channels = channels;
  fm.height = height;
  fm.width = width;
  fm.values.assign(static_cast<size_t>(channels) * height * width, 0.0);
  fm.visibility = Visibility::all_visible(width, height);
  return fm;
}

std::vector<SparseEntry> sparse_gather(const FeatureMap& fm) {
  std::vector<SparseEntry> entries;
  for (int y = 0; y < fm.height; ++y) {
    for (int x = 0; x < fm.width; ++x) {
      if (!fm.visibility.at(x, y)) continue;
      SparseEntry e;
      e.x = x;
      e.y = y;
      e.features.resize(fm.channels);
      for (int c = 0; c < fm.channels; ++c) e.features[c] = fm.at(c, y, x);
      entries.push_back(std::move(e));
    }
  }
  return entries;
}

FeatureMap scatter_with_embedding(const std::vector<SparseEntry>& entries,
                                  const Visibility& visibility,
                                  const std::vector<double>& embed) {
  const int channels = static_cast<int>(embed.size());
  FeatureMap fm = FeatureMap::zeros(channels, visibility.height, visibility.width);
  fm.visibility = visibility;
  for (int y = 0; y < fm.height; ++y)
    for (int x = 0; x < fm.width; ++x)
      if (!visibility.at(x, y))
        for (int c = 0; c < channels; ++c) fm.at(c, y, x) = embed[c];
  for (const auto& e : entries) {
    if (e.x < 0 || e.x >= fm.width || e.y < 0 || e.y >= fm.height)
      throw std::invalid_argument("scatter_with_embedding: entry out of bounds");
    if (!visibility.at(e.x, e.y))
      throw std::invalid_argument("scatter_with_embedding: entry at masked position");
    if (static_cast<int>(e.features.size()) != channels)
      throw std::invalid_argument("scatter_with_embedding: channel count mismatch");
    for (int c = 0; c < channels; ++c) fm.at(c, e.y, e.x) = e.features[c];
  }
  return fm;
}

FeatureMap sparse_conv2d(const FeatureMap& fm, const Kernel& kernel, int stride, int padding) {
  if (kernel.in_channels != fm.channels)
    throw std::invalid_argument("sparse_conv2d: kernel/input channel mismatch");
  if (kernel.size % 2 == 0 || kernel.size <= 0)
    throw std::invalid_argument("sparse_conv2d: kernel size must be odd");
  if (stride != 1 && stride != 2) throw std::invalid_argument("sparse_conv2d: stride must be 1 or 2");
  if (padding < 0) throw std::invalid_argument("sparse_conv2d: negative padding");
  if (kernel.weights.size() != static_cast<size_t>(kernel.out_channels) * kernel.in_channels *
                                   kernel.size * kernel.size)
    throw std::invalid_argument("sparse_conv2d: kernel weight buffer has wrong size");

  const int out_h = (fm.height + 2 * padding - kernel.size) / stride + 1;
  const int out_w = (fm.width + 2 * padding - kernel.size) / stride + 1;
  if (out_h <= 0 || out_w <= 0)
    throw std::invalid_argument("sparse_conv2d: output would be empty");

  FeatureMap out = FeatureMap::zeros(kernel.out_channels, out_h, out_w);
  for (int oy = 0; oy < out_h; ++oy)
    for (int ox = 0; ox < out_w; ++ox)
      out.visibility.set(ox, oy, fm.visibility.at(ox * stride, oy * stride));

  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      if (!out.visibility.at(ox, oy)) continue;  // stays 0
      for (int oc = 0; oc < kernel.out_channels; ++oc) {
        double acc = 0.0;
        for (int ky = 0; ky < kernel.size; ++ky) {
          const int iy = oy * stride - padding + ky;
          if (iy < 0 || iy >= fm.height) continue;
          for (int kx = 0; kx < kernel.size; ++kx) {
            const int ix = ox * stride - padding + kx;
            if (ix < 0 || ix >= fm.width) continue;
            if (!fm.visibility.at(ix, iy)) continue;
            for (int ic = 0; ic < fm.channels; ++ic)
              acc += fm.at(ic, iy, ix) * kernel.at(oc, ic, ky, kx);
          }
        }
        out.at(oc, oy, ox) = acc;
      }
    }
  }
  return out;
}

Image pad_to_multiple(const Image& img, int multiple) {
  if (!img.valid()) throw std::invalid_argument("pad_to_multiple: invalid image");
  if (multiple <= 0) throw std::invalid_argument("pad_to_multiple: multiple must be positive");
  const int w = ((img.width + multiple - 1) / multiple) * multiple;
  const int h = ((img.height + multiple - 1) / multiple) * multiple;
  if (w == img.width && h == img.height) return img;
  Image out;
  out.width = w;
  out.height = h;
  out.rgb.resize(static_cast<size_t>(3) * w * h);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(y, img.height - 1);
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(x, img.width - 1);
      const uint8_t* p = img.px(sx, sy);
      out.set_px(x, y, p[0], p[1], p[2]);
    }
  }
  return out;
}

Image render_mask_viz(const Image& img, const MaskPlan& plan) {
  Image out = img;
  const int p = plan.patch_size;
  for (int idx : plan.masked) {
    const int gx = idx % plan.grid_w;
    const int gy = idx / plan.grid_w;
    for (int y = plan.origin_y + gy * p; y < std::min(plan.origin_y + (gy + 1) * p, out.height); ++y)
      for (int x = plan.origin_x + gx * p; x < std::min(plan.origin_x + (gx + 1) * p, out.width); ++x)
        out.set_px(x, y, 128, 128, 128);
  }
  return out;
}

}  // namespace detkit

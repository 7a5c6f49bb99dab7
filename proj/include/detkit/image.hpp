#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace detkit {

/// 8-bit RGB pixel buffer, row-major, 3 bytes per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;

  static Image filled(int w, int h, uint8_t r, uint8_t g, uint8_t b);

  bool empty() const { return rgb.empty(); }
  bool valid() const {
    return width > 0 && height > 0 && rgb.size() == static_cast<size_t>(3) * width * height;
  }

  uint8_t* px(int x, int y) { return rgb.data() + 3 * (static_cast<size_t>(y) * width + x); }
  const uint8_t* px(int x, int y) const {
    return rgb.data() + 3 * (static_cast<size_t>(y) * width + x);
  }

  void set_px(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
    uint8_t* p = px(x, y);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
};

}  // namespace detkit

#pragma once

#include <string>

#include "detkit/image.hpp"

namespace detkit {

/// Decode a PNG or JPEG file (sniffed by magic bytes) into 8-bit RGB.
/// Throws DataError on unreadable or unsupported files.
Image read_image(const std::string& path);

/// Encode as PNG with fixed compression settings so output bytes are stable.
void write_png(const Image& img, const std::string& path);

}  // namespace detkit

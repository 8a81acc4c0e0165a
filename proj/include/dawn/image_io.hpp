#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dawn {

/// Planar image, channel-major ([C,H,W]) with values in [0,1].
struct Image {
  int64_t channels = 0;
  int64_t height = 0;
  int64_t width = 0;
  std::vector<float> pixels;

  float at(int64_t c, int64_t y, int64_t x) const {
    return pixels[static_cast<size_t>((c * height + y) * width + x)];
  }
};

/// Binary PGM (P5), 8-bit.
Image read_pgm(const std::string& path);
void write_pgm(const std::string& path, const std::vector<float>& gray, int64_t width,
               int64_t height);

/// 8-bit non-interlaced PNG: grayscale, gray+alpha, RGB, RGBA. Alpha is
/// dropped. Other PNG flavors are rejected with a diagnostic.
Image read_png(const std::string& path);

/// Dispatch on file extension (.pgm / .png).
Image read_image(const std::string& path);

/// Bilinear resize of the short side to `size`, then a centered crop to
/// size x size.
Image center_resize(const Image& image, int64_t size);

}  // namespace dawn

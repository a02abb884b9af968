#pragma once

#include <string>
#include <vector>

namespace ndbench {

/// Single-channel raster, row-major, intensity range [0, 255] as floats.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  float at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  void validate() const;
};

/// Loads PNG, JPEG or PGM (P5/P2) by sniffing magic bytes; color images are
/// reduced to BT.601 luma (0.299 R + 0.587 G + 0.114 B).
GrayImage load_image_gray(const std::string& path);

/// Bilinear resampling with the pixel-center convention.
GrayImage resize_bilinear(const GrayImage& src, int out_width, int out_height);

/// 8-bit binary PGM (P5); values are clamped to [0, 255] and rounded.
void write_pgm(const std::string& path, const GrayImage& img);

}  // namespace ndbench

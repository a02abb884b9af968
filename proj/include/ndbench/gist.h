#pragma once

#include <vector>

#include "ndbench/descriptors.h"
#include "ndbench/image_io.h"

namespace ndbench {

struct GistConfig {
  int image_side = 512;
  int scales = 4;
  int orientations_per_scale = 8;
  int blocks = 4;  // N, pooling grid is N x N

  /// Block statistic over the response magnitudes: mean of |r| or mean of |r|^2.
  enum class Pooling { mean_magnitude, mean_energy };
  Pooling pooling = Pooling::mean_magnitude;

  int filter_count() const { return scales * orientations_per_scale; }
  int descriptor_length() const { return blocks * blocks * filter_count(); }
  /// image_side >= blocks >= 1, image_side divisible by blocks, scales and
  /// orientations >= 1. Throws input_error otherwise.
  void validate() const;
};

/// Global scene descriptor: the image is filtered in the frequency domain by
/// a bank of scales x orientations Gabor transfer functions, each response
/// magnitude is mean-pooled over an N x N block grid, and the pooled values
/// are concatenated filter-major (then block row-major). Output length
/// blocks^2 * scales * orientations. Requires a square grayscale raster of
/// exactly cfg.image_side pixels per side.
Descriptor gist_extract(const GrayImage& image, const GistConfig& cfg);

/// Transfer functions of the filter bank on an side x side frequency grid,
/// row-major, DC bin at [0, 0] (negative frequencies in the upper halves).
/// Every filter is zero at DC. Order: scale-major, orientation-minor.
std::vector<std::vector<double>> gist_filter_bank(int side, int scales,
                                                  int orientations);

/// Per-filter response magnitude planes (side x side, row-major), the exact
/// intermediate gist_extract pools. Inverse transform carries the 1/side^2
/// normalization.
std::vector<std::vector<double>> gist_response_planes(const GrayImage& image,
                                                      const GistConfig& cfg);

}  // namespace ndbench

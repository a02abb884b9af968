#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ndbench/descriptors.h"

namespace ndbench {

/// One search hit. row is the position inside the index, id the image id.
struct Neighbor {
  std::size_t row = 0;
  double distance = 0.0;  // Euclidean
  std::string id;
};

struct SearchOptions {
  int threads = 0;               // 0 = hardware concurrency
  std::size_t query_block = 256; // queries per work unit in batch calls
};

/// Euclidean distance computed as the float sum of squared coordinate
/// differences, widened to double for the square root. The shared code path
/// for every distance in the system: bitwise symmetric, zero for identical
/// rows, independent of chunking.
double pair_distance(std::span<const float> a, std::span<const float> b);

/// Exact L2 search over a contiguous descriptor matrix. Immutable after
/// build; concurrent queries are safe. Ties on distance break by ascending
/// row position, so results are deterministic for any thread count.
class FlatIndex {
 public:
  static constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

  FlatIndex() = default;

  /// Takes ownership of the matrix. Throws input_error on an empty or
  /// inconsistent matrix.
  static FlatIndex build(DescriptorMatrix matrix);

  /// Reads the matrix from an NDBD file (with .ids sidecar).
  static FlatIndex load(const std::string& ndbd_path);

  std::size_t size() const { return matrix_.count; }
  std::size_t dim() const { return matrix_.dim; }
  const std::string& id(std::size_t row) const { return matrix_.ids[row]; }
  std::span<const float> row(std::size_t i) const { return matrix_.row(i); }
  const DescriptorMatrix& matrix() const { return matrix_; }

  /// The min(k, size) nearest rows, ascending distance. k >= 1.
  std::vector<Neighbor> knn(std::span<const float> query, std::size_t k) const;

  /// All rows with distance < threshold, ascending, truncated to the cap
  /// nearest. threshold > 0 (+infinity allowed).
  std::vector<Neighbor> range_query(std::span<const float> query, double threshold,
                                    std::size_t cap = kUnlimited) const;

  /// Batch forms parallelize over fixed-size query blocks; per-query results
  /// are identical to the single-query calls for every thread count.
  std::vector<std::vector<Neighbor>> knn_batch(const DescriptorMatrix& queries,
                                               std::size_t k,
                                               const SearchOptions& opts = {}) const;
  std::vector<std::vector<Neighbor>> range_batch(const DescriptorMatrix& queries,
                                                 double threshold,
                                                 std::size_t cap = kUnlimited,
                                                 const SearchOptions& opts = {}) const;

 private:
  DescriptorMatrix matrix_;
};

}  // namespace ndbench

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ndbench {

/// Fixed-length float vector describing one image. normalized means unit
/// Euclidean norm within 1e-6; the all-zero sentinel keeps it false.
struct Descriptor {
  std::vector<float> values;
  bool normalized = false;

  std::size_t size() const { return values.size(); }
};

/// Rows of equal-length descriptors with aligned ids: the storage object the
/// index, the miners and the simulator operate on.
struct DescriptorMatrix {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<float> data;        // count * dim, row-major
  std::vector<std::string> ids;   // size count, unique

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(data.data() + i * dim, dim);
  }
  /// Throws input_error on shape violation or duplicate ids.
  void validate() const;
  void append(const std::string& id, std::span<const float> values);
  /// Row lookup table; build once, then query many times.
  std::unordered_map<std::string, std::size_t> id_map() const;
};

/// Post-activation convolutional feature map, H-major W-middle C-minor.
struct FeatureMap {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
  std::vector<float> data;
  bool post_relu = false;  // true when every entry is >= 0

  float at(std::uint32_t h, std::uint32_t w, std::uint32_t c) const {
    return data[(static_cast<std::size_t>(h) * width + w) * channels + c];
  }
  std::size_t size() const {
    return static_cast<std::size_t>(height) * width * channels;
  }
  /// Throws input_error on zero dimensions, size mismatch or non-finite data.
  void validate() const;
  /// Builds and validates; sets post_relu from the data.
  static FeatureMap make(std::uint32_t h, std::uint32_t w, std::uint32_t c,
                         std::vector<float> data);
};

/// PCA whitening model with all d components retained.
struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;   // d x d, rows = principal directions
  Eigen::VectorXd eigenvalues;  // descending, nonnegative
  double epsilon = 1e-10;

  Eigen::Index dim() const { return mean.size(); }
  /// Orthonormality within 1e-5, descending nonnegative eigenvalues.
  void validate() const;
  static PcaModel identity(Eigen::Index d, double epsilon = 0.0);
};

struct RmacConfig {
  int max_scale = 2;            // L: scales run l = 1..L
  double overlap_target = 0.4;  // minimum fractional overlap of adjacent regions

  void validate() const;
};

/// Square region of a feature map: top-left corner (h0, w0), side length in cells.
struct RmacRegion {
  std::uint32_t h0 = 0;
  std::uint32_t w0 = 0;
  std::uint32_t side = 0;
};

/// The region grid at scales l = 1..cfg.max_scale. At scale l the region side
/// is floor(2 * min(H, W) / (l + 1)); regions are placed uniformly so that
/// adjacent regions overlap by at least cfg.overlap_target of their side, with
/// first and last regions flush against the map borders.
/// Throws input_error when a scale produces a region smaller than one cell.
std::vector<RmacRegion> rmac_regions(std::uint32_t height, std::uint32_t width,
                                     const RmacConfig& cfg);

/// Channelwise sum over all spatial positions. Requires a post-activation
/// map (all entries nonnegative). Output length C, not whitened, not
/// normalized. 64-bit accumulation.
Descriptor spoc_aggregate(const FeatureMap& map);

/// Channelwise max per region, each region vector whitened by pca and
/// L2-normalized, all region vectors summed, final L2 normalization.
/// Output length C, unit norm (zero-vector sentinel excepted).
Descriptor rmac_aggregate(const FeatureMap& map, const RmacConfig& cfg,
                          const PcaModel& pca);

/// Population-covariance PCA keeping all d components. Eigenvalues are
/// clamped to be nonnegative and sorted descending; component signs are
/// canonicalized (largest-magnitude coefficient positive) so training is
/// deterministic. Throws input_error on fewer than 2 samples.
PcaModel pca_train(const DescriptorMatrix& training, double epsilon = 1e-10);
PcaModel pca_train(const std::vector<Descriptor>& training, double epsilon = 1e-10);

/// out = diag(1/sqrt(eigenvalues + epsilon)) * components * (v - mean), then
/// L2-normalized when l2_normalize is set. A vector that whitens to exactly
/// zero is returned as the zero-vector sentinel (normalized = false).
Descriptor pca_whiten(const Descriptor& v, const PcaModel& pca, bool l2_normalize = true);

/// L2 normalization; the zero vector passes through with normalized = false.
Descriptor l2_normalize(Descriptor v);

/// 0.5 * max(0, margin + |q - d_plus|^2 - |q - d_minus|^2).
double triplet_loss(const Descriptor& q, const Descriptor& d_plus,
                    const Descriptor& d_minus, double margin);

// ---- file formats ----

/// Feature-map file: little-endian, magic "NDFM", u32 version = 1,
/// u32 H, u32 W, u32 C, then H*W*C float32 in H-major W-middle C-minor order.
FeatureMap read_ndfm(const std::string& path);
void write_ndfm(const std::string& path, const FeatureMap& map);

/// Descriptor matrix file: little-endian, magic "NDBD", u32 version = 1,
/// u64 count, u32 dim, u8 dtype (0 = float32), zero padding to byte 32, then
/// count*dim float32 row-major. Ids live in a "<path>.ids" sidecar with one
/// id per line, count lines.
DescriptorMatrix read_ndbd(const std::string& path);
void write_ndbd(const std::string& path, const DescriptorMatrix& m);

/// PCA model file: little-endian, magic "NDPC", u32 version = 1, u32 dim,
/// f64 epsilon, then mean (d), eigenvalues (d) and row-major components (d*d)
/// as float64.
PcaModel read_ndpc(const std::string& path);
void write_ndpc(const std::string& path, const PcaModel& model);

}  // namespace ndbench

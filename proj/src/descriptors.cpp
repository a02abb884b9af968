#include "ndbench/descriptors.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "ndbench/dataset.h"
#include "ndbench/errors.h"
#include "io_util.h"

namespace ndbench {

void DescriptorMatrix::validate() const {
  if (data.size() != count * dim)
    throw input_error("descriptor matrix storage size does not match count*dim");
  if (ids.size() != count)
    throw input_error("descriptor matrix has " + std::to_string(count) +
                      " rows but " + std::to_string(ids.size()) + " ids");
  std::set<std::string_view> seen;
  for (const std::string& id : ids) {
    if (!valid_id(id)) throw input_error("invalid descriptor id '" + id + "'");
    if (!seen.insert(id).second) throw input_error("duplicate descriptor id '" + id + "'");
  }
  for (float v : data)
    if (!std::isfinite(v)) throw input_error("descriptor matrix contains non-finite values");
}

void DescriptorMatrix::append(const std::string& id, std::span<const float> values) {
  if (count == 0 && dim == 0) dim = values.size();
  if (values.size() != dim)
    throw input_error("descriptor '" + id + "' has length " +
                      std::to_string(values.size()) + ", expected " + std::to_string(dim));
  data.insert(data.end(), values.begin(), values.end());
  ids.push_back(id);
  ++count;
}

std::unordered_map<std::string, std::size_t> DescriptorMatrix::id_map() const {
  std::unordered_map<std::string, std::size_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.emplace(ids[i], i);
  return out;
}

void FeatureMap::validate() const {
  if (height == 0 || width == 0 || channels == 0)
    throw input_error("feature map dimensions must all be >= 1");
  if (data.size() != size())
    throw input_error("feature map storage size does not match H*W*C");
  for (float v : data)
    if (!std::isfinite(v)) throw input_error("feature map contains non-finite values");
}

FeatureMap FeatureMap::make(std::uint32_t h, std::uint32_t w, std::uint32_t c,
                            std::vector<float> data) {
  FeatureMap map;
  map.height = h;
  map.width = w;
  map.channels = c;
  map.data = std::move(data);
  map.validate();
  map.post_relu =
      std::all_of(map.data.begin(), map.data.end(), [](float v) { return v >= 0.0f; });
  return map;
}

void PcaModel::validate() const {
  const Eigen::Index d = dim();
  if (d == 0) throw input_error("PCA model has dimension 0");
  if (components.rows() != d || components.cols() != d || eigenvalues.size() != d)
    throw input_error("PCA model fields have inconsistent dimensions");
  if (epsilon < 0) throw input_error("PCA epsilon must be nonnegative");
  const double ortho_err =
      (components * components.transpose() - Eigen::MatrixXd::Identity(d, d))
          .cwiseAbs()
          .maxCoeff();
  if (ortho_err > 1e-5)
    throw input_error("PCA components are not orthonormal (max deviation " +
                      detail::format_double(ortho_err) + ")");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (eigenvalues[i] < 0) throw input_error("negative PCA eigenvalue");
    if (i > 0 && eigenvalues[i] > eigenvalues[i - 1])
      throw input_error("PCA eigenvalues are not sorted descending");
  }
}

PcaModel PcaModel::identity(Eigen::Index d, double epsilon) {
  PcaModel m;
  m.mean = Eigen::VectorXd::Zero(d);
  m.components = Eigen::MatrixXd::Identity(d, d);
  m.eigenvalues = Eigen::VectorXd::Ones(d);
  m.epsilon = epsilon;
  return m;
}

void RmacConfig::validate() const {
  if (max_scale < 1) throw input_error("rmac max_scale must be >= 1");
  if (overlap_target < 0 || overlap_target >= 1)
    throw input_error("rmac overlap_target must lie in [0, 1)");
}

namespace {

/// Top-left offsets of region placements spanning [0, extent - side].
/// Offsets are integers, so the placement count comes from the largest whole
/// step that still keeps consecutive regions overlapping by >= overlap.
std::vector<std::uint32_t> axis_offsets(std::uint32_t extent, std::uint32_t side,
                                        double overlap) {
  if (extent == side) return {0};
  const auto max_step = std::max<std::uint32_t>(
      1, static_cast<std::uint32_t>(side * (1.0 - overlap) + 1e-9));
  const std::uint32_t span = extent - side;
  const std::uint32_t steps = (span + max_step - 1) / max_step;
  std::vector<std::uint32_t> offsets(steps + 1);
  for (std::uint32_t i = 0; i <= steps; ++i)
    offsets[i] = static_cast<std::uint32_t>(
        std::lround(static_cast<double>(span) * i / steps));
  return offsets;
}

}  // namespace

std::vector<RmacRegion> rmac_regions(std::uint32_t height, std::uint32_t width,
                                     const RmacConfig& cfg) {
  cfg.validate();
  if (height == 0 || width == 0) throw input_error("empty feature map");
  std::vector<RmacRegion> out;
  const std::uint32_t short_side = std::min(height, width);
  for (int l = 1; l <= cfg.max_scale; ++l) {
    const std::uint32_t side = 2 * short_side / static_cast<std::uint32_t>(l + 1);
    if (side < 1)
      throw input_error("rmac scale " + std::to_string(l) +
                        " produces a region smaller than one cell");
    for (std::uint32_t h0 : axis_offsets(height, side, cfg.overlap_target))
      for (std::uint32_t w0 : axis_offsets(width, side, cfg.overlap_target))
        out.push_back(RmacRegion{h0, w0, side});
  }
  return out;
}

Descriptor spoc_aggregate(const FeatureMap& map) {
  map.validate();
  if (!map.post_relu)
    throw input_error("sum pooling requires a post-activation (nonnegative) feature map");
  const std::size_t c = map.channels;
  std::vector<double> acc(c, 0.0);
  const std::size_t cells = static_cast<std::size_t>(map.height) * map.width;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const float* fiber = map.data.data() + cell * c;
    for (std::size_t i = 0; i < c; ++i) acc[i] += fiber[i];
  }
  Descriptor out;
  out.values.resize(c);
  for (std::size_t i = 0; i < c; ++i) out.values[i] = static_cast<float>(acc[i]);
  return out;
}

Descriptor rmac_aggregate(const FeatureMap& map, const RmacConfig& cfg,
                          const PcaModel& pca) {
  map.validate();
  if (pca.dim() != static_cast<Eigen::Index>(map.channels))
    throw input_error("PCA model dimension " + std::to_string(pca.dim()) +
                      " does not match feature map channels " +
                      std::to_string(map.channels));
  const std::size_t c = map.channels;
  std::vector<double> sum(c, 0.0);
  Descriptor region_vec;
  region_vec.values.resize(c);
  for (const RmacRegion& r : rmac_regions(map.height, map.width, cfg)) {
    std::fill(region_vec.values.begin(), region_vec.values.end(),
              -std::numeric_limits<float>::infinity());
    for (std::uint32_t h = r.h0; h < r.h0 + r.side; ++h)
      for (std::uint32_t w = r.w0; w < r.w0 + r.side; ++w) {
        const float* fiber =
            map.data.data() + (static_cast<std::size_t>(h) * map.width + w) * c;
        for (std::size_t i = 0; i < c; ++i)
          region_vec.values[i] = std::max(region_vec.values[i], fiber[i]);
      }
    region_vec.normalized = false;
    const Descriptor whitened = pca_whiten(region_vec, pca);
    for (std::size_t i = 0; i < c; ++i) sum[i] += whitened.values[i];
  }
  double norm_sq = 0;
  for (double v : sum) norm_sq += v * v;
  Descriptor out;
  out.values.resize(c, 0.0f);
  if (norm_sq == 0.0) return out;  // zero-vector sentinel
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (std::size_t i = 0; i < c; ++i) out.values[i] = static_cast<float>(sum[i] * inv);
  out.normalized = true;
  return out;
}

PcaModel pca_train(const DescriptorMatrix& training, double epsilon) {
  if (training.count < 2) throw input_error("PCA training needs at least 2 samples");
  if (training.dim == 0) throw input_error("PCA training needs dimension >= 1");
  if (training.data.size() != training.count * training.dim)
    throw input_error("descriptor matrix storage size does not match count*dim");
  if (epsilon < 0) throw input_error("PCA epsilon must be nonnegative");
  const auto n = static_cast<Eigen::Index>(training.count);
  const auto d = static_cast<Eigen::Index>(training.dim);

  Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      x(training.data.data(), n, d);

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i) mean += x.row(i).transpose().cast<double>();
  mean /= static_cast<double>(n);

  // Population covariance: sum of centered outer products / n.
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd centered = x.row(i).transpose().cast<double>() - mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  }
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      cov.selfadjointView<Eigen::Lower>());
  if (solver.info() != Eigen::Success)
    throw invariant_error("PCA eigendecomposition failed to converge");

  PcaModel model;
  model.mean = std::move(mean);
  model.epsilon = epsilon;
  model.eigenvalues.resize(d);
  model.components.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    // Solver returns ascending order; store descending.
    const Eigen::Index src = d - 1 - i;
    model.eigenvalues[i] = std::max(solver.eigenvalues()[src], 0.0);
    Eigen::RowVectorXd dir = solver.eigenvectors().col(src).transpose();
    // Deterministic sign: the largest-magnitude coefficient is positive.
    Eigen::Index peak = 0;
    dir.cwiseAbs().maxCoeff(&peak);
    if (dir[peak] < 0) dir = -dir;
    model.components.row(i) = dir;
  }
  model.validate();
  return model;
}

PcaModel pca_train(const std::vector<Descriptor>& training, double epsilon) {
  DescriptorMatrix m;
  for (std::size_t i = 0; i < training.size(); ++i)
    m.append("row" + std::to_string(i), training[i].values);
  return pca_train(m, epsilon);
}

Descriptor pca_whiten(const Descriptor& v, const PcaModel& pca, bool l2_normalize) {
  const Eigen::Index d = pca.dim();
  if (static_cast<Eigen::Index>(v.size()) != d)
    throw input_error("descriptor length " + std::to_string(v.size()) +
                      " does not match PCA dimension " + std::to_string(d));
  Eigen::VectorXd x(d);
  for (Eigen::Index i = 0; i < d; ++i) x[i] = v.values[static_cast<std::size_t>(i)];
  Eigen::VectorXd projected = pca.components * (x - pca.mean);
  for (Eigen::Index i = 0; i < d; ++i)
    projected[i] /= std::sqrt(pca.eigenvalues[i] + pca.epsilon);

  Descriptor out;
  out.values.resize(static_cast<std::size_t>(d), 0.0f);
  const double norm = projected.norm();
  if (l2_normalize) {
    if (norm == 0.0) return out;  // zero-vector sentinel
    projected /= norm;
    out.normalized = true;
  }
  for (Eigen::Index i = 0; i < d; ++i)
    out.values[static_cast<std::size_t>(i)] = static_cast<float>(projected[i]);
  return out;
}

Descriptor l2_normalize(Descriptor v) {
  double norm_sq = 0;
  for (float x : v.values) norm_sq += static_cast<double>(x) * x;
  if (norm_sq == 0.0) {
    v.normalized = false;
    return v;
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (float& x : v.values) x = static_cast<float>(x * inv);
  v.normalized = true;
  return v;
}

double triplet_loss(const Descriptor& q, const Descriptor& d_plus,
                    const Descriptor& d_minus, double margin) {
  if (q.size() != d_plus.size() || q.size() != d_minus.size())
    throw input_error("triplet members must have equal lengths");
  if (margin < 0) throw input_error("triplet margin must be nonnegative");
  double dist_plus = 0, dist_minus = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double dp = static_cast<double>(q.values[i]) - d_plus.values[i];
    const double dn = static_cast<double>(q.values[i]) - d_minus.values[i];
    dist_plus += dp * dp;
    dist_minus += dn * dn;
  }
  return 0.5 * std::max(0.0, margin + dist_plus - dist_minus);
}

// ---- file formats ----

namespace {

constexpr char kNdfmMagic[4] = {'N', 'D', 'F', 'M'};
constexpr char kNdbdMagic[4] = {'N', 'D', 'B', 'D'};
constexpr char kNdpcMagic[4] = {'N', 'D', 'P', 'C'};

void check_magic(std::istream& in, const char (&magic)[4], const std::string& path) {
  char buf[4];
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0)
    throw input_error(path + ": bad magic, expected " + std::string(magic, 4));
}

void check_version(std::istream& in, const std::string& path) {
  const auto version = detail::read_pod<std::uint32_t>(in, path);
  if (version != 1)
    throw input_error(path + ": unsupported version " + std::to_string(version));
}

void expect_eof(std::istream& in, const std::string& path) {
  char c;
  in.read(&c, 1);
  if (!in.eof()) throw input_error(path + ": trailing bytes after payload");
}

}  // namespace

FeatureMap read_ndfm(const std::string& path) {
  auto f = detail::open_binary_in(path);
  check_magic(f, kNdfmMagic, path);
  check_version(f, path);
  const auto h = detail::read_pod<std::uint32_t>(f, path);
  const auto w = detail::read_pod<std::uint32_t>(f, path);
  const auto c = detail::read_pod<std::uint32_t>(f, path);
  if (h == 0 || w == 0 || c == 0)
    throw input_error(path + ": feature map dimensions must all be >= 1");
  const std::size_t n = static_cast<std::size_t>(h) * w * c;
  if (n > (std::size_t{1} << 31))
    throw input_error(path + ": feature map implausibly large");
  std::vector<float> data(n);
  f.read(reinterpret_cast<char*>(data.data()),
         static_cast<std::streamsize>(n * sizeof(float)));
  if (!f) throw input_error("truncated file: " + path);
  expect_eof(f, path);
  return FeatureMap::make(h, w, c, std::move(data));
}

void write_ndfm(const std::string& path, const FeatureMap& map) {
  map.validate();
  auto f = detail::open_binary_out(path);
  f.write(kNdfmMagic, 4);
  detail::write_pod(f, std::uint32_t{1});
  detail::write_pod(f, map.height);
  detail::write_pod(f, map.width);
  detail::write_pod(f, map.channels);
  f.write(reinterpret_cast<const char*>(map.data.data()),
          static_cast<std::streamsize>(map.data.size() * sizeof(float)));
  if (!f) throw input_error("write error: " + path);
}

DescriptorMatrix read_ndbd(const std::string& path) {
  auto f = detail::open_binary_in(path);
  check_magic(f, kNdbdMagic, path);
  check_version(f, path);
  DescriptorMatrix m;
  m.count = detail::read_pod<std::uint64_t>(f, path);
  m.dim = detail::read_pod<std::uint32_t>(f, path);
  const auto dtype = detail::read_pod<std::uint8_t>(f, path);
  if (dtype != 0) throw input_error(path + ": unsupported dtype " + std::to_string(dtype));
  char padding[11];
  f.read(padding, sizeof(padding));
  if (!f) throw input_error("truncated file: " + path);
  const std::size_t n = m.count * m.dim;
  m.data.resize(n);
  f.read(reinterpret_cast<char*>(m.data.data()),
         static_cast<std::streamsize>(n * sizeof(float)));
  if (!f) throw input_error("truncated file: " + path);
  expect_eof(f, path);

  m.ids = read_id_list(path + ".ids");
  if (m.ids.size() != m.count)
    throw input_error(path + ".ids: has " + std::to_string(m.ids.size()) +
                      " ids for " + std::to_string(m.count) + " rows");
  m.validate();
  return m;
}

void write_ndbd(const std::string& path, const DescriptorMatrix& m) {
  m.validate();
  auto f = detail::open_binary_out(path);
  f.write(kNdbdMagic, 4);
  detail::write_pod(f, std::uint32_t{1});
  detail::write_pod(f, static_cast<std::uint64_t>(m.count));
  detail::write_pod(f, static_cast<std::uint32_t>(m.dim));
  detail::write_pod(f, std::uint8_t{0});
  const char padding[11] = {};
  f.write(padding, sizeof(padding));
  f.write(reinterpret_cast<const char*>(m.data.data()),
          static_cast<std::streamsize>(m.data.size() * sizeof(float)));
  if (!f) throw input_error("write error: " + path);
  f.close();
  write_id_list(path + ".ids", m.ids);
}

PcaModel read_ndpc(const std::string& path) {
  auto f = detail::open_binary_in(path);
  check_magic(f, kNdpcMagic, path);
  check_version(f, path);
  const auto dim = detail::read_pod<std::uint32_t>(f, path);
  if (dim == 0) throw input_error(path + ": dimension must be >= 1");
  PcaModel model;
  model.epsilon = detail::read_pod<double>(f, path);
  const auto d = static_cast<Eigen::Index>(dim);
  model.mean.resize(d);
  model.eigenvalues.resize(d);
  model.components.resize(d, d);
  auto read_block = [&](double* dst, std::size_t n) {
    f.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n * sizeof(double)));
    if (!f) throw input_error("truncated file: " + path);
  };
  read_block(model.mean.data(), dim);
  read_block(model.eigenvalues.data(), dim);
  std::vector<double> rows(static_cast<std::size_t>(dim) * dim);
  read_block(rows.data(), rows.size());
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c)
      model.components(r, c) = rows[static_cast<std::size_t>(r) * dim + c];
  expect_eof(f, path);
  model.validate();
  return model;
}

void write_ndpc(const std::string& path, const PcaModel& model) {
  model.validate();
  auto f = detail::open_binary_out(path);
  f.write(kNdpcMagic, 4);
  detail::write_pod(f, std::uint32_t{1});
  const auto d = static_cast<std::uint32_t>(model.dim());
  detail::write_pod(f, d);
  detail::write_pod(f, model.epsilon);
  f.write(reinterpret_cast<const char*>(model.mean.data()),
          static_cast<std::streamsize>(d * sizeof(double)));
  f.write(reinterpret_cast<const char*>(model.eigenvalues.data()),
          static_cast<std::streamsize>(d * sizeof(double)));
  for (Eigen::Index r = 0; r < model.components.rows(); ++r) {
    const Eigen::RowVectorXd row = model.components.row(r);
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(d * sizeof(double)));
  }
  if (!f) throw input_error("write error: " + path);
}

}  // namespace ndbench

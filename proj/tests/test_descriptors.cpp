#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "ndbench/descriptors.h"
#include "ndbench/errors.h"
#include "test_support.h"

using namespace ndbench;

namespace {

FeatureMap random_map(std::mt19937_64& rng, std::uint32_t h, std::uint32_t w,
                      std::uint32_t c) {
  std::normal_distribution<float> nd(0.f, 1.f);
  std::vector<float> data(static_cast<std::size_t>(h) * w * c);
  for (auto& v : data) v = std::max(0.f, nd(rng));
  return FeatureMap::make(h, w, c, std::move(data));
}

std::vector<Descriptor> random_training(std::mt19937_64& rng, std::size_t n,
                                        std::size_t dim) {
  std::normal_distribution<float> nd(0.f, 1.f);
  std::vector<Descriptor> out(n);
  for (auto& d : out) {
    d.values.resize(dim);
    for (auto& v : d.values) v = nd(rng);
  }
  return out;
}

double norm_of(const Descriptor& d) {
  double s = 0.0;
  for (float v : d.values) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

// Whitening recomputed with plain loops, no Eigen in the hot expression.
std::vector<double> whiten_oracle(const std::vector<float>& v, const PcaModel& p) {
  const auto d = static_cast<std::size_t>(p.dim());
  std::vector<double> centered(d), out(d);
  for (std::size_t i = 0; i < d; ++i) centered[i] = static_cast<double>(v[i]) - p.mean(i);
  for (std::size_t r = 0; r < d; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) acc += p.components(r, c) * centered[c];
    out[r] = acc / std::sqrt(p.eigenvalues(r) + p.epsilon);
  }
  double n2 = 0.0;
  for (double x : out) n2 += x * x;
  const double n = std::sqrt(n2);
  if (n > 0.0)
    for (double& x : out) x /= n;
  return out;
}

}  // namespace

TEST_SUITE("descriptors") {

TEST_CASE("feature map layout: h-major, w-middle, c-minor") {
  std::vector<float> data(2 * 3 * 4);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(i);
  const FeatureMap m = FeatureMap::make(2, 3, 4, std::move(data));
  CHECK(m.at(0, 0, 0) == 0.f);
  CHECK(m.at(0, 0, 3) == 3.f);
  CHECK(m.at(0, 1, 0) == 4.f);
  CHECK(m.at(1, 0, 0) == 12.f);
  CHECK(m.at(1, 2, 3) == 23.f);
}

TEST_CASE("matrix validation rejects duplicates and non-finite values") {
  DescriptorMatrix m;
  m.dim = 2;
  test_support::append_row(m, "a", {1.f, 2.f});
  test_support::append_row(m, "b", {3.f, 4.f});
  m.validate();

  DescriptorMatrix dup = m;
  dup.ids[1] = "a";
  CHECK_THROWS_AS(dup.validate(), input_error);

  DescriptorMatrix nan = m;
  nan.data[2] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(nan.validate(), input_error);

  CHECK_THROWS_AS(test_support::append_row(m, "c", {1.f}), input_error);
}

TEST_CASE("sum pooling matches the triple loop oracle") {
  std::mt19937_64 rng(11);
  const FeatureMap map = random_map(rng, 7, 5, 32);
  const Descriptor d = spoc_aggregate(map);
  REQUIRE(d.values.size() == 32);
  for (std::uint32_t c = 0; c < 32; ++c) {
    double acc = 0.0;
    for (std::uint32_t h = 0; h < 7; ++h)
      for (std::uint32_t w = 0; w < 5; ++w) acc += map.at(h, w, c);
    CHECK(std::abs(d.values[c] - acc) <= 1e-5 * std::max(1.0, std::abs(acc)));
  }
}

TEST_CASE("sum pooling is linear") {
  std::mt19937_64 rng(12);
  const FeatureMap m1 = random_map(rng, 4, 6, 8);
  const FeatureMap m2 = random_map(rng, 4, 6, 8);
  std::vector<float> mix(m1.data.size());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2.f * m1.data[i] + 3.f * m2.data[i];
  const Descriptor dm = spoc_aggregate(FeatureMap::make(4, 6, 8, std::move(mix)));
  const Descriptor d1 = spoc_aggregate(m1);
  const Descriptor d2 = spoc_aggregate(m2);
  for (std::size_t c = 0; c < 8; ++c) {
    const double want = 2.0 * d1.values[c] + 3.0 * d2.values[c];
    CHECK(std::abs(dm.values[c] - want) <= 1e-5 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("sum pooling requires a post-activation map") {
  std::vector<float> data(2 * 2 * 1, 1.f);
  data[0] = -0.5f;
  const FeatureMap map = FeatureMap::make(2, 2, 1, std::move(data));
  CHECK(!map.post_relu);
  CHECK_THROWS_AS(spoc_aggregate(map), input_error);
}

TEST_CASE("pca recovers known axis variances") {
  // Points (+-2, 0), (0, +-1): zero mean, covariance diag(2, 0.5).
  std::vector<Descriptor> train(4);
  train[0].values = {2.f, 0.f};
  train[1].values = {-2.f, 0.f};
  train[2].values = {0.f, 1.f};
  train[3].values = {0.f, -1.f};
  const PcaModel p = pca_train(train, 0.0);
  CHECK(p.eigenvalues(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(p.eigenvalues(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(p.mean(0)) < 1e-12);
  CHECK(std::abs(p.mean(1)) < 1e-12);
  // First direction is the x axis with the canonical positive sign.
  CHECK(p.components(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(p.components(0, 1)) < 1e-12);
}

TEST_CASE("pca training is deterministic and orthonormal") {
  std::mt19937_64 rng(13);
  const auto train = random_training(rng, 300, 12);
  const PcaModel a = pca_train(train);
  const PcaModel b = pca_train(train);
  CHECK(a.components == b.components);
  CHECK(a.eigenvalues == b.eigenvalues);
  a.validate();
  const Eigen::MatrixXd gram = a.components * a.components.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-10);
  for (Eigen::Index i = 1; i < a.eigenvalues.size(); ++i)
    CHECK(a.eigenvalues(i - 1) >= a.eigenvalues(i));
}

TEST_CASE("rank deficient training floors eigenvalues at zero") {
  // 2-d data living on the x axis: second eigenvalue is exactly zero.
  std::vector<Descriptor> train(3);
  train[0].values = {1.f, 0.f};
  train[1].values = {2.f, 0.f};
  train[2].values = {3.f, 0.f};
  const PcaModel p = pca_train(train, 1e-10);
  CHECK(p.eigenvalues(1) >= 0.0);
  CHECK(p.eigenvalues(1) < 1e-12);
  // Whitening still finite thanks to epsilon.
  Descriptor v;
  v.values = {5.f, 0.f};
  const Descriptor w = pca_whiten(v, p);
  for (float x : w.values) CHECK(std::isfinite(x));
}

TEST_CASE("whitening matches a loop oracle and normalizes") {
  std::mt19937_64 rng(14);
  const auto train = random_training(rng, 200, 9);
  const PcaModel p = pca_train(train);
  std::normal_distribution<float> nd(0.f, 1.f);
  for (int t = 0; t < 20; ++t) {
    Descriptor v;
    v.values.resize(9);
    for (auto& x : v.values) x = nd(rng);
    const Descriptor w = pca_whiten(v, p);
    CHECK(w.normalized);
    CHECK(std::abs(norm_of(w) - 1.0) < 1e-6);
    const auto oracle = whiten_oracle(v.values, p);
    for (std::size_t i = 0; i < 9; ++i)
      CHECK(std::abs(w.values[i] - oracle[i]) < 1e-6);
  }
}

TEST_CASE("whitening the training set decorrelates it") {
  std::mt19937_64 rng(15);
  // Correlated data: x2 = x1 + noise, x3 independent.
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Descriptor> train(500);
  for (auto& d : train) {
    const double a = nd(rng);
    d.values = {static_cast<float>(a), static_cast<float>(a + 0.1 * nd(rng)),
                static_cast<float>(nd(rng))};
  }
  const PcaModel p = pca_train(train, 0.0);
  // Whitened (un-normalized covariance check needs the raw projection, so
  // recompute it): cov of diag(1/sqrt(l)) * C * (x - mean) must be identity.
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(3, 3);
  for (const auto& d : train) {
    Eigen::Vector3d x(d.values[0], d.values[1], d.values[2]);
    Eigen::Vector3d y = p.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() *
                        (p.components * (x - p.mean));
    acc += y * y.transpose();
  }
  acc /= static_cast<double>(train.size());
  CHECK((acc - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("whitening edge cases") {
  const PcaModel id = PcaModel::identity(3);
  Descriptor v;
  v.values = {3.f, 0.f, 4.f};
  const Descriptor w = pca_whiten(v, id);
  CHECK(w.values[0] == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(w.values[2] == doctest::Approx(0.8).epsilon(1e-7));

  // v equal to the mean whitens to the zero-vector sentinel.
  std::vector<Descriptor> train(3);
  train[0].values = {1.f, 1.f};
  train[1].values = {2.f, 0.f};
  train[2].values = {3.f, 2.f};
  const PcaModel p = pca_train(train);
  Descriptor at_mean;
  at_mean.values = {static_cast<float>(p.mean(0)), static_cast<float>(p.mean(1))};
  const Descriptor z = pca_whiten(at_mean, p);
  CHECK_FALSE(z.normalized);
  for (float x : z.values) CHECK(x == 0.f);

  Descriptor wrong;
  wrong.values = {1.f};
  CHECK_THROWS_AS(pca_whiten(wrong, p), input_error);
}

TEST_CASE("l2 normalization") {
  Descriptor v;
  v.values = {3.f, 4.f};
  const Descriptor n = l2_normalize(v);
  CHECK(n.normalized);
  CHECK(n.values[0] == doctest::Approx(0.6f));
  CHECK(n.values[1] == doctest::Approx(0.8f));

  Descriptor zero;
  zero.values = {0.f, 0.f};
  const Descriptor z = l2_normalize(zero);
  CHECK_FALSE(z.normalized);
}

TEST_CASE("region grid covers the map with the documented sides") {
  RmacConfig cfg;
  cfg.max_scale = 2;
  const auto regions = rmac_regions(8, 8, cfg);
  // Scale 1: side 8, single region. Scale 2: side 5 with >= 40% overlap.
  REQUIRE(!regions.empty());
  CHECK(regions[0].side == 8);
  CHECK(regions[0].h0 == 0);
  CHECK(regions[0].w0 == 0);
  for (const auto& r : regions) {
    CHECK(r.h0 + r.side <= 8);
    CHECK(r.w0 + r.side <= 8);
  }
  // Scale-2 regions have side floor(2*8/3) = 5.
  bool saw_scale2 = false;
  for (const auto& r : regions)
    if (r.side == 5) saw_scale2 = true;
  CHECK(saw_scale2);

  RmacConfig deep;
  deep.max_scale = 40;
  CHECK_THROWS_AS(rmac_regions(4, 4, deep), input_error);
}

TEST_CASE("adjacent regions overlap by at least the target") {
  RmacConfig cfg;
  cfg.max_scale = 3;
  for (std::uint32_t h : {8u, 13u, 20u}) {
    for (std::uint32_t w : {8u, 17u, 31u}) {
      const auto regions = rmac_regions(h, w, cfg);
      // Group by side, then check horizontal neighbors within one row.
      for (std::size_t i = 0; i + 1 < regions.size(); ++i) {
        const auto& a = regions[i];
        const auto& b = regions[i + 1];
        if (a.side != b.side || a.h0 != b.h0 || b.w0 <= a.w0) continue;
        const double overlap = static_cast<double>(a.w0 + a.side) - b.w0;
        CHECK(overlap / a.side >= cfg.overlap_target - 1e-9);
      }
    }
  }
}

TEST_CASE("regional max pooling matches a region enumeration oracle") {
  std::mt19937_64 rng(16);
  const FeatureMap map = random_map(rng, 9, 11, 6);
  const auto train = random_training(rng, 100, 6);
  const PcaModel pca = pca_train(train);
  RmacConfig cfg;
  cfg.max_scale = 2;

  const Descriptor got = rmac_aggregate(map, cfg, pca);
  CHECK(std::abs(norm_of(got) - 1.0) < 1e-6);

  std::vector<double> acc(6, 0.0);
  for (const auto& r : rmac_regions(map.height, map.width, cfg)) {
    std::vector<float> mx(6, 0.f);
    for (std::uint32_t h = r.h0; h < r.h0 + r.side; ++h)
      for (std::uint32_t w = r.w0; w < r.w0 + r.side; ++w)
        for (std::uint32_t c = 0; c < 6; ++c) mx[c] = std::max(mx[c], map.at(h, w, c));
    Descriptor region;
    region.values = std::move(mx);
    const Descriptor white = pca_whiten(region, pca);
    for (std::size_t c = 0; c < 6; ++c) acc[c] += white.values[c];
  }
  double n2 = 0.0;
  for (double v : acc) n2 += v * v;
  const double n = std::sqrt(n2);
  for (std::size_t c = 0; c < 6; ++c)
    CHECK(std::abs(got.values[c] - acc[c] / n) < 1e-5);
}

TEST_CASE("regional pooling of an all-zero map hits the sentinel") {
  const FeatureMap map = FeatureMap::make(6, 6, 4, std::vector<float>(6 * 6 * 4, 0.f));
  const Descriptor d = rmac_aggregate(map, {}, PcaModel::identity(4));
  CHECK_FALSE(d.normalized);
  for (float v : d.values) CHECK(v == 0.f);
}

TEST_CASE("triplet loss worked examples") {
  Descriptor q, dp, dn;
  q.values = {0.f, 0.f};
  dp.values = {1.f, 0.f};
  dn.values = {0.f, 2.f};
  CHECK(triplet_loss(q, dp, dn, 1.0) == 0.0);
  CHECK(triplet_loss(q, dp, dn, 4.0) == 0.5);

  // All three coincide: both distances zero, loss = margin / 2.
  CHECK(triplet_loss(q, q, q, 0.3) == doctest::Approx(0.15).epsilon(1e-15));

  // Hinge inactive whenever the negative is at least margin farther (squared).
  std::mt19937_64 rng(17);
  std::normal_distribution<float> nd(0.f, 1.f);
  for (int t = 0; t < 50; ++t) {
    Descriptor a, b, c;
    a.values = {nd(rng), nd(rng)};
    b.values = {nd(rng), nd(rng)};
    c.values = {nd(rng), nd(rng)};
    const double m = 0.25;
    const double loss = triplet_loss(a, b, c, m);
    CHECK(loss >= 0.0);
    const double dp2 = std::pow(a.values[0] - b.values[0], 2) + std::pow(a.values[1] - b.values[1], 2);
    const double dn2 = std::pow(a.values[0] - c.values[0], 2) + std::pow(a.values[1] - c.values[1], 2);
    if (dn2 - dp2 >= m) CHECK(loss == 0.0);
  }

  Descriptor wrong;
  wrong.values = {1.f};
  CHECK_THROWS_AS(triplet_loss(q, dp, wrong, 0.1), input_error);
  CHECK_THROWS_AS(triplet_loss(q, dp, dn, -0.5), input_error);
}

}  // TEST_SUITE

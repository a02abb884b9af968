#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <random>

#include "ndbench/descriptors.h"
#include "ndbench/errors.h"
#include "ndbench/mining.h"
#include "io_util.h"
#include "test_support.h"

using namespace ndbench;

namespace {

DescriptorMatrix random_matrix(std::mt19937_64& rng, std::size_t count, std::size_t dim) {
  std::normal_distribution<float> nd(0.f, 1.f);
  DescriptorMatrix m;
  m.dim = dim;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<float> row(dim);
    for (auto& v : row) v = nd(rng);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "id%04zu", i);
    m.append(buf, std::move(row));
  }
  return m;
}

void corrupt_byte(const std::string& path, std::size_t offset, char value) {
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(static_cast<std::streamoff>(offset));
  f.put(value);
}

}  // namespace

TEST_SUITE("formats") {

TEST_CASE("feature map file round trip is bit exact") {
  test_support::TempDir tmp;
  std::mt19937_64 rng(1);
  std::normal_distribution<float> nd(0.f, 1.f);
  std::vector<float> data(5 * 7 * 3);
  for (auto& v : data) v = std::abs(nd(rng));
  const FeatureMap map = FeatureMap::make(5, 7, 3, std::move(data));

  const auto path = tmp.file("map.ndfm");
  write_ndfm(path, map);
  const FeatureMap back = read_ndfm(path);
  CHECK(back.height == map.height);
  CHECK(back.width == map.width);
  CHECK(back.channels == map.channels);
  CHECK(back.data == map.data);
}

TEST_CASE("feature map file rejects corruption") {
  test_support::TempDir tmp;
  const FeatureMap map = FeatureMap::make(2, 2, 1, {1.f, 2.f, 3.f, 4.f});
  const auto path = tmp.file("map.ndfm");

  write_ndfm(path, map);
  corrupt_byte(path, 0, 'X');  // magic
  CHECK_THROWS_AS(read_ndfm(path), input_error);

  write_ndfm(path, map);
  std::ofstream(path, std::ios::app | std::ios::binary) << "extra";
  CHECK_THROWS_AS(read_ndfm(path), input_error);

  write_ndfm(path, map);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 2);
  CHECK_THROWS_AS(read_ndfm(path), input_error);
}

TEST_CASE("descriptor matrix file round trip with ids sidecar") {
  test_support::TempDir tmp;
  std::mt19937_64 rng(2);
  const DescriptorMatrix m = random_matrix(rng, 9, 6);
  const auto path = tmp.file("m.ndbd");
  write_ndbd(path, m);

  const DescriptorMatrix back = read_ndbd(path);
  CHECK(back.count == m.count);
  CHECK(back.dim == m.dim);
  CHECK(back.data == m.data);
  CHECK(back.ids == m.ids);

  SUBCASE("header corruption is rejected") {
    corrupt_byte(path, 1, 'x');
    CHECK_THROWS_AS(read_ndbd(path), input_error);
  }
  SUBCASE("dtype other than float32 is rejected") {
    corrupt_byte(path, 20, 1);  // dtype byte: magic(4) + version(4) + count(8) + dim(4)
    CHECK_THROWS_AS(read_ndbd(path), input_error);
  }
  SUBCASE("id count mismatch is rejected") {
    std::ofstream(path + ".ids", std::ios::app) << "extra_id\n";
    CHECK_THROWS_AS(read_ndbd(path), input_error);
  }
  SUBCASE("truncated payload is rejected") {
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 4);
    CHECK_THROWS_AS(read_ndbd(path), input_error);
  }
}

TEST_CASE("pca model file round trip is bit exact") {
  test_support::TempDir tmp;
  std::mt19937_64 rng(3);
  const DescriptorMatrix train = random_matrix(rng, 40, 5);
  const PcaModel model = pca_train(train, 1e-8);

  const auto path = tmp.file("model.ndpc");
  write_ndpc(path, model);
  const PcaModel back = read_ndpc(path);
  CHECK(back.epsilon == model.epsilon);
  CHECK(back.mean == model.mean);
  CHECK(back.components == model.components);
  CHECK(back.eigenvalues == model.eigenvalues);
}

TEST_CASE("double formatting is shortest round trip") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ud(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    double x = ud(rng);
    if (i % 3 == 0) x = std::ldexp(ud(rng), static_cast<int>(rng() % 60) - 30);
    const std::string s = detail::format_double(x);
    CHECK(detail::parse_double(s, "value") == x);
  }
  CHECK(detail::format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(detail::format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(detail::parse_double("inf", "value") == std::numeric_limits<double>::infinity());
  CHECK(detail::format_double(0.1) == "0.1");
  CHECK(detail::format_double(1.25e-6) == "1.25e-06");
}

TEST_CASE("mined pairs csv round trips distances exactly") {
  test_support::TempDir tmp;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ud(0.0, 10.0);
  HardNegativeSet set;
  set.strategy = MiningStrategy::hn2;
  for (int i = 0; i < 50; ++i)
    set.pairs.push_back({"q" + std::to_string(i % 7), "p" + std::to_string(i), ud(rng)});
  set.query_count = 7;
  set.pool_count = 50;

  const auto path = tmp.file("mined.csv");
  write_mined_csv(path, set);
  const HardNegativeSet back = read_mined_csv(path);
  CHECK(back.strategy == set.strategy);
  CHECK(back.query_count == 7);
  REQUIRE(back.pairs.size() == set.pairs.size());
  for (std::size_t i = 0; i < set.pairs.size(); ++i) {
    CHECK(back.pairs[i].query_id == set.pairs[i].query_id);
    CHECK(back.pairs[i].pool_id == set.pairs[i].pool_id);
    CHECK(back.pairs[i].distance == set.pairs[i].distance);
  }
}

TEST_CASE("mined pairs csv rejects mixed strategies") {
  test_support::TempDir tmp;
  const auto path = tmp.file("mixed.csv");
  std::ofstream(path) << "query_id,pool_id,distance,strategy\n"
                      << "q1,p1,0.5,hn1\n"
                      << "q2,p2,0.6,hn2\n";
  CHECK_THROWS_AS(read_mined_csv(path), input_error);
}

}  // TEST_SUITE

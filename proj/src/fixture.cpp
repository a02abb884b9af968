#include "ndbench/fixture.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "ndbench/dataset.h"
#include "ndbench/descriptors.h"
#include "ndbench/errors.h"
#include "ndbench/hash.h"
#include "ndbench/image_io.h"
#include "io_util.h"

namespace ndbench {

namespace {

std::string padded(const char* prefix, std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, value);
  return buf;
}

std::vector<float> gaussian_vector(std::mt19937_64& rng, std::size_t dim, double sigma) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<float> v(dim);
  for (auto& x : v) x = static_cast<float>(sigma * nd(rng));
  return v;
}

GrayImage pattern_image(std::mt19937_64& rng, std::size_t side) {
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const double fx = 1.0 + 6.0 * ud(rng);
  const double fy = 1.0 + 6.0 * ud(rng);
  const double phase = 6.283185307179586 * ud(rng);
  GrayImage img;
  img.width = side;
  img.height = side;
  img.pixels.resize(side * side);
  std::normal_distribution<double> noise(0.0, 6.0);
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      const double u = static_cast<double>(x) / static_cast<double>(side);
      const double v = static_cast<double>(y) / static_cast<double>(side);
      double val = 127.5 + 90.0 * std::sin(6.283185307179586 * (fx * u + fy * v) + phase);
      val += noise(rng);
      img.pixels[y * side + x] = static_cast<float>(std::clamp(val, 0.0, 255.0));
    }
  }
  return img;
}

}  // namespace

FixturePaths write_fixture(const std::string& dir, const FixtureSpec& spec) {
  if (spec.dim == 0 || spec.clusters == 0) throw input_error("fixture needs dim and clusters > 0");
  if (spec.min_members < 2 || spec.max_members < spec.min_members)
    throw input_error("fixture member range must satisfy 2 <= min <= max");
  if (spec.loose_every == 0) throw input_error("fixture loose_every must be >= 1");

  namespace fs = std::filesystem;
  fs::create_directories(dir);
  fs::create_directories(fs::path(dir) / "images");
  fs::create_directories(fs::path(dir) / "featuremaps");

  FixturePaths paths;
  paths.descriptors = (fs::path(dir) / "descriptors.ndbd").string();
  paths.pairs = (fs::path(dir) / "pairs.csv").string();
  paths.clusters = (fs::path(dir) / "clusters.json").string();
  paths.queries = (fs::path(dir) / "queries.txt").string();
  paths.pool = (fs::path(dir) / "pool.txt").string();
  paths.image_dir = (fs::path(dir) / "images").string();
  paths.image_manifest = (fs::path(dir) / "images" / "manifest.csv").string();
  paths.map_dir = (fs::path(dir) / "featuremaps").string();
  paths.config = (fs::path(dir) / "run.ndconf").string();

  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> member_count(spec.min_members, spec.max_members);

  DescriptorMatrix all;
  all.dim = spec.dim;
  std::vector<NdPair> pairs;
  std::vector<std::string> pool_ids;
  std::vector<std::string> query_ids;

  for (std::size_t c = 0; c < spec.clusters; ++c) {
    const bool loose = ((c + 1) % spec.loose_every == 0);
    const double sigma = loose ? spec.loose_sigma : spec.tight_sigma;
    const PairLabel label = loose ? PairLabel::NIND : PairLabel::IND;
    const auto center = gaussian_vector(rng, spec.dim, 1.0);
    const std::size_t m = member_count(rng);
    std::vector<std::string> members;
    for (std::size_t i = 0; i < m; ++i) {
      auto v = gaussian_vector(rng, spec.dim, sigma);
      for (std::size_t d = 0; d < spec.dim; ++d) v[d] += center[d];
      std::string id = padded("c", c, 3) + padded("_m", i, 2);
      all.append(id, std::move(v));
      members.push_back(std::move(id));
    }
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j)
        pairs.push_back(make_nd_pair(members[i], members[j], label));
  }
  for (std::size_t i = 0; i < spec.distractors; ++i) {
    std::string id = padded("d", i, 4);
    all.append(id, gaussian_vector(rng, spec.dim, 1.0));
    pool_ids.push_back(std::move(id));
  }
  for (std::size_t i = 0; i < spec.negative_queries; ++i) {
    std::string id = padded("q", i, 3);
    all.append(id, gaussian_vector(rng, spec.dim, 1.0));
    query_ids.push_back(std::move(id));
  }

  GroundTruth gt = ground_truth_from_pairs(pairs, query_ids);

  write_ndbd(paths.descriptors, all);
  write_pairs_csv(paths.pairs, gt.pairs);
  write_clusters_json(paths.clusters, gt.clusters);
  write_id_list(paths.queries, query_ids);
  write_id_list(paths.pool, pool_ids);

  // Images, with an exact byte-level duplicate of the first for dedup demos.
  std::vector<ImageRecord> records;
  for (std::size_t i = 0; i < spec.images; ++i) {
    const std::string name = padded("img_", i, 3) + ".pgm";
    const fs::path p = fs::path(paths.image_dir) / name;
    if (i + 1 == spec.images && spec.images >= 2) {
      const fs::path original = fs::path(paths.image_dir) / (padded("img_", std::size_t{0}, 3) + ".pgm");
      fs::copy_file(original, p, fs::copy_options::overwrite_existing);
    } else {
      write_pgm(p.string(), pattern_image(rng, spec.image_side));
    }
    ImageRecord rec;
    rec.id = padded("img_", i, 3);
    // Manifest paths resolve relative to the manifest's own directory.
    rec.path = name;
    rec.content_hash = md5_file(p.string());
    records.push_back(std::move(rec));
  }
  write_manifest_csv(paths.image_manifest, records);

  std::normal_distribution<double> nd(0.0, 1.0);
  for (std::size_t i = 0; i < spec.feature_maps; ++i) {
    std::vector<float> data(spec.map_side * spec.map_side * spec.map_channels);
    for (auto& v : data) v = static_cast<float>(std::max(0.0, nd(rng)));
    const FeatureMap fm = FeatureMap::make(static_cast<std::uint32_t>(spec.map_side),
                                           static_cast<std::uint32_t>(spec.map_side),
                                           static_cast<std::uint32_t>(spec.map_channels),
                                           std::move(data));
    const fs::path p = fs::path(paths.map_dir) / (padded("fm_", i, 3) + ".ndfm");
    write_ndfm(p.string(), fm);
  }

  std::string conf;
  conf += "[pipeline]\n";
  conf += "descriptors=descriptors.ndbd\n";
  conf += "pairs=pairs.csv\n";
  conf += "clusters=clusters.json\n";
  conf += "queries=queries.txt\n";
  conf += "pool=pool.txt\n";
  conf += "strategy=hn2\n";
  conf += "knn=10\n";
  const std::size_t total_pairs = spec.negative_queries * 4;
  conf += "total-pairs=" + std::to_string(total_pairs) + "\n";
  // A rate below 1/total_pairs is under the mined specificity floor.
  conf += (total_pairs >= 50) ? "fp-rates=0.1,0.02\n" : "fp-rates=0.1\n";
  conf += "caps=0,5\n";
  conf += "mode=all\n";
  detail::write_text_file(paths.config, conf);

  return paths;
}

}  // namespace ndbench

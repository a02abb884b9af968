#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ndbench {

/// Parameters for the synthetic benchmark fixture. Cluster members are a
/// shared center plus per-cluster noise; every loose_every-th cluster uses
/// loose_sigma (and the NIND label), the rest are tight IND clusters.
/// Distractors and negative queries are independent unit Gaussians.
struct FixtureSpec {
  std::uint64_t seed = 8125;
  std::size_t dim = 16;
  std::size_t clusters = 40;
  std::size_t min_members = 2;
  std::size_t max_members = 4;
  std::size_t distractors = 1500;
  std::size_t negative_queries = 300;
  double tight_sigma = 0.08;
  double loose_sigma = 1.0;
  std::size_t loose_every = 5;
  std::size_t images = 8;        // >= 2 writes an exact duplicate of the first
  std::size_t image_side = 64;
  std::size_t feature_maps = 5;
  std::size_t map_side = 8;
  std::size_t map_channels = 32;
};

/// Files written by write_fixture, all under the output directory.
struct FixturePaths {
  std::string descriptors;    // descriptors.ndbd (+ .ids sidecar)
  std::string pairs;          // pairs.csv
  std::string clusters;       // clusters.json
  std::string queries;        // queries.txt
  std::string pool;           // pool.txt
  std::string image_dir;      // images/
  std::string image_manifest; // images/manifest.csv
  std::string map_dir;        // featuremaps/
  std::string config;         // run.ndconf
};

/// Generates the full fixture deterministically from spec.seed.
FixturePaths write_fixture(const std::string& dir, const FixtureSpec& spec);

}  // namespace ndbench

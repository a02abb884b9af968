#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ndbench/index.h"

namespace ndbench {

/// hn1: the single nearest pool neighbor of every query.
/// hn2: pool the knn_per_query nearest per query, keep the total_pairs
/// globally smallest.
enum class MiningStrategy { hn1, hn2 };

std::string_view to_string(MiningStrategy s);
MiningStrategy mining_strategy_from_string(std::string_view s);

struct MiningConfig {
  MiningStrategy strategy = MiningStrategy::hn2;
  std::vector<std::string> queries;  // K query ids, order preserved
  std::size_t knn_per_query = 10;    // hn2 only
  std::size_t total_pairs = 10000;   // hn2 only
};

struct MinedPair {
  std::string query_id;
  std::string pool_id;
  double distance = 0.0;
};

struct HardNegativeSet {
  std::vector<MinedPair> pairs;
  MiningStrategy strategy = MiningStrategy::hn1;
  std::size_t query_count = 0;  // K
  std::size_t pool_count = 0;   // M
};

/// Exactly one pair per query (its nearest pool neighbor), in query order.
/// A query id present in the pool never matches itself. Descriptors are
/// looked up by id; a missing id is an input_error naming it.
HardNegativeSet mine_hn1(const FlatIndex& pool, const DescriptorMatrix& descriptors,
                         const std::vector<std::string>& queries, int threads = 0);

/// Per query the knn_per_query nearest pool rows (self-match excluded), then
/// the total_pairs globally smallest of those candidates, ascending by
/// (distance, query position, pool row). Fewer candidates than total_pairs
/// returns them all.
HardNegativeSet mine_hn2(const FlatIndex& pool, const DescriptorMatrix& descriptors,
                         const std::vector<std::string>& queries,
                         std::size_t knn_per_query, std::size_t total_pairs,
                         int threads = 0);

HardNegativeSet mine_hard_negatives(const FlatIndex& pool,
                                    const DescriptorMatrix& descriptors,
                                    const MiningConfig& cfg, int threads = 0);

/// 1/(K*M): the smallest false-positive rate measurable from K queries
/// against a pool of M images.
double specificity_floor(std::uint64_t k, std::uint64_t m);

/// fp_rate_on_mined / M: lower bound on the collection-level FP rate implied
/// by a FP rate measured on the mined pairs.
double project_fp_rate(double fp_rate_on_mined, std::uint64_t m);

/// CSV with header "query_id,pool_id,distance,strategy". Distances are
/// written in shortest round-trip decimal form, so read(write(x)) == x.
void write_mined_csv(const std::string& path, const HardNegativeSet& set);

/// Reads the CSV back. All rows must carry one strategy. query_count is the
/// number of distinct query ids; pool_count is unknown to the file and left 0.
HardNegativeSet read_mined_csv(const std::string& path);

}  // namespace ndbench

#include "ndbench/mining.h"

#include <algorithm>
#include <set>

#include "ndbench/dataset.h"
#include "ndbench/errors.h"
#include "ndbench/parallel.h"
#include "io_util.h"

namespace ndbench {

std::string_view to_string(MiningStrategy s) {
  return s == MiningStrategy::hn1 ? "hn1" : "hn2";
}

MiningStrategy mining_strategy_from_string(std::string_view s) {
  if (s == "hn1") return MiningStrategy::hn1;
  if (s == "hn2") return MiningStrategy::hn2;
  throw input_error("unknown mining strategy '" + std::string(s) + "'");
}

namespace {

/// Rows of the query descriptors, resolved by id; all misses reported at once.
std::vector<std::size_t> resolve_queries(const DescriptorMatrix& descriptors,
                                         const std::vector<std::string>& queries) {
  if (queries.empty()) throw input_error("mining needs at least one query");
  const auto lookup = descriptors.id_map();
  std::vector<std::size_t> rows;
  rows.reserve(queries.size());
  std::string missing;
  for (const std::string& q : queries) {
    auto it = lookup.find(q);
    if (it == lookup.end())
      missing += missing.empty() ? q : ", " + q;
    else
      rows.push_back(it->second);
  }
  if (!missing.empty())
    throw input_error("query descriptor missing for: " + missing);
  return rows;
}

void check_dim(const FlatIndex& pool, const DescriptorMatrix& descriptors) {
  if (descriptors.dim != pool.dim())
    throw input_error("descriptor dimension " + std::to_string(descriptors.dim) +
                      " does not match pool dimension " + std::to_string(pool.dim()));
}

/// The want nearest non-self pool neighbors of one query.
std::vector<Neighbor> non_self_knn(const FlatIndex& pool, std::span<const float> qv,
                                   const std::string& query_id, std::size_t want) {
  // One spare row absorbs an excluded self-match (pool ids are unique).
  const std::size_t k = want >= pool.size() ? pool.size() : want + 1;
  std::vector<Neighbor> found = pool.knn(qv, k);
  std::erase_if(found, [&](const Neighbor& n) { return n.id == query_id; });
  if (found.size() > want) found.resize(want);
  return found;
}

}  // namespace

HardNegativeSet mine_hn1(const FlatIndex& pool, const DescriptorMatrix& descriptors,
                         const std::vector<std::string>& queries, int threads) {
  check_dim(pool, descriptors);
  const std::vector<std::size_t> rows = resolve_queries(descriptors, queries);

  std::vector<std::vector<Neighbor>> nearest(queries.size());
  parallel_chunks(queries.size(), 64, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t q = begin; q < end; ++q)
      nearest[q] = non_self_knn(pool, descriptors.row(rows[q]), queries[q], 1);
  });

  HardNegativeSet out;
  out.strategy = MiningStrategy::hn1;
  out.query_count = queries.size();
  out.pool_count = pool.size();
  out.pairs.reserve(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (nearest[q].empty())
      throw input_error("query '" + queries[q] +
                        "' has no non-self pool neighbor to pair with");
    out.pairs.push_back(MinedPair{queries[q], nearest[q][0].id, nearest[q][0].distance});
  }
  return out;
}

HardNegativeSet mine_hn2(const FlatIndex& pool, const DescriptorMatrix& descriptors,
                         const std::vector<std::string>& queries,
                         std::size_t knn_per_query, std::size_t total_pairs,
                         int threads) {
  check_dim(pool, descriptors);
  if (knn_per_query == 0) throw input_error("knn_per_query must be >= 1");
  if (total_pairs == 0) throw input_error("total_pairs must be >= 1");
  const std::vector<std::size_t> rows = resolve_queries(descriptors, queries);

  std::vector<std::vector<Neighbor>> per_query(queries.size());
  parallel_chunks(queries.size(), 64, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t q = begin; q < end; ++q)
      per_query[q] =
          non_self_knn(pool, descriptors.row(rows[q]), queries[q], knn_per_query);
  });

  // Global selection: ascending (distance, query position, pool row).
  struct Candidate {
    double distance;
    std::size_t query;
    std::size_t pool_row;
  };
  std::vector<Candidate> candidates;
  for (std::size_t q = 0; q < per_query.size(); ++q)
    for (const Neighbor& n : per_query[q])
      candidates.push_back(Candidate{n.distance, q, n.row});
  auto order = [](const Candidate& a, const Candidate& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.query != b.query) return a.query < b.query;
    return a.pool_row < b.pool_row;
  };
  if (candidates.size() > total_pairs) {
    std::nth_element(candidates.begin(), candidates.begin() + total_pairs,
                     candidates.end(), order);
    candidates.resize(total_pairs);
  }
  std::sort(candidates.begin(), candidates.end(), order);

  HardNegativeSet out;
  out.strategy = MiningStrategy::hn2;
  out.query_count = queries.size();
  out.pool_count = pool.size();
  out.pairs.reserve(candidates.size());
  for (const Candidate& c : candidates)
    out.pairs.push_back(MinedPair{queries[c.query], pool.id(c.pool_row), c.distance});
  return out;
}

HardNegativeSet mine_hard_negatives(const FlatIndex& pool,
                                    const DescriptorMatrix& descriptors,
                                    const MiningConfig& cfg, int threads) {
  if (cfg.strategy == MiningStrategy::hn1)
    return mine_hn1(pool, descriptors, cfg.queries, threads);
  return mine_hn2(pool, descriptors, cfg.queries, cfg.knn_per_query, cfg.total_pairs,
                  threads);
}

double specificity_floor(std::uint64_t k, std::uint64_t m) {
  if (k == 0 || m == 0) throw input_error("specificity floor needs K, M >= 1");
  return 1.0 / (static_cast<double>(k) * static_cast<double>(m));
}

double project_fp_rate(double fp_rate_on_mined, std::uint64_t m) {
  if (!(fp_rate_on_mined >= 0.0 && fp_rate_on_mined <= 1.0))
    throw input_error("fp rate must lie in [0, 1]");
  if (m == 0) throw input_error("pool size M must be >= 1");
  return fp_rate_on_mined / static_cast<double>(m);
}

void write_mined_csv(const std::string& path, const HardNegativeSet& set) {
  std::string out = "query_id,pool_id,distance,strategy\n";
  for (const MinedPair& p : set.pairs) {
    out += p.query_id;
    out += ',';
    out += p.pool_id;
    out += ',';
    out += detail::format_double(p.distance);
    out += ',';
    out += to_string(set.strategy);
    out += '\n';
  }
  detail::write_text_file(path, out);
}

HardNegativeSet read_mined_csv(const std::string& path) {
  const std::string text = detail::read_text_file(path);
  const auto lines = detail::split_lines(text);
  if (lines.empty() || lines[0] != "query_id,pool_id,distance,strategy")
    throw input_error(path + ": expected header 'query_id,pool_id,distance,strategy'");
  HardNegativeSet out;
  std::set<std::string_view> queries;
  bool have_strategy = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = detail::split_csv_line(lines[i]);
    if (cells.size() != 4)
      throw input_error(path + ":" + std::to_string(i + 1) + ": expected 4 cells");
    MinedPair p;
    p.query_id = std::string(cells[0]);
    p.pool_id = std::string(cells[1]);
    if (!valid_id(p.query_id) || !valid_id(p.pool_id))
      throw input_error(path + ":" + std::to_string(i + 1) + ": invalid id");
    if (p.query_id == p.pool_id)
      throw input_error(path + ":" + std::to_string(i + 1) + ": self pair");
    p.distance = detail::parse_double(cells[2], path);
    if (!(p.distance >= 0))
      throw input_error(path + ":" + std::to_string(i + 1) + ": negative distance");
    const MiningStrategy s = mining_strategy_from_string(cells[3]);
    if (!have_strategy) {
      out.strategy = s;
      have_strategy = true;
    } else if (s != out.strategy) {
      throw input_error(path + ": mixed strategies in one file");
    }
    queries.insert(cells[0]);
    out.pairs.push_back(std::move(p));
  }
  out.query_count = queries.size();
  return out;
}

}  // namespace ndbench

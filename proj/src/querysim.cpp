#include "ndbench/querysim.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "ndbench/errors.h"
#include "ndbench/parallel.h"
#include "io_util.h"

namespace ndbench {

namespace {

struct QueryHits {
  std::vector<double> distances;          // ascending
  std::vector<std::uint32_t> match_prefix;  // #expected ids among the first i hits
};

double sample_se(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) {
    const double d = v - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return sd / std::sqrt(static_cast<double>(n));
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

}  // namespace

void SimDesign::validate() const {
  if (positive_queries.empty()) throw input_error("sim design has no positive queries");
  if (database.size() == 0) throw input_error("sim design has an empty database");
  if (thresholds.empty()) throw input_error("sim design has no thresholds");
  if (caps.empty()) throw input_error("sim design has no result caps");
  for (double t : thresholds) {
    if (std::isnan(t) || t <= 0.0)
      throw input_error("sim threshold must be positive, got " + detail::format_double(t));
  }
  query_descriptors.validate();
  if (query_descriptors.dim != database.dim())
    throw input_error("query descriptor dim " + std::to_string(query_descriptors.dim) +
                      " does not match database dim " + std::to_string(database.dim()));

  const auto& index_ids = database.matrix().ids;
  std::unordered_set<std::string> db_ids(index_ids.begin(), index_ids.end());
  const auto qmap = query_descriptors.id_map();
  auto require_descriptor = [&](const std::string& id) {
    if (!qmap.count(id)) throw input_error("no descriptor for query id '" + id + "'");
  };

  std::unordered_set<std::string> seen_queries;
  for (const auto& pq : positive_queries) {
    if (!seen_queries.insert(pq.query_id).second)
      throw input_error("duplicate query id '" + pq.query_id + "'");
    require_descriptor(pq.query_id);
    if (db_ids.count(pq.query_id))
      throw input_error("query id '" + pq.query_id + "' must not be in the database");
    if (pq.expected_ids.empty())
      throw input_error("positive query '" + pq.query_id + "' has no expected ids");
    for (const auto& id : pq.expected_ids) {
      if (!db_ids.count(id))
        throw input_error("expected id '" + id + "' for query '" + pq.query_id +
                          "' is not in the database");
    }
  }
  for (const auto& id : negative_queries) {
    if (!seen_queries.insert(id).second) throw input_error("duplicate query id '" + id + "'");
    require_descriptor(id);
    if (db_ids.count(id))
      throw input_error("negative query id '" + id + "' must not be in the database");
  }
}

SimDesign build_design(const GroundTruth& gt, const std::vector<std::string>& pool_ids,
                       const DescriptorMatrix& descriptors,
                       std::vector<double> thresholds, std::vector<std::size_t> caps) {
  gt.validate();
  if (gt.clusters.empty()) throw input_error("ground truth has no clusters");
  descriptors.validate();

  SimDesign design;
  design.thresholds = std::move(thresholds);
  design.caps = std::move(caps);

  std::unordered_set<std::string> member_ids;
  for (const auto& c : gt.clusters)
    member_ids.insert(c.members.begin(), c.members.end());
  std::unordered_set<std::string> query_ids(gt.query_set.begin(), gt.query_set.end());

  // Cluster head (lexicographically smallest member) queries; the rest of
  // the cluster goes into the database.
  std::vector<std::string> db_ids;
  std::unordered_set<std::string> db_seen;
  for (const auto& c : gt.clusters) {
    PositiveQuery pq;
    pq.query_id = c.members.front();  // members are sorted
    for (std::size_t i = 1; i < c.members.size(); ++i) {
      pq.expected_ids.push_back(c.members[i]);
      if (db_seen.insert(c.members[i]).second) db_ids.push_back(c.members[i]);
    }
    if (pq.expected_ids.empty())
      throw input_error("cluster " + std::to_string(c.cluster_id) +
                        " has a single member; nothing to recall");
    design.positive_queries.push_back(std::move(pq));
  }
  for (const auto& id : pool_ids) {
    if (member_ids.count(id) || query_ids.count(id)) continue;
    if (db_seen.insert(id).second) db_ids.push_back(id);
  }
  if (db_ids.empty()) throw input_error("sim database would be empty");
  design.negative_queries = gt.query_set;

  const auto dmap = descriptors.id_map();
  auto row_of = [&](const std::string& id) -> std::size_t {
    auto it = dmap.find(id);
    if (it == dmap.end()) throw input_error("no descriptor for id '" + id + "'");
    return it->second;
  };

  DescriptorMatrix db_matrix;
  db_matrix.dim = descriptors.dim;
  for (const auto& id : db_ids) {
    const auto r = descriptors.row(row_of(id));
    db_matrix.append(id, {r.begin(), r.end()});
  }
  design.database = FlatIndex::build(std::move(db_matrix));

  design.query_descriptors.dim = descriptors.dim;
  for (const auto& pq : design.positive_queries) {
    const auto r = descriptors.row(row_of(pq.query_id));
    design.query_descriptors.append(pq.query_id, {r.begin(), r.end()});
  }
  for (const auto& id : design.negative_queries) {
    const auto r = descriptors.row(row_of(id));
    design.query_descriptors.append(id, {r.begin(), r.end()});
  }
  return design;
}

SimResult run_sim(const SimDesign& design, int threads) {
  design.validate();

  const double t_max = *std::max_element(design.thresholds.begin(), design.thresholds.end());
  const auto qmap = design.query_descriptors.id_map();
  const auto db_id_map = design.database.matrix().id_map();

  const std::size_t n_pos = design.positive_queries.size();
  const std::size_t n_neg = design.negative_queries.size();
  std::vector<QueryHits> hits(n_pos + n_neg);

  auto run_one = [&](std::size_t slot, const std::string& query_id,
                     const std::unordered_set<std::size_t>* expected_rows) {
    const auto q = design.query_descriptors.row(qmap.at(query_id));
    auto found = design.database.range_query(q, t_max, FlatIndex::kUnlimited);
    auto& h = hits[slot];
    h.distances.reserve(found.size());
    h.match_prefix.reserve(found.size() + 1);
    h.match_prefix.push_back(0);
    std::uint32_t matched = 0;
    for (const auto& nb : found) {
      h.distances.push_back(nb.distance);
      if (expected_rows && expected_rows->count(nb.row)) ++matched;
      h.match_prefix.push_back(matched);
    }
  };

  std::vector<std::unordered_set<std::size_t>> expected_rows(n_pos);
  for (std::size_t i = 0; i < n_pos; ++i)
    for (const auto& id : design.positive_queries[i].expected_ids)
      expected_rows[i].insert(db_id_map.at(id));

  parallel_chunks(n_pos + n_neg, 1, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t slot = begin; slot < end; ++slot) {
      if (slot < n_pos)
        run_one(slot, design.positive_queries[slot].query_id, &expected_rows[slot]);
      else
        run_one(slot, design.negative_queries[slot - n_pos], nullptr);
    }
  });

  SimResult result;
  result.cells.reserve(design.thresholds.size() * design.caps.size());
  for (double t : design.thresholds) {
    for (std::size_t cap : design.caps) {
      SimCell cell;
      cell.threshold = t;
      cell.cap = cap;

      // Prefix length below the threshold, then clipped by the cap; hits are
      // sorted ascending so every cell is a prefix of the t_max result.
      auto prefix_len = [&](const QueryHits& h) -> std::size_t {
        const auto it = std::lower_bound(h.distances.begin(), h.distances.end(), t);
        std::size_t len = static_cast<std::size_t>(it - h.distances.begin());
        if (cap != 0 && cap < len) len = cap;
        return len;
      };

      std::vector<double> recalls;
      recalls.reserve(n_pos);
      for (std::size_t i = 0; i < n_pos; ++i) {
        const auto& h = hits[i];
        const std::size_t len = prefix_len(h);
        const double expected = static_cast<double>(design.positive_queries[i].expected_ids.size());
        recalls.push_back(static_cast<double>(h.match_prefix[len]) / expected);
      }
      std::vector<double> fps;
      fps.reserve(n_neg);
      cell.fp_per_query.reserve(n_neg);
      for (std::size_t i = 0; i < n_neg; ++i) {
        const std::size_t len = prefix_len(hits[n_pos + i]);
        cell.fp_per_query.push_back(len);
        fps.push_back(static_cast<double>(len));
      }

      cell.avg_recall = mean_of(recalls);
      cell.recall_se = sample_se(recalls);
      cell.avg_fp = mean_of(fps);
      cell.fp_se = sample_se(fps);
      cell.recall_per_query = std::move(recalls);
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

std::vector<double> pick_thresholds(const RocCurve& curve, std::span<const double> fp_rates) {
  if (curve.points.size() < 2) throw input_error("curve has too few points to pick thresholds");
  if (curve.n_neg == 0) throw input_error("curve has no negatives");
  const double n = static_cast<double>(curve.n_neg);
  const double floor_rate = 1.0 / n;

  std::vector<double> out;
  out.reserve(fp_rates.size());
  for (double rate : fp_rates) {
    if (std::isnan(rate) || rate < 0.0 || rate > 1.0)
      throw input_error("fp rate must be in [0, 1], got " + detail::format_double(rate));
    if (rate == 1.0) {
      out.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    // floor(rate * n) distinguishes one negative from none; below 1/n the
    // rate is under the measurable specificity floor.
    const auto j = static_cast<std::size_t>(std::floor(rate * n + 1e-9));
    if (j == 0)
      throw input_error("fp rate " + detail::format_double(rate) +
                        " is below the specificity floor 1/" + std::to_string(curve.n_neg) +
                        " = " + detail::format_double(floor_rate));

    // The j-th smallest negative distance: the inclusive negative count at
    // points[i].threshold equals points[i + 1].fpr * n (the next distinct
    // value's strictly-below count).
    double picked = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
      const auto inclusive =
          static_cast<std::size_t>(std::llround(curve.points[i + 1].fpr * n));
      if (inclusive >= j) {
        picked = curve.points[i].threshold;
        break;
      }
    }
    out.push_back(picked);
  }
  return out;
}

void write_sim_csv(const std::string& path, const SimResult& result) {
  std::string text = "threshold,cap,avg_recall,recall_se,avg_fp,fp_se\n";
  for (const auto& c : result.cells) {
    text += detail::format_double(c.threshold);
    text += ',';
    text += std::to_string(c.cap);
    text += ',';
    text += detail::format_double(c.avg_recall);
    text += ',';
    text += detail::format_double(c.recall_se);
    text += ',';
    text += detail::format_double(c.avg_fp);
    text += ',';
    text += detail::format_double(c.fp_se);
    text += '\n';
  }
  detail::write_text_file(path, text);
}

void write_sim_per_query_csv(const std::string& path, const SimDesign& design,
                             const SimResult& result) {
  std::string text = "threshold,cap,query_id,metric,value\n";
  for (const auto& c : result.cells) {
    for (std::size_t i = 0; i < c.recall_per_query.size(); ++i) {
      text += detail::format_double(c.threshold);
      text += ',';
      text += std::to_string(c.cap);
      text += ',';
      text += design.positive_queries[i].query_id;
      text += ",recall,";
      text += detail::format_double(c.recall_per_query[i]);
      text += '\n';
    }
    for (std::size_t i = 0; i < c.fp_per_query.size(); ++i) {
      text += detail::format_double(c.threshold);
      text += ',';
      text += std::to_string(c.cap);
      text += ',';
      text += design.negative_queries[i];
      text += ",fp,";
      text += std::to_string(c.fp_per_query[i]);
      text += '\n';
    }
  }
  detail::write_text_file(path, text);
}

}  // namespace ndbench

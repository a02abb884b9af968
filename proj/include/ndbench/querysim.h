#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ndbench/dataset.h"
#include "ndbench/evaluation.h"
#include "ndbench/index.h"

namespace ndbench {

struct PositiveQuery {
  std::string query_id;
  std::vector<std::string> expected_ids;  // nonempty, all present in the database
};

/// A range-query experiment: positive queries recall their cluster partners
/// out of a database salted with distractors; negative queries (no match in
/// the database by construction) count false positives.
struct SimDesign {
  std::vector<PositiveQuery> positive_queries;
  std::vector<std::string> negative_queries;
  FlatIndex database;
  DescriptorMatrix query_descriptors;  // rows for every query id, positive and negative
  std::vector<double> thresholds;      // > 0, finite or +inf
  std::vector<std::size_t> caps;       // result cap per query; 0 = uncapped

  void validate() const;
};

/// Assembles the design from ground truth and a distractor pool: the
/// lexicographically smallest member of each cluster becomes a positive
/// query, the remaining members enter the database together with the pool
/// ids (minus cluster members and query_set); gt.query_set supplies the
/// negative queries. Descriptors are resolved by id; missing ids are
/// input_errors.
SimDesign build_design(const GroundTruth& gt, const std::vector<std::string>& pool_ids,
                       const DescriptorMatrix& descriptors,
                       std::vector<double> thresholds, std::vector<std::size_t> caps);

struct SimCell {
  double threshold = 0.0;
  std::size_t cap = 0;  // 0 = uncapped
  double avg_recall = 0.0;
  double recall_se = 0.0;
  double avg_fp = 0.0;
  double fp_se = 0.0;
  std::vector<double> recall_per_query;      // aligned with positive_queries
  std::vector<std::uint64_t> fp_per_query;   // aligned with negative_queries
};

struct SimResult {
  std::vector<SimCell> cells;  // thresholds outer, caps inner, input order
};

/// One range query per query id at the largest threshold; every (threshold,
/// cap) cell is a prefix of that hit list, so capped results are prefixes of
/// less-capped ones by construction. Standard error = sample standard
/// deviation / sqrt(#queries).
SimResult run_sim(const SimDesign& design, int threads = 0);

/// For each requested false-positive rate r: the floor(r * n_neg)-th smallest
/// negative distance of the curve (so the strictly-below FP rate at the
/// returned threshold is at most r), or +inf for r = 1. Rates below the
/// measurable floor 1/n_neg are input_errors citing the floor.
std::vector<double> pick_thresholds(const RocCurve& curve,
                                    std::span<const double> fp_rates);

/// CSV "threshold,cap,avg_recall,recall_se,avg_fp,fp_se"; cap 0 means uncapped.
void write_sim_csv(const std::string& path, const SimResult& result);

/// Per-query values: CSV "threshold,cap,query_id,metric,value" with metric
/// "recall" or "fp".
void write_sim_per_query_csv(const std::string& path, const SimDesign& design,
                             const SimResult& result);

}  // namespace ndbench

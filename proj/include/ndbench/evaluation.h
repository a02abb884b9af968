#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ndbench/dataset.h"
#include "ndbench/mining.h"

namespace ndbench {

/// A labeled pair with the distance between its descriptors.
struct ScoredPair {
  NdPair pair;
  double distance = 0.0;
};

/// all_positives: IND and NIND both count as positive.
/// ind_only: NIND pairs are excluded from both sides.
enum class RocMode { all_positives, ind_only };

struct RocPoint {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

/// A pair matches when its distance is strictly below the threshold, so the
/// curve starts at (0, 0) for t = 0 and ends at (1, 1) past the largest
/// distance (threshold +inf sentinel).
struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;      // closer-is-better orientation, ties credited 1/2
  double ci_low = 0.0;   // 95% interval
  double ci_high = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

struct SensSpec {
  double sensitivity = 0.0;
  double specificity = 0.0;
};

/// sensitivity = fraction of positive pairs with distance < t;
/// specificity = fraction of NND pairs with distance >= t.
/// Throws input_error naming the empty side.
SensSpec sens_spec_at(std::span<const ScoredPair> pairs, double t,
                      RocMode mode = RocMode::all_positives);

/// Curve over all distinct observed distances (plus sentinels). AUC by
/// integer win/tie counting: auc = (2*wins + ties) / (2*n_pos*n_neg) where a
/// win is a positive strictly closer than a negative. The 95% CI uses the
/// same normal approximation as auc_ci_hanley. max_points > 0 thins the
/// stored curve to about that many points (endpoints kept); the AUC is
/// computed from the full data either way.
RocCurve roc(std::span<const ScoredPair> pairs, RocMode mode = RocMode::all_positives,
             std::size_t max_points = 0);
RocCurve roc_from_distances(std::span<const double> positives,
                            std::span<const double> negatives,
                            std::size_t max_points = 0);

/// Area under the curve by trapezoidal integration of the stored points.
double trapezoid_auc(const RocCurve& curve);

/// Standard error of the AUC under the normal approximation with
/// Q1 = A/(2-A), Q2 = 2A^2/(1+A).
double auc_se(double auc, std::size_t n_pos, std::size_t n_neg);

/// auc +- 1.96 * auc_se, clipped to [0, 1].
std::pair<double, double> auc_ci_hanley(double auc, std::size_t n_pos,
                                        std::size_t n_neg);

struct FpProjection {
  double fp_count = 0.0;      // (1 - spec) * |X| * |Y|, ordered query-target pairs
  double fp_per_query = 0.0;  // (1 - spec) * |Y|
};
FpProjection fp_projection(double specificity, std::uint64_t x_size,
                           std::uint64_t y_size);

/// Same projection under the unordered convention: (1 - spec) * n*(n-1)/2
/// distinct pairs within one collection of n images.
double fp_count_unordered(double specificity, std::uint64_t n);

/// sens * nd_count.
double expected_tp(double sensitivity, double nd_count);

/// Result of checking that the mined-subset AUC can only overstate the
/// full-design AUC. The indicator counts are oriented by raw distance (a
/// positive outranks a negative when its distance is larger); the
/// closer-is-better ROC AUC is the complement of each value. The subset
/// guarantee holds in the distance orientation; in ROC orientation the mined
/// value is correspondingly a conservative lower bound.
struct BoundReport {
  double auc_full = 0.0;      // distance-oriented, all negatives
  double auc_hn = 0.0;        // distance-oriented, mined subset
  double roc_auc_full = 0.0;  // = 1 - auc_full
  double roc_auc_hn = 0.0;    // = 1 - auc_hn
  bool bound_holds = false;   // auc_hn >= auc_full, exact integer comparison
  std::size_t n_pos = 0;
  std::size_t n_neg_full = 0;
  std::size_t n_neg_hn = 0;
  MiningStrategy strategy = MiningStrategy::hn1;
};

/// Selects the mined subset from the fully enumerated negative design
/// (hn1: per-query minimum; hn2: the total_pairs globally smallest, i.e. the
/// exact regime) and compares the two AUCs. The comparison cross-multiplies
/// the integer win/tie counts, so bound_holds is exact.
BoundReport verify_upper_bound(std::span<const double> positive_distances,
                               std::span<const MinedPair> full_negatives,
                               MiningStrategy strategy, std::size_t total_pairs);

/// Every query-against-pool distance, self-id pairs excluded: the brute-force
/// negative design verify_upper_bound consumes. Query ids resolve against
/// query_descriptors; desk scale only (K*M pairs are materialized).
std::vector<MinedPair> enumerate_negative_pairs(
    const DescriptorMatrix& pool, const DescriptorMatrix& query_descriptors,
    const std::vector<std::string>& query_ids, int threads = 0);

/// Moves mined pairs found in the relabel list (label IND or NIND) into the
/// positive set; NND rows confirm pairs as negative. Every relabel row must
/// match a mined pair. Matching is by unordered id pair.
struct RelabelOutcome {
  std::vector<ScoredPair> promoted;
  HardNegativeSet negatives;
};
RelabelOutcome apply_relabels(const HardNegativeSet& mined,
                              const std::vector<NdPair>& relabels);

// ---- file formats ----

/// CSV "threshold,tpr,fpr"; the +inf sentinel threshold is written as "inf".
void write_roc_csv(const std::string& path, const RocCurve& curve);

struct EvalSummary {
  double auc = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::string strategy;  // "hn1", "hn2" or "full"
};
void write_summary_json(const std::string& path, const EvalSummary& summary);

}  // namespace ndbench

#include "ndbench/evaluation.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ndbench/errors.h"
#include "ndbench/index.h"
#include "ndbench/parallel.h"
#include "io_util.h"

namespace ndbench {

namespace {

void check_distance(double d) {
  if (!(d >= 0.0) || !std::isfinite(d))
    throw input_error("pair distance must be finite and nonnegative");
}

/// Splits scored pairs into positive/negative distance sets under the mode.
struct SplitDistances {
  std::vector<double> pos;
  std::vector<double> neg;
};

SplitDistances split(std::span<const ScoredPair> pairs, RocMode mode) {
  SplitDistances out;
  for (const ScoredPair& sp : pairs) {
    check_distance(sp.distance);
    switch (sp.pair.label) {
      case PairLabel::IND:
        out.pos.push_back(sp.distance);
        break;
      case PairLabel::NIND:
        if (mode == RocMode::all_positives) out.pos.push_back(sp.distance);
        break;
      case PairLabel::NND:
        out.neg.push_back(sp.distance);
        break;
    }
  }
  return out;
}

void require_both_sides(std::size_t n_pos, std::size_t n_neg) {
  if (n_pos == 0) throw input_error("no positive pairs to evaluate");
  if (n_neg == 0) throw input_error("no negative pairs to evaluate");
}

/// 2*wins + ties over (positive, negative) pairs, a win being a positive
/// strictly closer than a negative. Both inputs sorted ascending.
unsigned __int128 rank_w2(std::span<const double> pos_sorted,
                          std::span<const double> neg_sorted) {
  unsigned __int128 w2 = 0;
  std::size_t p = 0;
  std::size_t n = 0;
  std::uint64_t pos_below = 0;
  while (n < neg_sorted.size()) {
    // Next distinct value across both sides.
    const double v = (p < pos_sorted.size() && pos_sorted[p] < neg_sorted[n])
                         ? pos_sorted[p]
                         : neg_sorted[n];
    std::uint64_t pos_at = 0;
    while (p < pos_sorted.size() && pos_sorted[p] == v) {
      ++pos_at;
      ++p;
    }
    std::uint64_t neg_at = 0;
    while (n < neg_sorted.size() && neg_sorted[n] == v) {
      ++neg_at;
      ++n;
    }
    if (neg_at > 0)
      w2 += static_cast<unsigned __int128>(neg_at) * (2 * pos_below + pos_at);
    pos_below += pos_at;
  }
  return w2;
}

void thin_points(std::vector<RocPoint>& points, std::size_t max_points) {
  if (max_points < 2 || points.size() <= max_points) return;
  std::vector<RocPoint> kept;
  kept.reserve(max_points);
  const std::size_t last = points.size() - 1;
  for (std::size_t i = 0; i < max_points; ++i)
    kept.push_back(points[i * last / (max_points - 1)]);
  points = std::move(kept);
}

}  // namespace

SensSpec sens_spec_at(std::span<const ScoredPair> pairs, double t, RocMode mode) {
  const SplitDistances d = split(pairs, mode);
  require_both_sides(d.pos.size(), d.neg.size());
  std::size_t tp = 0;
  for (double v : d.pos) tp += v < t ? 1 : 0;
  std::size_t tn = 0;
  for (double v : d.neg) tn += v >= t ? 1 : 0;
  return SensSpec{static_cast<double>(tp) / static_cast<double>(d.pos.size()),
                  static_cast<double>(tn) / static_cast<double>(d.neg.size())};
}

RocCurve roc_from_distances(std::span<const double> positives,
                            std::span<const double> negatives,
                            std::size_t max_points) {
  require_both_sides(positives.size(), negatives.size());
  for (double d : positives) check_distance(d);
  for (double d : negatives) check_distance(d);

  std::vector<double> pos(positives.begin(), positives.end());
  std::vector<double> neg(negatives.begin(), negatives.end());
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  RocCurve curve;
  curve.n_pos = pos.size();
  curve.n_neg = neg.size();

  // One point per distinct distance: rates of the strictly-below classifier.
  const double inv_p = 1.0 / static_cast<double>(pos.size());
  const double inv_n = 1.0 / static_cast<double>(neg.size());
  std::size_t p = 0;
  std::size_t n = 0;
  if (std::min(pos[0], neg[0]) > 0.0) curve.points.push_back(RocPoint{0.0, 0.0, 0.0});
  while (p < pos.size() || n < neg.size()) {
    const double v = (p < pos.size() && (n == neg.size() || pos[p] < neg[n])) ? pos[p]
                                                                              : neg[n];
    curve.points.push_back(RocPoint{v, static_cast<double>(p) * inv_p,
                                    static_cast<double>(n) * inv_n});
    while (p < pos.size() && pos[p] == v) ++p;
    while (n < neg.size() && neg[n] == v) ++n;
  }
  curve.points.push_back(
      RocPoint{std::numeric_limits<double>::infinity(), 1.0, 1.0});

  const unsigned __int128 w2 = rank_w2(pos, neg);
  curve.auc = static_cast<double>(w2) /
              (2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
  std::tie(curve.ci_low, curve.ci_high) = auc_ci_hanley(curve.auc, pos.size(), neg.size());
  thin_points(curve.points, max_points);
  return curve;
}

RocCurve roc(std::span<const ScoredPair> pairs, RocMode mode, std::size_t max_points) {
  const SplitDistances d = split(pairs, mode);
  return roc_from_distances(d.pos, d.neg, max_points);
}

double trapezoid_auc(const RocCurve& curve) {
  double area = 0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const RocPoint& a = curve.points[i - 1];
    const RocPoint& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return area;
}

double auc_se(double auc, std::size_t n_pos, std::size_t n_neg) {
  if (!(auc >= 0.0 && auc <= 1.0)) throw input_error("auc must lie in [0, 1]");
  if (n_pos == 0 || n_neg == 0) throw input_error("auc_se needs n_pos, n_neg >= 1");
  const double a = auc;
  const double q1 = a / (2.0 - a);
  const double q2 = 2.0 * a * a / (1.0 + a);
  const double var = (a * (1.0 - a) + (static_cast<double>(n_pos) - 1.0) * (q1 - a * a) +
                      (static_cast<double>(n_neg) - 1.0) * (q2 - a * a)) /
                     (static_cast<double>(n_pos) * static_cast<double>(n_neg));
  return std::sqrt(std::max(var, 0.0));
}

std::pair<double, double> auc_ci_hanley(double auc, std::size_t n_pos,
                                        std::size_t n_neg) {
  const double se = auc_se(auc, n_pos, n_neg);
  return {std::clamp(auc - 1.96 * se, 0.0, 1.0), std::clamp(auc + 1.96 * se, 0.0, 1.0)};
}

FpProjection fp_projection(double specificity, std::uint64_t x_size,
                           std::uint64_t y_size) {
  if (!(specificity >= 0.0 && specificity <= 1.0))
    throw input_error("specificity must lie in [0, 1]");
  FpProjection out;
  out.fp_count = (1.0 - specificity) * static_cast<double>(x_size) *
                 static_cast<double>(y_size);
  out.fp_per_query = (1.0 - specificity) * static_cast<double>(y_size);
  return out;
}

double fp_count_unordered(double specificity, std::uint64_t n) {
  if (!(specificity >= 0.0 && specificity <= 1.0))
    throw input_error("specificity must lie in [0, 1]");
  return (1.0 - specificity) * (static_cast<double>(n) * (static_cast<double>(n) - 1.0) / 2.0);
}

double expected_tp(double sensitivity, double nd_count) {
  if (!(sensitivity >= 0.0 && sensitivity <= 1.0))
    throw input_error("sensitivity must lie in [0, 1]");
  if (nd_count < 0) throw input_error("nd_count must be nonnegative");
  return sensitivity * nd_count;
}

BoundReport verify_upper_bound(std::span<const double> positive_distances,
                               std::span<const MinedPair> full_negatives,
                               MiningStrategy strategy, std::size_t total_pairs) {
  require_both_sides(positive_distances.size(), full_negatives.size());
  for (double d : positive_distances) check_distance(d);
  for (const MinedPair& p : full_negatives) check_distance(p.distance);

  // Select the mined subset from the enumerated design.
  std::vector<double> mined;
  if (strategy == MiningStrategy::hn1) {
    std::vector<std::string_view> order;                       // first-seen query order
    std::unordered_map<std::string_view, double> best;
    for (const MinedPair& p : full_negatives) {
      auto [it, inserted] = best.try_emplace(p.query_id, p.distance);
      if (inserted)
        order.push_back(p.query_id);
      else if (p.distance < it->second)
        it->second = p.distance;
    }
    mined.reserve(order.size());
    for (std::string_view q : order) mined.push_back(best.at(q));
  } else {
    if (total_pairs == 0) throw input_error("total_pairs must be >= 1");
    mined.reserve(full_negatives.size());
    for (const MinedPair& p : full_negatives) mined.push_back(p.distance);
    std::sort(mined.begin(), mined.end());
    if (mined.size() > total_pairs) mined.resize(total_pairs);
  }

  std::vector<double> pos(positive_distances.begin(), positive_distances.end());
  std::vector<double> full;
  full.reserve(full_negatives.size());
  for (const MinedPair& p : full_negatives) full.push_back(p.distance);
  std::sort(pos.begin(), pos.end());
  std::sort(full.begin(), full.end());
  std::sort(mined.begin(), mined.end());

  // rank_w2 counts positive-closer wins; the distance-oriented counts are the
  // complement: w2_dist = 2*P*N - w2_roc.
  const auto p_count = static_cast<unsigned __int128>(pos.size());
  const unsigned __int128 w2_roc_full = rank_w2(pos, full);
  const unsigned __int128 w2_roc_hn = rank_w2(pos, mined);
  const unsigned __int128 w2_dist_full = 2 * p_count * full.size() - w2_roc_full;
  const unsigned __int128 w2_dist_hn = 2 * p_count * mined.size() - w2_roc_hn;

  BoundReport report;
  report.strategy = strategy;
  report.n_pos = pos.size();
  report.n_neg_full = full.size();
  report.n_neg_hn = mined.size();
  const double denom_full =
      2.0 * static_cast<double>(pos.size()) * static_cast<double>(full.size());
  const double denom_hn =
      2.0 * static_cast<double>(pos.size()) * static_cast<double>(mined.size());
  report.auc_full = static_cast<double>(w2_dist_full) / denom_full;
  report.auc_hn = static_cast<double>(w2_dist_hn) / denom_hn;
  report.roc_auc_full = static_cast<double>(w2_roc_full) / denom_full;
  report.roc_auc_hn = static_cast<double>(w2_roc_hn) / denom_hn;
  // auc_hn >= auc_full without division: cross-multiply the integer counts.
  report.bound_holds = w2_dist_hn * (p_count * full.size()) >=
                       w2_dist_full * (p_count * mined.size());
  return report;
}

std::vector<MinedPair> enumerate_negative_pairs(
    const DescriptorMatrix& pool, const DescriptorMatrix& query_descriptors,
    const std::vector<std::string>& query_ids, int threads) {
  if (pool.dim != query_descriptors.dim)
    throw input_error("pool and query descriptor dimensions differ");
  if (query_ids.empty()) throw input_error("needs at least one query");
  const auto lookup = query_descriptors.id_map();
  std::vector<std::size_t> rows;
  rows.reserve(query_ids.size());
  for (const std::string& q : query_ids) {
    auto it = lookup.find(q);
    if (it == lookup.end()) throw input_error("query descriptor missing for: " + q);
    rows.push_back(it->second);
  }

  std::vector<std::vector<MinedPair>> per_query(query_ids.size());
  parallel_chunks(query_ids.size(), 16, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t q = begin; q < end; ++q) {
      auto& out = per_query[q];
      out.reserve(pool.count);
      for (std::size_t r = 0; r < pool.count; ++r) {
        if (pool.ids[r] == query_ids[q]) continue;  // self pair
        out.push_back(MinedPair{query_ids[q], pool.ids[r],
                                pair_distance(query_descriptors.row(rows[q]), pool.row(r))});
      }
    }
  });

  std::vector<MinedPair> out;
  for (auto& v : per_query)
    out.insert(out.end(), std::make_move_iterator(v.begin()),
               std::make_move_iterator(v.end()));
  return out;
}

RelabelOutcome apply_relabels(const HardNegativeSet& mined,
                              const std::vector<NdPair>& relabels) {
  std::map<std::pair<std::string_view, std::string_view>, PairLabel> wanted;
  for (const NdPair& p : relabels) {
    if (!wanted.try_emplace({p.id_a, p.id_b}, p.label).second)
      throw input_error("duplicate relabel for pair '" + p.id_a + "," + p.id_b + "'");
  }

  RelabelOutcome out;
  out.negatives.strategy = mined.strategy;
  out.negatives.query_count = mined.query_count;
  out.negatives.pool_count = mined.pool_count;
  std::map<std::pair<std::string_view, std::string_view>, std::size_t> matched;
  for (const MinedPair& p : mined.pairs) {
    auto key = p.query_id < p.pool_id
                   ? std::make_pair(std::string_view(p.query_id), std::string_view(p.pool_id))
                   : std::make_pair(std::string_view(p.pool_id), std::string_view(p.query_id));
    auto it = wanted.find(key);
    if (it == wanted.end()) {
      out.negatives.pairs.push_back(p);
      continue;
    }
    ++matched[key];
    if (it->second == PairLabel::NND) {
      out.negatives.pairs.push_back(p);  // confirmed negative
    } else {
      out.promoted.push_back(
          ScoredPair{NdPair{std::string(key.first), std::string(key.second), it->second},
                     p.distance});
    }
  }
  for (const auto& [key, label] : wanted) {
    if (!matched.count(key))
      throw input_error("relabel pair '" + std::string(key.first) + "," +
                        std::string(key.second) + "' matches no mined pair");
  }
  return out;
}

void write_roc_csv(const std::string& path, const RocCurve& curve) {
  std::string out = "threshold,tpr,fpr\n";
  for (const RocPoint& p : curve.points) {
    out += detail::format_double(p.threshold);
    out += ',';
    out += detail::format_double(p.tpr);
    out += ',';
    out += detail::format_double(p.fpr);
    out += '\n';
  }
  detail::write_text_file(path, out);
}

void write_summary_json(const std::string& path, const EvalSummary& summary) {
  nlohmann::ordered_json doc;
  doc["auc"] = summary.auc;
  doc["ci_low"] = summary.ci_low;
  doc["ci_high"] = summary.ci_high;
  doc["n_pos"] = summary.n_pos;
  doc["n_neg"] = summary.n_neg;
  doc["strategy"] = summary.strategy;
  detail::write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace ndbench

#include "ndbench/index.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <queue>

#include "ndbench/errors.h"
#include "ndbench/parallel.h"

namespace ndbench {

namespace {

// Rows are streamed in fixed chunks so a chunk stays cache-resident across
// the queries of one block. Constant, so results never depend on threading.
constexpr std::size_t kRowChunk = 1024;

inline float l2_squared(const float* a, const float* b, std::size_t d) {
  Eigen::Map<const Eigen::ArrayXf> va(a, static_cast<Eigen::Index>(d));
  Eigen::Map<const Eigen::ArrayXf> vb(b, static_cast<Eigen::Index>(d));
  return (va - vb).matrix().squaredNorm();
}

struct Candidate {
  float d2;
  std::size_t row;
};

/// Orders candidates by quality: smaller distance first, then smaller row.
struct Better {
  bool operator()(const Candidate& a, const Candidate& b) const {
    return a.d2 < b.d2 || (a.d2 == b.d2 && a.row < b.row);
  }
};

using CandidateHeap = std::priority_queue<Candidate, std::vector<Candidate>, Better>;

void check_query(std::span<const float> q, std::size_t dim) {
  if (q.size() != dim)
    throw input_error("query length " + std::to_string(q.size()) +
                      " does not match index dimension " + std::to_string(dim));
  for (float v : q)
    if (!std::isfinite(v)) throw input_error("query contains non-finite values");
}

}  // namespace

double pair_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size())
    throw input_error("distance operands have different lengths");
  const float d2 = l2_squared(a.data(), b.data(), a.size());
  if (!std::isfinite(d2)) throw input_error("distance operands must be finite");
  return std::sqrt(static_cast<double>(std::max(d2, 0.0f)));
}

FlatIndex FlatIndex::build(DescriptorMatrix matrix) {
  matrix.validate();
  if (matrix.count == 0) throw input_error("index needs at least one row");
  FlatIndex index;
  index.matrix_ = std::move(matrix);
  return index;
}

FlatIndex FlatIndex::load(const std::string& ndbd_path) {
  return build(read_ndbd(ndbd_path));
}

std::vector<Neighbor> FlatIndex::knn(std::span<const float> query, std::size_t k) const {
  check_query(query, dim());
  if (k == 0) throw input_error("knn needs k >= 1");
  const std::size_t keep = std::min(k, size());

  CandidateHeap heap;
  const float* base = matrix_.data.data();
  for (std::size_t chunk = 0; chunk < size(); chunk += kRowChunk) {
    const std::size_t end = std::min(chunk + kRowChunk, size());
    for (std::size_t row = chunk; row < end; ++row) {
      const float d2 = l2_squared(query.data(), base + row * dim(), dim());
      if (heap.size() < keep) {
        heap.push(Candidate{d2, row});
      } else if (d2 < heap.top().d2) {
        heap.pop();
        heap.push(Candidate{d2, row});
      }
    }
  }

  std::vector<Neighbor> out(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    const Candidate c = heap.top();
    heap.pop();
    out[i] = Neighbor{c.row, std::sqrt(static_cast<double>(std::max(c.d2, 0.0f))),
                      matrix_.ids[c.row]};
  }
  return out;
}

std::vector<Neighbor> FlatIndex::range_query(std::span<const float> query,
                                             double threshold, std::size_t cap) const {
  check_query(query, dim());
  if (!(threshold > 0)) throw input_error("range threshold must be > 0");
  if (cap == 0) throw input_error("range cap must be >= 1 (or unlimited)");

  // Pre-filter on squared distance with a hair of slack, then enforce the
  // contract on the reported (rounded) distance itself.
  const double t2_slack = threshold == std::numeric_limits<double>::infinity()
                              ? threshold
                              : threshold * threshold * (1.0 + 1e-12);

  const float* base = matrix_.data.data();
  std::vector<Candidate> hits;
  CandidateHeap heap;
  const bool capped = cap != kUnlimited;
  for (std::size_t row = 0; row < size(); ++row) {
    const float d2 = l2_squared(query.data(), base + row * dim(), dim());
    if (static_cast<double>(d2) >= t2_slack) continue;
    if (!capped) {
      hits.push_back(Candidate{d2, row});
    } else if (heap.size() < cap) {
      heap.push(Candidate{d2, row});
    } else if (d2 < heap.top().d2) {
      heap.pop();
      heap.push(Candidate{d2, row});
    }
  }
  if (capped) {
    hits.resize(heap.size());
    for (std::size_t i = heap.size(); i-- > 0;) {
      hits[i] = heap.top();
      heap.pop();
    }
  } else {
    std::sort(hits.begin(), hits.end(), [](const Candidate& a, const Candidate& b) {
      return a.d2 < b.d2 || (a.d2 == b.d2 && a.row < b.row);
    });
  }

  std::vector<Neighbor> out;
  out.reserve(hits.size());
  for (const Candidate& c : hits) {
    const double distance = std::sqrt(static_cast<double>(std::max(c.d2, 0.0f)));
    if (distance < threshold)
      out.push_back(Neighbor{c.row, distance, matrix_.ids[c.row]});
  }
  return out;
}

std::vector<std::vector<Neighbor>> FlatIndex::knn_batch(const DescriptorMatrix& queries,
                                                        std::size_t k,
                                                        const SearchOptions& opts) const {
  if (queries.dim != dim())
    throw input_error("query matrix dimension does not match the index");
  if (k == 0) throw input_error("knn needs k >= 1");
  const std::size_t keep = std::min(k, size());
  std::vector<std::vector<Neighbor>> results(queries.count);

  parallel_chunks(queries.count, opts.query_block, opts.threads,
                  [&](std::size_t qb, std::size_t qe) {
    for (std::size_t q = qb; q < qe; ++q) check_query(queries.row(q), dim());
    std::vector<CandidateHeap> heaps(qe - qb);
    const float* base = matrix_.data.data();
    for (std::size_t chunk = 0; chunk < size(); chunk += kRowChunk) {
      const std::size_t end = std::min(chunk + kRowChunk, size());
      for (std::size_t q = qb; q < qe; ++q) {
        CandidateHeap& heap = heaps[q - qb];
        const float* qv = queries.data.data() + q * dim();
        for (std::size_t row = chunk; row < end; ++row) {
          const float d2 = l2_squared(qv, base + row * dim(), dim());
          if (heap.size() < keep) {
            heap.push(Candidate{d2, row});
          } else if (d2 < heap.top().d2) {
            heap.pop();
            heap.push(Candidate{d2, row});
          }
        }
      }
    }
    for (std::size_t q = qb; q < qe; ++q) {
      CandidateHeap& heap = heaps[q - qb];
      std::vector<Neighbor>& out = results[q];
      out.resize(heap.size());
      for (std::size_t i = heap.size(); i-- > 0;) {
        const Candidate c = heap.top();
        heap.pop();
        out[i] = Neighbor{c.row, std::sqrt(static_cast<double>(std::max(c.d2, 0.0f))),
                          matrix_.ids[c.row]};
      }
    }
  });
  return results;
}

std::vector<std::vector<Neighbor>> FlatIndex::range_batch(
    const DescriptorMatrix& queries, double threshold, std::size_t cap,
    const SearchOptions& opts) const {
  if (queries.dim != dim())
    throw input_error("query matrix dimension does not match the index");
  std::vector<std::vector<Neighbor>> results(queries.count);
  parallel_chunks(queries.count, opts.query_block, opts.threads,
                  [&](std::size_t qb, std::size_t qe) {
                    for (std::size_t q = qb; q < qe; ++q)
                      results[q] = range_query(queries.row(q), threshold, cap);
                  });
  return results;
}

}  // namespace ndbench

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ndbench/hash.h"

namespace ndbench {

/// Pair labels. IND: identical content, digitally derived from one source.
/// NIND: same scene or object, different shot. NND: established non-match,
/// the negative class.
enum class PairLabel { IND, NIND, NND };

std::string_view to_string(PairLabel label);
PairLabel pair_label_from_string(std::string_view s);

/// Ids are restricted to [A-Za-z0-9._-]+ so they can be written to the CSV
/// formats without quoting.
bool valid_id(std::string_view id);

/// One catalogued image: stable id, file path, MD5 of the encoded bytes.
struct ImageRecord {
  std::string id;
  std::string path;
  Md5Digest content_hash{};
};

/// Unordered labeled pair; canonical form keeps id_a < id_b.
struct NdPair {
  std::string id_a;
  std::string id_b;
  PairLabel label = PairLabel::NND;

  bool operator==(const NdPair&) const = default;
};

/// Canonicalizes the id order. Throws input_error on a == b or invalid ids.
NdPair make_nd_pair(std::string a, std::string b, PairLabel label);

/// A connected component of the positive-pair graph. kind is NIND as soon as
/// the component contains one NIND edge (the weaker relation dominates);
/// mixed marks components where both edge labels occur.
struct NdCluster {
  std::int64_t cluster_id = 0;
  PairLabel kind = PairLabel::NIND;
  bool mixed = false;
  std::vector<std::string> members;  // sorted, unique, size >= 2
};

struct DedupResult {
  std::vector<ImageRecord> kept;  // input order
  /// (dropped id, id of the kept representative), input order of the drops.
  std::vector<std::pair<std::string, std::string>> removed;
};

/// Removes byte-identical images: within each content_hash group the record
/// with the smallest id survives.
DedupResult dedup_exact(const std::vector<ImageRecord>& records);

/// Connected components of the positive-pair graph. Rejects NND edges and
/// non-canonical or duplicate pairs. cluster_id is assigned by ascending
/// smallest member id; output independent of pair order.
std::vector<NdCluster> build_clusters(const std::vector<NdPair>& positives);

/// All C(n,2) unordered member pairs, labeled with the cluster kind.
/// Throws input_error when the cluster has fewer than 2 members.
std::vector<NdPair> enumerate_pairs(const NdCluster& cluster);

struct GroundTruth {
  std::vector<NdPair> pairs;         // labeled pairs, including NND annotations
  std::vector<NdCluster> clusters;   // components of the positive pairs
  std::vector<std::string> query_set;  // designated negative query ids

  /// Checks: pairs canonical and unique with consistent labels; clusters
  /// equal the components rebuilt from the positive pairs; NND pairs never
  /// connect two members of one cluster; query_set disjoint from cluster
  /// members and duplicate-free. Throws input_error with the first offender.
  void validate() const;
};

/// Builds clusters from the positive subset of pairs and validates.
GroundTruth ground_truth_from_pairs(std::vector<NdPair> pairs,
                                    std::vector<std::string> query_set);

// ---- file formats ----

/// CSV, header "id_a,id_b,label", label in {IND,NIND,NND}.
std::vector<NdPair> read_pairs_csv(const std::string& path);
void write_pairs_csv(const std::string& path, const std::vector<NdPair>& pairs);

/// JSON array of {"cluster_id": int, "kind": "IND"|"NIND", "members": [...]};
/// objects may carry "mixed": bool (absent means false).
std::vector<NdCluster> read_clusters_json(const std::string& path);
void write_clusters_json(const std::string& path, const std::vector<NdCluster>& clusters);

/// CSV, header "id,path,md5hex". An empty md5hex cell is computed from the
/// file bytes on read when compute_missing_hashes is set.
std::vector<ImageRecord> read_manifest_csv(const std::string& path,
                                           bool compute_missing_hashes = false);
void write_manifest_csv(const std::string& path, const std::vector<ImageRecord>& records);

/// Newline-delimited ids, no header.
std::vector<std::string> read_id_list(const std::string& path);
void write_id_list(const std::string& path, const std::vector<std::string>& ids);

}  // namespace ndbench

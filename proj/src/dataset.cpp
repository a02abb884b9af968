#include "ndbench/dataset.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ndbench/errors.h"
#include "io_util.h"

namespace ndbench {

using detail::split_csv_line;
using detail::split_lines;

std::string_view to_string(PairLabel label) {
  switch (label) {
    case PairLabel::IND: return "IND";
    case PairLabel::NIND: return "NIND";
    case PairLabel::NND: return "NND";
  }
  throw std::logic_error("unreachable");
}

PairLabel pair_label_from_string(std::string_view s) {
  if (s == "IND") return PairLabel::IND;
  if (s == "NIND") return PairLabel::NIND;
  if (s == "NND") return PairLabel::NND;
  throw input_error("unknown pair label '" + std::string(s) + "'");
}

bool valid_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

namespace {

void require_valid_id(std::string_view id, const char* what) {
  if (!valid_id(id))
    throw input_error(std::string(what) + " id '" + std::string(id) +
                      "' is empty or contains characters outside [A-Za-z0-9._-]");
}

}  // namespace

NdPair make_nd_pair(std::string a, std::string b, PairLabel label) {
  require_valid_id(a, "pair");
  require_valid_id(b, "pair");
  if (a == b) throw input_error("self pair '" + a + "' is not allowed");
  if (b < a) std::swap(a, b);
  return NdPair{std::move(a), std::move(b), label};
}

DedupResult dedup_exact(const std::vector<ImageRecord>& records) {
  // Representative of each hash group = smallest id in the group.
  std::map<Md5Digest, std::size_t> rep;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = rep.try_emplace(records[i].content_hash, i);
    if (!inserted && records[i].id < records[it->second].id) it->second = i;
  }
  DedupResult out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::size_t keep = rep.at(records[i].content_hash);
    if (keep == i)
      out.kept.push_back(records[i]);
    else
      out.removed.emplace_back(records[i].id, records[keep].id);
  }
  return out;
}

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

std::vector<NdCluster> build_clusters(const std::vector<NdPair>& positives) {
  std::unordered_map<std::string, std::size_t> id_index;
  std::vector<std::string> ids;
  auto intern = [&](const std::string& id) {
    auto [it, inserted] = id_index.try_emplace(id, ids.size());
    if (inserted) ids.push_back(id);
    return it->second;
  };

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<PairLabel> edge_labels;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  edges.reserve(positives.size());
  for (const NdPair& p : positives) {
    if (p.label == PairLabel::NND)
      throw input_error("NND pair '" + p.id_a + "," + p.id_b +
                        "' cannot participate in clustering");
    require_valid_id(p.id_a, "pair");
    require_valid_id(p.id_b, "pair");
    if (p.id_a == p.id_b) throw input_error("self pair '" + p.id_a + "' in cluster input");
    if (p.id_b < p.id_a)
      throw input_error("pair '" + p.id_a + "," + p.id_b + "' is not canonicalized");
    const std::pair<std::size_t, std::size_t> edge{intern(p.id_a), intern(p.id_b)};
    if (!seen.insert(edge).second)
      throw input_error("duplicate pair '" + p.id_a + "," + p.id_b + "'");
    edges.push_back(edge);
    edge_labels.push_back(p.label);
  }

  UnionFind uf(ids.size());
  for (const auto& [a, b] : edges) uf.unite(a, b);

  // Gather members and edge-label mix per component root.
  std::unordered_map<std::size_t, NdCluster> by_root;
  for (std::size_t i = 0; i < ids.size(); ++i)
    by_root[uf.find(i)].members.push_back(ids[i]);
  std::unordered_map<std::size_t, std::pair<bool, bool>> label_mix;  // (ind, nind)
  for (std::size_t e = 0; e < edges.size(); ++e) {
    auto& mix = label_mix[uf.find(edges[e].first)];
    (edge_labels[e] == PairLabel::IND ? mix.first : mix.second) = true;
  }

  std::vector<NdCluster> clusters;
  clusters.reserve(by_root.size());
  for (auto& [root, cluster] : by_root) {
    const auto [has_ind, has_nind] = label_mix.at(root);
    cluster.kind = has_nind ? PairLabel::NIND : PairLabel::IND;
    cluster.mixed = has_ind && has_nind;
    std::sort(cluster.members.begin(), cluster.members.end());
    clusters.push_back(std::move(cluster));
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const NdCluster& a, const NdCluster& b) {
              return a.members.front() < b.members.front();
            });
  for (std::size_t i = 0; i < clusters.size(); ++i)
    clusters[i].cluster_id = static_cast<std::int64_t>(i);
  return clusters;
}

std::vector<NdPair> enumerate_pairs(const NdCluster& cluster) {
  if (cluster.members.size() < 2)
    throw input_error("cluster " + std::to_string(cluster.cluster_id) +
                      " has fewer than 2 members");
  if (cluster.kind == PairLabel::NND)
    throw input_error("cluster kind must be IND or NIND");
  std::vector<NdPair> out;
  out.reserve(cluster.members.size() * (cluster.members.size() - 1) / 2);
  for (std::size_t i = 0; i < cluster.members.size(); ++i)
    for (std::size_t j = i + 1; j < cluster.members.size(); ++j)
      out.push_back(make_nd_pair(cluster.members[i], cluster.members[j], cluster.kind));
  return out;
}

void GroundTruth::validate() const {
  std::map<std::pair<std::string_view, std::string_view>, PairLabel> seen;
  std::vector<NdPair> positives;
  for (const NdPair& p : pairs) {
    require_valid_id(p.id_a, "pair");
    require_valid_id(p.id_b, "pair");
    if (p.id_a == p.id_b) throw input_error("self pair '" + p.id_a + "'");
    if (p.id_b < p.id_a)
      throw input_error("pair '" + p.id_a + "," + p.id_b + "' is not canonicalized");
    auto [it, inserted] = seen.try_emplace({p.id_a, p.id_b}, p.label);
    if (!inserted)
      throw input_error("duplicate pair '" + p.id_a + "," + p.id_b + "'");
    if (p.label != PairLabel::NND) positives.push_back(p);
  }

  const std::vector<NdCluster> rebuilt = build_clusters(positives);
  if (rebuilt.size() != clusters.size())
    throw input_error("clusters do not match the positive pairs: expected " +
                      std::to_string(rebuilt.size()) + " components, have " +
                      std::to_string(clusters.size()));

  std::vector<const NdCluster*> sorted;
  std::set<std::int64_t> cluster_ids;
  sorted.reserve(clusters.size());
  for (const NdCluster& c : clusters) {
    if (c.members.size() < 2)
      throw input_error("cluster " + std::to_string(c.cluster_id) +
                        " has fewer than 2 members");
    if (!std::is_sorted(c.members.begin(), c.members.end()) ||
        std::adjacent_find(c.members.begin(), c.members.end()) != c.members.end())
      throw input_error("cluster " + std::to_string(c.cluster_id) +
                        " members are not sorted and unique");
    if (!cluster_ids.insert(c.cluster_id).second)
      throw input_error("duplicate cluster_id " + std::to_string(c.cluster_id));
    sorted.push_back(&c);
  }
  std::sort(sorted.begin(), sorted.end(), [](const NdCluster* a, const NdCluster* b) {
    return a->members.front() < b->members.front();
  });
  std::unordered_map<std::string_view, const NdCluster*> member_cluster;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const NdCluster& have = *sorted[i];
    const NdCluster& want = rebuilt[i];
    if (have.members != want.members)
      throw input_error("cluster " + std::to_string(have.cluster_id) +
                        " does not match a connected component of the positive pairs");
    if (have.kind != want.kind || have.mixed != want.mixed)
      throw input_error("cluster " + std::to_string(have.cluster_id) +
                        " kind/mixed flags do not match its edges");
    for (const std::string& m : have.members) member_cluster.emplace(m, &have);
  }

  for (const NdPair& p : pairs) {
    auto a = member_cluster.find(p.id_a);
    auto b = member_cluster.find(p.id_b);
    const bool same_cluster =
        a != member_cluster.end() && b != member_cluster.end() && a->second == b->second;
    if (p.label == PairLabel::NND && same_cluster)
      throw input_error("NND pair '" + p.id_a + "," + p.id_b +
                        "' connects two members of cluster " +
                        std::to_string(a->second->cluster_id));
    if (p.label != PairLabel::NND && !a->second->mixed && p.label != a->second->kind)
      throw input_error("pair '" + p.id_a + "," + p.id_b +
                        "' label disagrees with its cluster kind");
  }

  std::set<std::string_view> queries;
  for (const std::string& q : query_set) {
    require_valid_id(q, "query");
    if (!queries.insert(q).second) throw input_error("duplicate query id '" + q + "'");
    if (member_cluster.count(q))
      throw input_error("query id '" + q + "' is a cluster member");
  }
}

GroundTruth ground_truth_from_pairs(std::vector<NdPair> pairs,
                                    std::vector<std::string> query_set) {
  GroundTruth gt;
  gt.pairs = std::move(pairs);
  gt.query_set = std::move(query_set);
  std::vector<NdPair> positives;
  for (const NdPair& p : gt.pairs)
    if (p.label != PairLabel::NND) positives.push_back(p);
  gt.clusters = build_clusters(positives);
  gt.validate();
  return gt;
}

// ---- file formats ----

std::vector<NdPair> read_pairs_csv(const std::string& path) {
  const std::string text = detail::read_text_file(path);
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != "id_a,id_b,label")
    throw input_error(path + ": expected header 'id_a,id_b,label'");
  std::vector<NdPair> out;
  out.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv_line(lines[i]);
    if (cells.size() != 3)
      throw input_error(path + ":" + std::to_string(i + 1) + ": expected 3 cells");
    out.push_back(make_nd_pair(std::string(cells[0]), std::string(cells[1]),
                               pair_label_from_string(cells[2])));
  }
  return out;
}

void write_pairs_csv(const std::string& path, const std::vector<NdPair>& pairs) {
  std::string out = "id_a,id_b,label\n";
  for (const NdPair& p : pairs) {
    out += p.id_a;
    out += ',';
    out += p.id_b;
    out += ',';
    out += to_string(p.label);
    out += '\n';
  }
  detail::write_text_file(path, out);
}

std::vector<NdCluster> read_clusters_json(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw input_error(path + ": " + e.what());
  }
  if (!doc.is_array()) throw input_error(path + ": expected a JSON array");
  std::vector<NdCluster> out;
  out.reserve(doc.size());
  for (const auto& item : doc) {
    NdCluster c;
    try {
      c.cluster_id = item.at("cluster_id").get<std::int64_t>();
      c.kind = pair_label_from_string(item.at("kind").get<std::string>());
      c.members = item.at("members").get<std::vector<std::string>>();
      c.mixed = item.value("mixed", false);
    } catch (const nlohmann::json::exception& e) {
      throw input_error(path + ": " + e.what());
    }
    if (c.kind == PairLabel::NND)
      throw input_error(path + ": cluster kind must be IND or NIND");
    out.push_back(std::move(c));
  }
  return out;
}

void write_clusters_json(const std::string& path, const std::vector<NdCluster>& clusters) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const NdCluster& c : clusters) {
    nlohmann::ordered_json item;
    item["cluster_id"] = c.cluster_id;
    item["kind"] = std::string(to_string(c.kind));
    item["members"] = c.members;
    if (c.mixed) item["mixed"] = true;
    doc.push_back(std::move(item));
  }
  detail::write_text_file(path, doc.dump(2) + "\n");
}

std::vector<ImageRecord> read_manifest_csv(const std::string& path,
                                           bool compute_missing_hashes) {
  const std::string text = detail::read_text_file(path);
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != "id,path,md5hex")
    throw input_error(path + ": expected header 'id,path,md5hex'");
  std::vector<ImageRecord> out;
  std::set<std::string_view> ids;
  out.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv_line(lines[i]);
    if (cells.size() != 3)
      throw input_error(path + ":" + std::to_string(i + 1) + ": expected 3 cells");
    ImageRecord rec;
    rec.id = std::string(cells[0]);
    require_valid_id(rec.id, "image");
    rec.path = std::string(cells[1]);
    if (rec.path.empty())
      throw input_error(path + ":" + std::to_string(i + 1) + ": empty path");
    if (cells[2].empty()) {
      if (compute_missing_hashes) rec.content_hash = md5_file(rec.path);
    } else {
      rec.content_hash = md5_from_hex(cells[2]);
    }
    out.push_back(std::move(rec));
    if (!ids.insert(out.back().id).second)
      throw input_error(path + ": duplicate image id '" + out.back().id + "'");
  }
  return out;
}

void write_manifest_csv(const std::string& path, const std::vector<ImageRecord>& records) {
  std::string out = "id,path,md5hex\n";
  for (const ImageRecord& r : records) {
    if (r.path.find(',') != std::string::npos || r.path.find('\n') != std::string::npos)
      throw input_error("image path '" + r.path + "' contains a comma or newline");
    out += r.id;
    out += ',';
    out += r.path;
    out += ',';
    // The zero digest means "not yet hashed" and round-trips as an empty cell.
    if (r.content_hash != Md5Digest{}) out += to_hex(r.content_hash);
    out += '\n';
  }
  detail::write_text_file(path, out);
}

std::vector<std::string> read_id_list(const std::string& path) {
  const std::string text = detail::read_text_file(path);
  std::vector<std::string> out;
  for (std::string_view line : split_lines(text)) {
    if (line.empty()) continue;
    require_valid_id(line, "listed");
    out.emplace_back(line);
  }
  return out;
}

void write_id_list(const std::string& path, const std::vector<std::string>& ids) {
  std::string out;
  for (const std::string& id : ids) {
    out += id;
    out += '\n';
  }
  detail::write_text_file(path, out);
}

}  // namespace ndbench

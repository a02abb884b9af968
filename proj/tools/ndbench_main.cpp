// ndbench: benchmark workbench for unsupervised near-duplicate image
// detection. Verbs cover descriptor extraction, PCA whitening, exact search,
// hard-negative mining, ROC evaluation, range-query simulation, and
// collection-scale false-positive projection.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ndbench/dataset.h"
#include "ndbench/descriptors.h"
#include "ndbench/errors.h"
#include "ndbench/evaluation.h"
#include "ndbench/fixture.h"
#include "ndbench/gist.h"
#include "ndbench/image_io.h"
#include "ndbench/index.h"
#include "ndbench/manifest.h"
#include "ndbench/mining.h"
#include "ndbench/parallel.h"
#include "ndbench/querysim.h"
#include "ndbench/version.h"
#include "io_util.h"

namespace fs = std::filesystem;
using namespace ndbench;

namespace {

std::string fmt(double v) { return detail::format_double(v); }

void note_written(const std::string& path) { std::cout << "wrote " << path << "\n"; }

std::vector<ScoredPair> score_pairs(const std::vector<NdPair>& pairs,
                                    const DescriptorMatrix& m) {
  const auto idx = m.id_map();
  std::vector<ScoredPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto a = idx.find(p.id_a);
    auto b = idx.find(p.id_b);
    if (a == idx.end()) throw input_error("no descriptor for id '" + p.id_a + "'");
    if (b == idx.end()) throw input_error("no descriptor for id '" + p.id_b + "'");
    out.push_back({p, pair_distance(m.row(a->second), m.row(b->second))});
  }
  return out;
}

RocMode roc_mode_from_string(const std::string& s) {
  if (s == "all") return RocMode::all_positives;
  if (s == "ind") return RocMode::ind_only;
  throw input_error("mode must be 'all' or 'ind', got '" + s + "'");
}

GistConfig::Pooling pooling_from_string(const std::string& s) {
  if (s == "mean") return GistConfig::Pooling::mean_magnitude;
  if (s == "energy") return GistConfig::Pooling::mean_energy;
  throw input_error("pooling must be 'mean' or 'energy', got '" + s + "'");
}

// ---- gist ----

struct GistArgs {
  std::string manifest;
  std::string root;
  std::string image;
  std::string id;
  std::string out;
  int image_side = 512;
  int scales = 4;
  int orientations = 8;
  int blocks = 4;
  std::string pooling = "mean";
};

int run_gist(const GistArgs& a, int threads) {
  GistConfig cfg;
  cfg.image_side = a.image_side;
  cfg.scales = a.scales;
  cfg.orientations_per_scale = a.orientations;
  cfg.blocks = a.blocks;
  cfg.pooling = pooling_from_string(a.pooling);
  cfg.validate();

  std::vector<ImageRecord> records;
  fs::path root;
  RunManifest man;
  man.command = "gist";
  man.tool_version = kVersion;
  if (!a.manifest.empty()) {
    records = read_manifest_csv(a.manifest);
    root = a.root.empty() ? fs::path(a.manifest).parent_path() : fs::path(a.root);
    man.add_input(a.manifest);
  } else if (!a.image.empty()) {
    ImageRecord rec;
    rec.id = a.id.empty() ? fs::path(a.image).stem().string() : a.id;
    rec.path = fs::path(a.image).filename().string();
    records.push_back(std::move(rec));
    root = fs::path(a.image).parent_path();
    man.add_input(a.image);
  } else {
    throw input_error("gist needs --manifest or --image");
  }

  if (records.empty()) throw input_error("no images listed");

  // Unreadable images are skipped with a warning so one bad file does not
  // abort a long extraction run.
  DescriptorMatrix out;
  out.dim = static_cast<std::size_t>(cfg.descriptor_length());
  std::vector<Descriptor> results(records.size());
  std::vector<std::string> warnings(records.size());
  parallel_chunks(records.size(), 1, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      try {
        GrayImage img = load_image_gray((root / records[i].path).string());
        if (img.width != static_cast<std::size_t>(cfg.image_side) ||
            img.height != static_cast<std::size_t>(cfg.image_side))
          img = resize_bilinear(img, cfg.image_side, cfg.image_side);
        results[i] = gist_extract(img, cfg);
      } catch (const std::exception& e) {
        warnings[i] = e.what();
      }
    }
  });
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!warnings[i].empty()) {
      std::cerr << "warning: skipping '" << records[i].id << "': " << warnings[i] << "\n";
      continue;
    }
    out.append(records[i].id, std::move(results[i].values));
  }
  if (out.count == 0) throw input_error("no readable images");
  write_ndbd(a.out, out);
  note_written(a.out);

  man.config = {{"image_side", std::to_string(cfg.image_side)},
                {"scales", std::to_string(cfg.scales)},
                {"orientations", std::to_string(cfg.orientations_per_scale)},
                {"blocks", std::to_string(cfg.blocks)},
                {"pooling", a.pooling}};
  man.outputs = {a.out, a.out + ".ids"};
  man.write_for(a.out);
  return 0;
}

// ---- aggregate ----

struct AggregateArgs {
  std::string maps_dir;
  std::vector<std::string> maps;
  std::string method = "spoc";
  std::string pca;
  std::string out;
  int max_scale = 2;
  double overlap = 0.4;
};

int run_aggregate(const AggregateArgs& a, int threads) {
  std::vector<std::string> files = a.maps;
  if (!a.maps_dir.empty()) {
    for (const auto& entry : fs::directory_iterator(a.maps_dir))
      if (entry.is_regular_file() && entry.path().extension() == ".ndfm")
        files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw input_error("aggregate found no .ndfm feature maps");

  const bool rmac = a.method == "rmac";
  if (!rmac && a.method != "spoc")
    throw input_error("method must be 'spoc' or 'rmac', got '" + a.method + "'");

  PcaModel pca;
  bool have_pca = !a.pca.empty();
  if (have_pca) pca = read_ndpc(a.pca);
  if (rmac && !have_pca)
    throw input_error("rmac aggregation needs --pca (per-region whitening)");

  RmacConfig cfg;
  cfg.max_scale = a.max_scale;
  cfg.overlap_target = a.overlap;

  std::vector<Descriptor> results(files.size());
  parallel_chunks(files.size(), 1, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const FeatureMap map = read_ndfm(files[i]);
      if (rmac) {
        results[i] = rmac_aggregate(map, cfg, pca);
      } else {
        Descriptor d = spoc_aggregate(map);
        results[i] = have_pca ? pca_whiten(d, pca) : l2_normalize(std::move(d));
      }
    }
  });

  DescriptorMatrix out;
  out.dim = results.front().values.size();
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::string id = fs::path(files[i]).stem().string();
    if (!valid_id(id))
      throw input_error("feature map stem '" + id + "' is not a valid id");
    out.append(std::move(id), std::move(results[i].values));
  }
  write_ndbd(a.out, out);
  note_written(a.out);

  RunManifest man;
  man.command = "aggregate";
  man.tool_version = kVersion;
  for (const auto& f : files) man.add_input(f);
  if (have_pca) man.add_input(a.pca);
  man.config = {{"method", a.method},
                {"max_scale", std::to_string(a.max_scale)},
                {"overlap", fmt(a.overlap)}};
  man.outputs = {a.out, a.out + ".ids"};
  man.write_for(a.out);
  return 0;
}

// ---- pca-train ----

struct PcaTrainArgs {
  std::string descriptors;
  std::string out;
  double epsilon = 1e-10;
};

int run_pca_train(const PcaTrainArgs& a) {
  const DescriptorMatrix m = read_ndbd(a.descriptors);
  const PcaModel model = pca_train(m, a.epsilon);
  write_ndpc(a.out, model);
  note_written(a.out);

  RunManifest man;
  man.command = "pca-train";
  man.tool_version = kVersion;
  man.add_input(a.descriptors);
  man.config = {{"epsilon", fmt(a.epsilon)}};
  man.outputs = {a.out};
  man.write_for(a.out);
  return 0;
}

// ---- index ----

struct IndexArgs {
  std::string descriptors;
  std::string queries;
  std::size_t knn = 0;
  double range = 0.0;
  std::size_t cap = 0;
  std::string out;
};

int run_index(const IndexArgs& a, int threads) {
  const FlatIndex index = FlatIndex::load(a.descriptors);
  const DescriptorMatrix queries =
      a.queries.empty() ? index.matrix() : read_ndbd(a.queries);
  if ((a.knn == 0) == (a.range == 0.0))
    throw input_error("index needs exactly one of --knn or --range");

  SearchOptions opts;
  opts.threads = threads;
  std::vector<std::vector<Neighbor>> hits;
  if (a.knn > 0) {
    hits = index.knn_batch(queries, a.knn, opts);
  } else {
    hits = index.range_batch(queries, a.range,
                             a.cap == 0 ? FlatIndex::kUnlimited : a.cap, opts);
  }

  std::string text = "query_id,neighbor_id,distance,rank\n";
  for (std::size_t q = 0; q < hits.size(); ++q) {
    for (std::size_t r = 0; r < hits[q].size(); ++r) {
      text += queries.ids[q];
      text += ',';
      text += hits[q][r].id;
      text += ',';
      text += fmt(hits[q][r].distance);
      text += ',';
      text += std::to_string(r + 1);
      text += '\n';
    }
  }
  detail::write_text_file(a.out, text);
  note_written(a.out);

  RunManifest man;
  man.command = "index";
  man.tool_version = kVersion;
  man.add_input(a.descriptors);
  if (!a.queries.empty()) man.add_input(a.queries);
  man.config = {{"knn", std::to_string(a.knn)},
                {"range", fmt(a.range)},
                {"cap", std::to_string(a.cap)}};
  man.outputs = {a.out};
  man.write_for(a.out);
  return 0;
}

// ---- mine ----

struct MineArgs {
  std::string descriptors;
  std::string query_descriptors;
  std::string queries;
  std::string strategy = "hn2";
  std::size_t knn = 10;
  std::size_t total_pairs = 10000;
  std::string out;
};

int run_mine(const MineArgs& a, int threads) {
  const FlatIndex pool = FlatIndex::load(a.descriptors);
  const DescriptorMatrix lookup =
      a.query_descriptors.empty() ? pool.matrix() : read_ndbd(a.query_descriptors);

  MiningConfig cfg;
  cfg.strategy = mining_strategy_from_string(a.strategy);
  cfg.queries = read_id_list(a.queries);
  cfg.knn_per_query = a.knn;
  cfg.total_pairs = a.total_pairs;

  const HardNegativeSet set = mine_hard_negatives(pool, lookup, cfg, threads);
  write_mined_csv(a.out, set);
  note_written(a.out);
  std::cout << "mined " << set.pairs.size() << " pairs from " << set.query_count
            << " queries x " << set.pool_count
            << " pool rows (specificity floor "
            << fmt(specificity_floor(set.query_count, set.pool_count)) << ")\n";

  RunManifest man;
  man.command = "mine";
  man.tool_version = kVersion;
  man.add_input(a.descriptors);
  if (!a.query_descriptors.empty()) man.add_input(a.query_descriptors);
  man.add_input(a.queries);
  man.config = {{"strategy", a.strategy},
                {"knn", std::to_string(a.knn)},
                {"total_pairs", std::to_string(a.total_pairs)}};
  man.outputs = {a.out};
  man.write_for(a.out);
  return 0;
}

// ---- roc ----

struct RocArgs {
  std::string pairs;
  std::string descriptors;
  std::string mined;
  std::string relabels;
  std::string mode = "all";
  std::size_t max_points = 0;
  std::string out_curve;
  std::string out_summary;
};

// Labeled pairs scored by descriptor distance, plus mined pairs as negatives
// (after optional relabeling). Returns the scored set and the strategy tag.
std::pair<std::vector<ScoredPair>, std::string> assemble_scored(
    const std::vector<NdPair>& labeled, const DescriptorMatrix& m,
    const std::string& mined_path, const std::string& relabels_path) {
  std::vector<ScoredPair> scored = score_pairs(labeled, m);
  std::string strategy = "full";
  if (!mined_path.empty()) {
    HardNegativeSet mined = read_mined_csv(mined_path);
    strategy = std::string(to_string(mined.strategy));
    if (!relabels_path.empty()) {
      const auto relabels = read_pairs_csv(relabels_path);
      RelabelOutcome outcome = apply_relabels(mined, relabels);
      for (auto& sp : outcome.promoted) scored.push_back(std::move(sp));
      mined = std::move(outcome.negatives);
    }
    for (const auto& mp : mined.pairs)
      scored.push_back({make_nd_pair(mp.query_id, mp.pool_id, PairLabel::NND),
                        mp.distance});
  }
  return {std::move(scored), std::move(strategy)};
}

int run_roc(const RocArgs& a) {
  const DescriptorMatrix m = read_ndbd(a.descriptors);
  const auto labeled = read_pairs_csv(a.pairs);
  auto [scored, strategy] = assemble_scored(labeled, m, a.mined, a.relabels);

  const RocCurve curve = roc(scored, roc_mode_from_string(a.mode), a.max_points);
  write_roc_csv(a.out_curve, curve);
  note_written(a.out_curve);

  EvalSummary summary{curve.auc, curve.ci_low, curve.ci_high,
                      curve.n_pos, curve.n_neg, strategy};
  write_summary_json(a.out_summary, summary);
  note_written(a.out_summary);
  std::cout << "auc " << fmt(curve.auc) << " [" << fmt(curve.ci_low) << ", "
            << fmt(curve.ci_high) << "] on " << curve.n_pos << " positives, "
            << curve.n_neg << " negatives\n";

  RunManifest man;
  man.command = "roc";
  man.tool_version = kVersion;
  man.add_input(a.pairs);
  man.add_input(a.descriptors);
  if (!a.mined.empty()) man.add_input(a.mined);
  if (!a.relabels.empty()) man.add_input(a.relabels);
  man.config = {{"mode", a.mode}, {"max_points", std::to_string(a.max_points)}};
  man.outputs = {a.out_curve, a.out_summary};
  man.write_for(a.out_curve);
  man.write_for(a.out_summary);
  return 0;
}

// ---- simulate ----

struct SimulateArgs {
  std::string pairs;
  std::string clusters;
  std::string queries;
  std::string pool;
  std::string descriptors;
  std::string mined;
  std::vector<double> thresholds;
  std::vector<double> fp_rates;
  std::vector<std::size_t> caps{0};
  std::string out;
  std::string per_query;
};

GroundTruth load_ground_truth(const std::string& pairs_path,
                              const std::string& clusters_path,
                              const std::string& queries_path) {
  auto pairs = read_pairs_csv(pairs_path);
  auto queries = read_id_list(queries_path);
  if (clusters_path.empty()) return ground_truth_from_pairs(pairs, queries);
  GroundTruth gt;
  gt.pairs = std::move(pairs);
  gt.clusters = read_clusters_json(clusters_path);
  gt.query_set = std::move(queries);
  gt.validate();
  return gt;
}

int run_simulate(const SimulateArgs& a, int threads) {
  const DescriptorMatrix m = read_ndbd(a.descriptors);
  GroundTruth gt = load_ground_truth(a.pairs, a.clusters, a.queries);

  std::vector<double> thresholds = a.thresholds;
  if (thresholds.empty()) {
    if (a.fp_rates.empty() || a.mined.empty())
      throw input_error("simulate needs --thresholds, or --fp-rates with --mined");
    auto [scored, strategy] = assemble_scored(gt.pairs, m, a.mined, "");
    const RocCurve curve = roc(scored);
    thresholds = pick_thresholds(curve, a.fp_rates);
  }

  SimDesign design = build_design(gt, read_id_list(a.pool), m, thresholds, a.caps);
  const SimResult result = run_sim(design, threads);
  write_sim_csv(a.out, result);
  note_written(a.out);
  if (!a.per_query.empty()) {
    write_sim_per_query_csv(a.per_query, design, result);
    note_written(a.per_query);
  }

  RunManifest man;
  man.command = "simulate";
  man.tool_version = kVersion;
  man.add_input(a.pairs);
  if (!a.clusters.empty()) man.add_input(a.clusters);
  man.add_input(a.queries);
  man.add_input(a.pool);
  man.add_input(a.descriptors);
  if (!a.mined.empty()) man.add_input(a.mined);
  std::string tlist;
  for (double t : thresholds) tlist += (tlist.empty() ? "" : ",") + fmt(t);
  std::string clist;
  for (auto c : a.caps) clist += (clist.empty() ? "" : ",") + std::to_string(c);
  man.config = {{"thresholds", tlist}, {"caps", clist}};
  man.outputs = {a.out};
  if (!a.per_query.empty()) man.outputs.push_back(a.per_query);
  man.write_for(a.out);
  return 0;
}

// ---- project ----

struct ProjectArgs {
  double specificity = -1.0;
  std::uint64_t queries = 0;
  std::uint64_t targets = 0;
  std::uint64_t unordered_n = 0;
  double sensitivity = -1.0;
  double nd_count = -1.0;
  std::string out;
};

int run_project(const ProjectArgs& a) {
  if (a.specificity < 0.0 || a.specificity > 1.0)
    throw input_error("project needs --specificity in [0, 1]");
  nlohmann::ordered_json j;
  j["specificity"] = a.specificity;
  if (a.queries > 0 && a.targets > 0) {
    const FpProjection p = fp_projection(a.specificity, a.queries, a.targets);
    j["queries"] = a.queries;
    j["targets"] = a.targets;
    j["fp_count"] = p.fp_count;
    j["fp_per_query"] = p.fp_per_query;
  }
  if (a.unordered_n > 0)
    j["fp_count_unordered"] = fp_count_unordered(a.specificity, a.unordered_n);
  if (a.sensitivity >= 0.0 && a.nd_count >= 0.0) {
    j["sensitivity"] = a.sensitivity;
    j["expected_tp"] = expected_tp(a.sensitivity, a.nd_count);
  }
  detail::write_text_file(a.out, j.dump(2) + "\n");
  note_written(a.out);

  RunManifest man;
  man.command = "project";
  man.tool_version = kVersion;
  man.config = {{"specificity", fmt(a.specificity)},
                {"queries", std::to_string(a.queries)},
                {"targets", std::to_string(a.targets)}};
  man.outputs = {a.out};
  man.write_for(a.out);
  return 0;
}

// ---- pipeline ----

struct PipelineArgs {
  std::string descriptors;
  std::string pairs;
  std::string clusters;
  std::string queries;
  std::string pool;
  std::string relabels;
  std::string strategy = "hn2";
  std::size_t knn = 10;
  std::size_t total_pairs = 1000;
  std::vector<double> fp_rates{0.1};
  std::vector<std::size_t> caps{0};
  std::string mode = "all";
  std::string out_dir = ".";
};

int run_pipeline(const PipelineArgs& a, int threads) {
  fs::create_directories(a.out_dir);
  const DescriptorMatrix m = read_ndbd(a.descriptors);
  GroundTruth gt = load_ground_truth(a.pairs, a.clusters, a.queries);

  RunManifest base;
  base.command = "pipeline";
  base.tool_version = kVersion;
  base.add_input(a.descriptors);
  base.add_input(a.pairs);
  if (!a.clusters.empty()) base.add_input(a.clusters);
  base.add_input(a.queries);
  base.add_input(a.pool);
  if (!a.relabels.empty()) base.add_input(a.relabels);
  std::string rlist;
  for (double r : a.fp_rates) rlist += (rlist.empty() ? "" : ",") + fmt(r);
  std::string clist;
  for (auto c : a.caps) clist += (clist.empty() ? "" : ",") + std::to_string(c);
  base.config = {{"strategy", a.strategy},
                 {"knn", std::to_string(a.knn)},
                 {"total_pairs", std::to_string(a.total_pairs)},
                 {"fp_rates", rlist},
                 {"caps", clist},
                 {"mode", a.mode}};
  auto emit = [&](const std::string& path) {
    RunManifest man = base;
    man.outputs = {path};
    man.write_for(path);
    note_written(path);
  };

  // Mining pool: every descriptor that is not a designated negative query.
  std::unordered_set<std::string> query_ids(gt.query_set.begin(), gt.query_set.end());
  DescriptorMatrix pool_matrix;
  pool_matrix.dim = m.dim;
  for (std::size_t i = 0; i < m.count; ++i) {
    if (query_ids.count(m.ids[i])) continue;
    const auto r = m.row(i);
    pool_matrix.append(m.ids[i], {r.begin(), r.end()});
  }
  const FlatIndex pool = FlatIndex::build(std::move(pool_matrix));

  MiningConfig mine_cfg;
  mine_cfg.strategy = mining_strategy_from_string(a.strategy);
  mine_cfg.queries = gt.query_set;
  mine_cfg.knn_per_query = a.knn;
  mine_cfg.total_pairs = a.total_pairs;
  HardNegativeSet mined = mine_hard_negatives(pool, m, mine_cfg, threads);
  const std::string mined_path = (fs::path(a.out_dir) / "mined.csv").string();
  write_mined_csv(mined_path, mined);
  emit(mined_path);

  // The mined subset may only overstate the full-design separability; a
  // violation means the mining or counting code is broken.
  std::vector<ScoredPair> positives = score_pairs(gt.pairs, m);
  if (!a.relabels.empty()) {
    RelabelOutcome outcome = apply_relabels(mined, read_pairs_csv(a.relabels));
    for (auto& sp : outcome.promoted) positives.push_back(std::move(sp));
    mined = std::move(outcome.negatives);
  }
  std::vector<double> positive_distances;
  for (const auto& sp : positives)
    if (sp.pair.label != PairLabel::NND) positive_distances.push_back(sp.distance);

  const auto full_negatives =
      enumerate_negative_pairs(pool.matrix(), m, gt.query_set, threads);
  const BoundReport bound = verify_upper_bound(positive_distances, full_negatives,
                                               mine_cfg.strategy, a.total_pairs);
  {
    nlohmann::ordered_json j;
    j["auc_full"] = bound.auc_full;
    j["auc_hn"] = bound.auc_hn;
    j["roc_auc_full"] = bound.roc_auc_full;
    j["roc_auc_hn"] = bound.roc_auc_hn;
    j["bound_holds"] = bound.bound_holds;
    j["n_pos"] = bound.n_pos;
    j["n_neg_full"] = bound.n_neg_full;
    j["n_neg_hn"] = bound.n_neg_hn;
    j["strategy"] = std::string(to_string(bound.strategy));
    const std::string bound_path = (fs::path(a.out_dir) / "bound.json").string();
    detail::write_text_file(bound_path, j.dump(2) + "\n");
    emit(bound_path);
  }
  if (!bound.bound_holds)
    throw invariant_error("mined-subset auc " + fmt(bound.auc_hn) +
                          " fails to dominate full-design auc " + fmt(bound.auc_full));

  std::vector<ScoredPair> scored = positives;
  for (const auto& mp : mined.pairs)
    scored.push_back({make_nd_pair(mp.query_id, mp.pool_id, PairLabel::NND), mp.distance});
  const RocCurve curve = roc(scored, roc_mode_from_string(a.mode));
  const std::string roc_path = (fs::path(a.out_dir) / "roc.csv").string();
  write_roc_csv(roc_path, curve);
  emit(roc_path);

  EvalSummary summary{curve.auc, curve.ci_low, curve.ci_high, curve.n_pos,
                      curve.n_neg, std::string(to_string(mined.strategy))};
  const std::string summary_path = (fs::path(a.out_dir) / "summary.json").string();
  write_summary_json(summary_path, summary);
  emit(summary_path);
  std::cout << "auc " << fmt(curve.auc) << " [" << fmt(curve.ci_low) << ", "
            << fmt(curve.ci_high) << "] on " << curve.n_pos << " positives, "
            << curve.n_neg << " negatives\n";

  const std::vector<double> thresholds = pick_thresholds(curve, a.fp_rates);
  SimDesign design = build_design(gt, read_id_list(a.pool), m, thresholds, a.caps);
  const SimResult sim = run_sim(design, threads);
  const std::string sim_path = (fs::path(a.out_dir) / "sim.csv").string();
  write_sim_csv(sim_path, sim);
  emit(sim_path);

  // Collection-scale projection at each picked threshold: measured FP rate
  // on the mined set, the implied per-query and total counts against the
  // simulated database, and the expected true positives.
  const double nd_count = static_cast<double>(curve.n_pos);
  const std::uint64_t db_size = design.database.size();
  const std::uint64_t n_queries =
      design.positive_queries.size() + design.negative_queries.size();
  std::string text =
      "threshold,sensitivity,specificity,projected_rate,fp_per_query,fp_total,expected_tp\n";
  for (double t : thresholds) {
    const SensSpec ss = sens_spec_at(scored, t, roc_mode_from_string(a.mode));
    const FpProjection p = fp_projection(ss.specificity, n_queries, db_size);
    text += fmt(t);
    text += ',';
    text += fmt(ss.sensitivity);
    text += ',';
    text += fmt(ss.specificity);
    text += ',';
    text += fmt(project_fp_rate(1.0 - ss.specificity, db_size));
    text += ',';
    text += fmt(p.fp_per_query);
    text += ',';
    text += fmt(p.fp_count);
    text += ',';
    text += fmt(expected_tp(ss.sensitivity, nd_count));
    text += '\n';
  }
  const std::string proj_path = (fs::path(a.out_dir) / "projection.csv").string();
  detail::write_text_file(proj_path, text);
  emit(proj_path);
  return 0;
}

// ---- fixture ----

struct FixtureArgs {
  std::string out_dir;
  FixtureSpec spec;
};

int run_fixture(const FixtureArgs& a) {
  const FixturePaths paths = write_fixture(a.out_dir, a.spec);
  for (const auto& p : {paths.descriptors, paths.pairs, paths.clusters, paths.queries,
                        paths.pool, paths.image_manifest, paths.config})
    note_written(p);

  RunManifest man;
  man.command = "fixture";
  man.tool_version = kVersion;
  man.config = {{"seed", std::to_string(a.spec.seed)},
                {"dim", std::to_string(a.spec.dim)},
                {"clusters", std::to_string(a.spec.clusters)},
                {"distractors", std::to_string(a.spec.distractors)},
                {"negative_queries", std::to_string(a.spec.negative_queries)},
                {"images", std::to_string(a.spec.images)},
                {"feature_maps", std::to_string(a.spec.feature_maps)}};
  man.outputs = {paths.descriptors, paths.pairs, paths.clusters, paths.queries,
                 paths.pool, paths.image_manifest, paths.config};
  man.write_for(paths.descriptors);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"near-duplicate image detection benchmark workbench"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "read options from a key=value file ([verb] sections)");

  int threads = 0;
  std::uint64_t seed = 8125;
  app.add_option("--threads", threads, "worker threads, 0 = all cores")
      ->capture_default_str();
  app.add_option("--seed", seed, "seed for generative verbs")->capture_default_str();

  GistArgs gist_args;
  auto* gist_cmd = app.add_subcommand("gist", "extract gist descriptors from images");
  gist_cmd->add_option("--manifest", gist_args.manifest, "image manifest csv (id,path,md5hex)");
  gist_cmd->add_option("--root", gist_args.root, "base directory for manifest paths");
  gist_cmd->add_option("--image", gist_args.image, "single image file");
  gist_cmd->add_option("--id", gist_args.id, "id for --image (default: file stem)");
  gist_cmd->add_option("--out", gist_args.out, "output descriptor file (.ndbd)")->required();
  gist_cmd->add_option("--image-side", gist_args.image_side)->capture_default_str();
  gist_cmd->add_option("--scales", gist_args.scales)->capture_default_str();
  gist_cmd->add_option("--orientations", gist_args.orientations)->capture_default_str();
  gist_cmd->add_option("--blocks", gist_args.blocks)->capture_default_str();
  gist_cmd->add_option("--pooling", gist_args.pooling, "mean or energy")->capture_default_str();

  AggregateArgs agg_args;
  auto* agg_cmd = app.add_subcommand("aggregate", "pool feature maps into descriptors");
  agg_cmd->add_option("--maps-dir", agg_args.maps_dir, "directory of .ndfm files");
  agg_cmd->add_option("--map", agg_args.maps, "individual .ndfm file (repeatable)");
  agg_cmd->add_option("--method", agg_args.method, "spoc or rmac")->capture_default_str();
  agg_cmd->add_option("--pca", agg_args.pca, "whitening model (.ndpc)");
  agg_cmd->add_option("--max-scale", agg_args.max_scale)->capture_default_str();
  agg_cmd->add_option("--overlap", agg_args.overlap)->capture_default_str();
  agg_cmd->add_option("--out", agg_args.out, "output descriptor file (.ndbd)")->required();

  PcaTrainArgs pca_args;
  auto* pca_cmd = app.add_subcommand("pca-train", "fit a pca whitening model");
  pca_cmd->add_option("--descriptors", pca_args.descriptors, "training matrix (.ndbd)")->required();
  pca_cmd->add_option("--epsilon", pca_args.epsilon)->capture_default_str();
  pca_cmd->add_option("--out", pca_args.out, "output model (.ndpc)")->required();

  IndexArgs index_args;
  auto* index_cmd = app.add_subcommand("index", "exact nearest neighbor search");
  index_cmd->add_option("--descriptors", index_args.descriptors, "database (.ndbd)")->required();
  index_cmd->add_option("--queries", index_args.queries, "query matrix (.ndbd), default: database");
  index_cmd->add_option("--knn", index_args.knn, "neighbors per query");
  index_cmd->add_option("--range", index_args.range, "distance threshold");
  index_cmd->add_option("--cap", index_args.cap, "max results per range query, 0 = unlimited");
  index_cmd->add_option("--out", index_args.out, "output csv")->required();

  MineArgs mine_args;
  auto* mine_cmd = app.add_subcommand("mine", "mine hard negative pairs");
  mine_cmd->add_option("--descriptors", mine_args.descriptors, "pool matrix (.ndbd)")->required();
  mine_cmd->add_option("--query-descriptors", mine_args.query_descriptors,
                       "query matrix (.ndbd), default: pool");
  mine_cmd->add_option("--queries", mine_args.queries, "query id list")->required();
  mine_cmd->add_option("--strategy", mine_args.strategy, "hn1 or hn2")->capture_default_str();
  mine_cmd->add_option("--knn", mine_args.knn, "candidates per query (hn2)")->capture_default_str();
  mine_cmd->add_option("--total-pairs", mine_args.total_pairs, "kept pairs (hn2)")->capture_default_str();
  mine_cmd->add_option("--out", mine_args.out, "output csv")->required();

  RocArgs roc_args;
  auto* roc_cmd = app.add_subcommand("roc", "score pairs and compute the roc curve");
  roc_cmd->add_option("--pairs", roc_args.pairs, "labeled pairs csv")->required();
  roc_cmd->add_option("--descriptors", roc_args.descriptors, "descriptor matrix (.ndbd)")->required();
  roc_cmd->add_option("--mined", roc_args.mined, "mined negatives csv");
  roc_cmd->add_option("--relabels", roc_args.relabels, "relabeled mined pairs csv");
  roc_cmd->add_option("--mode", roc_args.mode, "all or ind")->capture_default_str();
  roc_cmd->add_option("--max-points", roc_args.max_points, "thin the stored curve, 0 = keep all")
      ->capture_default_str();
  roc_cmd->add_option("--out-curve", roc_args.out_curve, "output roc csv")->required();
  roc_cmd->add_option("--out-summary", roc_args.out_summary, "output summary json")->required();

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "range-query recall and fp simulation");
  sim_cmd->add_option("--pairs", sim_args.pairs, "labeled pairs csv")->required();
  sim_cmd->add_option("--clusters", sim_args.clusters, "clusters json (default: rebuilt from pairs)");
  sim_cmd->add_option("--queries", sim_args.queries, "negative query id list")->required();
  sim_cmd->add_option("--pool", sim_args.pool, "distractor id list")->required();
  sim_cmd->add_option("--descriptors", sim_args.descriptors, "descriptor matrix (.ndbd)")->required();
  sim_cmd->add_option("--mined", sim_args.mined, "mined negatives csv (for --fp-rates)");
  sim_cmd->add_option("--thresholds", sim_args.thresholds, "distance thresholds")->delimiter(',');
  sim_cmd->add_option("--fp-rates", sim_args.fp_rates, "pick thresholds at these fp rates")
      ->delimiter(',');
  sim_cmd->add_option("--caps", sim_args.caps, "result caps, 0 = uncapped")
      ->delimiter(',')->capture_default_str();
  sim_cmd->add_option("--out", sim_args.out, "output csv")->required();
  sim_cmd->add_option("--per-query", sim_args.per_query, "per-query values csv");

  ProjectArgs proj_args;
  auto* proj_cmd = app.add_subcommand("project", "collection-scale false positive projection");
  proj_cmd->add_option("--specificity", proj_args.specificity)->required();
  proj_cmd->add_option("--queries", proj_args.queries, "query collection size");
  proj_cmd->add_option("--targets", proj_args.targets, "target collection size");
  proj_cmd->add_option("--unordered", proj_args.unordered_n, "single-collection size");
  proj_cmd->add_option("--sensitivity", proj_args.sensitivity);
  proj_cmd->add_option("--nd-count", proj_args.nd_count, "known near-duplicate pair count");
  proj_cmd->add_option("--out", proj_args.out, "output json")->required();

  PipelineArgs pipe_args;
  auto* pipe_cmd = app.add_subcommand("pipeline", "mine, evaluate, simulate, project");
  pipe_cmd->add_option("--descriptors", pipe_args.descriptors)->required();
  pipe_cmd->add_option("--pairs", pipe_args.pairs)->required();
  pipe_cmd->add_option("--clusters", pipe_args.clusters);
  pipe_cmd->add_option("--queries", pipe_args.queries)->required();
  pipe_cmd->add_option("--pool", pipe_args.pool)->required();
  pipe_cmd->add_option("--relabels", pipe_args.relabels);
  pipe_cmd->add_option("--strategy", pipe_args.strategy, "hn1 or hn2")->capture_default_str();
  pipe_cmd->add_option("--knn", pipe_args.knn)->capture_default_str();
  pipe_cmd->add_option("--total-pairs", pipe_args.total_pairs)->capture_default_str();
  pipe_cmd->add_option("--fp-rates", pipe_args.fp_rates)->delimiter(',')->capture_default_str();
  pipe_cmd->add_option("--caps", pipe_args.caps)->delimiter(',')->capture_default_str();
  pipe_cmd->add_option("--mode", pipe_args.mode, "all or ind")->capture_default_str();
  pipe_cmd->add_option("--out", pipe_args.out_dir, "output directory")->capture_default_str();

  FixtureArgs fix_args;
  auto* fix_cmd = app.add_subcommand("fixture", "generate a synthetic benchmark fixture");
  fix_cmd->add_option("--out", fix_args.out_dir, "output directory")->required();
  fix_cmd->add_option("--dim", fix_args.spec.dim)->capture_default_str();
  fix_cmd->add_option("--clusters", fix_args.spec.clusters)->capture_default_str();
  fix_cmd->add_option("--distractors", fix_args.spec.distractors)->capture_default_str();
  fix_cmd->add_option("--negative-queries", fix_args.spec.negative_queries)->capture_default_str();
  fix_cmd->add_option("--images", fix_args.spec.images)->capture_default_str();
  fix_cmd->add_option("--feature-maps", fix_args.spec.feature_maps)->capture_default_str();

  for (auto* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(gist_cmd)) return run_gist(gist_args, threads);
    if (app.got_subcommand(agg_cmd)) return run_aggregate(agg_args, threads);
    if (app.got_subcommand(pca_cmd)) return run_pca_train(pca_args);
    if (app.got_subcommand(index_cmd)) return run_index(index_args, threads);
    if (app.got_subcommand(mine_cmd)) return run_mine(mine_args, threads);
    if (app.got_subcommand(roc_cmd)) return run_roc(roc_args);
    if (app.got_subcommand(sim_cmd)) return run_simulate(sim_args, threads);
    if (app.got_subcommand(proj_cmd)) return run_project(proj_args);
    if (app.got_subcommand(pipe_cmd)) return run_pipeline(pipe_args, threads);
    if (app.got_subcommand(fix_cmd)) {
      fix_args.spec.seed = seed;
      return run_fixture(fix_args);
    }
  } catch (const input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const invariant_error& e) {
    std::cerr << "invariant violated: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

// Python bindings for the core operations: descriptor extraction and
// aggregation, PCA whitening, exact search, hard-negative mining, ROC
// evaluation, and collection-scale projection.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <span>
#include <stdexcept>

#include "ndbench/dataset.h"
#include "ndbench/descriptors.h"
#include "ndbench/errors.h"
#include "ndbench/evaluation.h"
#include "ndbench/gist.h"
#include "ndbench/image_io.h"
#include "ndbench/index.h"
#include "ndbench/mining.h"
#include "ndbench/version.h"

namespace py = pybind11;
using namespace ndbench;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Descriptor descriptor_from_array(const FloatArray& a) {
  if (a.ndim() != 1) throw input_error("descriptor must be a 1-d array");
  Descriptor d;
  d.values.assign(a.data(), a.data() + a.shape(0));
  return d;
}

py::array_t<float> array_from_descriptor(const Descriptor& d) {
  py::array_t<float> out(static_cast<py::ssize_t>(d.values.size()));
  std::memcpy(out.mutable_data(), d.values.data(), d.values.size() * sizeof(float));
  return out;
}

DescriptorMatrix matrix_from_array(const FloatArray& a, std::vector<std::string> ids) {
  if (a.ndim() != 2) throw input_error("descriptor matrix must be a 2-d array");
  DescriptorMatrix m;
  m.count = static_cast<std::size_t>(a.shape(0));
  m.dim = static_cast<std::size_t>(a.shape(1));
  m.data.assign(a.data(), a.data() + a.size());
  if (ids.empty()) {
    ids.reserve(m.count);
    for (std::size_t i = 0; i < m.count; ++i) ids.push_back("row" + std::to_string(i));
  }
  m.ids = std::move(ids);
  m.validate();
  return m;
}

FeatureMap feature_map_from_array(const FloatArray& a) {
  if (a.ndim() != 3) throw input_error("feature map must be a 3-d array (h, w, c)");
  std::vector<float> data(a.data(), a.data() + a.size());
  return FeatureMap::make(static_cast<std::uint32_t>(a.shape(0)),
                          static_cast<std::uint32_t>(a.shape(1)),
                          static_cast<std::uint32_t>(a.shape(2)), std::move(data));
}

GrayImage image_from_array(const FloatArray& a) {
  if (a.ndim() != 2) throw input_error("image must be a 2-d array");
  GrayImage img;
  img.height = static_cast<std::size_t>(a.shape(0));
  img.width = static_cast<std::size_t>(a.shape(1));
  img.pixels.assign(a.data(), a.data() + a.size());
  img.validate();
  return img;
}

std::vector<double> doubles_from_array(const DoubleArray& a) {
  if (a.ndim() != 1) throw input_error("expected a 1-d array");
  return {a.data(), a.data() + a.shape(0)};
}

py::dict curve_to_dict(const RocCurve& c) {
  py::list thresholds, tpr, fpr;
  for (const auto& p : c.points) {
    thresholds.append(p.threshold);
    tpr.append(p.tpr);
    fpr.append(p.fpr);
  }
  py::dict d;
  d["thresholds"] = thresholds;
  d["tpr"] = tpr;
  d["fpr"] = fpr;
  d["auc"] = c.auc;
  d["ci_low"] = c.ci_low;
  d["ci_high"] = c.ci_high;
  d["n_pos"] = c.n_pos;
  d["n_neg"] = c.n_neg;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "near-duplicate image detection benchmark core";
  m.attr("__version__") = kVersion;

  py::register_exception<input_error>(m, "InputError", PyExc_ValueError);
  py::register_exception<invariant_error>(m, "InvariantError", PyExc_RuntimeError);

  m.def(
      "pair_distance",
      [](const FloatArray& a, const FloatArray& b) {
        if (a.ndim() != 1 || b.ndim() != 1) throw input_error("expected 1-d arrays");
        return pair_distance({a.data(), static_cast<std::size_t>(a.shape(0))},
                             {b.data(), static_cast<std::size_t>(b.shape(0))});
      },
      py::arg("a"), py::arg("b"), "Euclidean distance between two vectors");

  m.def(
      "gist",
      [](const FloatArray& image, int scales, int orientations, int blocks,
         const std::string& pooling) {
        GrayImage img = image_from_array(image);
        GistConfig cfg;
        cfg.image_side = static_cast<int>(img.width);
        cfg.scales = scales;
        cfg.orientations_per_scale = orientations;
        cfg.blocks = blocks;
        if (pooling == "mean")
          cfg.pooling = GistConfig::Pooling::mean_magnitude;
        else if (pooling == "energy")
          cfg.pooling = GistConfig::Pooling::mean_energy;
        else
          throw input_error("pooling must be 'mean' or 'energy'");
        return array_from_descriptor(gist_extract(img, cfg));
      },
      py::arg("image"), py::arg("scales") = 4, py::arg("orientations") = 8,
      py::arg("blocks") = 4, py::arg("pooling") = "mean",
      "Gist descriptor of a square grayscale image (pixel values 0..255)");

  m.def(
      "spoc",
      [](const FloatArray& map) { return array_from_descriptor(spoc_aggregate(feature_map_from_array(map))); },
      py::arg("feature_map"), "Sum-pool a (h, w, c) feature map into a c-dim descriptor");

  py::class_<PcaModel>(m, "PcaModel")
      .def_property_readonly("dim", [](const PcaModel& p) { return p.dim(); })
      .def_property_readonly("eigenvalues",
                             [](const PcaModel& p) {
                               py::array_t<double> out(p.eigenvalues.size());
                               std::memcpy(out.mutable_data(), p.eigenvalues.data(),
                                           sizeof(double) * p.eigenvalues.size());
                               return out;
                             })
      .def("whiten",
           [](const PcaModel& p, const FloatArray& v, bool l2_normalize) {
             return array_from_descriptor(pca_whiten(descriptor_from_array(v), p, l2_normalize));
           },
           py::arg("v"), py::arg("l2_normalize") = true)
      .def("save", [](const PcaModel& p, const std::string& path) { write_ndpc(path, p); })
      .def_static("load", [](const std::string& path) { return read_ndpc(path); });

  m.def(
      "pca_train",
      [](const FloatArray& rows, double epsilon) {
        return pca_train(matrix_from_array(rows, {}), epsilon);
      },
      py::arg("rows"), py::arg("epsilon") = 1e-10,
      "Fit a full-rank PCA whitening model on the rows of a 2-d array");

  m.def(
      "rmac",
      [](const FloatArray& map, const PcaModel& pca, int max_scale, double overlap) {
        RmacConfig cfg;
        cfg.max_scale = max_scale;
        cfg.overlap_target = overlap;
        return array_from_descriptor(rmac_aggregate(feature_map_from_array(map), cfg, pca));
      },
      py::arg("feature_map"), py::arg("pca"), py::arg("max_scale") = 2,
      py::arg("overlap") = 0.4,
      "Regional max pooling with per-region whitening over a (h, w, c) map");

  m.def(
      "triplet_loss",
      [](const FloatArray& q, const FloatArray& pos, const FloatArray& neg, double margin) {
        return triplet_loss(descriptor_from_array(q), descriptor_from_array(pos),
                            descriptor_from_array(neg), margin);
      },
      py::arg("query"), py::arg("positive"), py::arg("negative"), py::arg("margin") = 0.1);

  py::class_<FlatIndex>(m, "FlatIndex")
      .def(py::init([](const FloatArray& rows, std::vector<std::string> ids) {
             return FlatIndex::build(matrix_from_array(rows, std::move(ids)));
           }),
           py::arg("rows"), py::arg("ids") = std::vector<std::string>{})
      .def_static("load", &FlatIndex::load, py::arg("ndbd_path"))
      .def_property_readonly("size", &FlatIndex::size)
      .def_property_readonly("dim", &FlatIndex::dim)
      .def_property_readonly("ids", [](const FlatIndex& ix) { return ix.matrix().ids; })
      .def(
          "knn",
          [](const FlatIndex& ix, const FloatArray& q, std::size_t k) {
            Descriptor d = descriptor_from_array(q);
            py::list out;
            for (const auto& nb : ix.knn(d.values, k))
              out.append(py::make_tuple(nb.id, nb.distance));
            return out;
          },
          py::arg("query"), py::arg("k"), "k nearest (id, distance) pairs, ascending")
      .def(
          "range_query",
          [](const FlatIndex& ix, const FloatArray& q, double threshold, std::size_t cap) {
            Descriptor d = descriptor_from_array(q);
            py::list out;
            for (const auto& nb :
                 ix.range_query(d.values, threshold, cap == 0 ? FlatIndex::kUnlimited : cap))
              out.append(py::make_tuple(nb.id, nb.distance));
            return out;
          },
          py::arg("query"), py::arg("threshold"), py::arg("cap") = 0,
          "all (id, distance) with distance < threshold; cap 0 = unlimited");

  m.def(
      "mine_hard_negatives",
      [](const FlatIndex& pool, const FloatArray& queries, std::vector<std::string> query_ids,
         const std::string& strategy, std::size_t knn, std::size_t total_pairs) {
        DescriptorMatrix qm = matrix_from_array(queries, query_ids);
        MiningConfig cfg;
        cfg.strategy = mining_strategy_from_string(strategy);
        cfg.queries = qm.ids;
        cfg.knn_per_query = knn;
        cfg.total_pairs = total_pairs;
        const HardNegativeSet set = mine_hard_negatives(pool, qm, cfg);
        py::list out;
        for (const auto& p : set.pairs)
          out.append(py::make_tuple(p.query_id, p.pool_id, p.distance));
        return out;
      },
      py::arg("pool"), py::arg("queries"), py::arg("query_ids"),
      py::arg("strategy") = "hn2", py::arg("knn") = 10, py::arg("total_pairs") = 10000,
      "Mine (query_id, pool_id, distance) hard negative pairs");

  m.def(
      "roc",
      [](const DoubleArray& positives, const DoubleArray& negatives, std::size_t max_points) {
        return curve_to_dict(roc_from_distances(doubles_from_array(positives),
                                                doubles_from_array(negatives), max_points));
      },
      py::arg("positive_distances"), py::arg("negative_distances"), py::arg("max_points") = 0,
      "ROC curve and AUC for closer-is-better distances");

  m.def("auc_ci", &auc_ci_hanley, py::arg("auc"), py::arg("n_pos"), py::arg("n_neg"),
        "95% confidence interval for an AUC");

  m.def(
      "fp_projection",
      [](double specificity, std::uint64_t x, std::uint64_t y) {
        const FpProjection p = fp_projection(specificity, x, y);
        return py::make_tuple(p.fp_count, p.fp_per_query);
      },
      py::arg("specificity"), py::arg("x_size"), py::arg("y_size"),
      "(total FP count, FP per query) at a given specificity");

  m.def("specificity_floor", &specificity_floor, py::arg("k"), py::arg("m"));
  m.def("project_fp_rate", &project_fp_rate, py::arg("fp_rate_on_mined"), py::arg("m"));
  m.def("expected_tp", &expected_tp, py::arg("sensitivity"), py::arg("nd_count"));

  m.def(
      "load_image",
      [](const std::string& path) {
        const GrayImage img = load_image_gray(path);
        py::array_t<float> out({static_cast<py::ssize_t>(img.height),
                                static_cast<py::ssize_t>(img.width)});
        std::memcpy(out.mutable_data(), img.pixels.data(), img.pixels.size() * sizeof(float));
        return out;
      },
      py::arg("path"), "Grayscale image as a (h, w) float array, values 0..255");

  m.def(
      "resize",
      [](const FloatArray& image, std::size_t width, std::size_t height) {
        const GrayImage out = resize_bilinear(image_from_array(image), width, height);
        py::array_t<float> arr({static_cast<py::ssize_t>(out.height),
                                static_cast<py::ssize_t>(out.width)});
        std::memcpy(arr.mutable_data(), out.pixels.data(), out.pixels.size() * sizeof(float));
        return arr;
      },
      py::arg("image"), py::arg("width"), py::arg("height"), "Bilinear resample");
}

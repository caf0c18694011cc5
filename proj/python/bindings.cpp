#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "sroc/ann.hpp"
#include "sroc/covariance.hpp"
#include "sroc/detectors.hpp"
#include "sroc/error.hpp"
#include "sroc/harness.hpp"
#include "sroc/json.hpp"
#include "sroc/metrics.hpp"
#include "sroc/refine.hpp"
#include "sroc/tensor.hpp"

namespace py = pybind11;
using namespace sroc;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

FloatMatrix to_matrix(const FloatArray& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array");
  FloatMatrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy_n(a.data(), m.data.size(), m.data.begin());
  return m;
}

template <class T>
py::array_t<T> to_array(const DenseMatrix<T>& m) {
  py::array_t<T> out({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

py::array_t<double> to_array(const Eigen::MatrixXd& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out.mutable_data(), m.rows(),
                                                                                     m.cols()) = m;
  return out;
}

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

std::vector<double> to_vector(const DoubleArray& a) {
  if (a.ndim() != 1) throw ShapeError("expected a 1-D array");
  return std::vector<double>(a.data(), a.data() + a.size());
}

std::vector<bool> to_labels(const py::array_t<bool, py::array::c_style | py::array::forcecast>& a) {
  return std::vector<bool>(a.data(), a.data() + a.size());
}

BinaryMask to_mask(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw ShapeError("masks must be 2-D");
  BinaryMask m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  for (std::size_t k = 0; k < m.data.size(); ++k) m.data[k] = a.data()[k] ? 1 : 0;
  return m;
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::handle& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

EmbeddingSet make_set(std::vector<std::string> ids, const std::vector<FloatArray>& levels,
                      std::optional<std::vector<int>> level_ids) {
  EmbeddingSet set;
  set.sample_ids = std::move(ids);
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const auto& a = levels[k];
    if (a.ndim() != 4) throw ShapeError("each level must be an (N, H, W, C) array");
    std::vector<std::size_t> shape(4);
    for (int d = 0; d < 4; ++d) shape[d] = static_cast<std::size_t>(a.shape(d));
    const int id = level_ids ? level_ids->at(k) : static_cast<int>(k);
    set.levels.push_back(make_level(id, shape, std::vector<float>(a.data(), a.data() + a.size())));
  }
  set.validate();
  return set;
}

DetectorConfig detector_config(const std::string& kind, std::size_t k, std::optional<std::size_t> nlist,
                               std::optional<std::size_t> nprobe, std::uint64_t seed) {
  DetectorConfig c;
  c.kind = parse_detector_kind(kind);
  c.k = k;
  c.nlist = nlist;
  c.nprobe = nprobe;
  c.seed = seed;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of sroc_lab";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  auto data_error = py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<CategoryExcludedError>(m, "CategoryExcludedError", data_error.ptr());

  py::class_<EmbeddingSet>(m, "EmbeddingSet")
      .def(py::init(&make_set), py::arg("sample_ids"), py::arg("levels"), py::arg("level_ids") = py::none(),
           "Builds a set from per-level (N, H, W, C) arrays.")
      .def_readonly("sample_ids", &EmbeddingSet::sample_ids)
      .def("__len__", &EmbeddingSet::size)
      .def_property_readonly("total_channels", &EmbeddingSet::total_channels)
      .def("subset", [](const EmbeddingSet& s, const std::vector<std::string>& ids) { return s.subset_by_ids(ids); })
      .def("pooled", [](const EmbeddingSet& s) { return to_array(concat_pooled_levels(s)); },
           "Concatenated per-level global average pools, one row per sample.");

  m.def("global_average_pool", [](const FloatArray& a) {
    if (a.ndim() != 4) throw ShapeError("expected an (N, H, W, C) array");
    std::vector<std::size_t> shape(4);
    for (int d = 0; d < 4; ++d) shape[d] = static_cast<std::size_t>(a.shape(d));
    return to_array(global_average_pool(make_level(0, shape, std::vector<float>(a.data(), a.data() + a.size()))));
  });

  py::class_<CategoryData>(m, "Category")
      .def_readonly("name", &CategoryData::name)
      .def_readonly("embeddings", &CategoryData::embeddings)
      .def_property_readonly("dir", [](const CategoryData& c) { return c.dir; })
      .def("ids", [](const CategoryData& c, const std::string& split) {
        std::vector<std::string> out;
        for (const auto& r : c.manifest) {
          if (split == "all" || (split == "train") == (r.split == Split::Train)) out.push_back(r.id);
        }
        return out;
      }, py::arg("split") = "all")
      .def("defective", [](const CategoryData& c, const std::string& id) { return c.record(id).defective(); })
      .def("mask", [](const CategoryData& c, const std::string& id) {
        const BinaryMask mask = c.mask_for(id);
        py::array_t<std::uint8_t> out({mask.height, mask.width});
        std::copy(mask.data.begin(), mask.data.end(), out.mutable_data());
        return out;
      });
  m.def("load_category", [](const std::filesystem::path& root, const std::string& category) {
    return load_category(root, category);
  }, py::arg("root"), py::arg("category"));

  m.def("pollution_plan", [](const CategoryData& data, double ratio, std::uint64_t seed) {
    const auto plan = build_pollution_plan(data.manifest, data.name, ratio, seed);
    check_plan_invariants(plan, data.manifest);
    return json_to_py(plan_to_json(plan));
  }, py::arg("category"), py::arg("ratio"), py::arg("seed") = 0);
  m.def("largest_remainder", [](const std::vector<std::size_t>& w, std::size_t total) {
    return largest_remainder(w, total);
  });

  m.def("ledoit_wolf", [](const DoubleArray& x) {
    if (x.ndim() != 2) throw ShapeError("expected a 2-D array");
    Eigen::MatrixXd data = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        x.data(), x.shape(0), x.shape(1));
    const GaussianModel g = ledoit_wolf(data);
    return py::make_tuple(to_array(Eigen::MatrixXd(g.mean().transpose())).attr("ravel")(), to_array(g.covariance()),
                          g.shrinkage_alpha());
  }, "Returns (mean, shrunk covariance, alpha).");

  m.def("exact_knn", [](const FloatArray& bank, const FloatArray& query, std::size_t k) {
    VectorBank b;
    b.vectors = to_matrix(bank);
    b.payload_ids.resize(b.vectors.rows);
    std::vector<std::size_t> rows;
    std::vector<double> dist;
    for (const auto& nb : exact_knn(b, {query.data(), static_cast<std::size_t>(query.size())}, k)) {
      rows.push_back(nb.row);
      dist.push_back(nb.squared_distance);
    }
    return py::make_tuple(rows, to_array(dist));
  }, py::arg("bank"), py::arg("query"), py::arg("k"), "Indices and squared distances of the k nearest rows.");

  py::class_<FittedDetector>(m, "Detector")
      .def_property_readonly("kind", [](const FittedDetector& d) { return std::string(to_string(d.kind())); })
      .def_property_readonly("train_size", &FittedDetector::train_size)
      .def_property_readonly("config", [](const FittedDetector& d) { return json_to_py(d.config()); })
      .def("score", [](const FittedDetector& d, const EmbeddingSet& s) {
        return to_array(image_scores(score_set(d, s)));
      }, "Image-level anomaly scores.")
      .def("patch_scores", [](const FittedDetector& d, const EmbeddingSet& s) {
        py::list out;
        for (const auto& map : score_set(d, s)) {
          if (!map.patch_scores) throw ConfigError(std::string(to_string(d.kind())) + " has no patch maps");
          out.append(to_array(*map.patch_scores));
        }
        return out;
      });
  m.def("fit", [](const std::string& kind, const EmbeddingSet& train, std::size_t k, std::optional<std::size_t> nlist,
                  std::optional<std::size_t> nprobe, std::uint64_t seed) {
    return fit(detector_config(kind, k, nlist, nprobe, seed), train);
  }, py::arg("kind"), py::arg("train"), py::arg("k") = 5, py::arg("nlist") = py::none(),
        py::arg("nprobe") = py::none(), py::arg("seed") = 0);

  m.def("roc_auc", [](const DoubleArray& scores, const py::array_t<bool, py::array::c_style | py::array::forcecast>& y) {
    return roc_auc(to_vector(scores), to_labels(y));
  }, py::arg("scores"), py::arg("defective"));
  auto pixel_metric = [](auto fn) {
    return [fn](const std::vector<FloatArray>& maps,
                const std::vector<py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>>& masks,
                double cap) {
      std::vector<FloatMatrix> s;
      std::vector<BinaryMask> g;
      for (const auto& a : maps) s.push_back(to_matrix(a));
      for (const auto& a : masks) g.push_back(to_mask(a));
      return fn(s, g, cap);
    };
  };
  m.def("au_iou", pixel_metric([](const auto& s, const auto& g, double cap) { return au_iou(s, g, cap); }),
        py::arg("maps"), py::arg("masks"), py::arg("fpr_cap") = 0.3);
  m.def("au_pro", pixel_metric([](const auto& s, const auto& g, double cap) { return au_pro(s, g, cap); }),
        py::arg("maps"), py::arg("masks"), py::arg("fpr_cap") = 0.3);
  m.def("refinement_prf", [](const std::vector<std::string>& removed, const std::vector<std::string>& defective) {
    return json_to_py(refinement_prf(removed, defective));
  });

  m.def("refine", [](const EmbeddingSet& train, const std::string& strategy, double ratio, const std::string& refiner,
                     std::size_t splits, std::uint64_t seed, std::optional<std::vector<std::string>> defective_ids) {
    RefinementConfig c;
    c.strategy = parse_strategy(strategy);
    c.refinement_ratio = ratio;
    c.splits = splits;
    c.refiner = detector_config(refiner, 5, std::nullopt, std::nullopt, 0);
    c.seed = seed;
    auto outcome = refine(train, c);
    if (defective_ids) attach_prf(outcome, *defective_ids);
    return json_to_py(outcome);
  }, py::arg("train"), py::arg("strategy"), py::arg("ratio"), py::arg("refiner") = "mahalanobis",
        py::arg("splits") = 5, py::arg("seed") = 0, py::arg("defective_ids") = py::none());

  m.def("run_sweep", [](const py::dict& config, const std::string& kind) {
    const SweepConfig c = sweep_config_from_json(py_to_json(config));
    if (kind != "robustness" && kind != "refinement") throw ConfigError("sweep kind must be robustness or refinement");
    ExperimentReport report;
    {
      py::gil_scoped_release release;
      report = kind == "robustness" ? run_robustness_sweep(c) : run_refinement_sweep(c);
    }
    return json_to_py(report_to_json(report));
  }, py::arg("config"), py::arg("kind") = "robustness");
  m.def("report_csv", [](const py::dict& report, bool wall_time) {
    std::ostringstream out;
    write_report_csv(report_from_json(py_to_json(report)), out, wall_time);
    return out.str();
  }, py::arg("report"), py::arg("wall_time") = true);
}

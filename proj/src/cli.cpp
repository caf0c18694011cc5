#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "sroc/error.hpp"
#include "sroc/harness.hpp"
#include "sroc/json.hpp"
#include "sroc/parallel.hpp"
#include "sroc/random.hpp"

namespace sroc {
namespace {

using nlohmann::json;

constexpr int kConfigExit = 1;
constexpr int kDataExit = 2;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
}

// Writes to `path`, or stdout when empty.
template <class Writer>
void emit(const std::string& path, Writer&& writer) {
  if (path.empty() || path == "-") {
    writer(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  writer(out);
}

struct DataOptions {
  std::string config;
  std::string data_root;
  std::string category;
  double pollution = 0.2;
  std::uint64_t seed = 0;
  std::string out;
};

struct DetectorOptions {
  std::string kind;
  std::size_t k = 0;
  std::size_t nlist = 0;
  std::size_t nprobe = 0;

  DetectorConfig resolve(const json& base) const {
    DetectorConfig config = base.is_object() ? base.get<DetectorConfig>() : DetectorConfig{};
    if (!kind.empty()) config.kind = parse_detector_kind(kind);
    if (k) config.k = k;
    if (nlist) config.nlist = nlist;
    if (nprobe) config.nprobe = nprobe;
    return config;
  }
};

void add_data_options(CLI::App* cmd, DataOptions& o, bool pollution = true) {
  cmd->add_option("--config", o.config, "JSON config file; flags override its fields");
  cmd->add_option("--data", o.data_root, "dataset root holding one directory per category");
  cmd->add_option("--category", o.category, "category directory name")->required();
  if (pollution) cmd->add_option("--ratio", o.pollution, "pollution ratio in [0, 0.2]");
  cmd->add_option("--seed", o.seed, "pollution seed");
  cmd->add_option("--out", o.out, "output path (default: stdout)");
}

void add_detector_options(CLI::App* cmd, DetectorOptions& o, const std::string& flag = "--detector") {
  cmd->add_option(flag, o.kind, "knn | mahalanobis | padim | patchcore");
  cmd->add_option("--k", o.k, "nearest neighbors for knn/patchcore (default 5)");
  cmd->add_option("--nlist", o.nlist, "IVF lists for patchcore (0 = default)");
  cmd->add_option("--nprobe", o.nprobe, "IVF probes for patchcore (0 = default)");
}

std::string data_root(const DataOptions& o, const json& config) {
  if (!o.data_root.empty()) return o.data_root;
  return config.value("data_root", std::string("."));
}

json load_config(const std::string& path) { return path.empty() ? json::object() : read_json_file(path); }

std::vector<std::string> level_files(const json& config) {
  if (config.contains("level_files") && config.at("level_files").is_array()) {
    return config.at("level_files").get<std::vector<std::string>>();
  }
  return {};
}

EvaluationOptions evaluation_options(const json& config) {
  EvaluationOptions e;
  e.pixel_metrics = config.value("pixel_metrics", e.pixel_metrics);
  e.fpr_cap = config.value("fpr_cap", e.fpr_cap);
  e.smoothing_sigma = config.value("smoothing_sigma", e.smoothing_sigma);
  e.workers = default_worker_count();
  return e;
}

json evaluation_json(const Evaluation& eval) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"auc", eval.auc}, {"au_iou", opt(eval.au_iou)}, {"au_pro", opt(eval.au_pro)}};
}

FloatMatrix pooled_rows(const CategoryData& data, const std::vector<std::string>& ids) {
  return *data.embeddings.subset_by_ids(ids).pooled;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Fully-unsupervised anomaly detection on precomputed embeddings"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  DataOptions pollute_o;
  auto* pollute = app.add_subcommand("pollute", "build a pollution plan");
  add_data_options(pollute, pollute_o);

  DataOptions fit_o;
  DetectorOptions fit_d;
  auto* fit_cmd = app.add_subcommand("fit", "fit a detector on a polluted training set and summarize it");
  add_data_options(fit_cmd, fit_o);
  add_detector_options(fit_cmd, fit_d);

  DataOptions score_o;
  DetectorOptions score_d;
  std::string score_csv;
  auto* score_cmd = app.add_subcommand("score", "fit, score the validation set and report metrics");
  add_data_options(score_cmd, score_o);
  add_detector_options(score_cmd, score_d);
  score_cmd->add_option("--scores", score_csv, "write per-sample image scores as CSV");

  DataOptions refine_o;
  DetectorOptions refine_d;
  std::string strategy = "sroc", final_kind;
  double refine_ratio = 0.2;
  std::size_t splits = 5;
  auto* refine_cmd = app.add_subcommand("refine", "refine a polluted training set");
  add_data_options(refine_cmd, refine_o);
  add_detector_options(refine_cmd, refine_d, "--refiner");
  refine_cmd->add_option("--strategy", strategy, "sroc | random | cross_validation | stoc");
  refine_cmd->add_option("--refine-ratio", refine_ratio, "fraction of training samples to remove");
  refine_cmd->add_option("--splits", splits, "splits for cross_validation / stoc");
  refine_cmd->add_option("--final", final_kind, "fit this detector on the kept samples and evaluate it");

  std::string sweep_config, sweep_out, sweep_csv, sweep_data;
  std::size_t sweep_workers = 0;
  auto add_sweep = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--config", sweep_config, "sweep config JSON")->required();
    cmd->add_option("--data", sweep_data, "override data_root");
    cmd->add_option("--workers", sweep_workers, "worker threads (0 = SROC_WORKERS or hardware)");
    cmd->add_option("--out", sweep_out, "report JSON path (default: stdout)");
    cmd->add_option("--csv", sweep_csv, "also write the report as CSV");
    return cmd;
  };
  auto* sweep_robust = add_sweep("sweep-robustness", "metrics as a function of the pollution ratio");
  auto* sweep_refine = add_sweep("sweep-refinement", "metrics as a function of the refinement ratio");

  DataOptions dist_o;
  auto* distances = app.add_subcommand("analyze-distances", "mean pairwise distances within and across classes");
  add_data_options(distances, dist_o);

  DataOptions contour_o;
  auto* contours = app.add_subcommand("analyze-contours", "project healthy vs polluted Gaussians onto 2 axes");
  add_data_options(contours, contour_o);

  std::string report_in, report_format = "csv", report_out;
  bool report_no_time = false;
  auto* report_cmd = app.add_subcommand("report", "convert a sweep report");
  report_cmd->add_option("--input", report_in, "report JSON from a sweep")->required();
  report_cmd->add_option("--format", report_format, "csv | json | series | markdown")
      ->check(CLI::IsMember({"csv", "json", "series", "markdown"}));
  report_cmd->add_option("--out", report_out, "output path (default: stdout)");
  report_cmd->add_flag("--no-wall-time", report_no_time, "leave wall_time_s empty in CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
  spdlog::set_default_logger(spdlog::default_logger());

  auto load = [](const DataOptions& o, json& config) {
    config = load_config(o.config);
    return load_category(data_root(o, config), o.category, level_files(config));
  };

  if (*pollute) {
    const json config = load_config(pollute_o.config);
    const auto dir = std::filesystem::path(data_root(pollute_o, config)) / pollute_o.category;
    const Manifest manifest = load_manifest(dir / "manifest.json");
    const auto plan = build_pollution_plan(manifest, pollute_o.category, pollute_o.pollution, pollute_o.seed);
    emit(pollute_o.out, [&](std::ostream& out) { out << plan_to_json(plan).dump(2) << '\n'; });
    return 0;
  }

  if (*fit_cmd || *score_cmd) {
    const DataOptions& o = *fit_cmd ? fit_o : score_o;
    const DetectorOptions& d = *fit_cmd ? fit_d : score_d;
    json config;
    const CategoryData data = load(o, config);
    const DetectorConfig detector_config = d.resolve(config.value("detector", json()));
    const auto plan = build_pollution_plan(data.manifest, data.name, o.pollution, o.seed);
    const auto detector = fit(detector_config, data.embeddings.subset_by_ids(plan.train_ids));
    json summary{{"category", data.name},
                 {"detector", detector.config()},
                 {"pollution", o.pollution},
                 {"seed", o.seed},
                 {"train_size", detector.train_size()}};
    if (detector.kind() == DetectorKind::Patchcore) {
      const auto& model = detector.model<PatchcoreModel>();
      summary["bank_size"] = model.bank.size();
      summary["grid"] = {model.height, model.width};
    } else if (detector.kind() == DetectorKind::Padim) {
      const auto& model = detector.model<PadimModel>();
      summary["grid"] = {model.height, model.width};
    } else if (detector.kind() == DetectorKind::Mahalanobis) {
      json alphas = json::array();
      for (const auto& g : detector.model<MahalanobisModel>().per_level) alphas.push_back(g.shrinkage_alpha());
      summary["shrinkage_alpha"] = alphas;
    }
    if (*score_cmd) {
      const auto eval = evaluate(detector, data, plan.val_ids, evaluation_options(config));
      summary["metrics"] = evaluation_json(eval);
      summary["fpr_cap"] = evaluation_options(config).fpr_cap;
      if (!score_csv.empty()) {
        emit(score_csv, [&](std::ostream& out) {
          out << "id,label,score\n";
          out.precision(17);
          for (std::size_t k = 0; k < plan.val_ids.size(); ++k) {
            out << plan.val_ids[k] << ',' << (data.record(plan.val_ids[k]).defective() ? "defective" : "healthy") << ','
                << eval.scores[k] << '\n';
          }
        });
      }
    }
    emit(o.out, [&](std::ostream& out) { out << summary.dump(2) << '\n'; });
    return 0;
  }

  if (*refine_cmd) {
    json config;
    const CategoryData data = load(refine_o, config);
    const auto plan = build_pollution_plan(data.manifest, data.name, refine_o.pollution, refine_o.seed);
    const EmbeddingSet train = data.embeddings.subset_by_ids(plan.train_ids);
    RefinementConfig rc;
    rc.strategy = parse_strategy(strategy);
    rc.refinement_ratio = refine_ratio;
    rc.splits = splits;
    rc.refiner = refine_d.resolve(config.value("refiner", json()));
    rc.seed = derive_seed(refine_o.seed, data.name + "/refine", 0);
    auto outcome = refine(train, rc);
    attach_prf(outcome, plan.injected_ids);
    json result = outcome;
    result["strategy"] = std::string(to_string(rc.strategy));
    result["refiner"] = rc.refiner;
    if (!final_kind.empty()) {
      DetectorConfig final_config = rc.refiner;
      final_config.kind = parse_detector_kind(final_kind);
      const auto detector = fit(final_config, data.embeddings.subset_by_ids(outcome.kept_ids));
      result["final"] = {{"detector", detector.config()},
                         {"metrics", evaluation_json(evaluate(detector, data, plan.val_ids, evaluation_options(config)))}};
    }
    emit(refine_o.out, [&](std::ostream& out) { out << result.dump(2) << '\n'; });
    return 0;
  }

  if (*sweep_robust || *sweep_refine) {
    SweepConfig config = sweep_config_from_json(read_json_file(sweep_config));
    if (!sweep_data.empty()) config.data_root = sweep_data;
    if (sweep_workers) config.workers = sweep_workers;
    const auto report = *sweep_robust ? run_robustness_sweep(config) : run_refinement_sweep(config);
    emit(sweep_out, [&](std::ostream& out) { out << report_to_json(report).dump(2) << '\n'; });
    if (!sweep_csv.empty()) emit(sweep_csv, [&](std::ostream& out) { write_report_csv(report, out); });
    return 0;
  }

  if (*distances || *contours) {
    const DataOptions& o = *distances ? dist_o : contour_o;
    json config;
    const CategoryData data = load(o, config);
    const auto plan = build_pollution_plan(data.manifest, data.name, o.pollution, o.seed);
    if (*distances) {
      std::vector<bool> labels;
      for (const auto& id : plan.train_ids) labels.push_back(data.record(id).defective());
      const auto summary = pairwise_distance_summary(pooled_rows(data, plan.train_ids), labels);
      json result = distance_summary_to_json(summary);
      result["category"] = data.name;
      result["pollution"] = o.pollution;
      emit(o.out, [&](std::ostream& out) { out << result.dump(2) << '\n'; });
    } else {
      std::vector<std::string> healthy_ids;
      for (const auto& id : plan.train_ids) {
        if (!data.record(id).defective()) healthy_ids.push_back(id);
      }
      const auto projection =
          mvg_contour_projection(pooled_rows(data, healthy_ids), pooled_rows(data, plan.injected_ids));
      emit(o.out, [&](std::ostream& out) { write_contour_csv(projection, out); });
      spdlog::info("contour axes {} and {}", projection.axes[0], projection.axes[1]);
    }
    return 0;
  }

  if (*report_cmd) {
    std::ifstream in(report_in);
    if (!in) throw IoError("cannot open report " + report_in);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw DataError("report " + report_in + " is not valid JSON: " + e.what());
    }
    const auto report = report_from_json(doc);
    emit(report_out, [&](std::ostream& out) {
      if (report_format == "csv") {
        write_report_csv(report, out, !report_no_time);
      } else if (report_format == "json") {
        out << report_to_json(report).dump(2) << '\n';
      } else if (report_format == "series") {
        write_series_csv(report, out);
      } else {
        write_summary_markdown(report, out);
      }
    });
    return 0;
  }
  return kConfigExit;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataExit;
  }
}

}  // namespace sroc

#include "sroc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <regex>
#include <set>

#include <spdlog/spdlog.h>

#include "sroc/covariance.hpp"
#include "sroc/error.hpp"
#include "sroc/json.hpp"
#include "sroc/metrics.hpp"
#include "sroc/parallel.hpp"
#include "sroc/random.hpp"

namespace sroc {

using nlohmann::json;

namespace {

std::vector<std::filesystem::path> discover_levels(const std::filesystem::path& dir) {
  static const std::regex pattern(R"(level_?(\d+)\.npy)");
  std::vector<std::pair<int, std::filesystem::path>> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, m, pattern)) found.emplace_back(std::stoi(m[1]), entry.path());
  }
  std::ranges::sort(found);
  std::vector<std::filesystem::path> out;
  for (auto& [id, path] : found) out.push_back(std::move(path));
  return out;
}

std::string format_number(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.10g", value);
  return buffer;
}

std::string format_optional(const std::optional<double>& value) { return value ? format_number(*value) : ""; }

json optional_json(const std::optional<double>& value) { return value ? json(*value) : json(nullptr); }

std::optional<double> optional_from(const json& row, const char* key) {
  auto it = row.find(key);
  if (it == row.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct CellKey {
  std::size_t category;
  std::size_t detector;
  std::size_t strategy;
  std::size_t ratio;
  std::size_t seed;
};

void write_curve(const std::optional<std::filesystem::path>& dir, const ExperimentRow& row, const char* metric,
                 const std::optional<CappedCurve>& curve) {
  if (!dir || !curve) return;
  std::filesystem::create_directories(*dir);
  const std::string name = row.category + "_" + row.detector + "_" + row.strategy + "_p" + format_number(row.pollution) +
                           "_r" + format_number(row.refinement) + "_s" + std::to_string(row.seed) + "_" + metric +
                           ".csv";
  std::ofstream out(*dir / name);
  write_curve_csv(*curve, out);
}

void fill_metrics(ExperimentRow& row, const Evaluation& eval) {
  row.auc = eval.auc;
  row.au_iou = eval.au_iou;
  row.au_pro = eval.au_pro;
}

std::vector<CategoryData> load_categories(const SweepConfig& config) {
  if (config.categories.empty()) throw ConfigError("sweep config lists no categories");
  if (config.detectors.empty()) throw ConfigError("sweep config lists no detectors");
  if (config.seeds.empty()) throw ConfigError("sweep config lists no seeds");
  std::vector<CategoryData> out;
  for (const auto& name : config.categories) out.push_back(load_category(config.data_root, name, config.level_files));
  return out;
}

}  // namespace

const SampleRecord& CategoryData::record(const std::string& id) const {
  if (index_.empty()) {
    for (std::size_t k = 0; k < manifest.size(); ++k) index_.emplace(manifest[k].id, k);
  }
  auto it = index_.find(id);
  if (it == index_.end()) throw DataError(name + ": unknown sample id '" + id + "'");
  return manifest[it->second];
}

BinaryMask CategoryData::mask_for(const std::string& id) const {
  if (!image_size) throw DataError(name + ": category has no masks");
  auto it = masks.find(id);
  if (it != masks.end()) return it->second;
  return BinaryMask(image_size->height, image_size->width);
}

CategoryData load_category(const std::filesystem::path& root, const std::string& category,
                           const std::vector<std::string>& level_files) {
  CategoryData data;
  data.name = category;
  data.dir = root / category;
  data.manifest = load_manifest(data.dir / "manifest.json");
  std::vector<std::filesystem::path> levels;
  if (level_files.empty()) {
    levels = discover_levels(data.dir);
  } else {
    for (const auto& f : level_files) levels.push_back(data.dir / f);
  }
  if (levels.empty()) throw DataError(category + ": no level_*.npy files in " + data.dir.string());
  std::vector<std::string> ids;
  for (const auto& rec : data.manifest) ids.push_back(rec.id);
  data.embeddings = load_embedding_set(std::move(ids), levels);
  concat_pooled_levels(data.embeddings);

  for (const auto& rec : data.manifest) {
    if (!rec.mask) continue;
    BinaryMask mask = read_mask_png(data.dir / *rec.mask);
    const ImageSize size{mask.height, mask.width};
    if (data.image_size && !(*data.image_size == size)) {
      throw ShapeError(category + ": mask " + *rec.mask + " has a different size from earlier masks");
    }
    data.image_size = size;
    data.masks.emplace(rec.id, std::move(mask));
  }
  return data;
}

Evaluation evaluate(const FittedDetector& detector, const CategoryData& data, const std::vector<std::string>& val_ids,
                    const EvaluationOptions& options) {
  const EmbeddingSet val = data.embeddings.subset_by_ids(val_ids);
  const bool pixels = options.pixel_metrics && data.image_size && has_pixel_maps(detector.kind());
  ScoreOptions score_options;
  if (pixels) score_options.image_size = data.image_size;
  score_options.smoothing_sigma = options.smoothing_sigma;
  score_options.workers = options.workers;
  const auto maps = score_set(detector, val, score_options);

  Evaluation eval;
  eval.scores = image_scores(maps);
  std::vector<bool> labels_vec;
  labels_vec.reserve(val_ids.size());
  for (const auto& id : val_ids) labels_vec.push_back(data.record(id).defective());
  eval.auc = roc_auc(eval.scores, labels_vec);

  if (pixels) {
    std::vector<FloatMatrix> score_maps;
    std::vector<BinaryMask> masks;
    for (std::size_t k = 0; k < maps.size(); ++k) {
      score_maps.push_back(*maps[k].pixel_scores);
      masks.push_back(data.mask_for(val_ids[k]));
    }
    try {
      eval.iou_curve = iou_curve(score_maps, masks, options.fpr_cap);
      eval.pro_curve = pro_curve(score_maps, masks, options.fpr_cap);
      eval.au_iou = eval.iou_curve->normalized_area();
      eval.au_pro = eval.pro_curve->normalized_area();
    } catch (const DataError& e) {
      spdlog::warn("{}: pixel metrics unavailable: {}", data.name, e.what());
    }
  }
  return eval;
}

void write_report_csv(const ExperimentReport& report, std::ostream& out, bool include_wall_time) {
  out << kReportHeader << '\n';
  for (const auto& r : report.rows) {
    out << r.category << ',' << r.detector << ',' << r.strategy << ',' << format_number(r.pollution) << ','
        << format_number(r.refinement) << ',' << r.seed << ',' << format_optional(r.auc) << ','
        << format_optional(r.au_iou) << ',' << format_optional(r.au_pro) << ',' << format_optional(r.precision) << ','
        << format_optional(r.recall) << ',' << format_optional(r.f1) << ','
        << (include_wall_time ? format_number(r.wall_time_s) : std::string()) << '\n';
  }
}

json report_to_json(const ExperimentReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"category", r.category},
                    {"detector", r.detector},
                    {"strategy", r.strategy},
                    {"pollution", r.pollution},
                    {"refinement", r.refinement},
                    {"seed", r.seed},
                    {"auc", optional_json(r.auc)},
                    {"au_iou", optional_json(r.au_iou)},
                    {"au_pro", optional_json(r.au_pro)},
                    {"precision", optional_json(r.precision)},
                    {"recall", optional_json(r.recall)},
                    {"f1", optional_json(r.f1)},
                    {"wall_time_s", r.wall_time_s},
                    {"status", r.status}});
  }
  return json{{"notes", report.notes}, {"rows", std::move(rows)}};
}

ExperimentReport report_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("rows")) throw DataError("report JSON needs a 'rows' array");
  ExperimentReport report;
  report.notes = doc.value("notes", json::object());
  for (const auto& row : doc.at("rows")) {
    ExperimentRow r;
    r.category = row.at("category").get<std::string>();
    r.detector = row.at("detector").get<std::string>();
    r.strategy = row.at("strategy").get<std::string>();
    r.pollution = row.at("pollution").get<double>();
    r.refinement = row.at("refinement").get<double>();
    r.seed = row.at("seed").get<std::uint64_t>();
    r.auc = optional_from(row, "auc");
    r.au_iou = optional_from(row, "au_iou");
    r.au_pro = optional_from(row, "au_pro");
    r.precision = optional_from(row, "precision");
    r.recall = optional_from(row, "recall");
    r.f1 = optional_from(row, "f1");
    r.wall_time_s = row.value("wall_time_s", 0.0);
    r.status = row.value("status", std::string("ok"));
    report.rows.push_back(std::move(r));
  }
  return report;
}

namespace {

struct SeriesStats {
  std::vector<double> values[6];
};

}  // namespace

void write_series_csv(const ExperimentReport& report, std::ostream& out) {
  using Key = std::tuple<std::string, std::string, double, double>;
  std::map<Key, SeriesStats> cells;
  for (const auto& r : report.rows) {
    auto& stats = cells[{r.detector, r.strategy, r.pollution, r.refinement}];
    const std::optional<double>* metrics[6] = {&r.auc, &r.au_iou, &r.au_pro, &r.precision, &r.recall, &r.f1};
    for (int m = 0; m < 6; ++m) {
      if (*metrics[m]) stats.values[m].push_back(**metrics[m]);
    }
  }
  static const char* names[6] = {"auc", "au_iou", "au_pro", "precision", "recall", "f1"};
  out << "detector,strategy,pollution,refinement,metric,mean,std,count\n";
  for (const auto& [key, stats] : cells) {
    for (int m = 0; m < 6; ++m) {
      const auto& v = stats.values[m];
      if (v.empty()) continue;
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
      out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << format_number(std::get<2>(key)) << ','
          << format_number(std::get<3>(key)) << ',' << names[m] << ',' << format_number(mean) << ','
          << format_number(sd) << ',' << v.size() << '\n';
    }
  }
}

void write_summary_markdown(const ExperimentReport& report, std::ostream& out) {
  using Key = std::tuple<std::string, std::string, double, double>;
  std::map<Key, std::vector<const ExperimentRow*>> cells;
  for (const auto& r : report.rows) cells[{r.detector, r.strategy, r.pollution, r.refinement}].push_back(&r);
  auto mean_of = [](const std::vector<const ExperimentRow*>& rows, std::optional<double> ExperimentRow::*field) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto* r : rows) {
      if (r->*field) {
        total += *(r->*field);
        ++count;
      }
    }
    return count ? format_number(100.0 * total / static_cast<double>(count)) : std::string("-");
  };
  out << "| detector | strategy | pollution | refinement | AUC | AU-IoU | AU-PRO | precision | recall | F1 |\n";
  out << "|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& [key, rows] : cells) {
    out << "| " << std::get<0>(key) << " | " << std::get<1>(key) << " | " << format_number(std::get<2>(key)) << " | "
        << format_number(std::get<3>(key)) << " | " << mean_of(rows, &ExperimentRow::auc) << " | "
        << mean_of(rows, &ExperimentRow::au_iou) << " | " << mean_of(rows, &ExperimentRow::au_pro) << " | "
        << mean_of(rows, &ExperimentRow::precision) << " | " << mean_of(rows, &ExperimentRow::recall) << " | "
        << mean_of(rows, &ExperimentRow::f1) << " |\n";
  }
  out << "\nValues are means over seeds and categories, in percent. AU-IoU and AU-PRO are areas up to "
      << format_number(report.notes.value("fpr_cap", 0.3)) << " FPR divided by the cap.\n";
}

SweepConfig sweep_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("sweep config must be a JSON object");
  SweepConfig config;
  try {
    if (doc.contains("data_root")) config.data_root = doc.at("data_root").get<std::string>();
    if (doc.contains("categories")) config.categories = doc.at("categories").get<std::vector<std::string>>();
    if (doc.contains("level_files") && !doc.at("level_files").is_null()) {
      config.level_files = doc.at("level_files").get<std::vector<std::string>>();
    }
    if (doc.contains("detectors")) {
      for (const auto& d : doc.at("detectors")) {
        config.detectors.push_back(d.is_string() ? default_config(parse_detector_kind(d.get<std::string>()))
                                                 : d.get<DetectorConfig>());
      }
    } else {
      for (DetectorKind kind : kAllDetectors) config.detectors.push_back(default_config(kind));
    }
    if (doc.contains("pollution_ratios")) config.pollution_ratios = doc.at("pollution_ratios").get<std::vector<double>>();
    if (doc.contains("refinement_ratios")) {
      config.refinement_ratios = doc.at("refinement_ratios").get<std::vector<double>>();
    }
    if (doc.contains("strategies")) {
      config.strategies.clear();
      for (const auto& s : doc.at("strategies")) config.strategies.push_back(parse_strategy(s.get<std::string>()));
    }
    if (doc.contains("seeds")) config.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    config.splits = doc.value("splits", config.splits);
    config.refinement_pollution = doc.value("refinement_pollution", config.refinement_pollution);
    if (doc.contains("refiner") && !doc.at("refiner").is_null()) {
      const auto& r = doc.at("refiner");
      config.refiner = r.is_string() ? default_config(parse_detector_kind(r.get<std::string>())) : r.get<DetectorConfig>();
    }
    config.evaluation.pixel_metrics = doc.value("pixel_metrics", config.evaluation.pixel_metrics);
    config.evaluation.fpr_cap = doc.value("fpr_cap", config.evaluation.fpr_cap);
    config.evaluation.smoothing_sigma = doc.value("smoothing_sigma", config.evaluation.smoothing_sigma);
    if (doc.contains("workers") && !doc.at("workers").is_null()) config.workers = doc.at("workers").get<std::size_t>();
    if (doc.contains("curves_dir") && !doc.at("curves_dir").is_null()) {
      config.curves_dir = doc.at("curves_dir").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid sweep config: ") + e.what());
  }
  for (double r : config.pollution_ratios) {
    if (!(r >= 0.0 && r <= kPoolFraction)) throw ConfigError("pollution ratios must lie in [0, 0.2]");
  }
  for (double r : config.refinement_ratios) {
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("refinement ratios must lie in [0, 1)");
  }
  return config;
}

json sweep_config_to_json(const SweepConfig& config) {
  json strategies = json::array();
  for (Strategy s : config.strategies) strategies.push_back(std::string(to_string(s)));
  return json{{"data_root", config.data_root.string()},
              {"categories", config.categories},
              {"level_files", config.level_files},
              {"detectors", config.detectors},
              {"pollution_ratios", config.pollution_ratios},
              {"refinement_ratios", config.refinement_ratios},
              {"strategies", strategies},
              {"seeds", config.seeds},
              {"splits", config.splits},
              {"refinement_pollution", config.refinement_pollution},
              {"refiner", config.refiner ? json(*config.refiner) : json(nullptr)},
              {"pixel_metrics", config.evaluation.pixel_metrics},
              {"fpr_cap", config.evaluation.fpr_cap},
              {"smoothing_sigma", config.evaluation.smoothing_sigma}};
}

namespace {

json report_notes(const SweepConfig& config, const char* sweep) {
  return json{{"sweep", sweep},
              {"fpr_cap", config.evaluation.fpr_cap},
              {"capped_area_normalization", "area over [0, fpr_cap] divided by fpr_cap"},
              {"fpr_pooling", "dataset-level over all healthy pixels"},
              {"config", sweep_config_to_json(config)}};
}

template <class RunCell>
ExperimentReport run_grid(const SweepConfig& config, std::size_t strategy_count, const std::vector<double>& ratios,
                          const char* sweep, RunCell&& run_cell) {
  const auto categories = load_categories(config);
  std::vector<CellKey> cells;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    for (std::size_t d = 0; d < config.detectors.size(); ++d) {
      for (std::size_t s = 0; s < strategy_count; ++s) {
        for (std::size_t r = 0; r < ratios.size(); ++r) {
          for (std::size_t k = 0; k < config.seeds.size(); ++k) cells.push_back({c, d, s, r, k});
        }
      }
    }
  }
  ExperimentReport report;
  report.notes = report_notes(config, sweep);
  report.rows.resize(cells.size());
  std::mutex warned_mutex;
  std::set<std::string> warned;
  parallel_for(cells.size(), config.workers.value_or(default_worker_count()), [&](std::size_t i) {
    const CellKey& key = cells[i];
    ExperimentRow& row = report.rows[i];
    row.category = categories[key.category].name;
    row.detector = std::string(to_string(config.detectors[key.detector].kind));
    row.seed = config.seeds[key.seed];
    const auto start = std::chrono::steady_clock::now();
    try {
      run_cell(categories[key.category], key, row);
    } catch (const CategoryExcludedError& e) {
      row.status = "excluded";
      const std::lock_guard lock(warned_mutex);
      if (warned.insert(row.category).second) spdlog::warn("{}", e.what());
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
      spdlog::error("{} {} seed {}: {}", row.category, row.detector, row.seed, e.what());
    }
    row.wall_time_s = seconds_since(start);
  });
  return report;
}

}  // namespace

ExperimentReport run_robustness_sweep(const SweepConfig& config) {
  return run_grid(config, 1, config.pollution_ratios, "robustness",
                  [&](const CategoryData& data, const CellKey& key, ExperimentRow& row) {
                    row.strategy = "none";
                    row.pollution = config.pollution_ratios[key.ratio];
                    row.refinement = 0.0;
                    const auto plan = build_pollution_plan(data.manifest, data.name, row.pollution, row.seed);
                    const auto detector =
                        fit(config.detectors[key.detector], data.embeddings.subset_by_ids(plan.train_ids));
                    const auto eval = evaluate(detector, data, plan.val_ids, config.evaluation);
                    fill_metrics(row, eval);
                    write_curve(config.curves_dir, row, "iou", eval.iou_curve);
                    write_curve(config.curves_dir, row, "pro", eval.pro_curve);
                  });
}

ExperimentReport run_refinement_sweep(const SweepConfig& config) {
  if (config.strategies.empty()) throw ConfigError("sweep config lists no strategies");
  return run_grid(
      config, config.strategies.size(), config.refinement_ratios, "refinement",
      [&](const CategoryData& data, const CellKey& key, ExperimentRow& row) {
        row.strategy = std::string(to_string(config.strategies[key.strategy]));
        row.pollution = config.refinement_pollution;
        row.refinement = config.refinement_ratios[key.ratio];
        const auto plan = build_pollution_plan(data.manifest, data.name, row.pollution, row.seed);
        const EmbeddingSet train = data.embeddings.subset_by_ids(plan.train_ids);
        const DetectorConfig& final_config = config.detectors[key.detector];

        std::vector<std::string> kept = plan.train_ids;
        if (removal_count(row.refinement, train.size()) > 0) {
          RefinementConfig rc;
          rc.strategy = config.strategies[key.strategy];
          rc.refinement_ratio = row.refinement;
          rc.splits = config.splits;
          rc.refiner = config.refiner.value_or(final_config);
          rc.seed = derive_seed(row.seed, data.name + "/refine", 0);
          auto outcome = refine(train, rc);
          attach_prf(outcome, plan.injected_ids);
          row.precision = outcome.prf->precision;
          row.recall = outcome.prf->recall;
          row.f1 = outcome.prf->f1;
          kept = std::move(outcome.kept_ids);
        }
        const auto detector = fit(final_config, data.embeddings.subset_by_ids(kept));
        const auto eval = evaluate(detector, data, plan.val_ids, config.evaluation);
        fill_metrics(row, eval);
        write_curve(config.curves_dir, row, "iou", eval.iou_curve);
        write_curve(config.curves_dir, row, "pro", eval.pro_curve);
      });
}

DistanceSummary pairwise_distance_summary(const FloatMatrix& embeddings, const std::vector<bool>& defective) {
  if (embeddings.rows != defective.size()) throw ShapeError("embedding and label counts differ");
  DistanceSummary out;
  double sums[2][2] = {{0, 0}, {0, 0}};
  std::size_t counts[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t a = 0; a < embeddings.rows; ++a) {
    for (std::size_t b = a + 1; b < embeddings.rows; ++b) {
      const double d = std::sqrt(squared_l2(embeddings.row(a), embeddings.row(b)));
      const int ca = defective[a] ? 1 : 0, cb = defective[b] ? 1 : 0;
      sums[ca][cb] += d;
      ++counts[ca][cb];
      if (ca != cb) {
        sums[cb][ca] += d;
        ++counts[cb][ca];
      }
    }
  }
  for (bool d : defective) d ? ++out.defective : ++out.healthy;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      out.defined[i][j] = counts[i][j] > 0;
      out.mean[i][j] = out.defined[i][j] ? sums[i][j] / static_cast<double>(counts[i][j])
                                         : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

json distance_summary_to_json(const DistanceSummary& s) {
  auto cell = [&](int i, int j) { return s.defined[i][j] ? json(s.mean[i][j]) : json(nullptr); };
  return json{{"labels", {"healthy", "defective"}},
              {"mean_distance", {{cell(0, 0), cell(0, 1)}, {cell(1, 0), cell(1, 1)}}},
              {"counts", {{"healthy", s.healthy}, {"defective", s.defective}}}};
}

ContourProjection mvg_contour_projection(const FloatMatrix& healthy, const FloatMatrix& polluted) {
  if (healthy.cols < 2) throw DataError("contour projection needs at least 2 dimensions");
  if (polluted.rows > 0 && polluted.cols != healthy.cols) throw ShapeError("healthy and polluted widths differ");
  const Eigen::MatrixXd h = to_eigen(healthy);
  Eigen::MatrixXd full(h.rows() + static_cast<Eigen::Index>(polluted.rows), h.cols());
  full.topRows(h.rows()) = h;
  if (polluted.rows > 0) full.bottomRows(static_cast<Eigen::Index>(polluted.rows)) = to_eigen(polluted);

  const GaussianModel clean = ledoit_wolf(h);
  const GaussianModel dirty = ledoit_wolf(full);
  const Eigen::VectorXd change = (dirty.covariance().diagonal() - clean.covariance().diagonal()).cwiseAbs();
  std::vector<std::size_t> order(static_cast<std::size_t>(change.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) {
    return change[static_cast<Eigen::Index>(a)] > change[static_cast<Eigen::Index>(b)];
  });

  ContourProjection out;
  for (int a = 0; a < 2; ++a) {
    out.axes[a] = order[static_cast<std::size_t>(a)];
    out.variance_change[a] = change[static_cast<Eigen::Index>(out.axes[a])];
  }
  for (int a = 0; a < 2; ++a) {
    const auto ia = static_cast<Eigen::Index>(out.axes[a]);
    out.healthy_mean[a] = clean.mean()[ia];
    out.polluted_mean[a] = dirty.mean()[ia];
    for (int b = 0; b < 2; ++b) {
      const auto ib = static_cast<Eigen::Index>(out.axes[b]);
      out.healthy_cov[a][b] = clean.covariance()(ia, ib);
      out.polluted_cov[a][b] = dirty.covariance()(ia, ib);
    }
  }
  auto project = [&](const FloatMatrix& src) {
    FloatMatrix dst(src.rows, 2);
    for (std::size_t r = 0; r < src.rows; ++r) {
      dst(r, 0) = src(r, out.axes[0]);
      dst(r, 1) = src(r, out.axes[1]);
    }
    return dst;
  };
  out.healthy_points = project(healthy);
  out.defective_points = project(polluted);
  return out;
}

void write_contour_csv(const ContourProjection& p, std::ostream& out) {
  out << "record,group,x,y,sxx,sxy,syy\n";
  out << "model,healthy," << format_number(p.healthy_mean[0]) << ',' << format_number(p.healthy_mean[1]) << ','
      << format_number(p.healthy_cov[0][0]) << ',' << format_number(p.healthy_cov[0][1]) << ','
      << format_number(p.healthy_cov[1][1]) << '\n';
  out << "model,polluted," << format_number(p.polluted_mean[0]) << ',' << format_number(p.polluted_mean[1]) << ','
      << format_number(p.polluted_cov[0][0]) << ',' << format_number(p.polluted_cov[0][1]) << ','
      << format_number(p.polluted_cov[1][1]) << '\n';
  for (std::size_t r = 0; r < p.healthy_points.rows; ++r) {
    out << "sample,healthy," << format_number(p.healthy_points(r, 0)) << ',' << format_number(p.healthy_points(r, 1))
        << ",,,\n";
  }
  for (std::size_t r = 0; r < p.defective_points.rows; ++r) {
    out << "sample,defective," << format_number(p.defective_points(r, 0)) << ','
        << format_number(p.defective_points(r, 1)) << ",,,\n";
  }
}

}  // namespace sroc

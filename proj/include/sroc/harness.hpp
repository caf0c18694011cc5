#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "sroc/detectors.hpp"
#include "sroc/image.hpp"
#include "sroc/manifest.hpp"
#include "sroc/refine.hpp"
#include "sroc/tensor.hpp"

namespace sroc {

inline constexpr double kPoolFraction = 0.2;

/// Which training images get swapped for which defective validation images.
///
/// The pool is drawn once per (category, seed) and reused for every ratio, and
/// replacements are prefixes of one seeded permutation, so higher ratios extend
/// lower ones.
struct PollutionPlan {
  std::string category;
  double pollution_ratio = 0.0;
  std::uint64_t seed = 0;
  double pool_fraction = kPoolFraction;
  std::vector<std::string> original_train_ids;
  std::vector<std::string> train_ids;  // polluted training set, same size as the original
  std::vector<std::string> val_ids;    // validation minus the pool
  std::vector<std::string> pollution_pool;
  std::map<std::string, std::size_t> pool_type_counts;
  std::vector<std::string> replaced_train_ids;
  std::vector<std::string> injected_ids;
};

// Largest-remainder apportionment of `total` over `weights` (ties go to the earlier entry).
std::vector<std::size_t> largest_remainder(std::span<const std::size_t> weights, std::size_t total);

PollutionPlan build_pollution_plan(const Manifest& manifest, const std::string& category, double pollution_ratio,
                                   std::uint64_t seed, double pool_fraction = kPoolFraction);
nlohmann::json plan_to_json(const PollutionPlan& plan);
// Throws DataError describing the first broken invariant.
void check_plan_invariants(const PollutionPlan& plan, const Manifest& manifest);

// Manifest, embeddings and masks of one category directory.
struct CategoryData {
  std::string name;
  std::filesystem::path dir;
  Manifest manifest;
  EmbeddingSet embeddings;  // manifest order
  std::optional<ImageSize> image_size;
  std::unordered_map<std::string, BinaryMask> masks;

  const SampleRecord& record(const std::string& id) const;
  // Ground truth for a sample; all-zero when it has no mask.
  BinaryMask mask_for(const std::string& id) const;

 private:
  mutable std::unordered_map<std::string, std::size_t> index_;
};

// `<root>/<category>/manifest.json` plus the level files (default: every
// `level_*.npy`, ordered by the number in the name).
CategoryData load_category(const std::filesystem::path& root, const std::string& category,
                           const std::vector<std::string>& level_files = {});

struct EvaluationOptions {
  bool pixel_metrics = true;
  double fpr_cap = 0.3;
  double smoothing_sigma = 4.0;
  std::size_t workers = 1;
};

struct Evaluation {
  double auc = 0.0;
  std::optional<double> au_iou;
  std::optional<double> au_pro;
  std::optional<CappedCurve> iou_curve;
  std::optional<CappedCurve> pro_curve;
  std::vector<double> scores;  // val_ids order
};

Evaluation evaluate(const FittedDetector& detector, const CategoryData& data, const std::vector<std::string>& val_ids,
                    const EvaluationOptions& options);

struct ExperimentRow {
  std::string category;
  std::string detector;
  std::string strategy;  // "none" for robustness rows
  double pollution = 0.0;
  double refinement = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> auc, au_iou, au_pro, precision, recall, f1;
  double wall_time_s = 0.0;
  std::string status = "ok";
};

struct ExperimentReport {
  std::vector<ExperimentRow> rows;
  nlohmann::json notes = nlohmann::json::object();
};

inline constexpr const char* kReportHeader =
    "category,detector,strategy,pollution,refinement,seed,auc,au_iou,au_pro,precision,recall,f1,wall_time_s";

void write_report_csv(const ExperimentReport& report, std::ostream& out, bool include_wall_time = true);
nlohmann::json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& doc);
// Mean and standard deviation over seeds for every (detector, strategy, pollution,
// refinement) cell and metric, pooled across categories. Feeds metric-vs-ratio plots.
void write_series_csv(const ExperimentReport& report, std::ostream& out);
void write_summary_markdown(const ExperimentReport& report, std::ostream& out);

struct SweepConfig {
  std::filesystem::path data_root = ".";
  std::vector<std::string> categories;
  std::vector<std::string> level_files;
  std::vector<DetectorConfig> detectors;
  std::vector<double> pollution_ratios{0.0, 0.05, 0.1, 0.15, 0.2};
  std::vector<double> refinement_ratios{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  std::vector<Strategy> strategies{std::begin(kAllStrategies), std::end(kAllStrategies)};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t splits = 5;
  double refinement_pollution = 0.2;
  // Scores training samples for refinement; defaults to the detector being evaluated.
  std::optional<DetectorConfig> refiner;
  EvaluationOptions evaluation;
  std::optional<std::size_t> workers;  // default: SROC_WORKERS or hardware threads
  std::optional<std::filesystem::path> curves_dir;
};

SweepConfig sweep_config_from_json(const nlohmann::json& doc);
nlohmann::json sweep_config_to_json(const SweepConfig& config);

ExperimentReport run_robustness_sweep(const SweepConfig& config);
ExperimentReport run_refinement_sweep(const SweepConfig& config);

struct DistanceSummary {
  // [healthy, defective] x [healthy, defective]; NaN where a class has < 2 members.
  double mean[2][2] = {{0, 0}, {0, 0}};
  bool defined[2][2] = {{false, false}, {false, false}};
  std::size_t healthy = 0;
  std::size_t defective = 0;
};

DistanceSummary pairwise_distance_summary(const FloatMatrix& embeddings, const std::vector<bool>& defective);
nlohmann::json distance_summary_to_json(const DistanceSummary& summary);

struct ContourProjection {
  std::size_t axes[2] = {0, 1};
  double variance_change[2] = {0, 0};
  double healthy_mean[2] = {0, 0};
  double polluted_mean[2] = {0, 0};
  double healthy_cov[2][2] = {{0, 0}, {0, 0}};
  double polluted_cov[2][2] = {{0, 0}, {0, 0}};
  FloatMatrix healthy_points;   // N x 2
  FloatMatrix defective_points; // M x 2
};

// Fits Ledoit-Wolf Gaussians on the healthy rows and on healthy + polluted rows,
// then projects onto the two axes whose variance changed the most.
ContourProjection mvg_contour_projection(const FloatMatrix& healthy, const FloatMatrix& polluted);
// Header line, then 2 model rows and one row per sample.
void write_contour_csv(const ContourProjection& projection, std::ostream& out);

int cli_main(int argc, const char* const* argv);

}  // namespace sroc

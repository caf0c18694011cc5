#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sroc/detectors.hpp"
#include "sroc/metrics.hpp"
#include "sroc/tensor.hpp"

namespace sroc {

enum class Strategy { Sroc, Random, CrossValidation, Stoc };

inline constexpr Strategy kAllStrategies[] = {Strategy::Sroc, Strategy::Random, Strategy::CrossValidation,
                                              Strategy::Stoc};

std::string_view to_string(Strategy strategy);
// "sroc", "random", "cross_validation" (or "cv"), "stoc"
Strategy parse_strategy(std::string_view name);

struct RefinementConfig {
  Strategy strategy = Strategy::Sroc;
  double refinement_ratio = 0.0;  // fraction of training samples to remove, in [0, 1)
  std::size_t splits = 5;         // cross-validation and STOC
  DetectorConfig refiner;         // detector used to score training samples
  std::uint64_t seed = 0;

  void validate() const;
};

struct RefinementOutcome {
  std::vector<std::string> kept_ids;     // training order
  std::vector<std::string> removed_ids;  // highest score first
  // One score per training sample, in training order.
  std::vector<std::pair<std::string, double>> scores;
  std::optional<Prf> prf;
  // True when the removal boundary fell inside a group of tied scores.
  bool boundary_tie = false;
};

std::size_t removal_count(double ratio, std::size_t n);

// Seeded partition of [0, n) into `splits` groups whose sizes differ by at most one.
// Each group is sorted ascending.
std::vector<std::vector<std::size_t>> make_splits(std::size_t n, std::size_t splits, std::uint64_t seed);

// Removes the `count` highest scores; ties go to the earlier training position.
RefinementOutcome remove_top(const std::vector<std::string>& ids, std::span<const double> scores, std::size_t count);

RefinementOutcome sroc(const EmbeddingSet& train, const RefinementConfig& config);
RefinementOutcome random_refine(const EmbeddingSet& train, const RefinementConfig& config);
RefinementOutcome cross_validation_refine(const EmbeddingSet& train, const RefinementConfig& config);
RefinementOutcome stoc_refine(const EmbeddingSet& train, const RefinementConfig& config);
RefinementOutcome refine(const EmbeddingSet& train, const RefinementConfig& config);

void attach_prf(RefinementOutcome& outcome, std::span<const std::string> defective_ids);

struct CrossDetectorResult {
  RefinementOutcome outcome;
  FittedDetector detector;
};

// SROC with `refiner`, then `final_config` fitted on the kept samples only.
CrossDetectorResult cross_detector_pipeline(const EmbeddingSet& train, const DetectorConfig& refiner,
                                            const DetectorConfig& final_config, double ratio);

}  // namespace sroc

#include "sroc/refine.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include <spdlog/spdlog.h>

#include "sroc/error.hpp"
#include "sroc/random.hpp"

namespace sroc {
namespace {

std::size_t checked_removal(const EmbeddingSet& train, const RefinementConfig& config) {
  config.validate();
  if (train.size() == 0) throw InsufficientDataError("cannot refine an empty training set");
  const std::size_t count = removal_count(config.refinement_ratio, train.size());
  if (count >= train.size()) {
    throw ConfigError("refinement would remove all " + std::to_string(train.size()) + " samples");
  }
  return count;
}

std::vector<double> self_scores(const DetectorConfig& detector, const EmbeddingSet& fit_on,
                                const EmbeddingSet& score_on) {
  return image_scores(score_set(fit(detector, fit_on), score_on));
}

EmbeddingSet with_pooled(const EmbeddingSet& train) {
  EmbeddingSet copy = train;
  if (!copy.pooled) concat_pooled_levels(copy);
  return copy;
}

}  // namespace

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::Sroc:
      return "sroc";
    case Strategy::Random:
      return "random";
    case Strategy::CrossValidation:
      return "cross_validation";
    case Strategy::Stoc:
      return "stoc";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  std::string key(name);
  for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::ranges::replace(key, '-', '_');
  if (key == "sroc") return Strategy::Sroc;
  if (key == "random") return Strategy::Random;
  if (key == "cross_validation" || key == "cv") return Strategy::CrossValidation;
  if (key == "stoc") return Strategy::Stoc;
  throw ConfigError("unknown refinement strategy '" + std::string(name) + "'");
}

void RefinementConfig::validate() const {
  if (!(refinement_ratio >= 0.0 && refinement_ratio < 1.0)) {
    throw ConfigError("refinement ratio must lie in [0, 1), got " + std::to_string(refinement_ratio));
  }
  if (strategy == Strategy::CrossValidation && splits < 2) throw ConfigError("cross-validation needs at least 2 splits");
  if (strategy == Strategy::Stoc && splits < 1) throw ConfigError("STOC needs at least 1 split");
}

std::size_t removal_count(double ratio, std::size_t n) { return fraction_count(ratio, n); }

std::vector<std::vector<std::size_t>> make_splits(std::size_t n, std::size_t splits, std::uint64_t seed) {
  if (splits == 0) throw ConfigError("number of splits must be >= 1");
  if (splits > n) {
    throw InsufficientDataError("cannot make " + std::to_string(splits) + " splits from " + std::to_string(n) +
                                " samples");
  }
  Rng rng(derive_seed(seed, "refine-splits", 0));
  const auto order = rng.permutation(n);
  std::vector<std::vector<std::size_t>> out(splits);
  const std::size_t base = n / splits, extra = n % splits;
  std::size_t cursor = 0;
  for (std::size_t s = 0; s < splits; ++s) {
    const std::size_t size = base + (s < extra ? 1 : 0);
    out[s].assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                  order.begin() + static_cast<std::ptrdiff_t>(cursor + size));
    std::ranges::sort(out[s]);
    cursor += size;
  }
  return out;
}

RefinementOutcome remove_top(const std::vector<std::string>& ids, std::span<const double> scores, std::size_t count) {
  if (ids.size() != scores.size()) throw ShapeError("id and score counts differ");
  if (count > ids.size()) throw ConfigError("cannot remove more samples than exist");
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RefinementOutcome out;
  std::vector<bool> removed(ids.size(), false);
  for (std::size_t k = 0; k < count; ++k) {
    removed[order[k]] = true;
    out.removed_ids.push_back(ids[order[k]]);
  }
  if (count > 0 && count < ids.size() && scores[order[count - 1]] == scores[order[count]]) {
    out.boundary_tie = true;
    spdlog::info("refinement boundary tie at score {}; broken by training order", scores[order[count]]);
  }
  out.scores.reserve(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (!removed[k]) out.kept_ids.push_back(ids[k]);
    out.scores.emplace_back(ids[k], scores[k]);
  }
  return out;
}

RefinementOutcome sroc(const EmbeddingSet& train, const RefinementConfig& config) {
  const std::size_t count = checked_removal(train, config);
  if (count == 0) return remove_top(train.sample_ids, std::vector<double>(train.size(), 0.0), 0);
  return remove_top(train.sample_ids, self_scores(config.refiner, train, train), count);
}

RefinementOutcome random_refine(const EmbeddingSet& train, const RefinementConfig& config) {
  const std::size_t count = checked_removal(train, config);
  // Top-k of i.i.d. uniform keys is a uniform draw without replacement.
  Rng rng(derive_seed(config.seed, "random-refine", 0));
  std::vector<double> keys(train.size());
  for (double& key : keys) key = rng.uniform01();
  return remove_top(train.sample_ids, keys, count);
}

RefinementOutcome cross_validation_refine(const EmbeddingSet& train, const RefinementConfig& config) {
  const std::size_t count = checked_removal(train, config);
  const auto splits = make_splits(train.size(), config.splits, config.seed);
  const EmbeddingSet pooled = with_pooled(train);
  std::vector<double> scores(train.size(), 0.0);
  for (std::size_t s = 0; s < splits.size(); ++s) {
    std::vector<std::size_t> rest;
    for (std::size_t o = 0; o < splits.size(); ++o) {
      if (o != s) rest.insert(rest.end(), splits[o].begin(), splits[o].end());
    }
    std::ranges::sort(rest);
    const auto held = self_scores(config.refiner, pooled.subset(rest), pooled.subset(splits[s]));
    for (std::size_t k = 0; k < splits[s].size(); ++k) scores[splits[s][k]] = held[k];
  }
  return remove_top(train.sample_ids, scores, count);
}

RefinementOutcome stoc_refine(const EmbeddingSet& train, const RefinementConfig& config) {
  const std::size_t count = checked_removal(train, config);
  const auto splits = make_splits(train.size(), config.splits, config.seed);
  const EmbeddingSet pooled = with_pooled(train);
  std::vector<double> scores(train.size(), 0.0);
  for (const auto& split : splits) {
    const auto part = self_scores(config.refiner, pooled.subset(split), pooled);
    for (std::size_t k = 0; k < scores.size(); ++k) scores[k] += part[k];
  }
  for (double& s : scores) s /= static_cast<double>(splits.size());
  return remove_top(train.sample_ids, scores, count);
}

RefinementOutcome refine(const EmbeddingSet& train, const RefinementConfig& config) {
  switch (config.strategy) {
    case Strategy::Sroc:
      return sroc(train, config);
    case Strategy::Random:
      return random_refine(train, config);
    case Strategy::CrossValidation:
      return cross_validation_refine(train, config);
    case Strategy::Stoc:
      return stoc_refine(train, config);
  }
  throw ConfigError("unhandled strategy");
}

void attach_prf(RefinementOutcome& outcome, std::span<const std::string> defective_ids) {
  outcome.prf = refinement_prf(outcome.removed_ids, defective_ids);
}

CrossDetectorResult cross_detector_pipeline(const EmbeddingSet& train, const DetectorConfig& refiner,
                                            const DetectorConfig& final_config, double ratio) {
  RefinementConfig config;
  config.strategy = Strategy::Sroc;
  config.refinement_ratio = ratio;
  config.refiner = refiner;
  RefinementOutcome outcome = sroc(train, config);
  FittedDetector detector = fit(final_config, train.subset_by_ids(outcome.kept_ids));
  return {std::move(outcome), std::move(detector)};
}

}  // namespace sroc

#include "sroc/detectors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "sroc/error.hpp"
#include "sroc/parallel.hpp"

namespace sroc {
namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

[[noreturn]] void insufficient(DetectorKind kind, const std::string& why) {
  throw InsufficientDataError(std::string(to_string(kind)) + ": " + why);
}

// GAP vectors of one sample, concatenated in level order.
std::vector<float> pooled_sample(const EmbeddingSet& set, std::size_t sample) {
  if (set.pooled) {
    const auto row = set.pooled->row(sample);
    return {row.begin(), row.end()};
  }
  std::vector<float> out;
  out.reserve(set.total_channels());
  for (const auto& level : set.levels) {
    std::vector<double> acc(level.channels, 0.0);
    const auto data = level.sample(sample);
    for (std::size_t p = 0; p < level.height * level.width; ++p) {
      for (std::size_t c = 0; c < level.channels; ++c) acc[c] += data[p * level.channels + c];
    }
    const double cells = static_cast<double>(level.height * level.width);
    for (double v : acc) out.push_back(static_cast<float>(v / cells));
  }
  return out;
}

FloatMatrix finish_pixel_map(const FloatMatrix& map, const ScoreOptions& options) {
  FloatMatrix out = gaussian_smooth(map, options.smoothing_sigma);
  for (float v : out.data) {
    if (!std::isfinite(v)) throw DataError("pixel score map contains non-finite values");
  }
  return out;
}

double knn_image_score(const KnnModel& model, std::size_t k, std::span<const float> pooled,
                       std::vector<Neighbor>* neighbors) {
  auto found = exact_knn(model.pooled, pooled, k);
  double total = 0.0;
  for (const auto& nb : found) total += nb.squared_distance;
  if (neighbors) *neighbors = std::move(found);
  return total / static_cast<double>(k);
}

ScoreMap knn_with_map(const FittedDetector& det, std::span<const float> pooled, const EmbeddingSet& test,
                      std::size_t sample, const ScoreOptions& options) {
  const auto& model = det.model<KnnModel>();
  std::vector<Neighbor> neighbors;
  ScoreMap out;
  out.image_score = knn_image_score(model, det.k(), pooled, &neighbors);
  if (!options.image_size) return out;
  if (test.levels.size() != model.levels.size()) throw ShapeError("knn: test level count does not match training");

  FloatMatrix total(options.image_size->height, options.image_size->width, 0.0f);
  for (std::size_t l = 0; l < model.levels.size(); ++l) {
    const FeatureLevel& train_level = model.levels[l];
    const FeatureLevel& test_level = test.levels[l];
    if (test_level.height != train_level.height || test_level.width != train_level.width ||
        test_level.channels != train_level.channels) {
      throw ShapeError("knn: test level " + std::to_string(l) + " shape does not match training");
    }
    DoubleMatrix level_map(train_level.height, train_level.width);
    for (std::size_t i = 0; i < train_level.height; ++i) {
      for (std::size_t j = 0; j < train_level.width; ++j) {
        const auto query = test_level.patch(sample, i, j);
        double acc = 0.0;
        for (const auto& nb : neighbors) acc += squared_l2(train_level.patch(nb.row, i, j), query);
        level_map(i, j) = acc / static_cast<double>(neighbors.size());
      }
    }
    const FloatMatrix up = resize_bilinear(level_map, *options.image_size);
    for (std::size_t p = 0; p < total.data.size(); ++p) total.data[p] += up.data[p];
  }
  out.pixel_scores = finish_pixel_map(total, options);
  return out;
}

template <class CellScore>
ScoreMap grid_score(std::size_t height, std::size_t width, const ScoreOptions& options, CellScore&& cell) {
  ScoreMap out;
  DoubleMatrix map(height, width);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      map(i, j) = cell(i, j);
      best = std::max(best, map(i, j));
    }
  }
  out.image_score = best;
  if (options.image_size) out.pixel_scores = finish_pixel_map(resize_bilinear(map, *options.image_size), options);
  out.patch_scores = std::move(map);
  return out;
}

void check_grid(const AlignedPatchGrid& grid, std::size_t sample, std::size_t height, std::size_t width,
                std::size_t channels, DetectorKind kind) {
  if (grid.height != height || grid.width != width || grid.channels != channels) {
    throw ShapeError(std::string(to_string(kind)) + ": test grid " + std::to_string(grid.height) + "x" +
                     std::to_string(grid.width) + "x" + std::to_string(grid.channels) + " does not match fitted " +
                     std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels));
  }
  if (sample >= grid.count) throw DataError("sample index out of range");
}

}  // namespace

std::string_view to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::Knn:
      return "knn";
    case DetectorKind::Mahalanobis:
      return "mahalanobis";
    case DetectorKind::Padim:
      return "padim";
    case DetectorKind::Patchcore:
      return "patchcore";
  }
  return "unknown";
}

DetectorKind parse_detector_kind(std::string_view name) {
  const std::string key = lower(name);
  if (key == "knn" || key == "spade") return DetectorKind::Knn;
  if (key == "mahalanobis") return DetectorKind::Mahalanobis;
  if (key == "padim") return DetectorKind::Padim;
  if (key == "patchcore") return DetectorKind::Patchcore;
  throw ConfigError("unknown detector kind '" + std::string(name) + "'");
}

bool has_pixel_maps(DetectorKind kind) { return kind != DetectorKind::Mahalanobis; }

void FittedDetector::set_nprobe(std::size_t nprobe) {
  auto* pc = std::get_if<PatchcoreModel>(&model_);
  if (!pc) throw ConfigError("nprobe only applies to patchcore");
  pc->index.set_nprobe(nprobe);
  config_.nprobe = nprobe;
}

FittedDetector fit(const DetectorConfig& config, const EmbeddingSet& train) {
  const std::size_t n = train.size();
  if (n == 0) insufficient(config.kind, "empty training set");
  if (config.k == 0) throw ConfigError("k must be >= 1");
  if (train.levels.empty()) throw DataError(std::string(to_string(config.kind)) + ": training set has no levels");

  switch (config.kind) {
    case DetectorKind::Knn: {
      if (config.k > n) {
        insufficient(config.kind, "k=" + std::to_string(config.k) + " exceeds training size " + std::to_string(n));
      }
      KnnModel model;
      model.pooled.vectors = concat_pooled_levels(train);
      model.pooled.payload_ids.resize(n);
      for (std::size_t s = 0; s < n; ++s) model.pooled.payload_ids[s] = {static_cast<std::uint32_t>(s), -1, -1};
      model.levels = train.levels;
      return FittedDetector(config, n, std::move(model));
    }
    case DetectorKind::Mahalanobis: {
      if (n < 2) insufficient(config.kind, "needs at least 2 training samples, got " + std::to_string(n));
      MahalanobisModel model;
      for (const auto& level : train.levels) {
        model.per_level.push_back(ledoit_wolf(global_average_pool(level)));
        model.channels.push_back(level.channels);
      }
      return FittedDetector(config, n, std::move(model));
    }
    case DetectorKind::Padim: {
      if (n < 2) insufficient(config.kind, "needs at least 2 training samples per location, got " + std::to_string(n));
      const AlignedPatchGrid grid = align_and_concat(train);
      PadimModel model{grid.height, grid.width, grid.channels, {}};
      model.cells.reserve(grid.height * grid.width);
      Eigen::MatrixXd cell(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(grid.channels));
      for (std::size_t i = 0; i < grid.height; ++i) {
        for (std::size_t j = 0; j < grid.width; ++j) {
          for (std::size_t s = 0; s < n; ++s) {
            const auto v = grid.patch(s, i, j);
            for (std::size_t c = 0; c < grid.channels; ++c) {
              cell(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c)) = v[c];
            }
          }
          model.cells.push_back(ledoit_wolf(cell));
        }
      }
      return FittedDetector(config, n, std::move(model));
    }
    case DetectorKind::Patchcore: {
      const AlignedPatchGrid grid = align_and_concat(train);
      PatchcoreModel model;
      model.height = grid.height;
      model.width = grid.width;
      const std::size_t m = n * grid.height * grid.width;
      if (config.k > m) {
        insufficient(config.kind, "k=" + std::to_string(config.k) + " exceeds bank size " + std::to_string(m));
      }
      model.bank.vectors.rows = m;
      model.bank.vectors.cols = grid.channels;
      model.bank.vectors.data = grid.data;
      model.bank.payload_ids.reserve(m);
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t i = 0; i < grid.height; ++i) {
          for (std::size_t j = 0; j < grid.width; ++j) {
            model.bank.payload_ids.push_back(
                {static_cast<std::uint32_t>(s), static_cast<std::int32_t>(i), static_cast<std::int32_t>(j)});
          }
        }
      }
      const std::size_t nlist = std::min(config.nlist.value_or(default_nlist(m)), m);
      model.index = ivf_build(model.bank, nlist, config.seed,
                              config.nprobe ? std::optional(std::min(*config.nprobe, nlist)) : std::nullopt);
      DetectorConfig resolved = config;
      resolved.nlist = model.index.nlist;
      resolved.nprobe = model.index.nprobe;
      return FittedDetector(resolved, n, std::move(model));
    }
  }
  throw ConfigError("unhandled detector kind");
}

ScoreMap score_knn(const FittedDetector& det, std::span<const float> pooled) {
  if (det.kind() != DetectorKind::Knn) throw ConfigError("score_knn called on a " + std::string(to_string(det.kind())));
  ScoreMap out;
  out.image_score = knn_image_score(det.model<KnnModel>(), det.k(), pooled, nullptr);
  return out;
}

ScoreMap score_knn(const FittedDetector& det, const EmbeddingSet& test, std::size_t sample,
                   const ScoreOptions& options) {
  if (det.kind() != DetectorKind::Knn) throw ConfigError("score_knn called on a " + std::string(to_string(det.kind())));
  if (sample >= test.size()) throw DataError("sample index out of range");
  const auto pooled = pooled_sample(test, sample);
  return knn_with_map(det, pooled, test, sample, options);
}

ScoreMap score_mahalanobis(const FittedDetector& det, std::span<const float> pooled) {
  if (det.kind() != DetectorKind::Mahalanobis) {
    throw ConfigError("score_mahalanobis called on a " + std::string(to_string(det.kind())));
  }
  const auto& model = det.model<MahalanobisModel>();
  std::size_t total_channels = 0;
  for (std::size_t c : model.channels) total_channels += c;
  if (pooled.size() != total_channels) {
    throw ShapeError("mahalanobis: query has " + std::to_string(pooled.size()) + " channels, levels sum to " +
                     std::to_string(total_channels));
  }
  ScoreMap out;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < model.per_level.size(); ++l) {
    out.image_score += model.per_level[l].distance(pooled.subspan(offset, model.channels[l]));
    offset += model.channels[l];
  }
  return out;
}

ScoreMap score_padim(const FittedDetector& det, const AlignedPatchGrid& grid, std::size_t sample,
                     const ScoreOptions& options) {
  if (det.kind() != DetectorKind::Padim) throw ConfigError("score_padim called on a " + std::string(to_string(det.kind())));
  const auto& model = det.model<PadimModel>();
  check_grid(grid, sample, model.height, model.width, model.channels, DetectorKind::Padim);
  return grid_score(model.height, model.width, options,
                    [&](std::size_t i, std::size_t j) { return model.cell(i, j).distance(grid.patch(sample, i, j)); });
}

ScoreMap score_patchcore(const FittedDetector& det, const AlignedPatchGrid& grid, std::size_t sample,
                         const ScoreOptions& options) {
  if (det.kind() != DetectorKind::Patchcore) {
    throw ConfigError("score_patchcore called on a " + std::string(to_string(det.kind())));
  }
  const auto& model = det.model<PatchcoreModel>();
  check_grid(grid, sample, model.height, model.width, model.bank.dim(), DetectorKind::Patchcore);
  return grid_score(model.height, model.width, options, [&](std::size_t i, std::size_t j) {
    const auto found = ivf_query(model.index, model.bank, grid.patch(sample, i, j), det.k());
    double total = 0.0;
    for (const auto& nb : found) total += nb.squared_distance;
    return total / static_cast<double>(det.k());
  });
}

std::vector<ScoreMap> score_set(const FittedDetector& det, const EmbeddingSet& test, const ScoreOptions& options) {
  std::vector<ScoreMap> out(test.size());
  if (test.size() == 0) return out;
  switch (det.kind()) {
    case DetectorKind::Knn:
    case DetectorKind::Mahalanobis: {
      const FloatMatrix pooled = test.pooled ? *test.pooled : concat_pooled_levels(test);
      parallel_for(test.size(), options.workers, [&](std::size_t s) {
        out[s] = det.kind() == DetectorKind::Knn ? knn_with_map(det, pooled.row(s), test, s, options)
                                                 : score_mahalanobis(det, pooled.row(s));
      });
      break;
    }
    case DetectorKind::Padim:
    case DetectorKind::Patchcore: {
      const AlignedPatchGrid grid = align_and_concat(test);
      parallel_for(test.size(), options.workers, [&](std::size_t s) {
        out[s] = det.kind() == DetectorKind::Padim ? score_padim(det, grid, s, options)
                                                   : score_patchcore(det, grid, s, options);
      });
      break;
    }
  }
  return out;
}

std::vector<double> image_scores(const std::vector<ScoreMap>& maps) {
  std::vector<double> out;
  out.reserve(maps.size());
  for (const auto& m : maps) out.push_back(m.image_score);
  return out;
}

}  // namespace sroc

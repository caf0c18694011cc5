#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sroc/ann.hpp"
#include "sroc/covariance.hpp"
#include "sroc/image.hpp"
#include "sroc/matrix.hpp"
#include "sroc/tensor.hpp"

namespace sroc {

enum class DetectorKind { Knn, Mahalanobis, Padim, Patchcore };

inline constexpr DetectorKind kAllDetectors[] = {DetectorKind::Knn, DetectorKind::Mahalanobis, DetectorKind::Padim,
                                                 DetectorKind::Patchcore};

std::string_view to_string(DetectorKind kind);
// Accepts "knn", "spade", "mahalanobis", "padim", "patchcore" in any case.
DetectorKind parse_detector_kind(std::string_view name);
// Whether the detector can emit pixel-level maps.
bool has_pixel_maps(DetectorKind kind);

struct DetectorConfig {
  DetectorKind kind = DetectorKind::Knn;
  std::size_t k = 5;
  std::optional<std::size_t> nlist;   // PatchCore only; default round(sqrt(M)) clamped to [1, 1024]
  std::optional<std::size_t> nprobe;  // PatchCore only; default max(1, nlist / 4)
  std::uint64_t seed = 0;             // coarse quantizer seed
};

inline DetectorConfig default_config(DetectorKind kind) {
  DetectorConfig config;
  config.kind = kind;
  return config;
}

struct ScoreOptions {
  // Pixel maps are produced only when an image size is given.
  std::optional<ImageSize> image_size;
  double smoothing_sigma = 4.0;
  std::size_t workers = 1;
};

struct ScoreMap {
  double image_score = 0.0;
  // Pre-upsampling map on the aligned grid (PaDiM and PatchCore).
  std::optional<DoubleMatrix> patch_scores;
  // Upsampled, smoothed map at image resolution.
  std::optional<FloatMatrix> pixel_scores;
};

struct KnnModel {
  VectorBank pooled;
  // Training feature levels, kept for SPADE patch scores.
  std::vector<FeatureLevel> levels;
};

struct MahalanobisModel {
  std::vector<GaussianModel> per_level;
  std::vector<std::size_t> channels;
};

struct PadimModel {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<GaussianModel> cells;  // row-major over the grid

  const GaussianModel& cell(std::size_t i, std::size_t j) const { return cells[i * width + j]; }
};

struct PatchcoreModel {
  std::size_t height = 0;
  std::size_t width = 0;
  VectorBank bank;
  IvfIndex index;
};

class FittedDetector {
 public:
  using Model = std::variant<KnnModel, MahalanobisModel, PadimModel, PatchcoreModel>;

  FittedDetector(DetectorConfig config, std::size_t train_size, Model model)
      : config_(config), train_size_(train_size), model_(std::move(model)) {}

  DetectorKind kind() const { return config_.kind; }
  std::size_t k() const { return config_.k; }
  const DetectorConfig& config() const { return config_; }
  std::size_t train_size() const { return train_size_; }

  template <class T>
  const T& model() const {
    return std::get<T>(model_);
  }
  // PatchCore probing can be changed after the fact.
  void set_nprobe(std::size_t nprobe);

 private:
  DetectorConfig config_;
  std::size_t train_size_;
  Model model_;
};

FittedDetector fit(const DetectorConfig& config, const EmbeddingSet& train);

// Mean squared L2 distance to the k nearest pooled training vectors.
ScoreMap score_knn(const FittedDetector& det, std::span<const float> pooled);
// Same image score plus the SPADE map: per level, the mean squared distance of each
// patch to the same position in the k retrieved images, upsampled and summed.
ScoreMap score_knn(const FittedDetector& det, const EmbeddingSet& test, std::size_t sample,
                   const ScoreOptions& options);
// `pooled` is the concatenation of per-level GAP vectors; distances are summed over levels.
ScoreMap score_mahalanobis(const FittedDetector& det, std::span<const float> pooled);
ScoreMap score_padim(const FittedDetector& det, const AlignedPatchGrid& grid, std::size_t sample,
                     const ScoreOptions& options = {});
ScoreMap score_patchcore(const FittedDetector& det, const AlignedPatchGrid& grid, std::size_t sample,
                         const ScoreOptions& options = {});

// Scores every sample of `test` in order.
std::vector<ScoreMap> score_set(const FittedDetector& det, const EmbeddingSet& test,
                                const ScoreOptions& options = {});
std::vector<double> image_scores(const std::vector<ScoreMap>& maps);

}  // namespace sroc

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sroc/matrix.hpp"

namespace sroc {

// One feature level for a batch of samples: N x H x W x C, row-major.
struct FeatureLevel {
  int level_id = 0;
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<float> data;

  std::size_t sample_stride() const { return height * width * channels; }
  std::span<const float> patch(std::size_t n, std::size_t i, std::size_t j) const {
    return {data.data() + ((n * height + i) * width + j) * channels, channels};
  }
  std::span<const float> sample(std::size_t n) const {
    return {data.data() + n * sample_stride(), sample_stride()};
  }

  // Throws ShapeError on a size mismatch, DataError on the first non-finite value.
  void validate() const;
};

struct EmbeddingSet {
  std::vector<std::string> sample_ids;
  std::vector<FeatureLevel> levels;
  std::optional<FloatMatrix> pooled;

  std::size_t size() const { return sample_ids.size(); }
  std::size_t total_channels() const;
  void validate() const;

  // Rows in the given order; pooled vectors are carried over when present.
  EmbeddingSet subset(std::span<const std::size_t> rows) const;
  // Looks up rows by id; throws DataError for unknown ids.
  EmbeddingSet subset_by_ids(std::span<const std::string> ids) const;
};

// All levels resampled to the finest grid and concatenated along channels.
struct AlignedPatchGrid {
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<float> data;

  std::span<const float> patch(std::size_t n, std::size_t i, std::size_t j) const {
    return {data.data() + ((n * height + i) * width + j) * channels, channels};
  }
};

FeatureLevel make_level(int level_id, std::span<const std::size_t> shape, std::vector<float> data);

// Loads one NPY file per level. Sample ids and order come from the manifest.
EmbeddingSet load_embedding_set(const std::filesystem::path& manifest_path,
                                std::span<const std::filesystem::path> level_files);
// Same, but with ids supplied directly.
EmbeddingSet load_embedding_set(std::vector<std::string> sample_ids,
                                std::span<const std::filesystem::path> level_files);

void save_level_npy(const FeatureLevel& level, const std::filesystem::path& path);

FloatMatrix global_average_pool(const FeatureLevel& level);
// Concatenates per-level GAP vectors in level order and caches them in set.pooled.
const FloatMatrix& concat_pooled_levels(EmbeddingSet& set);
FloatMatrix concat_pooled_levels(const EmbeddingSet& set);

// Nearest-neighbor upsampling of every level to the largest grid, then channel concat.
AlignedPatchGrid align_and_concat(const EmbeddingSet& set);

}  // namespace sroc

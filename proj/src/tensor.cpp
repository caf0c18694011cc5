#include "sroc/tensor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "sroc/error.hpp"
#include "sroc/manifest.hpp"
#include "sroc/npy.hpp"

namespace sroc {
namespace {

// "block4.npy" -> 4, "level_07.npy" -> 7; falls back to the file position.
int level_id_from_path(const std::filesystem::path& path, int fallback) {
  const std::string stem = path.stem().string();
  std::size_t end = stem.size();
  std::size_t start = end;
  while (start > 0 && std::isdigit(static_cast<unsigned char>(stem[start - 1]))) --start;
  if (start == end) return fallback;
  return std::stoi(stem.substr(start, std::min<std::size_t>(end - start, 9)));
}

}  // namespace

void FeatureLevel::validate() const {
  if (height == 0 || width == 0 || channels == 0) {
    throw ShapeError("feature level " + std::to_string(level_id) + " has an empty dimension");
  }
  if (data.size() != count * height * width * channels) {
    throw ShapeError("feature level " + std::to_string(level_id) + " holds " + std::to_string(data.size()) +
                     " values, expected " + std::to_string(count * height * width * channels));
  }
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (!std::isfinite(data[k])) {
      std::size_t rest = k;
      const std::size_t c = rest % channels;
      rest /= channels;
      const std::size_t j = rest % width;
      rest /= width;
      const std::size_t i = rest % height;
      const std::size_t n = rest / height;
      throw DataError("non-finite value in level " + std::to_string(level_id) + " at flat index " +
                      std::to_string(k) + " (n=" + std::to_string(n) + ", i=" + std::to_string(i) +
                      ", j=" + std::to_string(j) + ", c=" + std::to_string(c) + ")");
    }
  }
}

std::size_t EmbeddingSet::total_channels() const {
  std::size_t total = 0;
  for (const auto& level : levels) total += level.channels;
  return total;
}

void EmbeddingSet::validate() const {
  for (const auto& level : levels) {
    if (level.count != sample_ids.size()) {
      throw ShapeError("level " + std::to_string(level.level_id) + " has " + std::to_string(level.count) +
                       " samples but the set has " + std::to_string(sample_ids.size()));
    }
    level.validate();
  }
  if (pooled && (pooled->rows != size() || pooled->cols != total_channels())) {
    throw ShapeError("pooled matrix shape does not match the levels");
  }
}

EmbeddingSet EmbeddingSet::subset(std::span<const std::size_t> rows) const {
  EmbeddingSet out;
  out.sample_ids.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= size()) throw DataError("subset row " + std::to_string(r) + " out of range");
    out.sample_ids.push_back(sample_ids[r]);
  }
  for (const auto& level : levels) {
    FeatureLevel sub = level;
    sub.count = rows.size();
    sub.data.clear();
    sub.data.reserve(rows.size() * level.sample_stride());
    for (std::size_t r : rows) {
      const auto src = level.sample(r);
      sub.data.insert(sub.data.end(), src.begin(), src.end());
    }
    out.levels.push_back(std::move(sub));
  }
  if (pooled) {
    FloatMatrix sub(rows.size(), pooled->cols);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::ranges::copy(pooled->row(rows[k]), sub.row(k).begin());
    }
    out.pooled = std::move(sub);
  }
  return out;
}

EmbeddingSet EmbeddingSet::subset_by_ids(std::span<const std::string> ids) const {
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t k = 0; k < sample_ids.size(); ++k) index.emplace(sample_ids[k], k);
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("unknown sample id '" + id + "'");
    rows.push_back(it->second);
  }
  return subset(rows);
}

FeatureLevel make_level(int level_id, std::span<const std::size_t> shape, std::vector<float> data) {
  if (shape.size() != 4) {
    throw ShapeError("feature level " + std::to_string(level_id) + " must be 4-D (N,H,W,C), got " +
                     std::to_string(shape.size()) + "-D");
  }
  FeatureLevel level{level_id, shape[0], shape[1], shape[2], shape[3], std::move(data)};
  level.validate();
  return level;
}

EmbeddingSet load_embedding_set(std::vector<std::string> sample_ids,
                                std::span<const std::filesystem::path> level_files) {
  EmbeddingSet set;
  set.sample_ids = std::move(sample_ids);
  for (std::size_t k = 0; k < level_files.size(); ++k) {
    const auto& path = level_files[k];
    NpyArray array = read_npy(path);
    if (array.shape.size() != 4) {
      throw ShapeError(path.string() + ": expected a 4-D array, got " + std::to_string(array.shape.size()) + "-D");
    }
    if (array.shape[0] != set.sample_ids.size()) {
      throw ShapeError(path.string() + ": holds " + std::to_string(array.shape[0]) + " samples, expected " +
                       std::to_string(set.sample_ids.size()));
    }
    try {
      set.levels.push_back(
          make_level(level_id_from_path(path, static_cast<int>(k)), array.shape, std::move(array.data)));
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }
  return set;
}

EmbeddingSet load_embedding_set(const std::filesystem::path& manifest_path,
                                std::span<const std::filesystem::path> level_files) {
  const Manifest manifest = load_manifest(manifest_path);
  std::vector<std::string> ids;
  ids.reserve(manifest.size());
  for (const auto& rec : manifest) ids.push_back(rec.id);
  return load_embedding_set(std::move(ids), level_files);
}

void save_level_npy(const FeatureLevel& level, const std::filesystem::path& path) {
  const std::size_t shape[] = {level.count, level.height, level.width, level.channels};
  save_array_npy(shape, level.data, path);
}

FloatMatrix global_average_pool(const FeatureLevel& level) {
  FloatMatrix out(level.count, level.channels);
  const double cells = static_cast<double>(level.height * level.width);
  std::vector<double> acc(level.channels);
  for (std::size_t n = 0; n < level.count; ++n) {
    std::ranges::fill(acc, 0.0);
    const auto sample = level.sample(n);
    for (std::size_t p = 0; p < level.height * level.width; ++p) {
      for (std::size_t c = 0; c < level.channels; ++c) acc[c] += sample[p * level.channels + c];
    }
    for (std::size_t c = 0; c < level.channels; ++c) out(n, c) = static_cast<float>(acc[c] / cells);
  }
  return out;
}

FloatMatrix concat_pooled_levels(const EmbeddingSet& set) {
  if (set.levels.empty()) throw DataError("cannot pool an embedding set with no levels");
  FloatMatrix out(set.size(), set.total_channels());
  std::size_t offset = 0;
  for (const auto& level : set.levels) {
    const FloatMatrix gap = global_average_pool(level);
    for (std::size_t n = 0; n < set.size(); ++n) {
      std::ranges::copy(gap.row(n), out.row(n).begin() + static_cast<std::ptrdiff_t>(offset));
    }
    offset += level.channels;
  }
  return out;
}

const FloatMatrix& concat_pooled_levels(EmbeddingSet& set) {
  set.pooled = concat_pooled_levels(static_cast<const EmbeddingSet&>(set));
  return *set.pooled;
}

AlignedPatchGrid align_and_concat(const EmbeddingSet& set) {
  if (set.levels.empty()) throw DataError("cannot align an embedding set with no levels");
  AlignedPatchGrid grid;
  grid.count = set.size();
  for (const auto& level : set.levels) {
    grid.height = std::max(grid.height, level.height);
    grid.width = std::max(grid.width, level.width);
  }
  grid.channels = set.total_channels();
  grid.data.resize(grid.count * grid.height * grid.width * grid.channels);

  std::size_t offset = 0;
  for (const auto& level : set.levels) {
    for (std::size_t n = 0; n < grid.count; ++n) {
      for (std::size_t i = 0; i < grid.height; ++i) {
        const std::size_t si = i * level.height / grid.height;
        for (std::size_t j = 0; j < grid.width; ++j) {
          const std::size_t sj = j * level.width / grid.width;
          const auto src = level.patch(n, si, sj);
          float* dst = grid.data.data() + ((n * grid.height + i) * grid.width + j) * grid.channels + offset;
          std::ranges::copy(src, dst);
        }
      }
    }
    offset += level.channels;
  }
  return grid;
}

}  // namespace sroc

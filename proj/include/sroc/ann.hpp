#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sroc/matrix.hpp"

namespace sroc {

// Identifies what a bank row came from: an image (i = j = -1) or one of its patches.
struct PayloadId {
  std::uint32_t sample = 0;
  std::int32_t i = -1;
  std::int32_t j = -1;
  bool operator==(const PayloadId&) const = default;
};

struct VectorBank {
  FloatMatrix vectors;
  std::vector<PayloadId> payload_ids;

  std::size_t size() const { return vectors.rows; }
  std::size_t dim() const { return vectors.cols; }
  void validate() const;
};

struct Neighbor {
  std::size_t row = 0;
  double squared_distance = 0.0;
  bool operator==(const Neighbor&) const = default;
};

double squared_l2(std::span<const float> a, std::span<const float> b);

struct KMeansOptions {
  std::size_t max_iterations = 25;
  double relative_tolerance = 1e-4;
};

struct KMeansResult {
  DoubleMatrix centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
};

// Lloyd iterations from a k-means++ start. Empty clusters are reseeded with the
// point farthest from its current centroid.
KMeansResult kmeans_fit(const FloatMatrix& vectors, std::size_t k, std::uint64_t seed,
                        const KMeansOptions& options = {});

// The k smallest squared L2 distances, ascending, ties broken by row index.
std::vector<Neighbor> exact_knn(const VectorBank& bank, std::span<const float> query, std::size_t k);

struct IvfIndex {
  std::size_t nlist = 0;
  std::size_t nprobe = 1;
  DoubleMatrix centroids;
  std::vector<std::vector<std::size_t>> inverted_lists;

  void set_nprobe(std::size_t value);
};

std::size_t default_nlist(std::size_t bank_size);
std::size_t default_nprobe(std::size_t nlist);

struct IvfBuildOptions {
  // Coarse quantizer trains on at most this many points per list (subsampled by seed).
  std::size_t max_points_per_centroid = 256;
  KMeansOptions kmeans;
};

IvfIndex ivf_build(const VectorBank& bank, std::size_t nlist, std::uint64_t seed,
                   std::optional<std::size_t> nprobe = std::nullopt, const IvfBuildOptions& options = {});

// Exact search over the nprobe closest lists; keeps probing further lists until
// at least k candidates were seen.
std::vector<Neighbor> ivf_query(const IvfIndex& index, const VectorBank& bank, std::span<const float> query,
                                std::size_t k);

}  // namespace sroc

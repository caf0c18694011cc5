#include "sroc/ann.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sroc/error.hpp"
#include "sroc/random.hpp"

namespace sroc {
namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.squared_distance < b.squared_distance ||
         (a.squared_distance == b.squared_distance && a.row < b.row);
}

double squared_l2_mixed(std::span<const float> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double diff = static_cast<double>(a[c]) - b[c];
    acc += diff * diff;
  }
  return acc;
}

// Bounded max-heap that keeps the k best neighbors seen so far.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

  void push(std::size_t row, double dist) {
    const Neighbor cand{row, dist};
    if (heap_.size() < k_) {
      heap_.push_back(cand);
      std::push_heap(heap_.begin(), heap_.end(), closer);
    } else if (closer(cand, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), closer);
      heap_.back() = cand;
      std::push_heap(heap_.begin(), heap_.end(), closer);
    }
  }

  std::vector<Neighbor> sorted() && {
    std::sort_heap(heap_.begin(), heap_.end(), closer);
    return std::move(heap_);
  }

 private:
  std::size_t k_;
  std::vector<Neighbor> heap_;
};

std::size_t nearest_centroid(const DoubleMatrix& centroids, std::span<const float> v, double* best_dist) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows; ++c) {
    const double d = squared_l2_mixed(v, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (best_dist) *best_dist = best_d;
  return best;
}

}  // namespace

double squared_l2(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double diff = static_cast<double>(a[c]) - static_cast<double>(b[c]);
    acc += diff * diff;
  }
  return acc;
}

void VectorBank::validate() const {
  if (vectors.cols == 0) throw ShapeError("vector bank has zero dimension");
  if (payload_ids.size() != vectors.rows) throw ShapeError("payload id count does not match bank rows");
  for (float v : vectors.data) {
    if (!std::isfinite(v)) throw DataError("vector bank contains non-finite values");
  }
}

KMeansResult kmeans_fit(const FloatMatrix& vectors, std::size_t k, std::uint64_t seed,
                        const KMeansOptions& options) {
  const std::size_t m = vectors.rows;
  const std::size_t dim = vectors.cols;
  if (k == 0) throw ConfigError("k-means needs k >= 1");
  if (m < k) {
    throw InsufficientDataError("k-means needs at least k=" + std::to_string(k) + " points, got " +
                                std::to_string(m));
  }
  Rng rng(seed);
  KMeansResult result;
  result.centroids = DoubleMatrix(k, dim);

  auto set_centroid = [&](std::size_t c, std::size_t row) {
    const auto src = vectors.row(row);
    auto dst = result.centroids.row(c);
    for (std::size_t d = 0; d < dim; ++d) dst[d] = src[d];
  };

  // k-means++ seeding
  std::vector<double> nearest(m, std::numeric_limits<double>::infinity());
  std::size_t chosen = rng.uniform_index(m);
  set_centroid(0, chosen);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      nearest[r] = std::min(nearest[r], squared_l2_mixed(vectors.row(r), result.centroids.row(c - 1)));
      total += nearest[r];
    }
    if (total <= 0.0) {
      // Every point coincides with a centroid already; fall back to uniform picks.
      chosen = rng.uniform_index(m);
    } else {
      const double target = rng.uniform01() * total;
      double running = 0.0;
      chosen = m - 1;
      for (std::size_t r = 0; r < m; ++r) {
        running += nearest[r];
        if (running > target && nearest[r] > 0.0) {
          chosen = r;
          break;
        }
      }
    }
    set_centroid(c, chosen);
  }

  std::vector<std::size_t> assignment(m, 0);
  std::vector<double> dist(m, 0.0);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  double previous = std::numeric_limits<double>::infinity();

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    double inertia = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      assignment[r] = nearest_centroid(result.centroids, vectors.row(r), &dist[r]);
      inertia += dist[r];
    }
    result.inertia = inertia;
    result.iterations = iter + 1;
    if (previous < std::numeric_limits<double>::infinity()) {
      const double change = std::abs(previous - inertia) / std::max(previous, 1e-300);
      if (change < options.relative_tolerance || inertia == 0.0) break;
    } else if (inertia == 0.0) {
      break;
    }
    previous = inertia;

    std::ranges::fill(sums, 0.0);
    std::ranges::fill(counts, 0);
    for (std::size_t r = 0; r < m; ++r) {
      const auto v = vectors.row(r);
      double* s = sums.data() + assignment[r] * dim;
      for (std::size_t d = 0; d < dim; ++d) s[d] += v[d];
      ++counts[assignment[r]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Reseed with the point currently worst served by its centroid.
        const std::size_t far = static_cast<std::size_t>(std::ranges::max_element(dist) - dist.begin());
        set_centroid(c, far);
        dist[far] = 0.0;
        continue;
      }
      auto dst = result.centroids.row(c);
      for (std::size_t d = 0; d < dim; ++d) dst[d] = sums[c * dim + d] / static_cast<double>(counts[c]);
    }
  }

  // Report the inertia of the final centroids.
  double inertia = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    double d;
    nearest_centroid(result.centroids, vectors.row(r), &d);
    inertia += d;
  }
  result.inertia = inertia;
  return result;
}

std::vector<Neighbor> exact_knn(const VectorBank& bank, std::span<const float> query, std::size_t k) {
  if (query.size() != bank.dim()) {
    throw ShapeError("query has dimension " + std::to_string(query.size()) + ", bank has " +
                     std::to_string(bank.dim()));
  }
  if (k == 0) throw ConfigError("k must be >= 1");
  if (k > bank.size()) {
    throw InsufficientDataError("k=" + std::to_string(k) + " exceeds bank size " + std::to_string(bank.size()));
  }
  TopK top(k);
  for (std::size_t r = 0; r < bank.size(); ++r) top.push(r, squared_l2(bank.vectors.row(r), query));
  return std::move(top).sorted();
}

void IvfIndex::set_nprobe(std::size_t value) {
  if (value == 0 || value > nlist) {
    throw ConfigError("nprobe must lie in [1, nlist=" + std::to_string(nlist) + "], got " + std::to_string(value));
  }
  nprobe = value;
}

std::size_t default_nlist(std::size_t bank_size) {
  const auto root = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(bank_size))));
  return std::clamp<std::size_t>(root, 1, 1024);
}

std::size_t default_nprobe(std::size_t nlist) { return std::max<std::size_t>(1, nlist / 4); }

IvfIndex ivf_build(const VectorBank& bank, std::size_t nlist, std::uint64_t seed,
                   std::optional<std::size_t> nprobe, const IvfBuildOptions& options) {
  if (bank.size() == 0) throw InsufficientDataError("cannot index an empty bank");
  if (nlist == 0) throw ConfigError("nlist must be >= 1");
  if (bank.size() < nlist) {
    throw InsufficientDataError("IVF needs at least nlist=" + std::to_string(nlist) + " vectors, got " +
                                std::to_string(bank.size()));
  }
  IvfIndex index;
  index.nlist = nlist;

  const std::size_t cap = options.max_points_per_centroid * nlist;
  if (bank.size() > cap) {
    Rng rng(derive_seed(seed, "ivf-train-sample", 0));
    auto order = rng.permutation(bank.size());
    order.resize(cap);
    std::ranges::sort(order);
    FloatMatrix sample(cap, bank.dim());
    for (std::size_t r = 0; r < cap; ++r) std::ranges::copy(bank.vectors.row(order[r]), sample.row(r).begin());
    index.centroids = kmeans_fit(sample, nlist, seed, options.kmeans).centroids;
  } else {
    index.centroids = kmeans_fit(bank.vectors, nlist, seed, options.kmeans).centroids;
  }

  index.inverted_lists.assign(nlist, {});
  for (std::size_t r = 0; r < bank.size(); ++r) {
    index.inverted_lists[nearest_centroid(index.centroids, bank.vectors.row(r), nullptr)].push_back(r);
  }
  index.set_nprobe(nprobe.value_or(default_nprobe(nlist)));
  return index;
}

std::vector<Neighbor> ivf_query(const IvfIndex& index, const VectorBank& bank, std::span<const float> query,
                                std::size_t k) {
  if (bank.size() == 0) throw InsufficientDataError("cannot query an empty bank");
  if (query.size() != bank.dim()) {
    throw ShapeError("query has dimension " + std::to_string(query.size()) + ", bank has " +
                     std::to_string(bank.dim()));
  }
  if (k == 0) throw ConfigError("k must be >= 1");
  if (k > bank.size()) {
    throw InsufficientDataError("k=" + std::to_string(k) + " exceeds bank size " + std::to_string(bank.size()));
  }

  std::vector<Neighbor> order(index.nlist);
  for (std::size_t c = 0; c < index.nlist; ++c) order[c] = {c, squared_l2_mixed(query, index.centroids.row(c))};
  std::ranges::sort(order, closer);

  TopK top(k);
  std::size_t seen = 0;
  for (std::size_t p = 0; p < order.size(); ++p) {
    if (p >= index.nprobe && seen >= k) break;
    for (std::size_t r : index.inverted_lists[order[p].row]) {
      top.push(r, squared_l2(bank.vectors.row(r), query));
      ++seen;
    }
  }
  return std::move(top).sorted();
}

}  // namespace sroc

#pragma once

// Independent reference implementations and data generators shared by the
// unit and acceptance suites. Nothing here calls into the code it checks,
// apart from plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sroc/image.hpp"
#include "sroc/matrix.hpp"
#include "sroc/random.hpp"
#include "sroc/tensor.hpp"

namespace sroc::testing {

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// ---------- generators ----------

inline FeatureLevel random_level(Rng& rng, int id, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
                                 double scale = 1.0) {
  FeatureLevel level{id, n, h, w, c, std::vector<float>(n * h * w * c)};
  for (float& v : level.data) v = static_cast<float>(scale * rng.normal());
  return level;
}

struct LevelShape {
  std::size_t h, w, c;
};

inline EmbeddingSet random_set(Rng& rng, std::size_t n, const std::vector<LevelShape>& shapes,
                               const std::string& prefix = "s") {
  EmbeddingSet set;
  for (std::size_t k = 0; k < n; ++k) set.sample_ids.push_back(prefix + std::to_string(k));
  int id = 0;
  for (const auto& s : shapes) set.levels.push_back(random_level(rng, id++, n, s.h, s.w, s.c));
  return set;
}

inline FloatMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  FloatMatrix m(rows, cols);
  for (float& v : m.data) v = static_cast<float>(scale * rng.normal());
  return m;
}

// Gaussian clusters with unit-ish spread around random centers.
inline FloatMatrix clustered(Rng& rng, std::size_t clusters, std::size_t rows, std::size_t dim, double spread,
                             double center_scale) {
  FloatMatrix centers = random_matrix(rng, clusters, dim, center_scale);
  FloatMatrix m(rows, dim);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t c = r % clusters;
    for (std::size_t d = 0; d < dim; ++d) m(r, d) = centers(c, d) + static_cast<float>(spread * rng.normal());
  }
  return m;
}

// Healthy N(0, I) samples plus pollutants whose mean is moved by `shift` on
// every axis. Stored as a single-level 1x1 grid so that GAP is the identity.
struct BlobData {
  EmbeddingSet set;
  std::vector<std::string> defective_ids;
};

inline BlobData blob_data(std::uint64_t seed, std::size_t n, std::size_t dim, double pollution, double shift) {
  Rng rng(seed);
  BlobData out;
  const std::size_t polluted = fraction_count(pollution, n);
  FeatureLevel level{0, n, 1, 1, dim, std::vector<float>(n * dim)};
  const double offset = shift;
  // Pollutants at scattered positions.
  const auto order = rng.permutation(n);
  std::vector<bool> is_bad(n, false);
  for (std::size_t k = 0; k < polluted; ++k) is_bad[order[k]] = true;
  for (std::size_t s = 0; s < n; ++s) {
    out.set.sample_ids.push_back("b" + std::to_string(s));
    for (std::size_t d = 0; d < dim; ++d) {
      level.data[s * dim + d] = static_cast<float>(rng.normal() + (is_bad[s] ? offset : 0.0));
    }
    if (is_bad[s]) out.defective_ids.push_back(out.set.sample_ids.back());
  }
  out.set.levels.push_back(std::move(level));
  return out;
}

// ---------- oracles ----------

inline FloatMatrix oracle_gap(const FeatureLevel& level) {
  FloatMatrix out(level.count, level.channels);
  for (std::size_t n = 0; n < level.count; ++n) {
    for (std::size_t c = 0; c < level.channels; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < level.height; ++i) {
        for (std::size_t j = 0; j < level.width; ++j) {
          acc += level.data[((n * level.height + i) * level.width + j) * level.channels + c];
        }
      }
      out(n, c) = static_cast<float>(acc / static_cast<double>(level.height * level.width));
    }
  }
  return out;
}

inline FloatMatrix oracle_pooled(const EmbeddingSet& set) {
  std::size_t total = 0;
  for (const auto& l : set.levels) total += l.channels;
  FloatMatrix out(set.size(), total);
  std::size_t offset = 0;
  for (const auto& l : set.levels) {
    const FloatMatrix gap = oracle_gap(l);
    for (std::size_t n = 0; n < set.size(); ++n) {
      for (std::size_t c = 0; c < l.channels; ++c) out(n, offset + c) = gap(n, c);
    }
    offset += l.channels;
  }
  return out;
}

// Aligned vector of sample n at fine-grid position (i, j), by direct index arithmetic.
inline std::vector<float> oracle_aligned_patch(const EmbeddingSet& set, std::size_t n, std::size_t i, std::size_t j,
                                               std::size_t fine_h, std::size_t fine_w) {
  std::vector<float> out;
  for (const auto& l : set.levels) {
    const std::size_t si = i * l.height / fine_h;
    const std::size_t sj = j * l.width / fine_w;
    for (std::size_t c = 0; c < l.channels; ++c) {
      out.push_back(l.data[((n * l.height + si) * l.width + sj) * l.channels + c]);
    }
  }
  return out;
}

inline double oracle_sqdist(const float* a, const float* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double diff = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    acc += diff * diff;
  }
  return acc;
}

// Full sort of every (distance, row) pair.
inline std::vector<std::pair<double, std::size_t>> oracle_sorted_distances(const FloatMatrix& bank,
                                                                           const float* query) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t r = 0; r < bank.rows; ++r) all.emplace_back(oracle_sqdist(bank.row(r).data(), query, bank.cols), r);
  std::sort(all.begin(), all.end());
  return all;
}

inline double oracle_mean_k(const FloatMatrix& bank, const float* query, std::size_t k) {
  const auto all = oracle_sorted_distances(bank, query);
  double acc = 0.0;
  for (std::size_t t = 0; t < k; ++t) acc += all[t].first;
  return acc / static_cast<double>(k);
}

struct OracleGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double alpha = 0.0;
};

// Two-pass mean and biased covariance with explicit loops.
inline OracleGaussian oracle_mean_cov(const Eigen::MatrixXd& x) {
  const auto n = x.rows(), d = x.cols();
  OracleGaussian g;
  g.mean = Eigen::VectorXd::Zero(d);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) g.mean[c] += x(r, c);
  }
  g.mean /= static_cast<double>(n);
  g.cov = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      double acc = 0.0;
      for (Eigen::Index r = 0; r < n; ++r) acc += (x(r, a) - g.mean[a]) * (x(r, b) - g.mean[b]);
      g.cov(a, b) = acc / static_cast<double>(n);
    }
  }
  return g;
}

// Ledoit-Wolf (2004) scaled-identity shrinkage written straight from the
// definitions: beta_bar = 1/N^2 sum_t ||x_t x_t' - S||^2 / D.
inline OracleGaussian oracle_ledoit_wolf(const Eigen::MatrixXd& x) {
  OracleGaussian g = oracle_mean_cov(x);
  const auto n = x.rows(), d = x.cols();
  const double m = g.cov.trace() / static_cast<double>(d);
  double delta = 0.0;
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      const double v = g.cov(a, b) - (a == b ? m : 0.0);
      delta += v * v;
    }
  }
  delta /= static_cast<double>(d);
  double beta_bar = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index a = 0; a < d; ++a) {
      for (Eigen::Index b = 0; b < d; ++b) {
        const double v = (x(r, a) - g.mean[a]) * (x(r, b) - g.mean[b]) - g.cov(a, b);
        beta_bar += v * v;
      }
    }
  }
  beta_bar /= static_cast<double>(n) * static_cast<double>(n) * static_cast<double>(d);
  const double beta = std::min(beta_bar, delta);
  g.alpha = delta > 0.0 ? beta / delta : 0.0;
  Eigen::MatrixXd shrunk = (1.0 - g.alpha) * g.cov;
  for (Eigen::Index a = 0; a < d; ++a) shrunk(a, a) += g.alpha * m;
  g.cov = shrunk;
  return g;
}

// sqrt((y - mu)' S^-1 (y - mu)) with a dense LU inverse.
inline double oracle_mahalanobis(const OracleGaussian& g, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd inv = g.cov.fullPivLu().inverse();
  const Eigen::VectorXd diff = y - g.mean;
  return std::sqrt(std::max(0.0, diff.dot(inv * diff)));
}

inline Eigen::MatrixXd to_dense(const FloatMatrix& m) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(r, c);
  }
  return out;
}

inline Eigen::VectorXd to_dense(const std::vector<float>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[k];
  return out;
}

// Mann-Whitney U / (P * N) with half credit for ties.
inline double oracle_auc(const std::vector<double>& scores, const std::vector<bool>& defective) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < scores.size(); ++a) {
    if (!defective[a]) continue;
    for (std::size_t b = 0; b < scores.size(); ++b) {
      if (defective[b]) continue;
      ++pairs;
      if (scores[a] > scores[b]) wins += 1.0;
      else if (scores[a] == scores[b]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

// Union-find 8-connected labelling; returns component id per pixel (-1 background).
inline std::vector<int> oracle_components(const BinaryMask& mask, int* count) {
  const std::size_t total = mask.data.size();
  std::vector<std::size_t> parent(total);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < mask.height; ++i) {
    for (std::size_t j = 0; j < mask.width; ++j) {
      if (!mask.at(i, j)) continue;
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          const long ni = static_cast<long>(i) + di, nj = static_cast<long>(j) + dj;
          if (ni < 0 || nj < 0 || ni >= static_cast<long>(mask.height) || nj >= static_cast<long>(mask.width)) continue;
          if (!mask.at(static_cast<std::size_t>(ni), static_cast<std::size_t>(nj))) continue;
          parent[find(i * mask.width + j)] = find(static_cast<std::size_t>(ni) * mask.width + static_cast<std::size_t>(nj));
        }
      }
    }
  }
  std::vector<int> label(total, -1);
  std::vector<int> root_label(total, -1);
  int next = 0;
  for (std::size_t p = 0; p < total; ++p) {
    if (!mask.data[p]) continue;
    const std::size_t r = find(p);
    if (root_label[r] < 0) root_label[r] = next++;
    label[p] = root_label[r];
  }
  *count = next;
  return label;
}

// Exact integral over [0, cap] of the piecewise-linear curve through `pts`
// (sorted by fpr), held constant at the first value to the left. Divided by cap.
inline double oracle_capped_area(const std::vector<std::pair<double, double>>& pts, double cap) {
  double area = 0.0;
  const double first_x = pts.front().first;
  area += std::min(first_x, cap) * pts.front().second;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const auto [x0, y0] = pts[k - 1];
    const auto [x1, y1] = pts[k];
    if (x0 >= cap) break;
    if (x1 == x0) continue;
    const double hi = std::min(x1, cap);
    const double y_hi = y0 + (y1 - y0) * (hi - x0) / (x1 - x0);
    area += (hi - x0) * (y0 + y_hi) / 2.0;
  }
  return area / cap;
}

// Brute-force threshold enumeration. which = 0 -> IoU, 1 -> PRO.
inline double oracle_capped_metric(const std::vector<FloatMatrix>& scores, const std::vector<BinaryMask>& masks,
                                   double cap, int which) {
  std::vector<float> thresholds;
  for (const auto& s : scores) thresholds.insert(thresholds.end(), s.data.begin(), s.data.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<std::vector<int>> labels;
  std::vector<int> counts;
  std::vector<std::vector<std::size_t>> sizes;
  std::size_t anomalous = 0, healthy = 0;
  for (const auto& m : masks) {
    int count = 0;
    labels.push_back(oracle_components(m, &count));
    counts.push_back(count);
    std::vector<std::size_t> sz(static_cast<std::size_t>(count), 0);
    for (int l : labels.back()) {
      if (l >= 0) ++sz[static_cast<std::size_t>(l)];
    }
    sizes.push_back(sz);
    for (auto v : m.data) v ? ++anomalous : ++healthy;
  }
  std::vector<std::pair<double, double>> pts;
  for (float t : thresholds) {
    std::size_t tp = 0, fp = 0;
    double overlap_sum = 0.0;
    std::size_t regions = 0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
      std::vector<std::size_t> hit(static_cast<std::size_t>(counts[k]), 0);
      for (std::size_t p = 0; p < scores[k].data.size(); ++p) {
        const bool pred = scores[k].data[p] >= t;
        if (!pred) continue;
        if (masks[k].data[p]) {
          ++tp;
          ++hit[static_cast<std::size_t>(labels[k][p])];
        } else {
          ++fp;
        }
      }
      for (int c = 0; c < counts[k]; ++c) {
        overlap_sum += static_cast<double>(hit[static_cast<std::size_t>(c)]) /
                       static_cast<double>(sizes[k][static_cast<std::size_t>(c)]);
        ++regions;
      }
    }
    const double fpr = healthy ? static_cast<double>(fp) / static_cast<double>(healthy) : 0.0;
    const double value = which == 0 ? static_cast<double>(tp) / static_cast<double>(anomalous + fp)
                                    : overlap_sum / static_cast<double>(regions);
    pts.emplace_back(fpr, value);
  }
  return oracle_capped_area(pts, cap);
}

// Random blobby masks: a few filled rectangles.
inline BinaryMask random_mask(Rng& rng, std::size_t h, std::size_t w, std::size_t blobs) {
  BinaryMask m(h, w);
  for (std::size_t b = 0; b < blobs; ++b) {
    const std::size_t i0 = rng.uniform_index(h), j0 = rng.uniform_index(w);
    const std::size_t bh = 1 + rng.uniform_index(3), bw = 1 + rng.uniform_index(3);
    for (std::size_t i = i0; i < std::min(h, i0 + bh); ++i) {
      for (std::size_t j = j0; j < std::min(w, j0 + bw); ++j) m.at(i, j) = 1;
    }
  }
  return m;
}

}  // namespace sroc::testing

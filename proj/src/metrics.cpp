#include "sroc/metrics.hpp"

#include <cstdint>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "sroc/error.hpp"

namespace sroc {
namespace {

struct PixelRef {
  float score;
  std::uint32_t image;
  std::uint32_t pixel;
};

void check_pixel_inputs(std::span<const FloatMatrix> scores, std::span<const BinaryMask> masks) {
  if (scores.size() != masks.size()) throw ShapeError("score map count does not match mask count");
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (scores[k].rows != masks[k].height || scores[k].cols != masks[k].width) {
      throw ShapeError("score map " + std::to_string(k) + " does not match its mask size");
    }
    for (float v : scores[k].data) {
      if (!std::isfinite(v)) throw DataError("score map " + std::to_string(k) + " has non-finite values");
    }
  }
}

// All pixels, highest score first.
std::vector<PixelRef> sorted_pixels(std::span<const FloatMatrix> scores) {
  std::vector<PixelRef> out;
  std::size_t total = 0;
  for (const auto& s : scores) total += s.data.size();
  out.reserve(total);
  for (std::size_t k = 0; k < scores.size(); ++k) {
    for (std::size_t p = 0; p < scores[k].data.size(); ++p) {
      out.push_back({scores[k].data[p], static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(p)});
    }
  }
  std::ranges::sort(out, [](const PixelRef& a, const PixelRef& b) { return a.score > b.score; });
  return out;
}

// Sweeps thresholds from the top; `visit` consumes one pixel, `emit` records the
// operating point after each group of equal scores.
template <class Visit, class Emit>
void sweep(const std::vector<PixelRef>& pixels, Visit&& visit, Emit&& emit) {
  std::size_t k = 0;
  while (k < pixels.size()) {
    const float level = pixels[k].score;
    while (k < pixels.size() && pixels[k].score == level) visit(pixels[k++]);
    emit();
  }
}

}  // namespace

RocCurve roc_curve(std::span<const double> scores, const std::vector<bool>& defective) {
  if (scores.size() != defective.size()) throw ShapeError("score and label counts differ");
  const auto positives = static_cast<std::size_t>(std::ranges::count(defective, true));
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) throw DataError("ROC AUC needs both healthy and defective samples");
  for (double s : scores) {
    if (!std::isfinite(s)) throw DataError("ROC input has non-finite scores");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::sort(order, [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.fpr.push_back(0.0);
  curve.tpr.push_back(0.0);
  std::size_t tp = 0, fp = 0, k = 0;
  while (k < order.size()) {
    const double level = scores[order[k]];
    while (k < order.size() && scores[order[k]] == level) {
      defective[order[k]] ? ++tp : ++fp;
      ++k;
    }
    curve.thresholds.push_back(level);
    curve.fpr.push_back(static_cast<double>(fp) / static_cast<double>(negatives));
    curve.tpr.push_back(static_cast<double>(tp) / static_cast<double>(positives));
  }
  return curve;
}

double roc_auc(std::span<const double> scores, const std::vector<bool>& defective) {
  const RocCurve curve = roc_curve(scores, defective);
  const auto positives = static_cast<std::uint64_t>(std::ranges::count(defective, true));
  const auto negatives = static_cast<std::uint64_t>(defective.size()) - positives;
  // Twice the area in count units, so the trapezoid sum is exact.
  std::uint64_t doubled = 0;
  std::uint64_t prev_fp = 0, prev_tp = 0;
  for (std::size_t k = 1; k < curve.fpr.size(); ++k) {
    const auto fp = static_cast<std::uint64_t>(std::llround(curve.fpr[k] * static_cast<double>(negatives)));
    const auto tp = static_cast<std::uint64_t>(std::llround(curve.tpr[k] * static_cast<double>(positives)));
    doubled += (fp - prev_fp) * (tp + prev_tp);
    prev_fp = fp;
    prev_tp = tp;
  }
  const auto whole = static_cast<double>(2 * positives * negatives);
  // Dividing the smaller side keeps auc(s) + auc(-s) == 1 exact.
  if (2 * doubled <= 2 * positives * negatives) return static_cast<double>(doubled) / whole;
  return 1.0 - static_cast<double>(2 * positives * negatives - doubled) / whole;
}

GroundTruthRegions connected_components(const BinaryMask& mask) {
  GroundTruthRegions out;
  out.height = mask.height;
  out.width = mask.width;
  out.labels.assign(mask.data.size(), -1);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.data.size(); ++start) {
    if (!mask.data[start] || out.labels[start] >= 0) continue;
    const int label = static_cast<int>(out.components.size());
    out.components.emplace_back();
    auto& members = out.components.back();
    out.labels[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      members.push_back(p);
      const auto i = static_cast<std::ptrdiff_t>(p / mask.width);
      const auto j = static_cast<std::ptrdiff_t>(p % mask.width);
      for (std::ptrdiff_t di = -1; di <= 1; ++di) {
        for (std::ptrdiff_t dj = -1; dj <= 1; ++dj) {
          const std::ptrdiff_t ni = i + di, nj = j + dj;
          if (ni < 0 || nj < 0 || ni >= static_cast<std::ptrdiff_t>(mask.height) ||
              nj >= static_cast<std::ptrdiff_t>(mask.width)) {
            continue;
          }
          const std::size_t q = static_cast<std::size_t>(ni) * mask.width + static_cast<std::size_t>(nj);
          if (mask.data[q] && out.labels[q] < 0) {
            out.labels[q] = label;
            stack.push_back(q);
          }
        }
      }
    }
    std::ranges::sort(members);
  }
  return out;
}

double CappedCurve::normalized_area() const {
  double area = 0.0;
  for (std::size_t k = 1; k < fpr.size(); ++k) area += (fpr[k] - fpr[k - 1]) * (value[k] + value[k - 1]) / 2.0;
  return area / fpr_cap;
}

CappedCurve cap_curve(std::span<const double> fpr, std::span<const double> value, double cap) {
  if (fpr.size() != value.size() || fpr.empty()) throw ShapeError("curve needs matching, nonempty coordinates");
  if (!(cap > 0.0 && cap <= 1.0)) throw ConfigError("FPR cap must lie in (0, 1]");
  CappedCurve out;
  out.fpr_cap = cap;
  if (fpr.front() > 0.0) {
    out.fpr.push_back(0.0);
    out.value.push_back(value.front());
  }
  std::size_t k = 0;
  for (; k < fpr.size() && fpr[k] <= cap; ++k) {
    out.fpr.push_back(fpr[k]);
    out.value.push_back(value[k]);
  }
  if (out.fpr.back() < cap) {
    double at_cap = out.value.back();
    if (k < fpr.size()) {
      const double x0 = out.fpr.back(), y0 = out.value.back();
      const double t = (cap - x0) / (fpr[k] - x0);
      at_cap = y0 + t * (value[k] - y0);
    }
    out.fpr.push_back(cap);
    out.value.push_back(at_cap);
  }
  return out;
}

CappedCurve iou_curve(std::span<const FloatMatrix> scores, std::span<const BinaryMask> masks, double cap) {
  check_pixel_inputs(scores, masks);
  std::size_t anomalous = 0, total = 0;
  for (const auto& m : masks) {
    anomalous += m.foreground();
    total += m.data.size();
  }
  if (anomalous == 0) throw DataError("AU-IoU needs at least one anomalous pixel");
  const std::size_t healthy = total - anomalous;

  std::size_t tp = 0, fp = 0;
  std::vector<double> fpr, iou;
  sweep(
      sorted_pixels(scores), [&](const PixelRef& px) { masks[px.image].data[px.pixel] ? ++tp : ++fp; },
      [&] {
        fpr.push_back(healthy ? static_cast<double>(fp) / static_cast<double>(healthy) : 0.0);
        iou.push_back(static_cast<double>(tp) / static_cast<double>(anomalous + fp));
      });
  return cap_curve(fpr, iou, cap);
}

CappedCurve pro_curve(std::span<const FloatMatrix> scores, std::span<const BinaryMask> masks, double cap) {
  check_pixel_inputs(scores, masks);
  std::vector<GroundTruthRegions> regions;
  regions.reserve(masks.size());
  std::size_t region_count = 0, anomalous = 0, total = 0;
  for (const auto& m : masks) {
    regions.push_back(connected_components(m));
    region_count += regions.back().components.size();
    anomalous += m.foreground();
    total += m.data.size();
  }
  if (region_count == 0) throw DataError("AU-PRO needs at least one ground-truth region");
  const std::size_t healthy = total - anomalous;

  // Each covered pixel of component c adds 1/|c| to the summed overlap.
  double overlap = 0.0;
  std::size_t fp = 0;
  std::vector<double> fpr, pro;
  sweep(
      sorted_pixels(scores),
      [&](const PixelRef& px) {
        const int label = regions[px.image].labels[px.pixel];
        if (label < 0) {
          ++fp;
        } else {
          overlap += 1.0 / static_cast<double>(regions[px.image].components[static_cast<std::size_t>(label)].size());
        }
      },
      [&] {
        fpr.push_back(healthy ? static_cast<double>(fp) / static_cast<double>(healthy) : 0.0);
        pro.push_back(overlap / static_cast<double>(region_count));
      });
  return cap_curve(fpr, pro, cap);
}

double au_iou(std::span<const FloatMatrix> scores, std::span<const BinaryMask> masks, double cap) {
  return iou_curve(scores, masks, cap).normalized_area();
}

double au_pro(std::span<const FloatMatrix> scores, std::span<const BinaryMask> masks, double cap) {
  return pro_curve(scores, masks, cap).normalized_area();
}

void write_curve_csv(const CappedCurve& curve, std::ostream& out) {
  out << "fpr,value\n";
  out.precision(17);
  for (std::size_t k = 0; k < curve.fpr.size(); ++k) out << curve.fpr[k] << ',' << curve.value[k] << '\n';
}

Prf refinement_prf(std::span<const std::string> removed_ids, std::span<const std::string> defective_ids) {
  const std::unordered_set<std::string> defective(defective_ids.begin(), defective_ids.end());
  std::size_t hits = 0;
  for (const auto& id : removed_ids) hits += defective.count(id);
  Prf out;
  if (removed_ids.empty()) {
    out.empty_removal = true;
    spdlog::debug("refinement removed nothing; precision reported as 0");
  } else {
    out.precision = static_cast<double>(hits) / static_cast<double>(removed_ids.size());
  }
  out.recall = defective.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(defective.size());
  const double denom = out.precision + out.recall;
  out.f1 = denom > 0.0 ? 2.0 * out.precision * out.recall / denom : 0.0;
  return out;
}

}  // namespace sroc

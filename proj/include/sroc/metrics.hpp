#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sroc/image.hpp"
#include "sroc/matrix.hpp"

namespace sroc {

struct RocCurve {
  std::vector<double> thresholds;  // descending
  std::vector<double> fpr;         // starts at 0, ends at 1
  std::vector<double> tpr;
};

// Labels: true = defective (positive class). Equal scores form a single threshold step.
RocCurve roc_curve(std::span<const double> scores, const std::vector<bool>& defective);
double roc_auc(std::span<const double> scores, const std::vector<bool>& defective);

struct GroundTruthRegions {
  std::size_t height = 0;
  std::size_t width = 0;
  // Component index per pixel, -1 for background.
  std::vector<int> labels;
  // Flat pixel indices of each component.
  std::vector<std::vector<std::size_t>> components;
};

// 8-connected components of the mask foreground.
GroundTruthRegions connected_components(const BinaryMask& mask);

/// IoU or PRO as a function of the pooled-pixel false positive rate, restricted
/// to [0, fpr_cap].
///
/// The uncapped curve has one point per distinct score threshold. Below the
/// first operating point the curve is held at its first value; the last point
/// sits exactly on the cap (linear interpolation).
struct CappedCurve {
  double fpr_cap = 0.3;
  std::vector<double> fpr;
  std::vector<double> value;

  // Trapezoidal area over [0, cap], divided by the cap.
  double normalized_area() const;
};

CappedCurve iou_curve(std::span<const FloatMatrix> scores, std::span<const BinaryMask> masks, double cap = 0.3);
CappedCurve pro_curve(std::span<const FloatMatrix> scores, std::span<const BinaryMask> masks, double cap = 0.3);
double au_iou(std::span<const FloatMatrix> scores, std::span<const BinaryMask> masks, double cap = 0.3);
double au_pro(std::span<const FloatMatrix> scores, std::span<const BinaryMask> masks, double cap = 0.3);

// Clips an uncapped curve (nondecreasing fpr) to [0, cap] using the rules above.
CappedCurve cap_curve(std::span<const double> fpr, std::span<const double> value, double cap);

void write_curve_csv(const CappedCurve& curve, std::ostream& out);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when nothing was removed: precision is reported as 0.
  bool empty_removal = false;
};

Prf refinement_prf(std::span<const std::string> removed_ids, std::span<const std::string> defective_ids);

}  // namespace sroc

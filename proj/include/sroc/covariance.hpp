#pragma once

#include <span>

#include <Eigen/Dense>

#include "sroc/matrix.hpp"

namespace sroc {

struct MeanCov {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Column mean and biased (1/N) covariance. Requires N >= 2.
MeanCov empirical_mean_cov(const Eigen::MatrixXd& x);

// Ledoit-Wolf optimal intensity for shrinking towards trace(S)/D * I,
// clipped to [0, 1]. `x` is the raw data; centering happens inside.
double ledoit_wolf_shrinkage(const Eigen::MatrixXd& x);

/// Multivariate Gaussian with a cached Cholesky factor of its covariance.
///
/// Distances are computed by a forward triangular solve against the factor;
/// the covariance is never inverted explicitly.
class GaussianModel {
 public:
  // Factorizes `cov`. If the first attempt fails, adds 1e-6 * trace(cov)/D on the
  // diagonal once and retries; a second failure raises NotPositiveDefiniteError.
  GaussianModel(Eigen::VectorXd mean, Eigen::MatrixXd cov, double shrinkage_alpha);

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::MatrixXd& cholesky_factor() const { return lower_; }
  double shrinkage_alpha() const { return alpha_; }
  bool jittered() const { return jittered_; }
  Eigen::Index dim() const { return mean_.size(); }

  double squared_distance(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  double squared_distance(std::span<const float> y) const;
  double distance(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  double distance(std::span<const float> y) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd lower_;
  double alpha_;
  bool jittered_ = false;
};

GaussianModel ledoit_wolf(const Eigen::MatrixXd& x);
GaussianModel ledoit_wolf(const FloatMatrix& x);

double mahalanobis_distance(const GaussianModel& model, const Eigen::Ref<const Eigen::VectorXd>& y);

Eigen::MatrixXd to_eigen(const FloatMatrix& x);

}  // namespace sroc

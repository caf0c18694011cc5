#include "sroc/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "sroc/error.hpp"

namespace sroc {
namespace {

void require_finite(const Eigen::MatrixXd& x) {
  if (!x.allFinite()) throw DataError("covariance input contains non-finite values");
}

void require_rows(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) {
    throw InsufficientDataError("covariance estimation needs at least 2 samples, got " +
                                std::to_string(x.rows()));
  }
}

}  // namespace

Eigen::MatrixXd to_eigen(const FloatMatrix& x) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(x.rows), static_cast<Eigen::Index>(x.cols));
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x(r, c);
  }
  return out;
}

MeanCov empirical_mean_cov(const Eigen::MatrixXd& x) {
  require_rows(x);
  MeanCov out;
  out.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - out.mean.transpose();
  out.cov = (centered.transpose() * centered) / static_cast<double>(x.rows());
  return out;
}

double ledoit_wolf_shrinkage(const Eigen::MatrixXd& x) {
  require_rows(x);
  const double n = static_cast<double>(x.rows());
  const double d = static_cast<double>(x.cols());
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd emp = (centered.transpose() * centered) / n;
  const double mu = emp.trace() / d;

  // delta = ||S - mu I||_F^2 / D
  Eigen::MatrixXd dev = emp;
  dev.diagonal().array() -= mu;
  const double delta = dev.squaredNorm() / d;

  // beta = 1/(N^2 D) sum_t ||x_t x_t^T - S||_F^2
  //      = (sum_t ||x_t||^4 / N - ||S||_F^2) / (N D)
  const double fourth = centered.rowwise().squaredNorm().array().square().sum();
  double beta = (fourth / n - emp.squaredNorm()) / (n * d);
  beta = std::min(std::max(beta, 0.0), delta);
  if (delta <= 0.0) return 0.0;
  return std::clamp(beta / delta, 0.0, 1.0);
}

GaussianModel::GaussianModel(Eigen::VectorXd mean, Eigen::MatrixXd cov, double shrinkage_alpha)
    : mean_(std::move(mean)), cov_(std::move(cov)), alpha_(shrinkage_alpha) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw ShapeError("covariance shape does not match mean dimension");
  }
  if (!(alpha_ >= 0.0 && alpha_ <= 1.0)) throw ConfigError("shrinkage alpha must lie in [0, 1]");

  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success) {
    const double scale = cov_.trace() / static_cast<double>(std::max<Eigen::Index>(1, cov_.rows()));
    const double jitter = 1e-6 * scale;
    spdlog::warn("covariance not positive definite (dim {}), adding jitter {:.3e}", cov_.rows(), jitter);
    cov_.diagonal().array() += jitter;
    jittered_ = true;
    llt.compute(cov_);
    if (llt.info() != Eigen::Success || !(jitter > 0.0)) {
      throw NotPositiveDefiniteError("covariance is not positive definite even after jitter (dim " +
                                     std::to_string(cov_.rows()) + ")");
    }
  }
  lower_ = llt.matrixL();
}

double GaussianModel::squared_distance(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (y.size() != mean_.size()) {
    throw ShapeError("query has dimension " + std::to_string(y.size()) + ", model has " +
                     std::to_string(mean_.size()));
  }
  Eigen::VectorXd z = y - mean_;
  lower_.triangularView<Eigen::Lower>().solveInPlace(z);
  return z.squaredNorm();
}

double GaussianModel::squared_distance(std::span<const float> y) const {
  if (static_cast<Eigen::Index>(y.size()) != mean_.size()) {
    throw ShapeError("query has dimension " + std::to_string(y.size()) + ", model has " +
                     std::to_string(mean_.size()));
  }
  Eigen::VectorXd z(mean_.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = static_cast<double>(y[static_cast<std::size_t>(k)]) - mean_[k];
  lower_.triangularView<Eigen::Lower>().solveInPlace(z);
  return z.squaredNorm();
}

double GaussianModel::distance(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  return std::sqrt(squared_distance(y));
}

double GaussianModel::distance(std::span<const float> y) const { return std::sqrt(squared_distance(y)); }

GaussianModel ledoit_wolf(const Eigen::MatrixXd& x) {
  require_rows(x);
  require_finite(x);
  const MeanCov mc = empirical_mean_cov(x);
  const double alpha = ledoit_wolf_shrinkage(x);
  const double target = mc.cov.trace() / static_cast<double>(x.cols());
  Eigen::MatrixXd shrunk = (1.0 - alpha) * mc.cov;
  shrunk.diagonal().array() += alpha * target;
  return GaussianModel(mc.mean, std::move(shrunk), alpha);
}

GaussianModel ledoit_wolf(const FloatMatrix& x) { return ledoit_wolf(to_eigen(x)); }

double mahalanobis_distance(const GaussianModel& model, const Eigen::Ref<const Eigen::VectorXd>& y) {
  return model.distance(y);
}

}  // namespace sroc

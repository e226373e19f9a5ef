#include "dynamo/density.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "dynamo/error.hpp"

namespace dynamo {

KdeModel fit_kde(const Matrix& points, const Vector& weights, BandwidthRule rule) {
  const auto m = points.rows();
  const auto d = points.cols();
  if (weights.size() != m) throw DomainError("fit_kde: weight count mismatch");
  if (m < 1 || d < 1) throw DomainError("fit_kde: need at least one point");
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw DomainError("fit_kde: weights must be finite and nonnegative");
  }
  const double total = weights.sum();
  if (!(total > 0.0)) throw DomainError("fit_kde: weights are all zero");
  if (rule.kind == BandwidthRule::Kind::kSilverman && m < 2) {
    throw PreconditionError("fit_kde: silverman bandwidth needs at least 2 points");
  }
  if (rule.kind == BandwidthRule::Kind::kFixed && !(rule.h > 0.0)) {
    throw DomainError("fit_kde: fixed bandwidth must be positive");
  }

  // Zero-weight points contribute nothing; drop them.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (weights[i] > 0.0) keep.push_back(i);
  }
  KdeModel kde;
  kde.support_.resize(static_cast<Eigen::Index>(keep.size()), d);
  kde.weights_.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    kde.support_.row(static_cast<Eigen::Index>(k)) = points.row(keep[k]);
    kde.weights_[static_cast<Eigen::Index>(k)] = weights[keep[k]] / total;
  }

  kde.bandwidth_.resize(d);
  if (rule.kind == BandwidthRule::Kind::kFixed) {
    kde.bandwidth_.setConstant(rule.h);
  } else {
    const Vector w = weights / total;
    const Vector mean = points.transpose() * w;
    const double factor =
        std::pow(4.0 / ((static_cast<double>(d) + 2.0) * static_cast<double>(m)),
                 1.0 / (static_cast<double>(d) + 4.0));
    for (Eigen::Index j = 0; j < d; ++j) {
      const double var = w.dot((points.col(j).array() - mean[j]).square().matrix());
      kde.bandwidth_[j] = std::sqrt(std::max(var, 0.0)) * factor;
    }
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(kde.bandwidth_[j] >= kBandwidthFloor)) {
      kde.bandwidth_[j] = kBandwidthFloor;
      kde.floored_ = true;
    }
  }

  kde.scaled_support_ = kde.support_.array().rowwise() / kde.bandwidth_.transpose().array();
  kde.log_weights_ = kde.weights_.array().log();
  kde.log_norm_ = -kde.bandwidth_.array().log().sum() -
                  0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
  return kde;
}

KdeModel fit_kde(const Matrix& points, BandwidthRule rule) {
  return fit_kde(points, Vector::Constant(points.rows(), 1.0), rule);
}

double KdeModel::log_density_and_grad(const Vector& x, Vector* grad) const {
  if (x.size() != dim()) throw DomainError("log_density: dimension mismatch");
  const Vector xs = x.cwiseQuotient(bandwidth_);
  // exponent_i = log w_i - 0.5 * ||(x - p_i) / h||^2
  const Matrix diff = (-scaled_support_).rowwise() + xs.transpose();  // m x d
  const Vector exponent = log_weights_ - 0.5 * diff.rowwise().squaredNorm();
  const double max_e = exponent.maxCoeff();
  const Vector r = (exponent.array() - max_e).exp();
  const double sum = r.sum();
  if (grad) {
    // d/dx_j = sum_i r_i * (-(x_j - p_ij) / h_j^2) / sum_i r_i
    const Vector weighted = diff.transpose() * r / sum;  // in scaled units
    *grad = -weighted.cwiseQuotient(bandwidth_);
  }
  return log_norm_ + max_e + std::log(sum);
}

double KdeModel::log_density(const Vector& x) const { return log_density_and_grad(x, nullptr); }

Vector KdeModel::grad_log_density(const Vector& x) const {
  Vector g;
  log_density_and_grad(x, &g);
  return g;
}

double kl_estimate(const Matrix& q_samples, const KdeModel& p_kde, const KdeModel& q_kde) {
  if (q_samples.rows() < 2) throw PreconditionError("kl_estimate: need at least 2 samples");
  double total = 0.0;
  for (Eigen::Index i = 0; i < q_samples.rows(); ++i) {
    const Vector x = q_samples.row(i).transpose();
    total += q_kde.log_density(x) - p_kde.log_density(x);
  }
  return total / static_cast<double>(q_samples.rows());
}

}  // namespace dynamo

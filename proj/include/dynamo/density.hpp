#pragma once

#include "dynamo/dataset.hpp"

namespace dynamo {

struct BandwidthRule {
  enum class Kind { kSilverman, kFixed };
  Kind kind = Kind::kSilverman;
  double h = 0.0;  // fixed rule only

  static BandwidthRule silverman() { return {Kind::kSilverman, 0.0}; }
  static BandwidthRule fixed(double h) { return {Kind::kFixed, h}; }
};

inline constexpr double kBandwidthFloor = 1e-3;

// Weighted Gaussian product-kernel density estimate.
class KdeModel {
 public:
  const Matrix& support() const { return support_; }
  const Vector& weights() const { return weights_; }
  const Vector& bandwidth() const { return bandwidth_; }
  // True when any bandwidth hit the 1e-3 floor (e.g. a collapsed batch).
  bool floored() const { return floored_; }
  int dim() const { return static_cast<int>(support_.cols()); }

  // log sum_i w_i prod_j N(x_j; p_ij, h_j^2), via log-sum-exp.
  double log_density(const Vector& x) const;
  Vector grad_log_density(const Vector& x) const;
  // Both at once; returns the log density.
  double log_density_and_grad(const Vector& x, Vector* grad) const;

 private:
  friend KdeModel fit_kde(const Matrix& points, const Vector& weights, BandwidthRule rule);

  Matrix support_;
  Vector weights_;
  Vector bandwidth_;
  bool floored_ = false;
  Matrix scaled_support_;  // support_ / bandwidth, column-wise
  Vector log_weights_;
  double log_norm_ = 0.0;  // -sum log h_j - d/2 log 2 pi
};

// Silverman: h_j = sigma_j (4 / ((d + 2) m))^{1/(d+4)} with the weighted std
// sigma_j. Every bandwidth is floored at 1e-3.
KdeModel fit_kde(const Matrix& points, const Vector& weights, BandwidthRule rule);

// Uniform weights.
KdeModel fit_kde(const Matrix& points, BandwidthRule rule = BandwidthRule::silverman());

// (1/b) sum_i [log q(x_i) - log p(x_i)] over the q samples.
double kl_estimate(const Matrix& q_samples, const KdeModel& p_kde, const KdeModel& q_kde);

}  // namespace dynamo

#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "dynamo/density.hpp"
#include "dynamo/duality.hpp"
#include "dynamo/neural.hpp"

namespace dynamo {

// What every backbone optimizer consumes: a value and (for first-order
// methods) its gradient. Nothing else about the objective leaks through.
struct ScoreFunction {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

// Per-term breakdown of a penalized score, for logging and tests.
struct ScoreTerms {
  double surrogate = 0.0;
  double log_q = 0.0;
  double log_p = 0.0;
  double critic = 0.0;
  bool has_density_term = false;
  bool has_critic_term = false;
};

// Per-candidate negative Lagrangian
//   r(x) - k_d (log q(x) - log p(x)) + k_c lambda (c(x) - E_p[c] + W0)
// with k_d = beta/tau, k_c = beta for KL, and k_d = (1+gamma) beta/tau,
// k_c = (1+gamma) beta for the mixed chi-squared divergence. The density term
// is zero until a batch density q is available; the critic term is zero
// until a critic is attached.
class PenalizedObjective {
 public:
  PenalizedObjective(std::shared_ptr<const Mlp> surrogate, PenaltyConfig cfg, Vector lower,
                     Vector upper);

  void set_reference_density(KdeModel p_kde);
  void set_batch_density(KdeModel q_kde);
  void clear_batch_density();
  // Recomputes E_p[c] from the dataset designs and tau weights.
  void set_critic(Critic critic, const Matrix& data, const TauWeights& tw);
  void set_lambda(double lambda);

  const PenaltyConfig& config() const { return cfg_; }
  double lambda() const { return lambda_; }
  double e_p_critic() const { return e_p_critic_; }
  const std::optional<Critic>& critic() const { return critic_; }
  const std::optional<KdeModel>& reference_density() const { return p_kde_; }
  const std::optional<KdeModel>& batch_density() const { return q_kde_; }
  const Mlp& surrogate() const { return *surrogate_; }

  double density_coefficient() const;
  double critic_coefficient() const;

  // Throws DomainError when x lies outside the bounds.
  double score(const Vector& x) const;
  Vector score_grad(const Vector& x) const;
  ScoreTerms terms(const Vector& x) const;
  Vector score_batch(const Matrix& xs) const;

  ScoreFunction as_score_function() const;

 private:
  void check_bounds(const Vector& x) const;
  double combine(const ScoreTerms& t) const;

  std::shared_ptr<const Mlp> surrogate_;
  PenaltyConfig cfg_;
  Vector lower_;
  Vector upper_;
  std::optional<KdeModel> p_kde_;
  std::optional<KdeModel> q_kde_;
  std::optional<Critic> critic_;
  double lambda_ = 0.0;
  double e_p_critic_ = 0.0;
};

// Plug-in chi-squared divergence estimate mean_i (r_i - 1)^2 / (2 r_i) with
// r_i = q(x_i) / p(x_i) over the batch samples. Diagnostic only.
double chi2_estimate(const Matrix& q_samples, const KdeModel& p_kde, const KdeModel& q_kde);

}  // namespace dynamo

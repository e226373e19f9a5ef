#include "dynamo/objective.hpp"

#include <cmath>

#include "dynamo/error.hpp"

namespace dynamo {

PenalizedObjective::PenalizedObjective(std::shared_ptr<const Mlp> surrogate, PenaltyConfig cfg,
                                       Vector lower, Vector upper)
    : surrogate_(std::move(surrogate)), cfg_(cfg), lower_(std::move(lower)),
      upper_(std::move(upper)) {
  if (!surrogate_) throw DomainError("objective needs a surrogate");
  cfg_.validate();
  if (lower_.size() != surrogate_->input_dim() || upper_.size() != surrogate_->input_dim()) {
    throw DomainError("objective bounds do not match surrogate input dimension");
  }
}

void PenalizedObjective::set_reference_density(KdeModel p_kde) { p_kde_ = std::move(p_kde); }

void PenalizedObjective::set_batch_density(KdeModel q_kde) {
  if (cfg_.beta > 0.0 && !(cfg_.tau > 0.0)) {
    throw DomainError("density-ratio term needs tau > 0 when beta > 0");
  }
  q_kde_ = std::move(q_kde);
}

void PenalizedObjective::clear_batch_density() { q_kde_.reset(); }

void PenalizedObjective::set_critic(Critic critic, const Matrix& data, const TauWeights& tw) {
  e_p_critic_ = weighted_expectation(tw, critic.net.forward_batch(data));
  critic_ = std::move(critic);
}

void PenalizedObjective::set_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be >= 0");
  lambda_ = lambda;
}

double PenalizedObjective::density_coefficient() const {
  if (cfg_.beta == 0.0) return 0.0;
  const double base = cfg_.beta / cfg_.tau;
  return cfg_.divergence == Divergence::kMixedChi2 ? (1.0 + cfg_.gamma) * base : base;
}

double PenalizedObjective::critic_coefficient() const {
  return cfg_.divergence == Divergence::kMixedChi2 ? (1.0 + cfg_.gamma) * cfg_.beta : cfg_.beta;
}

void PenalizedObjective::check_bounds(const Vector& x) const {
  if (x.size() != lower_.size()) throw DomainError("design has wrong dimension");
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!(x[j] >= lower_[j] && x[j] <= upper_[j])) {
      throw DomainError("design lies outside the task bounds");
    }
  }
}

ScoreTerms PenalizedObjective::terms(const Vector& x) const {
  check_bounds(x);
  ScoreTerms t;
  t.surrogate = surrogate_->forward(x);
  if (q_kde_ && p_kde_) {
    t.has_density_term = true;
    t.log_q = q_kde_->log_density(x);
    t.log_p = p_kde_->log_density(x);
  }
  if (critic_) {
    t.has_critic_term = true;
    t.critic = (*critic_)(x);
  }
  return t;
}

double PenalizedObjective::combine(const ScoreTerms& t) const {
  double s = t.surrogate;
  const double kd = density_coefficient();
  const double kc = critic_coefficient() * lambda_;
  if (t.has_density_term && kd != 0.0) s -= kd * (t.log_q - t.log_p);
  if (t.has_critic_term && kc != 0.0) s += kc * (t.critic - e_p_critic_ + cfg_.w0);
  return s;
}

double PenalizedObjective::score(const Vector& x) const { return combine(terms(x)); }

Vector PenalizedObjective::score_grad(const Vector& x) const {
  check_bounds(x);
  Vector g = surrogate_->grad_input(x);
  const double kd = density_coefficient();
  const double kc = critic_coefficient() * lambda_;
  if (q_kde_ && p_kde_ && kd != 0.0) {
    g -= kd * (q_kde_->grad_log_density(x) - p_kde_->grad_log_density(x));
  }
  if (critic_ && kc != 0.0) g += kc * critic_->net.grad_input(x);
  return g;
}

Vector PenalizedObjective::score_batch(const Matrix& xs) const {
  Vector out(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) out[i] = score(xs.row(i).transpose());
  return out;
}

ScoreFunction PenalizedObjective::as_score_function() const {
  return ScoreFunction{[this](const Vector& x) { return score(x); },
                       [this](const Vector& x) { return score_grad(x); }};
}

double chi2_estimate(const Matrix& q_samples, const KdeModel& p_kde, const KdeModel& q_kde) {
  if (q_samples.rows() < 1) throw PreconditionError("chi2_estimate: empty batch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < q_samples.rows(); ++i) {
    const Vector x = q_samples.row(i).transpose();
    const double ratio = std::exp(q_kde.log_density(x) - p_kde.log_density(x));
    total += (ratio - 1.0) * (ratio - 1.0) / (2.0 * ratio);
  }
  return total / static_cast<double>(q_samples.rows());
}

}  // namespace dynamo

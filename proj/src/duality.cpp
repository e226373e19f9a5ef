#include "dynamo/duality.hpp"

#include <algorithm>
#include <cmath>

#include "dynamo/error.hpp"

namespace dynamo {

std::string to_string(Divergence divergence) {
  return divergence == Divergence::kKl ? "kl" : "mixed-chi2";
}

Divergence divergence_from_string(const std::string& text) {
  if (text == "kl") return Divergence::kKl;
  if (text == "mixed-chi2") return Divergence::kMixedChi2;
  throw DomainError("unknown divergence: " + text);
}

void PenaltyConfig::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("beta must be >= 0");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw DomainError("tau must be >= 0");
  if (!std::isfinite(w0)) throw DomainError("W0 must be finite");
  if (divergence == Divergence::kMixedChi2 && !(gamma >= 1.0)) {
    throw DomainError("mixed-chi2 divergence needs gamma >= 1");
  }
}

double fenchel_kl(double v) { return std::exp(v - 1.0); }

double fenchel_chi2(double v) { return 0.5 * v * v + v; }

namespace {

void check_inputs(double lambda, const Vector& critic_on_data, const TauWeights& tw) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  if (critic_on_data.size() != tw.weights.size()) {
    throw DomainError("critic outputs and tau weights differ in length");
  }
}

}  // namespace

double g_lower(double lambda, const Vector& critic_on_data, const TauWeights& tw,
               const PenaltyConfig& cfg) {
  check_inputs(lambda, critic_on_data, tw);
  const Vector& c = critic_on_data;
  const Vector& w = tw.weights;
  const double mean_c = w.dot(c);
  const double mean_exp = w.dot((lambda * c.array() - 1.0).exp().matrix());
  if (cfg.divergence == Divergence::kKl) {
    return cfg.beta * (lambda * (mean_c - cfg.w0) - mean_exp);
  }
  const Vector v = lambda * c;
  const double mean_conj = w.dot((v.array() + 0.5 * v.array().square()).matrix());
  return cfg.beta *
         ((1.0 + cfg.gamma) * lambda * (mean_c - cfg.w0) - mean_exp - cfg.gamma * mean_conj);
}

double g_lower_grad(double lambda, const Vector& critic_on_data, const TauWeights& tw,
                    const PenaltyConfig& cfg) {
  check_inputs(lambda, critic_on_data, tw);
  const Vector& c = critic_on_data;
  const Vector& w = tw.weights;
  const double mean_c = w.dot(c);
  const double mean_c_exp = w.dot((c.array() * (lambda * c.array() - 1.0).exp()).matrix());
  if (cfg.divergence == Divergence::kKl) {
    return cfg.beta * ((mean_c - cfg.w0) - mean_c_exp);
  }
  const double mean_c2 = w.dot(c.cwiseProduct(c));
  return cfg.beta * ((1.0 + cfg.gamma) * (mean_c - cfg.w0) - mean_c_exp -
                     cfg.gamma * (mean_c + lambda * mean_c2));
}

DualSolution solve_lambda(const Vector& critic_on_data, const TauWeights& tw,
                          const PenaltyConfig& cfg, const DualSolverOptions& options) {
  if (!(options.eta > 0.0)) throw PreconditionError("solve_lambda: eta must be > 0");
  if (options.max_iters < 0) throw PreconditionError("solve_lambda: max_iters must be >= 0");

  const double cap = options.lambda_cap;
  double lambda = std::clamp(options.lambda0, 0.0, cap);
  double g = g_lower(lambda, critic_on_data, tw, cfg);
  if (!std::isfinite(g)) {
    throw NumericError("g_lower is non-finite at lambda=" + std::to_string(lambda) +
                       "; critic outputs too large");
  }
  DualSolution sol;
  sol.trace.emplace_back(lambda, g);
  double step = options.eta;

  for (int it = 0; it < options.max_iters; ++it) {
    sol.iterations = it + 1;
    const double grad = g_lower_grad(lambda, critic_on_data, tw, cfg);
    if (!std::isfinite(grad)) throw NumericError("g_lower gradient is non-finite");
    const double candidate = std::clamp(lambda + step * grad, 0.0, cap);
    if (candidate == lambda) {
      sol.converged = true;
      break;
    }
    const double g_candidate = g_lower(candidate, critic_on_data, tw, cfg);
    if (std::isfinite(g_candidate) && g_candidate >= g) {
      const double moved = std::abs(candidate - lambda);
      lambda = candidate;
      g = g_candidate;
      sol.trace.emplace_back(lambda, g);
      step = std::min(step * 2.0, 1e12);
      if (moved < options.tolerance) {
        sol.converged = true;
        break;
      }
    } else {
      step *= 0.5;
      if (step * std::abs(grad) < options.tolerance) {
        sol.converged = true;
        break;
      }
    }
  }
  sol.lambda_star = lambda;
  sol.g_value = g;
  return sol;
}

}  // namespace dynamo

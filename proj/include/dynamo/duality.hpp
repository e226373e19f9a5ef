#pragma once

#include <utility>
#include <vector>

#include "dynamo/dataset.hpp"

namespace dynamo {

enum class Divergence { kKl, kMixedChi2 };

std::string to_string(Divergence divergence);
Divergence divergence_from_string(const std::string& text);

// Distribution-matching penalty and critic-constraint settings.
struct PenaltyConfig {
  double beta = 1.0;   // divergence weight
  double tau = 1.0;    // reference-distribution temperature
  double w0 = 0.0;     // Wasserstein constraint bound
  Divergence divergence = Divergence::kKl;
  double gamma = 1.0;  // chi-squared weight, mixed divergence only

  // Throws DomainError when an invariant fails.
  void validate() const;
};

// Fenchel conjugate of u log u: e^{v-1}.
double fenchel_kl(double v);
// Fenchel conjugate of (u-1)^2/2: v^2/2 + v.
double fenchel_chi2(double v);

// Closed-form concave lower bound on the Lagrange dual function.
//   KL:    beta [ lambda (E[c] - W0) - E[e^{lambda c - 1}] ]
//   mixed: beta [ (1+gamma) lambda (E[c] - W0) - E[e^{lambda c - 1}]
//                 - gamma E[lambda c + (lambda c)^2 / 2] ]
// Expectations are under the tau weights.
double g_lower(double lambda, const Vector& critic_on_data, const TauWeights& tw,
               const PenaltyConfig& cfg);

// d g_lower / d lambda.
double g_lower_grad(double lambda, const Vector& critic_on_data, const TauWeights& tw,
                    const PenaltyConfig& cfg);

struct DualSolverOptions {
  double lambda0 = 1.0;
  double eta = 0.05;
  double tolerance = 1e-8;
  int max_iters = 500;
  double lambda_cap = 1e6;
};

struct DualSolution {
  double lambda_star = 0.0;
  double g_value = 0.0;
  std::vector<std::pair<double, double>> trace;  // accepted (lambda, g) iterates
  bool converged = false;
  int iterations = 0;
};

// Projected gradient ascent on g_lower over [0, lambda_cap]. The step starts
// at eta; an ascent step that increases g is accepted and the step doubles,
// otherwise the step halves. Accepted g values are therefore nondecreasing.
// Stops when an accepted |d lambda| < tolerance, the projected step vanishes,
// or max_iters is reached. Throws NumericError when g is non-finite at an
// iterate (critic outputs too large for e^{lambda c}).
DualSolution solve_lambda(const Vector& critic_on_data, const TauWeights& tw,
                          const PenaltyConfig& cfg, const DualSolverOptions& options = {});

}  // namespace dynamo

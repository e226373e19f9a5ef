#pragma once

#include <cstdint>
#include <optional>

#include "dynamo/dataset.hpp"

namespace dynamo {

// Exact GP regression, zero-mean after centering the targets, with an ARD
// RBF kernel s2 exp(-0.5 sum_j (x_j - x'_j)^2 / l_j^2).
struct GpModel {
  Matrix inputs;
  Vector targets;
  double target_mean = 0.0;
  Vector lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;
  double jitter = 0.0;       // extra diagonal added to reach a valid Cholesky
  Matrix cholesky_lower;     // L with L L^T = K + (noise + jitter) I
  Vector alpha;              // (K + ...)^{-1} (y - mean)
  double log_marginal_likelihood = 0.0;

  int dim() const { return static_cast<int>(inputs.cols()); }
  double kernel(const Vector& a, const Vector& b) const;
};

struct GpFitOptions {
  int restarts = 3;
  int steps = 60;
  double learning_rate = 0.05;
  std::optional<double> fixed_noise;  // skip noise fitting when set
  double min_noise = 1e-6;
  std::uint64_t seed = 0;
};

// Hyperparameters by multi-start Adam ascent on the log marginal likelihood
// over log-parameters. Needs >= 2 points. Throws IllConditionedError when the
// Cholesky still fails after jitter escalation.
GpModel gp_fit(const Matrix& inputs, const Vector& targets, const GpFitOptions& options = {});

// Conditions on data with fixed hyperparameters.
GpModel gp_condition(const Matrix& inputs, const Vector& targets, const Vector& lengthscales,
                     double signal_variance, double noise_variance);

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;  // clamped at 0
  Vector mean_grad;       // filled by gp_posterior_grad
  Vector variance_grad;
};

GpPrediction gp_posterior(const GpModel& model, const Vector& x);
GpPrediction gp_posterior_grad(const GpModel& model, const Vector& x);

double expected_improvement(double mean, double sigma, double best);
double upper_confidence_bound(double mean, double sigma, double beta_ucb);

struct Acquisition {
  enum class Kind { kQucb, kQei };
  Kind kind = Kind::kQucb;
  double beta_ucb = 4.0;
  double best = 0.0;  // qEI incumbent

  static Acquisition qucb(double beta_ucb = 4.0) { return {Kind::kQucb, beta_ucb, 0.0}; }
  static Acquisition qei(double best) { return {Kind::kQei, 4.0, best}; }

  double operator()(const GpPrediction& p) const;
};

struct BoOptions {
  int pool_size = 1024;
  int refine_count = 64;
  int refine_steps = 25;
  double refine_step = 0.02;         // fraction of the bound width per step
  double penalty_radius = 0.5;       // in lengthscale units
  double min_separation = 1e-6;
};

// Sobol candidate pool in the bounds plus refine_count points obtained by
// projected gradient ascent on the acquisition from the best pool members.
Matrix bo_candidate_pool(const GpModel& model, const Acquisition& acq, const Vector& lower,
                         const Vector& upper, std::uint64_t seed, const BoOptions& options,
                         Vector* values = nullptr);

// Greedy batch: repeatedly take the best remaining candidate, then subtract a
// Gaussian bump centered on it from every other candidate's acquisition.
// Candidates within min_separation of a selected point are excluded.
Matrix bo_acquire(const GpModel& model, const Acquisition& acq, int b, const Vector& lower,
                  const Vector& upper, std::uint64_t seed, const BoOptions& options = {});

}  // namespace dynamo

#pragma once

#include <functional>

#include "dynamo/dataset.hpp"
#include "dynamo/rng.hpp"

namespace dynamo {

// (mu/mu_w, lambda)-CMA-ES state with the standard default parameters.
struct CmaState {
  Vector mean;
  double sigma = 1.0;
  Matrix cov;
  Matrix eig_vectors;  // B
  Vector eig_sqrt;     // D (square roots of eigenvalues)
  Vector path_sigma;
  Vector path_c;
  int generation = 0;
  int repairs = 0;  // times the eigenvalue floor was applied

  int lambda = 0;
  int mu = 0;
  Vector weights;
  double mueff = 0.0;
  double cc = 0.0;
  double cs = 0.0;
  double c1 = 0.0;
  double cmu = 0.0;
  double damps = 0.0;
  double chi_n = 0.0;

  int dim() const { return static_cast<int>(mean.size()); }
};

inline constexpr double kCmaEigenFloor = 1e-12;

// lambda <= 0 selects the default population 4 + floor(3 ln d).
CmaState cma_init(const Vector& mean, double sigma, int lambda = 0);

// Default population size 4 + floor(3 ln d).
int cma_default_population(int d);

struct CmaStepResult {
  Matrix population;  // lambda x d, inside the bounds
  Vector scores;
};

// Samples lambda points from N(mean, sigma^2 C), reflects them into
// [lower, upper], scores them (higher is better) and applies the standard
// rank-mu / rank-one / step-size update. NaN scores throw NumericError.
CmaStepResult cma_step(CmaState& state, const std::function<double(const Vector&)>& score,
                       const Vector& lower, const Vector& upper, Rng& rng);

// Mirror x into [lo, hi] (repeatedly, for far excursions).
double reflect_into(double x, double lo, double hi);

}  // namespace dynamo

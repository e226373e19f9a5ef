#pragma once

#include "dynamo/objective.hpp"

namespace dynamo {

enum class AscentMethod { kGrad, kAdam };

std::string to_string(AscentMethod method);

struct AscentOptions {
  int steps = 1;
  double learning_rate = 0.05;
  AscentMethod method = AscentMethod::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// A batch of points climbed independently, each clipped to the bounds after
// every step. Adam moments persist across step() calls until reset().
class BatchAscent {
 public:
  BatchAscent(Matrix x0, Vector lower, Vector upper, AscentOptions options);

  const Matrix& points() const { return x_; }
  void reset(Matrix x0);

  // Runs options.steps updates. Throws NumericError naming the row when a
  // gradient or the final score is non-finite.
  const Matrix& step(const ScoreFunction& fn);

 private:
  Matrix x_;
  Matrix m_;
  Matrix v_;
  long t_ = 0;
  Vector lower_;
  Vector upper_;
  AscentOptions options_;
};

Matrix ascend(const ScoreFunction& fn, const Matrix& x0, int steps, double lr, AscentMethod method,
              const Vector& lower, const Vector& upper);

}  // namespace dynamo

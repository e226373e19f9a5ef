#include "dynamo/ascent.hpp"

#include <cmath>

#include "dynamo/error.hpp"

namespace dynamo {

std::string to_string(AscentMethod method) {
  return method == AscentMethod::kGrad ? "grad" : "adam";
}

BatchAscent::BatchAscent(Matrix x0, Vector lower, Vector upper, AscentOptions options)
    : lower_(std::move(lower)), upper_(std::move(upper)), options_(options) {
  if (options_.steps < 1) throw PreconditionError("ascent needs steps >= 1");
  if (!(options_.learning_rate > 0.0)) throw PreconditionError("ascent needs lr > 0");
  if (lower_.size() != x0.cols() || upper_.size() != x0.cols()) {
    throw DomainError("ascent bounds do not match the design dimension");
  }
  reset(std::move(x0));
}

void BatchAscent::reset(Matrix x0) {
  x_ = std::move(x0);
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    x_.row(i) = x_.row(i).cwiseMax(lower_.transpose()).cwiseMin(upper_.transpose());
  }
  m_ = Matrix::Zero(x_.rows(), x_.cols());
  v_ = Matrix::Zero(x_.rows(), x_.cols());
  t_ = 0;
}

const Matrix& BatchAscent::step(const ScoreFunction& fn) {
  const double lr = options_.learning_rate;
  for (int s = 0; s < options_.steps; ++s) {
    ++t_;
    const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
    for (Eigen::Index i = 0; i < x_.rows(); ++i) {
      const Vector g = fn.gradient(x_.row(i).transpose());
      if (!g.allFinite()) {
        throw NumericError("non-finite gradient during ascent at row " + std::to_string(i));
      }
      if (options_.method == AscentMethod::kGrad) {
        x_.row(i) += lr * g.transpose();
      } else {
        m_.row(i) = options_.beta1 * m_.row(i) + (1.0 - options_.beta1) * g.transpose();
        v_.row(i) = options_.beta2 * v_.row(i) +
                    (1.0 - options_.beta2) * g.array().square().matrix().transpose();
        const auto mhat = m_.row(i).array() / c1;
        const auto vhat = v_.row(i).array() / c2;
        x_.row(i).array() += lr * mhat / (vhat.sqrt() + options_.epsilon);
      }
      x_.row(i) = x_.row(i).cwiseMax(lower_.transpose()).cwiseMin(upper_.transpose());
    }
  }
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    if (!std::isfinite(fn.value(x_.row(i).transpose()))) {
      throw NumericError("non-finite score during ascent at row " + std::to_string(i));
    }
  }
  return x_;
}

Matrix ascend(const ScoreFunction& fn, const Matrix& x0, int steps, double lr, AscentMethod method,
              const Vector& lower, const Vector& upper) {
  AscentOptions options;
  options.steps = steps;
  options.learning_rate = lr;
  options.method = method;
  BatchAscent ascent(x0, lower, upper, options);
  return ascent.step(fn);
}

}  // namespace dynamo

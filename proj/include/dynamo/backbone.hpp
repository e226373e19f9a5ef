#pragma once

#include <memory>
#include <string>

#include "dynamo/ascent.hpp"
#include "dynamo/cma_es.hpp"
#include "dynamo/gp.hpp"
#include "dynamo/objective.hpp"

namespace dynamo {

enum class OptimizerKind { kGrad, kAdam, kCmaEs, kBoQei, kBoQucb };

std::string to_string(OptimizerKind kind);
// Accepts grad, adam, cma-es, bo-qei, bo-qucb.
OptimizerKind optimizer_from_string(const std::string& text);

struct BackboneOptions {
  OptimizerKind kind = OptimizerKind::kAdam;
  // first-order
  int steps_per_acquisition = 5;
  double learning_rate = 0.05;
  // CMA-ES: sigma0 = fraction * mean bound width, population = batch size
  double cma_sigma_fraction = 0.3;
  // BO
  double beta_ucb = 4.0;
  int bo_max_points = 128;
  BoOptions bo;
  GpFitOptions gp;
};

// A batch sampler driven only by a score function. The runner calls
// restart() at the start of every phase with the scored Sobol batch, then
// acquire() once per iteration.
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual std::string name() const = 0;
  virtual void restart(const Matrix& init, const Vector& init_scores, std::uint64_t seed) = 0;
  // history: this phase's cached designs and their scores, oldest first.
  virtual Matrix acquire(const ScoreFunction& fn, const Matrix& history,
                         const Vector& history_scores) = 0;
};

std::unique_ptr<Backbone> make_backbone(const BackboneOptions& options, int batch_size,
                                        const Vector& lower, const Vector& upper);

}  // namespace dynamo

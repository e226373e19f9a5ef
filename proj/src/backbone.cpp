#include "dynamo/backbone.hpp"

#include <algorithm>
#include <optional>

#include "dynamo/error.hpp"
#include "dynamo/rng.hpp"

namespace dynamo {

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kGrad: return "grad";
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kCmaEs: return "cma-es";
    case OptimizerKind::kBoQei: return "bo-qei";
    case OptimizerKind::kBoQucb: return "bo-qucb";
  }
  return "unknown";
}

OptimizerKind optimizer_from_string(const std::string& text) {
  if (text == "grad") return OptimizerKind::kGrad;
  if (text == "adam") return OptimizerKind::kAdam;
  if (text == "cma-es" || text == "cmaes") return OptimizerKind::kCmaEs;
  if (text == "bo-qei") return OptimizerKind::kBoQei;
  if (text == "bo-qucb") return OptimizerKind::kBoQucb;
  throw DomainError("unknown optimizer '" + text + "'");
}

namespace {

class FirstOrderBackbone final : public Backbone {
 public:
  FirstOrderBackbone(const BackboneOptions& o, Vector lower, Vector upper)
      : options_(o), lower_(std::move(lower)), upper_(std::move(upper)) {
    ascent_options_.steps = o.steps_per_acquisition;
    ascent_options_.learning_rate = o.learning_rate;
    ascent_options_.method =
        o.kind == OptimizerKind::kGrad ? AscentMethod::kGrad : AscentMethod::kAdam;
  }

  std::string name() const override { return to_string(options_.kind); }

  void restart(const Matrix& init, const Vector&, std::uint64_t) override {
    ascent_.emplace(init, lower_, upper_, ascent_options_);
  }

  Matrix acquire(const ScoreFunction& fn, const Matrix&, const Vector&) override {
    if (!ascent_) throw PreconditionError("backbone used before restart");
    return ascent_->step(fn);
  }

 private:
  BackboneOptions options_;
  Vector lower_;
  Vector upper_;
  AscentOptions ascent_options_;
  std::optional<BatchAscent> ascent_;
};

class CmaBackbone final : public Backbone {
 public:
  CmaBackbone(const BackboneOptions& o, int b, Vector lower, Vector upper)
      : options_(o), b_(b), lower_(std::move(lower)), upper_(std::move(upper)), rng_(0) {}

  std::string name() const override { return "cma-es"; }

  void restart(const Matrix& init, const Vector& init_scores, std::uint64_t seed) override {
    Eigen::Index best = 0;
    init_scores.maxCoeff(&best);
    const double sigma0 = options_.cma_sigma_fraction * (upper_ - lower_).mean();
    state_ = cma_init(init.row(best).transpose(), sigma0, std::max(b_, 2));
    rng_ = Rng(derive_seed(seed, 0xc3a));
  }

  Matrix acquire(const ScoreFunction& fn, const Matrix&, const Vector&) override {
    if (!state_) throw PreconditionError("backbone used before restart");
    CmaStepResult r = cma_step(*state_, fn.value, lower_, upper_, rng_);
    return r.population.topRows(b_);
  }

 private:
  BackboneOptions options_;
  int b_;
  Vector lower_;
  Vector upper_;
  Rng rng_;
  std::optional<CmaState> state_;
};

class BoBackbone final : public Backbone {
 public:
  BoBackbone(const BackboneOptions& o, int b, Vector lower, Vector upper)
      : options_(o), b_(b), lower_(std::move(lower)), upper_(std::move(upper)) {}

  std::string name() const override { return to_string(options_.kind); }

  void restart(const Matrix&, const Vector&, std::uint64_t seed) override {
    seed_ = seed;
    calls_ = 0;
  }

  Matrix acquire(const ScoreFunction&, const Matrix& history,
                 const Vector& history_scores) override {
    const auto n = history.rows();
    const auto keep = std::min<Eigen::Index>(n, options_.bo_max_points);
    const Matrix x = history.bottomRows(keep);
    const Vector y = history_scores.tail(keep);
    GpFitOptions gp = options_.gp;
    gp.seed = derive_seed(seed_, 2 * calls_);
    const GpModel model = gp_fit(x, y, gp);
    const Acquisition acq = options_.kind == OptimizerKind::kBoQei
                                ? Acquisition::qei(y.maxCoeff())
                                : Acquisition::qucb(options_.beta_ucb);
    const std::uint64_t pool_seed = derive_seed(seed_, 2 * calls_ + 1);
    ++calls_;
    return bo_acquire(model, acq, b_, lower_, upper_, pool_seed, options_.bo);
  }

 private:
  BackboneOptions options_;
  int b_;
  Vector lower_;
  Vector upper_;
  std::uint64_t seed_ = 0;
  std::uint64_t calls_ = 0;
};

}  // namespace

std::unique_ptr<Backbone> make_backbone(const BackboneOptions& options, int batch_size,
                                        const Vector& lower, const Vector& upper) {
  if (batch_size < 1) throw PreconditionError("batch size must be >= 1");
  switch (options.kind) {
    case OptimizerKind::kGrad:
    case OptimizerKind::kAdam:
      return std::make_unique<FirstOrderBackbone>(options, lower, upper);
    case OptimizerKind::kCmaEs:
      return std::make_unique<CmaBackbone>(options, batch_size, lower, upper);
    case OptimizerKind::kBoQei:
    case OptimizerKind::kBoQucb:
      return std::make_unique<BoBackbone>(options, batch_size, lower, upper);
  }
  throw DomainError("unknown optimizer kind");
}

}  // namespace dynamo

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dynamo/dataset.hpp"

namespace dynamo {

using OracleFn = std::function<double(const Vector&)>;

// A synthetic task with a hidden oracle. Every oracle evaluation goes through
// evaluate(), which counts calls; the counter is shared between copies.
class Task {
 public:
  Task(std::string name, Vector lower, Vector upper, OracleFn oracle,
       DesignKind kind = DesignKind::kContinuous, std::optional<Alphabet> alphabet = std::nullopt);

  const std::string& name() const { return name_; }
  int dim() const { return static_cast<int>(lower_.size()); }
  const Vector& lower_bound() const { return lower_; }
  const Vector& upper_bound() const { return upper_; }
  DesignKind kind() const { return kind_; }
  const std::optional<Alphabet>& alphabet() const { return alphabet_; }

  double evaluate(const Vector& x) const;
  Vector evaluate_batch(const Matrix& xs) const;

  std::uint64_t oracle_calls() const { return calls_->load(); }
  void reset_oracle_calls() const { calls_->store(0); }

  void add_secondary(std::string name, OracleFn fn);
  bool has_secondaries() const { return !secondaries_.empty(); }
  const std::vector<std::pair<std::string, OracleFn>>& secondaries() const { return secondaries_; }

 private:
  std::string name_;
  Vector lower_;
  Vector upper_;
  OracleFn oracle_;
  DesignKind kind_;
  std::optional<Alphabet> alphabet_;
  std::shared_ptr<std::atomic<std::uint64_t>> calls_;
  std::vector<std::pair<std::string, OracleFn>> secondaries_;
};

// Negated Branin on [-5,10] x [0,15]; out-of-bounds input throws DomainError.
double branin_max(const Vector& x);

struct GaussianMode {
  Vector center;
  double height = 1.0;
  double width = 1.0;
};

// sum_k h_k exp(-|x - c_k|^2 / (2 w_k^2))
double gaussian_modes(const Vector& x, const std::vector<GaussianMode>& modes);

// Modes used by the "gaussian-modes" task.
const std::vector<GaussianMode>& default_gaussian_modes();

// Toy sequence objective over length-8 ACGT strings: position weights plus a
// motif bonus, scaled to [0, 1] by exhaustive enumeration.
const Alphabet& seq_toy_alphabet();
double seq_toy_sequence_score(const std::string& sequence);
double seq_toy(const Vector& relaxed);

std::vector<std::string> task_names();
// Throws DomainError for an unknown name.
Task make_task(const std::string& name);

struct Sampler {
  enum class Kind { kSobol, kGaussian };
  Kind kind = Kind::kSobol;
  Vector center;  // gaussian only
  double sigma = 1.0;

  static Sampler sobol() { return {}; }
  static Sampler gaussian(Vector center, double sigma) {
    return {Kind::kGaussian, std::move(center), sigma};
  }
};

// Linear-interpolation quantile (q in [0, 1]) of the values.
double quantile(Vector values, double q);

// n designs from the sampler, scored by the oracle; with a ceiling, designs
// scoring above the given quantile are dropped. Discrete tasks store the
// one-hot encoding of each sampled design's decoded sequence.
OfflineDataset generate_offline(const Task& task, int n, const Sampler& sampler,
                                std::optional<double> ceiling_quantile, std::uint64_t seed);

// values[o][i] = secondary objective o on design i. Throws UnsupportedError
// when the task has none.
std::vector<Vector> secondary_eval(const Task& task, const Matrix& designs);
// Sample standard deviation per objective (0 for a single design).
Vector secondary_stds(const Task& task, const Matrix& designs);

}  // namespace dynamo

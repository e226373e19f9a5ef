#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "dynamo/backbone.hpp"
#include "dynamo/duality.hpp"
#include "dynamo/metrics.hpp"
#include "dynamo/neural.hpp"
#include "dynamo/tasks.hpp"

namespace dynamo {

enum class Method { kDynamo, kBaseline };

std::string to_string(Method method);
Method method_from_string(const std::string& text);

struct RunConfig {
  std::string task = "branin";
  Method method = Method::kDynamo;
  BackboneOptions optimizer;
  PenaltyConfig penalty;
  int batch_size = 64;
  int k = 128;
  int max_failures = 10;
  int max_restarts = 3;
  int max_iterations = 64;  // across all phases
  std::uint64_t seed = 0;
  std::optional<double> pinned_lambda;

  // Offline data: loaded from dataset_path when set, otherwise generated
  // from the task with a Sobol sampler.
  std::string dataset_path;
  int dataset_size = 800;
  std::optional<double> ceiling = 0.9;
  std::optional<std::uint64_t> data_seed;  // defaults to seed

  SurrogateOptions surrogate;
  CriticArchitecture critic_arch;
  CriticOptions critic;
  DualSolverOptions dual;

  // Throws DomainError / PreconditionError on invalid settings.
  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

struct CandidateEntry {
  Vector design;
  double score = 0.0;
  int restart = 0;
  int iteration = 0;
};

// Append-only record of every cached candidate across all phases.
struct CandidatePool {
  std::vector<CandidateEntry> entries;

  void append(const Matrix& designs, const Vector& scores, int restart, int iteration);
  std::size_t size() const { return entries.size(); }
};

struct TopK {
  CandidateSet candidates;
  Vector penalized_scores;
  std::vector<std::size_t> pool_indices;
  bool padded = false;  // pool held fewer than k entries
};

// Highest penalized scores first; equal scores keep insertion order.
TopK select_top_k(const CandidatePool& pool, int k);

struct IterationLog {
  int iteration = 0;         // global, 0-based
  int restart = 0;           // phase index
  double lambda = 0.0;
  double g_value = 0.0;
  bool lambda_converged = true;
  double critic_w = 0.0;     // W after retraining on this batch
  int critic_steps = 0;
  double kl_estimate = 0.0;
  double chi2_estimate = 0.0;
  bool has_divergence = false;
  double batch_max = 0.0;
  double phase_best = 0.0;   // running best after this batch
  bool failure = false;
  int consecutive_failures = 0;
};

struct RunResult {
  RunConfig config;
  TopK top_k;
  MetricReport metrics;
  // Dataset-side statistics the metrics are compared against.
  MetricReport reference;
  Vector oracle_raw_scores;
  std::vector<IterationLog> log;
  int restarts = 0;
  int iterations = 0;
  bool hit_iteration_cap = false;
  std::size_t pool_size = 0;
  std::uint64_t oracle_calls = 0;
  double wall_seconds = 0.0;
  Vector dataset_scores;  // normalized
  Vector tau_weights;

  nlohmann::json to_json() const;
};

// Observes each iteration right after lambda is solved. critic_on_data holds
// the critic outputs on the dataset that lambda was solved against.
struct IterationSnapshot {
  int iteration = 0;
  int restart = 0;
  const Vector* critic_on_data = nullptr;
  const TauWeights* tau_weights = nullptr;
  const PenaltyConfig* penalty = nullptr;
  double lambda = 0.0;
};

using BackboneFactory = std::function<std::unique_ptr<Backbone>(const RunConfig&, const Vector& lower,
                                                                const Vector& upper)>;

struct RunHooks {
  std::function<void(const IterationSnapshot&)> on_iteration;
};

RunResult run(const RunConfig& config);
// The task is only used for final evaluation of the selected k designs.
RunResult run(const RunConfig& config, const Task& task, const OfflineDataset& dataset,
              const BackboneFactory& factory = {}, const RunHooks& hooks = {});

// Loads or generates the offline dataset a config describes.
OfflineDataset make_dataset(const RunConfig& config, const Task& task);

std::string iteration_log_csv(const std::vector<IterationLog>& log);

}  // namespace dynamo

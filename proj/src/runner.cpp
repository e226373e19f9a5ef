#include "dynamo/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "dynamo/density.hpp"
#include "dynamo/error.hpp"
#include "dynamo/objective.hpp"
#include "dynamo/sobol.hpp"

namespace dynamo {

std::string to_string(Method method) {
  return method == Method::kDynamo ? "dynamo" : "baseline";
}

Method method_from_string(const std::string& text) {
  if (text == "dynamo") return Method::kDynamo;
  if (text == "baseline") return Method::kBaseline;
  throw DomainError("unknown method '" + text + "'");
}

void RunConfig::validate() const {
  if (k < 1) throw DomainError("k must be >= 1");
  if (batch_size < 1) throw DomainError("batch size must be >= 1");
  if (max_failures < 1) throw DomainError("max_failures must be >= 1");
  if (max_restarts < 0) throw DomainError("max_restarts must be >= 0");
  if (max_iterations < 1) throw DomainError("max_iterations must be >= 1");
  if (dataset_size < 2) throw DomainError("dataset size must be >= 2");
  if (ceiling && !(*ceiling > 0.0 && *ceiling <= 1.0)) throw DomainError("ceiling must lie in (0, 1]");
  penalty.validate();
  if (method == Method::kDynamo && penalty.beta > 0.0 && !(penalty.tau > 0.0)) {
    throw DomainError("tau must be > 0 when beta > 0");
  }
  if (pinned_lambda && !(*pinned_lambda >= 0.0)) throw DomainError("pinned lambda must be >= 0");
  if (optimizer.steps_per_acquisition < 1) throw PreconditionError("optimizer steps must be >= 1");
  if (!(optimizer.learning_rate > 0.0)) throw PreconditionError("optimizer lr must be > 0");
  if (surrogate.epochs < 1) throw PreconditionError("surrogate epochs must be >= 1");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["task"] = task;
  j["method"] = to_string(method);
  j["optimizer"] = to_string(optimizer.kind);
  j["optimizer_steps"] = optimizer.steps_per_acquisition;
  j["optimizer_lr"] = optimizer.learning_rate;
  j["cma_sigma_fraction"] = optimizer.cma_sigma_fraction;
  j["beta_ucb"] = optimizer.beta_ucb;
  j["beta"] = penalty.beta;
  j["tau"] = penalty.tau;
  j["w0"] = penalty.w0;
  j["divergence"] = to_string(penalty.divergence);
  j["gamma"] = penalty.gamma;
  j["batch_size"] = batch_size;
  j["k"] = k;
  j["max_failures"] = max_failures;
  j["max_restarts"] = max_restarts;
  j["max_iterations"] = max_iterations;
  j["seed"] = seed;
  j["pinned_lambda"] = pinned_lambda ? nlohmann::json(*pinned_lambda) : nlohmann::json(nullptr);
  j["dataset_path"] = dataset_path;
  j["dataset_size"] = dataset_size;
  j["ceiling"] = ceiling ? nlohmann::json(*ceiling) : nlohmann::json(nullptr);
  j["data_seed"] = data_seed ? nlohmann::json(*data_seed) : nlohmann::json(nullptr);
  j["surrogate_hidden"] = surrogate.hidden;
  j["surrogate_epochs"] = surrogate.epochs;
  j["surrogate_lr"] = surrogate.learning_rate;
  j["surrogate_batch"] = surrogate.batch_size;
  j["critic_hidden"] = critic_arch.hidden;
  j["critic_clip"] = critic_arch.clip_bound;
  j["critic_lr"] = critic.learning_rate;
  j["critic_steps"] = critic.max_steps;
  j["critic_tol"] = critic.tolerance;
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key) && !j.at(key).is_null()) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("task", c.task);
  if (j.contains("method")) c.method = method_from_string(j.at("method").get<std::string>());
  if (j.contains("optimizer")) c.optimizer.kind = optimizer_from_string(j.at("optimizer").get<std::string>());
  get("optimizer_steps", c.optimizer.steps_per_acquisition);
  get("optimizer_lr", c.optimizer.learning_rate);
  get("cma_sigma_fraction", c.optimizer.cma_sigma_fraction);
  get("beta_ucb", c.optimizer.beta_ucb);
  get("beta", c.penalty.beta);
  get("tau", c.penalty.tau);
  get("w0", c.penalty.w0);
  if (j.contains("divergence")) c.penalty.divergence = divergence_from_string(j.at("divergence").get<std::string>());
  get("gamma", c.penalty.gamma);
  get("batch_size", c.batch_size);
  get("k", c.k);
  get("max_failures", c.max_failures);
  get("max_restarts", c.max_restarts);
  get("max_iterations", c.max_iterations);
  get("seed", c.seed);
  if (j.contains("pinned_lambda") && !j.at("pinned_lambda").is_null()) c.pinned_lambda = j.at("pinned_lambda").get<double>();
  get("dataset_path", c.dataset_path);
  get("dataset_size", c.dataset_size);
  if (j.contains("ceiling")) {
    c.ceiling = j.at("ceiling").is_null() ? std::nullopt : std::optional<double>(j.at("ceiling").get<double>());
  }
  if (j.contains("data_seed") && !j.at("data_seed").is_null()) c.data_seed = j.at("data_seed").get<std::uint64_t>();
  get("surrogate_hidden", c.surrogate.hidden);
  get("surrogate_epochs", c.surrogate.epochs);
  get("surrogate_lr", c.surrogate.learning_rate);
  get("surrogate_batch", c.surrogate.batch_size);
  get("critic_hidden", c.critic_arch.hidden);
  get("critic_clip", c.critic_arch.clip_bound);
  get("critic_lr", c.critic.learning_rate);
  get("critic_steps", c.critic.max_steps);
  get("critic_tol", c.critic.tolerance);
  return c;
}

void CandidatePool::append(const Matrix& designs, const Vector& scores, int restart, int iteration) {
  for (Eigen::Index i = 0; i < designs.rows(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw NumericError("non-finite penalized score at restart " + std::to_string(restart) +
                         ", iteration " + std::to_string(iteration));
    }
    entries.push_back({designs.row(i).transpose(), scores[i], restart, iteration});
  }
}

TopK select_top_k(const CandidatePool& pool, int k) {
  if (k < 1) throw DomainError("select_top_k: k must be >= 1");
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pool.entries[a].score > pool.entries[b].score;
  });
  TopK out;
  out.padded = pool.size() < static_cast<std::size_t>(k);
  const std::size_t take = std::min(pool.size(), static_cast<std::size_t>(k));
  order.resize(take);
  out.pool_indices = order;
  const auto d = take > 0 ? pool.entries.front().design.size() : 0;
  out.candidates.designs.resize(static_cast<Eigen::Index>(take), d);
  out.penalized_scores.resize(static_cast<Eigen::Index>(take));
  for (std::size_t r = 0; r < take; ++r) {
    out.candidates.designs.row(static_cast<Eigen::Index>(r)) = pool.entries[order[r]].design.transpose();
    out.penalized_scores[static_cast<Eigen::Index>(r)] = pool.entries[order[r]].score;
  }
  return out;
}

OfflineDataset make_dataset(const RunConfig& config, const Task& task) {
  if (!config.dataset_path.empty()) return load_dataset(config.dataset_path);
  const std::uint64_t data_seed = config.data_seed.value_or(config.seed);
  return generate_offline(task, config.dataset_size, Sampler::sobol(), config.ceiling, data_seed);
}

RunResult run(const RunConfig& config) {
  const Task task = make_task(config.task);
  const OfflineDataset ds = make_dataset(config, task);
  return run(config, task, ds);
}

namespace {

// Re-raises a module error with the run position appended, keeping its type.
[[noreturn]] void rethrow_in_context(const Error& e, int restart, int iteration) {
  const std::string msg = std::string(e.what()) + " [restart " + std::to_string(restart) +
                          ", iteration " + std::to_string(iteration) + "]";
  if (dynamic_cast<const DomainError*>(&e)) throw DomainError(msg);
  if (dynamic_cast<const PreconditionError*>(&e)) throw PreconditionError(msg);
  if (dynamic_cast<const TrainingDivergedError*>(&e)) throw TrainingDivergedError(msg);
  if (dynamic_cast<const NumericError*>(&e)) throw NumericError(msg);
  if (dynamic_cast<const IllConditionedError*>(&e)) throw IllConditionedError(msg);
  if (dynamic_cast<const UnsupportedError*>(&e)) throw UnsupportedError(msg);
  if (dynamic_cast<const DegenerateDatasetError*>(&e)) throw DegenerateDatasetError(msg);
  throw Error(msg);
}

}  // namespace

RunResult run(const RunConfig& config, const Task& task, const OfflineDataset& ds,
              const BackboneFactory& factory, const RunHooks& hooks) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  if (ds.dim() != task.dim()) throw DomainError("dataset dimension does not match the task");
  const int d = ds.dim();
  const int b = config.batch_size;
  const Vector& lower = ds.lower_bound();
  const Vector& upper = ds.upper_bound();
  const bool dynamo = config.method == Method::kDynamo;

  SurrogateOptions sopts = config.surrogate;
  sopts.seed = derive_seed(config.seed, 1);
  auto surrogate = std::make_shared<const Mlp>(fit_surrogate(ds, sopts));

  PenaltyConfig penalty = config.penalty;
  if (!dynamo) penalty.beta = 0.0;
  PenalizedObjective objective(surrogate, penalty, lower, upper);

  const TauWeights tw = tau_weight(ds, dynamo ? penalty.tau : 0.0);
  std::optional<KdeModel> p_kde;
  if (dynamo) {
    p_kde = fit_kde(ds.designs(), tw.weights, BandwidthRule::silverman());
    objective.set_reference_density(*p_kde);
  }

  std::unique_ptr<Backbone> backbone =
      factory ? factory(config, lower, upper) : make_backbone(config.optimizer, b, lower, upper);

  RunResult result;
  result.config = config;
  result.dataset_scores = ds.norm_scores();
  result.tau_weights = tw.weights;
  CandidatePool pool;
  int iteration = 0;
  bool stop = false;

  for (int phase = 0; phase <= config.max_restarts && !stop; ++phase) {
    result.restarts = phase;
    std::optional<Critic> critic;
    objective.clear_batch_density();
    if (dynamo) {
      critic = make_critic(d, config.critic_arch, derive_seed(config.seed, 100 + phase));
      objective.set_critic(*critic, ds.designs(), tw);
    }
    double phase_best = -std::numeric_limits<double>::infinity();
    int failures = 0;
    int step_in_phase = 0;
    std::vector<Vector> history_rows;
    std::vector<double> history_scores;

    while (true) {
      if (iteration >= config.max_iterations) {
        result.hit_iteration_cap = true;
        stop = true;
        break;
      }
      IterationLog entry;
      entry.iteration = iteration;
      entry.restart = phase;
      try {
        if (dynamo) {
          const Vector critic_on_data = critic->net.forward_batch(ds.designs());
          if (config.pinned_lambda) {
            entry.lambda = *config.pinned_lambda;
            entry.g_value = g_lower(entry.lambda, critic_on_data, tw, penalty);
          } else {
            const DualSolution sol = solve_lambda(critic_on_data, tw, penalty, config.dual);
            entry.lambda = sol.lambda_star;
            entry.g_value = sol.g_value;
            entry.lambda_converged = sol.converged;
          }
          objective.set_lambda(entry.lambda);
          if (hooks.on_iteration) {
            hooks.on_iteration({iteration, phase, &critic_on_data, &tw, &penalty, entry.lambda});
          }
        }

        Matrix batch;
        if (step_in_phase == 0) {
          batch = sobol_init(d, b, lower, upper, derive_seed(config.seed, 1000 + phase));
        } else {
          Matrix history(static_cast<Eigen::Index>(history_rows.size()), d);
          for (std::size_t r = 0; r < history_rows.size(); ++r) {
            history.row(static_cast<Eigen::Index>(r)) = history_rows[r].transpose();
          }
          const Vector hs = Eigen::Map<const Vector>(history_scores.data(),
                                                     static_cast<Eigen::Index>(history_scores.size()));
          batch = backbone->acquire(objective.as_score_function(), history, hs);
          if (batch.rows() != b || batch.cols() != d) {
            throw DomainError("optimizer returned a batch of the wrong shape");
          }
        }

        if (dynamo) {
          const CriticTrace trace = train_critic(*critic, ds.designs(), tw.weights, batch, config.critic);
          entry.critic_w = trace.w.back();
          entry.critic_steps = trace.steps;
          objective.set_critic(*critic, ds.designs(), tw);
          if (b >= 2) {
            const KdeModel q_kde = fit_kde(batch, BandwidthRule::silverman());
            entry.kl_estimate = kl_estimate(batch, *p_kde, q_kde);
            entry.chi2_estimate = chi2_estimate(batch, *p_kde, q_kde);
            entry.has_divergence = true;
            objective.set_batch_density(q_kde);
          }
        }

        const Vector scores = objective.score_batch(batch);
        if (step_in_phase == 0) backbone->restart(batch, scores, derive_seed(config.seed, 2000 + phase));
        entry.batch_max = scores.maxCoeff();
        entry.failure = step_in_phase > 0 && !(entry.batch_max > phase_best);
        phase_best = std::max(phase_best, entry.batch_max);
        failures = entry.failure ? failures + 1 : 0;
        entry.phase_best = phase_best;
        entry.consecutive_failures = failures;
        pool.append(batch, scores, phase, iteration);
        for (Eigen::Index i = 0; i < batch.rows(); ++i) {
          history_rows.push_back(batch.row(i).transpose());
          history_scores.push_back(scores[i]);
        }
      } catch (const Error& e) {
        rethrow_in_context(e, phase, iteration);
      }
      result.log.push_back(entry);
      ++iteration;
      ++step_in_phase;
      if (failures >= config.max_failures) break;
    }
  }
  result.iterations = iteration;
  result.pool_size = pool.size();

  // Final evaluation: the only oracle access in a run.
  result.top_k = select_top_k(pool, config.k);
  CandidateSet& cs = result.top_k.candidates;
  const std::uint64_t calls_before = task.oracle_calls();
  result.oracle_raw_scores = task.evaluate_batch(cs.designs);
  result.oracle_calls = task.oracle_calls() - calls_before;
  Vector normalized(result.oracle_raw_scores.size());
  for (Eigen::Index i = 0; i < normalized.size(); ++i) normalized[i] = ds.normalize(result.oracle_raw_scores[i]);
  cs.oracle_scores = normalized;
  if (ds.kind() == DesignKind::kDiscreteRelaxed && ds.alphabet()) {
    for (Eigen::Index i = 0; i < cs.designs.rows(); ++i) {
      cs.sequences.push_back(decode_relaxed(cs.designs.row(i).transpose(), *ds.alphabet()));
    }
  }
  result.metrics = compute_metrics(cs, ds);
  if (task.has_secondaries()) {
    const Vector stds = secondary_stds(task, cs.designs);
    for (std::size_t o = 0; o < task.secondaries().size(); ++o) {
      result.metrics.secondary_stds[task.secondaries()[o].first] = stds[static_cast<Eigen::Index>(o)];
    }
  }

  result.reference.best_at_k = ds.norm_scores().maxCoeff();
  result.reference.median_at_k = median_at_k(ds.norm_scores());
  result.reference.minimum_novelty = 0.0;
  result.reference.l1_coverage = l1_coverage(ds.designs());
  {
    CandidateSet whole;
    whole.designs = ds.designs();
    if (ds.kind() == DesignKind::kDiscreteRelaxed && ds.alphabet()) {
      for (int i = 0; i < ds.size(); ++i) {
        whole.sequences.push_back(decode_relaxed(ds.designs().row(i).transpose(), *ds.alphabet()));
      }
      result.reference.pairwise_diversity = pairwise_diversity(whole, DistanceMetric::kLevenshtein);
    } else {
      result.reference.pairwise_diversity = pairwise_diversity(whole.designs);
    }
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

nlohmann::json RunResult::to_json() const {
  nlohmann::json j;
  j["config"] = config.to_json();
  j["metrics"] = metrics.to_json();
  j["reference"] = reference.to_json();
  j["restarts"] = restarts;
  j["iterations"] = iterations;
  j["hit_iteration_cap"] = hit_iteration_cap;
  j["pool_size"] = pool_size;
  j["oracle_calls"] = oracle_calls;
  j["wall_seconds"] = wall_seconds;
  j["padded"] = top_k.padded;
  nlohmann::json designs = nlohmann::json::array();
  for (Eigen::Index i = 0; i < top_k.candidates.designs.rows(); ++i) {
    std::vector<double> row(top_k.candidates.designs.row(i).begin(), top_k.candidates.designs.row(i).end());
    designs.push_back(row);
  }
  j["top_k_designs"] = designs;
  j["top_k_penalized"] = std::vector<double>(top_k.penalized_scores.begin(), top_k.penalized_scores.end());
  j["top_k_oracle_raw"] = std::vector<double>(oracle_raw_scores.begin(), oracle_raw_scores.end());
  if (top_k.candidates.oracle_scores) {
    const Vector& s = *top_k.candidates.oracle_scores;
    j["top_k_oracle_normalized"] = std::vector<double>(s.begin(), s.end());
  }
  if (!top_k.candidates.sequences.empty()) j["top_k_sequences"] = top_k.candidates.sequences;
  nlohmann::json log_json = nlohmann::json::array();
  for (const auto& e : log) {
    log_json.push_back({{"iteration", e.iteration},
                        {"restart", e.restart},
                        {"lambda", e.lambda},
                        {"g", e.g_value},
                        {"w", e.critic_w},
                        {"kl", e.kl_estimate},
                        {"chi2", e.chi2_estimate},
                        {"batch_max", e.batch_max},
                        {"failure", e.failure}});
  }
  j["iterations_log"] = log_json;
  return j;
}

std::string iteration_log_csv(const std::vector<IterationLog>& log) {
  std::ostringstream out;
  out << "iteration,restart,lambda,g_lower,w,kl_estimate,chi2_estimate,batch_max,phase_best,failure\n";
  for (const auto& e : log) {
    out << e.iteration << ',' << e.restart << ',' << format_double(e.lambda) << ','
        << format_double(e.g_value) << ',' << format_double(e.critic_w) << ','
        << format_double(e.kl_estimate) << ',' << format_double(e.chi2_estimate) << ','
        << format_double(e.batch_max) << ',' << format_double(e.phase_best) << ','
        << (e.failure ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace dynamo

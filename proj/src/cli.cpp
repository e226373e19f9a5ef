#include "dynamo/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "dynamo/config.hpp"
#include "dynamo/error.hpp"
#include "dynamo/runner.hpp"
#include "dynamo/tasks.hpp"

namespace fs = std::filesystem;

namespace dynamo {

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

void write_atomically(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string default_out_dir() {
  if (const char* env = std::getenv("DYNAMO_OUT_DIR"); env && *env) return env;
  return "results";
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"best_at_k", "median_at_k", "pairwise_diversity",
                                                 "minimum_novelty", "l1_coverage"};
  return names;
}

double metric_value(const MetricReport& r, const std::string& name) {
  if (name == "best_at_k") return r.best_at_k;
  if (name == "median_at_k") return r.median_at_k;
  if (name == "pairwise_diversity") return r.pairwise_diversity;
  if (name == "minimum_novelty") return r.minimum_novelty;
  return r.l1_coverage;
}

// ---- gen-data -------------------------------------------------------------

struct GenDataArgs {
  std::string task;
  int n = 800;
  std::uint64_t seed = 0;
  std::optional<double> ceiling;
  std::string sampler = "sobol";
  std::string center;
  double sigma = 1.0;
  std::string out;
  std::string format;
};

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  Task task = [&] {
    try {
      return make_task(a.task);
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
  }();
  Sampler sampler = Sampler::sobol();
  if (a.sampler == "gaussian") {
    Vector center = Vector::Zero(task.dim());
    if (!a.center.empty()) {
      const std::vector<double> c = parse_double_list(a.center);
      if (static_cast<int>(c.size()) != task.dim()) throw UsageError("--center needs one value per dimension");
      center = Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size()));
    }
    sampler = Sampler::gaussian(center, a.sigma);
  } else if (a.sampler != "sobol") {
    throw UsageError("--sampler must be sobol or gaussian");
  }
  const OfflineDataset ds = generate_offline(task, a.n, sampler, a.ceiling, a.seed);
  const fs::path path = a.out.empty() ? fs::path(default_out_dir()) / (a.task + ".csv") : fs::path(a.out);
  DatasetFormat format = format_from_path(path);
  if (a.format == "json") format = DatasetFormat::kJson;
  else if (a.format == "csv") format = DatasetFormat::kCsv;
  else if (!a.format.empty()) throw UsageError("--format must be csv or json");
  write_atomically(path, format == DatasetFormat::kJson ? dataset_to_json(ds) : dataset_to_csv(ds));
  out << "wrote " << path.string() << ": n=" << ds.size() << " d=" << ds.dim() << " score range ["
      << format_double(ds.y_min()) << ", " << format_double(ds.y_max()) << "]\n";
  return kExitOk;
}

// ---- run ------------------------------------------------------------------

struct CellSummary {
  SweepCell cell;
  std::vector<RunResult> results;
  std::vector<std::string> errors;
};

std::string histogram_rows(const std::string& label, std::uint64_t seed, const Vector& values,
                           const Vector& weights, double lo, double hi, int bins,
                           const std::string& extra) {
  std::vector<double> mass(static_cast<std::size_t>(bins), 0.0);
  const double width = (hi - lo) / bins;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    int bin = width > 0.0 ? static_cast<int>(std::floor((values[i] - lo) / width)) : 0;
    bin = std::clamp(bin, 0, bins - 1);
    mass[static_cast<std::size_t>(bin)] += weights[i];
  }
  std::ostringstream out;
  for (int b = 0; b < bins; ++b) {
    out << label << ',' << seed << extra << ',' << format_double(lo + b * width) << ','
        << format_double(lo + (b + 1) * width) << ',' << format_double(mass[static_cast<std::size_t>(b)])
        << '\n';
  }
  return out.str();
}

int cmd_run(ExperimentSpec spec, std::ostream& out, std::ostream& err) {
  if (spec.out_dir.empty()) spec.out_dir = default_out_dir();
  if (std::find(task_names().begin(), task_names().end(), spec.base.task) == task_names().end() &&
      spec.base.dataset_path.empty()) {
    throw UsageError("unknown task '" + spec.base.task + "'");
  }
  std::vector<CellSummary> cells;
  for (auto& cell : expand_cells(spec)) {
    try {
      cell.config.validate();
    } catch (const Error& e) {
      throw UsageError(cell.label + ": " + e.what());
    }
    cells.push_back({cell, {}, {}});
  }
  const fs::path dir(spec.out_dir);
  fs::create_directories(dir);

  struct Job {
    std::size_t cell;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::uint64_t s : spec.seeds) jobs.push_back({c, s});
  }
  std::vector<std::optional<RunResult>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::mutex io_mutex;
  std::size_t next = 0;

  auto worker = [&] {
    while (true) {
      std::size_t index;
      {
        std::lock_guard<std::mutex> lock(io_mutex);
        if (next >= jobs.size()) return;
        index = next++;
      }
      const Job& job = jobs[index];
      const SweepCell& cell = cells[job.cell].cell;
      RunConfig cfg = cell.config;
      cfg.seed = job.seed;
      const std::string stem = cell.label + "_seed" + std::to_string(job.seed);
      try {
        RunResult r = run(cfg);
        nlohmann::json j = r.to_json();
        j["label"] = cell.label;
        write_atomically(dir / (stem + ".json"), j.dump(2) + "\n");
        write_atomically(dir / (stem + "_iterations.csv"), iteration_log_csv(r.log));
        std::lock_guard<std::mutex> lock(io_mutex);
        out << stem << ": best@k=" << format_double(r.metrics.best_at_k)
            << " pd=" << format_double(r.metrics.pairwise_diversity) << " restarts=" << r.restarts
            << " iterations=" << r.iterations << '\n';
        results[index] = std::move(r);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(io_mutex);
        errors[index] = e.what();
        err << stem << ": error: " << e.what() << '\n';
      }
    }
  };
  const int threads = std::max(1, std::min<int>(spec.jobs, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::size_t failed = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (results[i]) {
      cells[jobs[i].cell].results.push_back(std::move(*results[i]));
    } else {
      cells[jobs[i].cell].errors.push_back(errors[i]);
      ++failed;
    }
  }

  // Aggregate: mean and 95% CI (mean +/- 1.96 * sample std / sqrt(m)).
  std::ostringstream agg;
  agg << "label,task,method,optimizer,beta,tau,b,k,runs,failed";
  for (const auto& m : metric_names()) agg << ',' << m << "_mean," << m << "_ci_low," << m << "_ci_high";
  agg << '\n';
  std::ostringstream scores_hist, tau_hist;
  scores_hist << "label,seed,bin_low,bin_high,count\n";
  tau_hist << "label,seed,tau,bin_low,bin_high,mass\n";
  for (const auto& c : cells) {
    const RunConfig& cfg = c.cell.config;
    agg << c.cell.label << ',' << cfg.task << ',' << to_string(cfg.method) << ','
        << to_string(cfg.optimizer.kind) << ',' << format_double(cfg.penalty.beta) << ','
        << format_double(cfg.penalty.tau) << ',' << cfg.batch_size << ',' << cfg.k << ','
        << c.results.size() << ',' << c.errors.size();
    for (const auto& m : metric_names()) {
      const auto n = static_cast<double>(c.results.size());
      if (c.results.empty()) {
        agg << ",nan,nan,nan";
        continue;
      }
      double mean = 0.0;
      for (const auto& r : c.results) mean += metric_value(r.metrics, m);
      mean /= n;
      double var = 0.0;
      for (const auto& r : c.results) var += std::pow(metric_value(r.metrics, m) - mean, 2);
      const double sd = n > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
      const double half = 1.96 * sd / std::sqrt(n);
      agg << ',' << format_double(mean) << ',' << format_double(mean - half) << ','
          << format_double(mean + half);
    }
    agg << '\n';
    for (const auto& r : c.results) {
      const Vector& s = *r.top_k.candidates.oracle_scores;
      scores_hist << histogram_rows(c.cell.label, r.config.seed, s, Vector::Ones(s.size()),
                                    std::min(0.0, s.minCoeff()), std::max(1.0, s.maxCoeff()), 20, "");
      tau_hist << histogram_rows(c.cell.label, r.config.seed, r.dataset_scores, r.tau_weights, 0.0,
                                 1.0 + 1e-12, 20, "," + format_double(r.config.penalty.tau));
    }
  }
  write_atomically(dir / "aggregate.csv", agg.str());
  write_atomically(dir / "plot_score_histogram.csv", scores_hist.str());
  write_atomically(dir / "plot_tau_weighted_histogram.csv", tau_hist.str());
  out << "wrote " << (jobs.size() - failed) << " run(s) to " << dir.string() << '\n';
  return failed == jobs.size() ? kExitRuntime : kExitOk;
}

// ---- report ---------------------------------------------------------------

int cmd_report(const std::string& dir_text, const std::string& out_text, std::ostream& out) {
  const fs::path dir(dir_text);
  if (!fs::is_directory(dir)) throw UsageError("result directory not found: " + dir_text);
  std::map<std::string, std::vector<ResultRow>> rows;  // metric -> rows
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception&) {
      continue;
    }
    if (!j.contains("metrics") || !j.contains("config")) continue;
    const std::string method = j.value("label", j["config"].value("method", "unknown"));
    const std::string task = j["config"].value("task", "unknown");
    const MetricReport m = MetricReport::from_json(j["metrics"]);
    const MetricReport ref =
        j.contains("reference") ? MetricReport::from_json(j["reference"]) : MetricReport{};
    for (const auto& name : metric_names()) {
      rows[name].push_back({method, task, metric_value(m, name), metric_value(ref, name)});
    }
  }
  if (rows.empty()) throw UsageError("no result files in " + dir_text);

  CsvTable table;
  table.header = {"metric", "method", "rank", "optimality_gap"};
  std::ostringstream text;
  text << std::left << std::setw(20) << "metric" << std::setw(32) << "method" << std::right
       << std::setw(10) << "rank" << std::setw(16) << "opt_gap" << '\n';
  for (const auto& name : metric_names()) {
    for (const auto& e : rank_and_gap(rows[name])) {
      table.rows.push_back({name, e.method, format_double(e.rank), format_double(e.gap)});
      text << std::left << std::setw(20) << name << std::setw(32) << e.method << std::right
           << std::setw(10) << std::fixed << std::setprecision(3) << e.rank << std::setw(16)
           << std::setprecision(4) << e.gap << '\n';
    }
  }
  const fs::path target = out_text.empty() ? dir / "rank_gap.csv" : fs::path(out_text);
  write_atomically(target, write_csv_table(table));
  out << text.str() << "wrote " << target.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diversity-regularized offline model-based optimization"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Sample a task and write an offline dataset");
  gen_cmd->add_option("--task", gen.task, "Task name (branin, gaussian-modes, seq-toy)")->required();
  gen_cmd->add_option("--n", gen.n, "Designs to sample before filtering");
  gen_cmd->add_option("--seed", gen.seed, "Sampler seed");
  gen_cmd->add_option("--ceiling", gen.ceiling, "Drop designs scoring above this quantile");
  gen_cmd->add_option("--sampler", gen.sampler, "sobol or gaussian");
  gen_cmd->add_option("--center", gen.center, "Gaussian sampler center, comma separated");
  gen_cmd->add_option("--sigma", gen.sigma, "Gaussian sampler std");
  gen_cmd->add_option("--out", gen.out, "Output path (default $DYNAMO_OUT_DIR/<task>.csv)");
  gen_cmd->add_option("--format", gen.format, "csv or json (default from extension)");

  auto* run_cmd = app.add_subcommand(
      "run",
      "Run the optimizer for every seed and sweep cell. Writes one JSON per run, a per-iteration "
      "CSV, aggregate.csv with mean and 95% CI (mean +/- 1.96 * sample std / sqrt(runs)), and "
      "plot-ready histogram CSVs. Flags override the config file, which overrides defaults.");
  std::string config_path;
  run_cmd->add_option("--config", config_path, "key = value config file");
  std::map<std::string, std::string> flag_values;
  std::vector<std::pair<std::string, CLI::Option*>> run_flags;
  const std::map<std::string, std::string> help = {
      {"task", "Task name"},
      {"optimizer", "grad, adam, cma-es, bo-qei, bo-qucb"},
      {"method", "dynamo or baseline"},
      {"beta", "Divergence weight (comma list sweeps)"},
      {"tau", "Temperature (comma list sweeps)"},
      {"w0", "Critic constraint bound"},
      {"divergence", "kl or mixed-chi2"},
      {"gamma", "Chi-squared weight for mixed-chi2"},
      {"b", "Batch size (comma list sweeps)"},
      {"k", "Evaluation budget (comma list sweeps)"},
      {"seeds", "Seeds, e.g. 0..9 or 0,4,7"},
      {"max-failures", "Consecutive failures before a restart"},
      {"max-restarts", "Restarts before termination"},
      {"max-iterations", "Iteration cap across all phases"},
      {"n", "Offline dataset size before filtering"},
      {"ceiling", "Dataset score ceiling quantile, or none"},
      {"data", "Load the offline dataset from this file"},
      {"data-seed", "Dataset generation seed (default: run seed)"},
      {"epochs", "Surrogate training epochs"},
      {"surrogate-lr", "Surrogate learning rate"},
      {"optimizer-steps", "First-order steps per acquisition"},
      {"lr", "First-order step size"},
      {"sigma-fraction", "CMA-ES initial step size as a fraction of the bound width"},
      {"beta-ucb", "qUCB exploration weight"},
      {"critic-steps", "Max critic steps per iteration"},
      {"critic-lr", "Critic learning rate"},
      {"pinned-lambda", "Fix lambda instead of solving for it"},
      {"out", "Output directory (default $DYNAMO_OUT_DIR or ./results)"},
      {"jobs", "Runs executed concurrently"},
  };
  for (const auto& [key, text] : help) {
    run_flags.emplace_back(key, run_cmd->add_option("--" + key, flag_values[key], text));
  }
  bool dynamo_flag = false, baseline_flag = false;
  auto* dyn_opt = run_cmd->add_flag("--dynamo", dynamo_flag, "Use the penalized objective (default)");
  auto* base_opt = run_cmd->add_flag("--baseline", baseline_flag, "Optimize the raw surrogate");
  dyn_opt->excludes(base_opt);

  auto* report_cmd = app.add_subcommand("report", "Rank and optimality-gap tables over result JSONs");
  std::string report_dir, report_out;
  report_cmd->add_option("--dir", report_dir, "Result directory")->required();
  report_cmd->add_option("--out", report_out, "CSV output path (default <dir>/rank_gap.csv)");

  app.add_subcommand("check", "Run the invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_data(gen, out);
    if (run_cmd->parsed()) {
      ExperimentSpec spec;
      try {
        if (!config_path.empty()) {
          for (const auto& [k, v] : read_key_values(config_path)) apply_setting(spec, k, v);
        }
        for (const auto& [key, opt] : run_flags) {
          if (opt->count() > 0) apply_setting(spec, key, flag_values[key]);
        }
        if (dynamo_flag) spec.base.method = Method::kDynamo;
        if (baseline_flag) spec.base.method = Method::kBaseline;
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      return cmd_run(spec, out, err);
    }
    if (report_cmd->parsed()) return cmd_report(report_dir, report_out, out);
    const int failures = run_checks(out);
    return failures == 0 ? kExitOk : kExitRuntime;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("dynamo");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace dynamo

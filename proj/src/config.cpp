#include "dynamo/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dynamo/error.hpp"

namespace dynamo {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw DomainError("setting '" + key + "': not a number: '" + text + "'");
  }
  return v;
}

long long to_int(const std::string& key, const std::string& text) {
  long long v = 0;
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw DomainError("setting '" + key + "': not an integer: '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw DomainError("setting '" + key + "': not a boolean: '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::string t = trim(text);
  if (!t.empty() && t.front() == '[' && t.back() == ']') t = t.substr(1, t.size() - 2);
  std::vector<std::string> out;
  std::stringstream in(t);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> int_list(const std::string& key, const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split_list(text)) out.push_back(static_cast<int>(to_int(key, item)));
  if (out.empty()) throw DomainError("setting '" + key + "': empty list");
  return out;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  const std::string t = trim(text);
  std::vector<std::uint64_t> out;
  const auto dots = t.find("..");
  if (dots != std::string::npos) {
    const long long a = to_int("seeds", t.substr(0, dots));
    const long long b = to_int("seeds", t.substr(dots + 2));
    if (a < 0 || b < a) throw DomainError("seeds: bad range '" + text + "'");
    for (long long s = a; s <= b; ++s) out.push_back(static_cast<std::uint64_t>(s));
  } else {
    for (const auto& item : split_list(t)) {
      const long long s = to_int("seeds", item);
      if (s < 0) throw DomainError("seeds must be nonnegative");
      out.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (out.empty()) throw DomainError("at least one seed is required");
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(to_double("list", item));
  if (out.empty()) throw DomainError("empty list");
  return out;
}

std::vector<int> parse_int_list(const std::string& text) { return int_list("list", text); }

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;  // blank or a TOML-style table header
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", row);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", row);
    out[key] = unquote(trim(line.substr(eq + 1)));
  }
  return out;
}

std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_key_values(buffer.str());
}

std::vector<std::string> known_setting_keys() {
  return {"task",          "optimizer",      "method",         "dynamo",        "baseline",
          "beta",          "tau",            "w0",             "divergence",    "gamma",
          "b",             "k",              "seeds",          "seed",          "max-failures",
          "max-restarts",  "max-iterations", "n",              "ceiling",       "data",
          "data-seed",     "epochs",         "surrogate-lr",   "optimizer-steps", "lr",
          "sigma-fraction", "beta-ucb",      "critic-steps",   "critic-lr",     "pinned-lambda",
          "out",           "jobs"};
}

void apply_setting(ExperimentSpec& spec, const std::string& raw_key, const std::string& value) {
  std::string key = raw_key;
  for (auto& c : key) {
    if (c == '_') c = '-';
  }
  RunConfig& c = spec.base;
  if (key == "task") {
    c.task = value;
  } else if (key == "optimizer") {
    c.optimizer.kind = optimizer_from_string(value);
  } else if (key == "method") {
    c.method = method_from_string(value);
  } else if (key == "dynamo") {
    if (to_bool(key, value)) c.method = Method::kDynamo;
  } else if (key == "baseline") {
    if (to_bool(key, value)) c.method = Method::kBaseline;
  } else if (key == "beta") {
    spec.betas = parse_double_list(value);
    c.penalty.beta = spec.betas.front();
  } else if (key == "tau") {
    spec.taus = parse_double_list(value);
    c.penalty.tau = spec.taus.front();
  } else if (key == "w0") {
    c.penalty.w0 = to_double(key, value);
  } else if (key == "divergence") {
    c.penalty.divergence = divergence_from_string(value);
  } else if (key == "gamma") {
    c.penalty.gamma = to_double(key, value);
  } else if (key == "b" || key == "batch-size") {
    spec.batch_sizes = int_list(key, value);
    c.batch_size = spec.batch_sizes.front();
  } else if (key == "k") {
    spec.ks = int_list(key, value);
    c.k = spec.ks.front();
  } else if (key == "seeds" || key == "seed") {
    spec.seeds = parse_seed_list(value);
  } else if (key == "max-failures") {
    c.max_failures = static_cast<int>(to_int(key, value));
  } else if (key == "max-restarts") {
    c.max_restarts = static_cast<int>(to_int(key, value));
  } else if (key == "max-iterations") {
    c.max_iterations = static_cast<int>(to_int(key, value));
  } else if (key == "n") {
    c.dataset_size = static_cast<int>(to_int(key, value));
  } else if (key == "ceiling") {
    const std::string t = trim(value);
    if (t == "none") {
      c.ceiling.reset();
    } else {
      c.ceiling = to_double(key, t);
    }
  } else if (key == "data") {
    c.dataset_path = value;
  } else if (key == "data-seed") {
    c.data_seed = static_cast<std::uint64_t>(to_int(key, value));
  } else if (key == "epochs") {
    c.surrogate.epochs = static_cast<int>(to_int(key, value));
  } else if (key == "surrogate-lr") {
    c.surrogate.learning_rate = to_double(key, value);
  } else if (key == "optimizer-steps") {
    c.optimizer.steps_per_acquisition = static_cast<int>(to_int(key, value));
  } else if (key == "lr") {
    c.optimizer.learning_rate = to_double(key, value);
  } else if (key == "sigma-fraction") {
    c.optimizer.cma_sigma_fraction = to_double(key, value);
  } else if (key == "beta-ucb") {
    c.optimizer.beta_ucb = to_double(key, value);
  } else if (key == "critic-steps") {
    c.critic.max_steps = static_cast<int>(to_int(key, value));
  } else if (key == "critic-lr") {
    c.critic.learning_rate = to_double(key, value);
  } else if (key == "pinned-lambda") {
    c.pinned_lambda = to_double(key, value);
  } else if (key == "out") {
    spec.out_dir = value;
  } else if (key == "jobs") {
    spec.jobs = static_cast<int>(to_int(key, value));
    if (spec.jobs < 1) throw DomainError("jobs must be >= 1");
  } else {
    throw DomainError("unknown setting '" + raw_key + "'");
  }
}

std::vector<SweepCell> expand_cells(const ExperimentSpec& spec) {
  const RunConfig& base = spec.base;
  const std::vector<double> betas = spec.betas.empty() ? std::vector<double>{base.penalty.beta} : spec.betas;
  const std::vector<double> taus = spec.taus.empty() ? std::vector<double>{base.penalty.tau} : spec.taus;
  const std::vector<int> bs = spec.batch_sizes.empty() ? std::vector<int>{base.batch_size} : spec.batch_sizes;
  const std::vector<int> ks = spec.ks.empty() ? std::vector<int>{base.k} : spec.ks;
  const std::string prefix = base.method == Method::kDynamo
                                 ? "dynamo-" + to_string(base.optimizer.kind)
                                 : to_string(base.optimizer.kind);
  std::vector<SweepCell> cells;
  for (double beta : betas) {
    for (double tau : taus) {
      for (int b : bs) {
        for (int k : ks) {
          SweepCell cell;
          cell.config = base;
          cell.config.penalty.beta = beta;
          cell.config.penalty.tau = tau;
          cell.config.batch_size = b;
          cell.config.k = k;
          std::string label = prefix;
          if (betas.size() > 1) label += "_beta" + format_double(beta);
          if (taus.size() > 1) label += "_tau" + format_double(tau);
          if (bs.size() > 1) label += "_b" + std::to_string(b);
          if (ks.size() > 1) label += "_k" + std::to_string(k);
          cell.label = label;
          cells.push_back(std::move(cell));
        }
      }
    }
  }
  return cells;
}

}  // namespace dynamo

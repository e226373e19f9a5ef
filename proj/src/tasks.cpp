#include "dynamo/tasks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "dynamo/error.hpp"
#include "dynamo/rng.hpp"
#include "dynamo/sobol.hpp"

namespace dynamo {

Task::Task(std::string name, Vector lower, Vector upper, OracleFn oracle, DesignKind kind,
           std::optional<Alphabet> alphabet)
    : name_(std::move(name)), lower_(std::move(lower)), upper_(std::move(upper)),
      oracle_(std::move(oracle)), kind_(kind), alphabet_(std::move(alphabet)),
      calls_(std::make_shared<std::atomic<std::uint64_t>>(0)) {}

double Task::evaluate(const Vector& x) const {
  if (x.size() != dim()) throw DomainError("task " + name_ + ": design dimension mismatch");
  calls_->fetch_add(1);
  return oracle_(x);
}

Vector Task::evaluate_batch(const Matrix& xs) const {
  Vector out(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) out[i] = evaluate(xs.row(i).transpose());
  return out;
}

void Task::add_secondary(std::string name, OracleFn fn) {
  secondaries_.emplace_back(std::move(name), std::move(fn));
}

double branin_max(const Vector& x) {
  if (x.size() != 2) throw DomainError("branin: expects a 2-vector");
  if (!(x[0] >= -5.0 && x[0] <= 10.0 && x[1] >= 0.0 && x[1] <= 15.0)) {
    throw DomainError("branin: design outside [-5,10] x [0,15]");
  }
  constexpr double pi = std::numbers::pi;
  const double a = 1.0, b = 5.1 / (4.0 * pi * pi), c = 5.0 / pi, r = 6.0, s = 10.0,
               t = 1.0 / (8.0 * pi);
  const double q = x[1] - b * x[0] * x[0] + c * x[0] - r;
  return -(a * q * q + s * (1.0 - t) * std::cos(x[0]) + s);
}

double gaussian_modes(const Vector& x, const std::vector<GaussianMode>& modes) {
  double total = 0.0;
  for (const auto& m : modes) {
    if (!(m.width > 0.0)) throw DomainError("gaussian_modes: widths must be positive");
    total += m.height * std::exp(-(x - m.center).squaredNorm() / (2.0 * m.width * m.width));
  }
  return total;
}

const std::vector<GaussianMode>& default_gaussian_modes() {
  static const std::vector<GaussianMode> modes = [] {
    std::vector<GaussianMode> m(3);
    m[0].center = Vector{{-2.0, -1.5}};
    m[1].center = Vector{{2.0, -1.5}};
    m[2].center = Vector{{0.0, 2.0}};
    for (auto& mode : m) {
      mode.height = 1.0;
      mode.width = 0.6;
    }
    return m;
  }();
  return modes;
}

namespace {

constexpr int kSeqLength = 8;
constexpr const char* kSeqMotif = "GAT";
constexpr double kMotifBonus = 1.5;

struct SeqToyTable {
  std::array<std::array<double, 4>, kSeqLength> pwm{};
  double min_raw = 0.0;
  double max_raw = 0.0;
};

double seq_raw(const SeqToyTable& t, const std::string& s) {
  const std::string& letters = seq_toy_alphabet().letters;
  double total = 0.0;
  for (int p = 0; p < kSeqLength; ++p) {
    const auto idx = letters.find(s[static_cast<std::size_t>(p)]);
    total += t.pwm[static_cast<std::size_t>(p)][idx];
  }
  const std::string motif = kSeqMotif;
  for (std::size_t p = 0; p + motif.size() <= s.size(); ++p) {
    if (s.compare(p, motif.size(), motif) == 0) total += kMotifBonus;
  }
  return total;
}

std::string index_to_sequence(int index) {
  const std::string& letters = seq_toy_alphabet().letters;
  std::string s(kSeqLength, 'A');
  for (int p = kSeqLength - 1; p >= 0; --p) {
    s[static_cast<std::size_t>(p)] = letters[static_cast<std::size_t>(index % 4)];
    index /= 4;
  }
  return s;
}

const SeqToyTable& seq_table() {
  static const SeqToyTable table = [] {
    SeqToyTable t;
    Rng rng(0x5e9);
    for (auto& row : t.pwm) {
      for (auto& v : row) v = rng.uniform();
    }
    t.min_raw = std::numeric_limits<double>::infinity();
    t.max_raw = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 1 << (2 * kSeqLength); ++i) {
      const double v = seq_raw(t, index_to_sequence(i));
      t.min_raw = std::min(t.min_raw, v);
      t.max_raw = std::max(t.max_raw, v);
    }
    return t;
  }();
  return table;
}

}  // namespace

const Alphabet& seq_toy_alphabet() {
  static const Alphabet alphabet{"ACGT", kSeqLength};
  return alphabet;
}

double seq_toy_sequence_score(const std::string& sequence) {
  if (sequence.size() != static_cast<std::size_t>(kSeqLength) ||
      sequence.find_first_not_of(seq_toy_alphabet().letters) != std::string::npos) {
    throw DomainError("seq-toy: expected a length-8 ACGT sequence");
  }
  const SeqToyTable& t = seq_table();
  return (seq_raw(t, sequence) - t.min_raw) / (t.max_raw - t.min_raw);
}

double seq_toy(const Vector& relaxed) {
  if (!relaxed.allFinite()) throw DomainError("seq-toy: non-finite design");
  return seq_toy_sequence_score(decode_relaxed(relaxed, seq_toy_alphabet()));
}

std::vector<std::string> task_names() { return {"branin", "gaussian-modes", "seq-toy"}; }

Task make_task(const std::string& name) {
  if (name == "branin") {
    return Task(name, Vector{{-5.0, 0.0}}, Vector{{10.0, 15.0}}, branin_max);
  }
  if (name == "gaussian-modes") {
    Task task(name, Vector::Constant(2, kDefaultLowerBound), Vector::Constant(2, kDefaultUpperBound),
              [](const Vector& x) { return gaussian_modes(x, default_gaussian_modes()); });
    task.add_secondary("distance-to-first-mode", [](const Vector& x) {
      return (x - default_gaussian_modes().front().center).norm();
    });
    return task;
  }
  if (name == "seq-toy") {
    const Alphabet& a = seq_toy_alphabet();
    return Task(name, Vector::Zero(a.design_width()), Vector::Ones(a.design_width()), seq_toy,
                DesignKind::kDiscreteRelaxed, a);
  }
  throw DomainError("unknown task '" + name + "'");
}

double quantile(Vector values, double q) {
  if (values.size() < 1) throw DomainError("quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<Eigen::Index>(std::floor(pos));
  const auto hi = std::min<Eigen::Index>(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

OfflineDataset generate_offline(const Task& task, int n, const Sampler& sampler,
                                std::optional<double> ceiling_quantile, std::uint64_t seed) {
  if (n < 2) throw PreconditionError("generate_offline: n must be >= 2");
  const int d = task.dim();
  const Vector& lo = task.lower_bound();
  const Vector& hi = task.upper_bound();
  Matrix designs;
  if (sampler.kind == Sampler::Kind::kSobol) {
    designs = sobol_init(d, n, lo, hi, seed);
  } else {
    if (sampler.center.size() != d) throw DomainError("gaussian sampler center dimension");
    if (!(sampler.sigma > 0.0)) throw DomainError("gaussian sampler sigma must be positive");
    Rng rng(derive_seed(seed, 0x9a));
    designs.resize(n, d);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) {
        designs(i, j) = std::clamp(sampler.center[j] + sampler.sigma * rng.normal(), lo[j], hi[j]);
      }
    }
  }
  if (task.kind() == DesignKind::kDiscreteRelaxed) {
    const Alphabet& a = *task.alphabet();
    for (int i = 0; i < n; ++i) {
      designs.row(i) = encode_one_hot(decode_relaxed(designs.row(i).transpose(), a), a).transpose();
    }
  }
  const Vector scores = task.evaluate_batch(designs);

  std::vector<Eigen::Index> keep;
  if (ceiling_quantile) {
    const double limit = quantile(scores, *ceiling_quantile);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (scores[i] <= limit) keep.push_back(i);
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) keep.push_back(i);
  }
  if (keep.size() < 2) {
    throw DegenerateDatasetError("score ceiling left fewer than 2 designs");
  }
  Matrix kept_designs(static_cast<Eigen::Index>(keep.size()), d);
  Vector kept_scores(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    kept_designs.row(static_cast<Eigen::Index>(r)) = designs.row(keep[r]);
    kept_scores[static_cast<Eigen::Index>(r)] = scores[keep[r]];
  }
  return OfflineDataset::create(std::move(kept_designs), std::move(kept_scores), lo, hi,
                                task.kind(), task.alphabet());
}

std::vector<Vector> secondary_eval(const Task& task, const Matrix& designs) {
  if (!task.has_secondaries()) {
    throw UnsupportedError("task " + task.name() + " has no secondary objectives");
  }
  std::vector<Vector> out;
  for (const auto& [name, fn] : task.secondaries()) {
    Vector v(designs.rows());
    for (Eigen::Index i = 0; i < designs.rows(); ++i) v[i] = fn(designs.row(i).transpose());
    out.push_back(std::move(v));
  }
  return out;
}

Vector secondary_stds(const Task& task, const Matrix& designs) {
  const std::vector<Vector> values = secondary_eval(task, designs);
  Vector stds(static_cast<Eigen::Index>(values.size()));
  for (std::size_t o = 0; o < values.size(); ++o) {
    const Vector& v = values[o];
    if (v.size() < 2) {
      stds[static_cast<Eigen::Index>(o)] = 0.0;
      continue;
    }
    const double mean = v.mean();
    stds[static_cast<Eigen::Index>(o)] =
        std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
  }
  return stds;
}

}  // namespace dynamo

// Acceptance suite: one PASS/FAIL line per criterion. Pass a criterion
// number to run only that one. Exit status is nonzero when any check fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>

#include "dynamo/duality.hpp"
#include "dynamo/error.hpp"
#include "dynamo/metrics.hpp"
#include "dynamo/runner.hpp"

using namespace dynamo;

namespace {

// Pinned tolerances.
constexpr double kConcavityTol = 1e-9;
constexpr double kLambdaGridTol = 1e-2;
constexpr double kFenchelTol = 1e-3;
constexpr double kGradRelTol = 1e-4;
constexpr double kFdStep = 1e-5;
constexpr double kCriticClip = 0.01;
constexpr double kBestSlack = 0.05;
constexpr double kModeRadiusWidths = 0.5;
constexpr double kMetricTol = 1e-12;
constexpr double kKlTol = 0.1;
constexpr double kKlMatchedTol = 0.05;
constexpr double kMixedTol = 1e-12;

struct Outcome {
  bool pass = true;
  std::string detail;
};

Vector uniform_vector(Rng& rng, int n, double lo, double hi) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

Matrix uniform_matrix(Rng& rng, int r, int c, double lo, double hi) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
  }
  return m;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Signs of every hidden pre-activation; a change between two inputs means a
// piecewise-linear net has a kink between them.
std::vector<bool> activation_pattern(const Mlp& net, const Vector& x) {
  std::vector<bool> out;
  Vector a = x;
  if (net.input_offset().size() == x.size()) a = (x - net.input_offset()).cwiseQuotient(net.input_scale());
  const auto& layers = net.layers();
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    Vector z = layers[l].weight * a + layers[l].bias;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      out.push_back(z[i] > 0.0);
      if (net.activation() == Activation::kTanh) z[i] = std::tanh(z[i]);
      else if (z[i] < 0.0) z[i] *= net.leaky_slope();
    }
    a = z;
  }
  return out;
}

int g_kink_retries = 0;

// Worst relative error of a central-difference gradient check. When the
// stencil straddles an activation kink of one of `nets` the difference
// quotient is not a derivative estimate, so the stencil shrinks to 1e-7.
double fd_rel_error(const std::function<double(const Vector&)>& f, const Vector& g, const Vector& x,
                    const std::vector<const Mlp*>& nets = {}) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double h = kFdStep;
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    bool kink = false;
    for (const Mlp* n : nets) kink = kink || activation_pattern(*n, xp) != activation_pattern(*n, xm);
    if (kink) {
      ++g_kink_retries;
      h = 1e-7;
      xp = x;
      xm = x;
      xp[j] += h;
      xm[j] -= h;
    }
    const double fd = (f(xp) - f(xm)) / (2.0 * h);
    const double scale = std::max({std::abs(fd), std::abs(g[j]), 1e-10});
    worst = std::max(worst, std::abs(fd - g[j]) / scale);
  }
  return worst;
}

RunConfig base_config(const std::string& task, OptimizerKind kind, Method method, std::uint64_t seed) {
  RunConfig c;
  c.task = task;
  c.optimizer.kind = kind;
  c.method = method;
  c.seed = seed;
  if (method == Method::kBaseline) c.penalty.beta = 0.0;
  return c;
}

Outcome dual_machinery() {
  Rng rng(101);
  int concave_fail = 0, grid_fail = 0, fenchel_fail = 0;
  double worst_grid = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int n = 20;
    const Vector c = uniform_vector(rng, n, -1.0, 1.0);
    PenaltyConfig cfg;
    cfg.beta = rng.uniform(0.01, 5.0);
    cfg.tau = rng.uniform(0.01, 5.0);
    cfg.w0 = rng.uniform(-0.3, 0.3);
    const auto tw = tau_weight(uniform_vector(rng, n, 0.0, 1.0), cfg.tau);
    const double h = 1e-3;
    for (int s = 0; s < 50; ++s) {
      const double lam = rng.uniform(h, 50.0);
      const double second = g_lower(lam + h, c, tw, cfg) - 2.0 * g_lower(lam, c, tw, cfg) + g_lower(lam - h, c, tw, cfg);
      if (second > kConcavityTol) ++concave_fail;
    }
    double best = 0.0, best_g = -1e300;
    for (int i = 0; i <= 50000; ++i) {
      const double g = g_lower(i * 1e-3, c, tw, cfg);
      if (g > best_g) {
        best_g = g;
        best = i * 1e-3;
      }
    }
    const auto sol = solve_lambda(c, tw, cfg);
    if (best < 50.0) {
      const double err = std::abs(sol.lambda_star - best);
      worst_grid = std::max(worst_grid, err);
      if (err >= kLambdaGridTol) ++grid_fail;
    } else if (sol.lambda_star < 50.0 - kLambdaGridTol) {
      ++grid_fail;
    }

    const double v = rng.uniform(-2.0, 3.0);
    double sup_kl = -1e300, sup_chi = -1e300;
    for (int i = 1; i <= 100000; ++i) {
      const double u = i * 1e-3;
      sup_kl = std::max(sup_kl, u * v - u * std::log(u));
    }
    for (int i = 0; i <= 40000; ++i) {
      const double u = -10.0 + i * 5e-4;
      sup_chi = std::max(sup_chi, u * v - 0.5 * (u - 1.0) * (u - 1.0));
    }
    if (std::abs(sup_kl - fenchel_kl(v)) >= kFenchelTol || std::abs(sup_chi - fenchel_chi2(v)) >= kFenchelTol) {
      ++fenchel_fail;
    }
  }
  return {concave_fail == 0 && grid_fail == 0 && fenchel_fail == 0,
          "200 instances; concavity violations " + std::to_string(concave_fail) + ", grid mismatches " +
              std::to_string(grid_fail) + " (worst " + fmt(worst_grid) + "), conjugate mismatches " +
              std::to_string(fenchel_fail)};
}

Outcome gradient_integrity() {
  Rng rng(202);
  g_kink_retries = 0;
  double worst_s = 0.0, worst_c = 0.0, worst_k = 0.0, worst_p = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Mlp surrogate = Mlp::uniform_init({3, 64, 64, 1}, Activation::kLeakyRelu, 1000 + t);
    const Vector x = uniform_vector(rng, 3, -2, 2);
    worst_s = std::max(worst_s, fd_rel_error([&](const Vector& z) { return surrogate.forward(z); },
                                             surrogate.grad_input(x), x, {&surrogate}));

    const Critic critic = make_critic(3, CriticArchitecture{}, 2000 + t);
    worst_c = std::max(worst_c, fd_rel_error([&](const Vector& z) { return critic(z); },
                                             critic.net.grad_input(x), x, {&critic.net}));

    const auto kde = fit_kde(uniform_matrix(rng, 30, 3, -2, 2));
    worst_k = std::max(worst_k, fd_rel_error([&](const Vector& z) { return kde.log_density(z); },
                                             kde.grad_log_density(x), x));
  }
  for (int t = 0; t < 100; ++t) {
    const Matrix data = uniform_matrix(rng, 60, 2, -3, 3);
    const auto tw = tau_weight(uniform_vector(rng, 60, 0, 1), 1.0);
    PenaltyConfig cfg;
    cfg.beta = rng.uniform(0.1, 3.0);
    if (t % 2) cfg.divergence = Divergence::kMixedChi2;
    PenalizedObjective obj(std::make_shared<Mlp>(Mlp::uniform_init({2, 32, 32, 1}, Activation::kLeakyRelu, 3000 + t)),
                           cfg, Vector::Constant(2, -4.0), Vector::Constant(2, 4.0));
    obj.set_reference_density(fit_kde(data, tw.weights, BandwidthRule::silverman()));
    obj.set_batch_density(fit_kde(uniform_matrix(rng, 16, 2, -1, 1)));
    obj.set_critic(make_critic(2, CriticArchitecture{}, 4000 + t), data, tw);
    obj.set_lambda(rng.uniform(0.0, 100.0));
    const Vector x = uniform_vector(rng, 2, -3.5, 3.5);
    worst_p = std::max(worst_p, fd_rel_error([&](const Vector& z) { return obj.score(z); }, obj.score_grad(x), x,
                                             {&obj.surrogate(), &obj.critic()->net}));
  }
  const bool pass = worst_s < kGradRelTol && worst_c < kGradRelTol && worst_k < kGradRelTol && worst_p < kGradRelTol;
  return {pass, "worst relative error: surrogate " + fmt(worst_s) + ", critic " + fmt(worst_c) + ", KDE " +
                    fmt(worst_k) + ", penalized score " + fmt(worst_p) +
                    "; stencils shrunk at kinks " + std::to_string(g_kink_retries)};
}

Outcome critic_contract() {
  Rng rng(303);
  double worst_norm = 0.0;
  int drops = 0;
  for (int t = 0; t < 50; ++t) {
    const int d = 1 + t % 4;
    Critic critic = make_critic(d, CriticArchitecture{}, 5000 + t);
    const Matrix real = uniform_matrix(rng, 40, d, -2, 2);
    const Vector w = tau_weight(uniform_vector(rng, 40, 0, 1), rng.uniform(0, 5)).weights;
    const Matrix fake = uniform_matrix(rng, 16, d, -1, 3);
    CriticOptions opts;
    opts.learning_rate = rng.uniform(0.001, 1.0);
    opts.tolerance = t % 3 == 0 ? 0.0 : 1e-6;
    for (int call = 0; call < 3; ++call) {
      const auto trace = train_critic(critic, real, w, fake, opts);
      for (double m : trace.max_abs_param) worst_norm = std::max(worst_norm, m);
      worst_norm = std::max(worst_norm, critic.net.max_abs_parameter());
      for (std::size_t i = 1; i < trace.best_w.size(); ++i) drops += trace.best_w[i] < trace.best_w[i - 1];
    }
  }
  return {worst_norm <= kCriticClip && drops == 0,
          "150 calls; max |param| " + fmt(worst_norm) + ", best-W decreases " + std::to_string(drops)};
}

Outcome diversity_collapse() {
  int pd_wins = 0, best_ok = 0;
  std::ostringstream pds;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto base = run(base_config("branin", OptimizerKind::kCmaEs, Method::kBaseline, seed));
    const auto dyn = run(base_config("branin", OptimizerKind::kCmaEs, Method::kDynamo, seed));
    pd_wins += dyn.metrics.pairwise_diversity > base.metrics.pairwise_diversity;
    best_ok += dyn.metrics.best_at_k >= base.metrics.best_at_k - kBestSlack;
    pds << ' ' << fmt(dyn.metrics.pairwise_diversity) << '/' << fmt(base.metrics.pairwise_diversity);
  }
  return {pd_wins >= 8 && best_ok >= 7, "PD higher on " + std::to_string(pd_wins) + "/10, Best@128 within 0.05 on " +
                                            std::to_string(best_ok) + "/10; PD dynamo/baseline:" + pds.str()};
}

int modes_covered(const Matrix& designs) {
  const auto& modes = default_gaussian_modes();
  int covered = 0;
  for (const auto& m : modes) {
    const double radius = kModeRadiusWidths * m.width;
    bool hit = false;
    for (Eigen::Index i = 0; i < designs.rows() && !hit; ++i) {
      hit = (designs.row(i).transpose() - m.center).norm() <= radius;
    }
    covered += hit;
  }
  return covered;
}

Outcome mode_coverage() {
  int dyn_ok = 0, base_ok = 0;
  std::ostringstream counts;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto dyn = run(base_config("gaussian-modes", OptimizerKind::kAdam, Method::kDynamo, seed));
    const auto base = run(base_config("gaussian-modes", OptimizerKind::kAdam, Method::kBaseline, seed));
    const int cd = modes_covered(dyn.top_k.candidates.designs);
    const int cb = modes_covered(base.top_k.candidates.designs);
    dyn_ok += cd >= 2;
    base_ok += cb == 1;
    counts << ' ' << cd << '/' << cb;
  }
  return {dyn_ok >= 8 && base_ok >= 8, "DynAMO >= 2 modes on " + std::to_string(dyn_ok) + "/10, baseline exactly 1 on " +
                                           std::to_string(base_ok) + "/10; modes dynamo/baseline:" + counts.str()};
}

double mean_pd(double beta, double tau) {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RunConfig c = base_config("gaussian-modes", OptimizerKind::kAdam, Method::kDynamo, seed);
    c.penalty.beta = beta;
    c.penalty.tau = tau;
    total += run(c).metrics.pairwise_diversity;
  }
  return total / 10.0;
}

Outcome ablation_trends() {
  const std::vector<double> betas{0.01, 0.1, 1.0, 10.0, 100.0};
  std::vector<double> pd;
  std::ostringstream text;
  text << "mean PD over beta:";
  for (double b : betas) {
    pd.push_back(mean_pd(b, 1.0));
    text << ' ' << fmt(pd.back());
  }
  int inversions = 0;
  for (std::size_t i = 1; i < pd.size(); ++i) inversions += pd[i] < pd[i - 1];
  const double low_tau = mean_pd(1.0, 0.01);
  const double high_tau = mean_pd(1.0, 100.0);
  text << "; inversions " << inversions << "; tau 0.01 -> " << fmt(low_tau) << ", tau 100 -> " << fmt(high_tau);
  return {inversions <= 1 && high_tau < low_tau, text.str()};
}

class StuckBackbone final : public Backbone {
 public:
  std::string name() const override { return "stuck"; }
  void restart(const Matrix& init, const Vector&, std::uint64_t) override { init_ = init; }
  Matrix acquire(const ScoreFunction&, const Matrix&, const Vector&) override { return init_; }

 private:
  Matrix init_;
};

Outcome protocol_conformance() {
  RunConfig c = base_config("branin", OptimizerKind::kAdam, Method::kBaseline, 0);
  const Task task = make_task(c.task);
  const auto ds = make_dataset(c, task);
  task.reset_oracle_calls();
  const auto r = run(c, task, ds, [](const RunConfig&, const Vector&, const Vector&) -> std::unique_ptr<Backbone> {
    return std::make_unique<StuckBackbone>();
  });
  bool per_phase = true;
  std::ostringstream text;
  text << "failures per phase:";
  for (int phase = 0; phase <= r.restarts; ++phase) {
    int f = 0;
    for (const auto& it : r.log) f += it.restart == phase && it.failure;
    per_phase = per_phase && f == c.max_failures;
    text << ' ' << f;
  }
  const std::uint64_t stuck_calls = task.oracle_calls();

  RunConfig d = base_config("branin", OptimizerKind::kCmaEs, Method::kDynamo, 1);
  const auto ds2 = make_dataset(d, task);
  task.reset_oracle_calls();
  run(d, task, ds2);
  const std::uint64_t dyn_calls = task.oracle_calls();
  text << "; restarts " << r.restarts << "; oracle calls " << stuck_calls << " and " << dyn_calls << " (k=" << c.k << ")";
  const bool pass = per_phase && r.restarts == 3 && !r.hit_iteration_cap &&
                    stuck_calls == static_cast<std::uint64_t>(c.k) && dyn_calls == static_cast<std::uint64_t>(d.k);
  return {pass, text.str()};
}

Outcome metric_equivalence() {
  Rng rng(808);
  double worst = 0.0;
  int lev_mismatch = 0;
  auto edit = [](const std::string& a, const std::string& b) {
    std::vector<std::vector<int>> t(a.size() + 1, std::vector<int>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) t[i][0] = static_cast<int>(i);
    for (std::size_t j = 0; j <= b.size(); ++j) t[0][j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
      for (std::size_t j = 1; j <= b.size(); ++j) {
        t[i][j] = std::min({t[i - 1][j] + 1, t[i][j - 1] + 1, t[i - 1][j - 1] + (a[i - 1] != b[j - 1])});
      }
    }
    return static_cast<double>(t[a.size()][b.size()]) / static_cast<double>(std::max(a.size(), b.size()));
  };
  for (int t = 0; t < 100; ++t) {
    const int k = 2 + t % 9, d = 1 + t % 4;
    const Matrix x = uniform_matrix(rng, k, d, -4, 4);
    const Matrix ref = uniform_matrix(rng, 5 + t % 7, d, -4, 4);
    double pd = 0.0, mn = 0.0, l1 = 0.0;
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) pd += i == j ? 0.0 : (x.row(i) - x.row(j)).norm();
      double nearest = 1e300;
      for (int r = 0; r < ref.rows(); ++r) nearest = std::min(nearest, (x.row(i) - ref.row(r)).norm());
      mn += nearest;
    }
    for (int j = 0; j < d; ++j) {
      double range = 0.0;
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) range = std::max(range, std::abs(x(a, j) - x(b, j)));
      }
      l1 += range;
    }
    pd /= k * (k - 1.0);
    mn /= k;
    l1 /= d;
    const Vector s = uniform_vector(rng, k, 0, 1);
    std::vector<double> sorted(s.data(), s.data() + k);
    std::sort(sorted.begin(), sorted.end());
    worst = std::max({worst, std::abs(pairwise_diversity(x) - pd), std::abs(minimum_novelty(x, ref) - mn),
                      std::abs(l1_coverage(x) - l1), std::abs(best_at_k(s) - sorted.back()),
                      std::abs(median_at_k(s) - sorted[static_cast<std::size_t>((k - 1) / 2)])});

    std::string a, b;
    const int la = 1 + t % 8, lb = 1 + (t * 7) % 9;
    for (int i = 0; i < la; ++i) a.push_back("ACGT"[static_cast<int>(rng.uniform(0, 4))]);
    for (int i = 0; i < lb; ++i) b.push_back("ACGT"[static_cast<int>(rng.uniform(0, 4))]);
    lev_mismatch += levenshtein_norm(a, b) != edit(a, b);
  }
  return {worst <= kMetricTol && lev_mismatch == 0,
          "100 instances; worst absolute deviation " + fmt(worst) + ", Levenshtein mismatches " + std::to_string(lev_mismatch)};
}

Matrix normal_samples(Rng& rng, int n, double mean) {
  Matrix x(n, 1);
  for (int i = 0; i < n; ++i) x(i, 0) = mean + rng.normal();
  return x;
}

Outcome kl_calibration() {
  Rng rng(909);
  const Matrix p = normal_samples(rng, 5000, 0.0);
  const Matrix q = normal_samples(rng, 5000, 1.0);
  const Matrix p2 = normal_samples(rng, 5000, 0.0);
  const auto p_kde = fit_kde(p);
  const double shifted = kl_estimate(q, p_kde, fit_kde(q));
  const double matched = kl_estimate(p2, p_kde, fit_kde(p2));
  return {std::abs(shifted - 0.5) < kKlTol && std::abs(matched) < kKlMatchedTol,
          "KL(N(1,1)||N(0,1)) estimate " + fmt(shifted) + ", matched " + fmt(matched)};
}

// Records every batch a backbone proposes.
BackboneFactory recording_factory(std::vector<Matrix>* batches) {
  class Recorder final : public Backbone {
   public:
    Recorder(std::unique_ptr<Backbone> inner, std::vector<Matrix>* out) : inner_(std::move(inner)), out_(out) {}
    std::string name() const override { return inner_->name(); }
    void restart(const Matrix& init, const Vector& s, std::uint64_t seed) override {
      out_->push_back(init);
      inner_->restart(init, s, seed);
    }
    Matrix acquire(const ScoreFunction& fn, const Matrix& h, const Vector& hs) override {
      out_->push_back(inner_->acquire(fn, h, hs));
      return out_->back();
    }

   private:
    std::unique_ptr<Backbone> inner_;
    std::vector<Matrix>* out_;
  };
  return [batches](const RunConfig& c, const Vector& lo, const Vector& hi) -> std::unique_ptr<Backbone> {
    return std::make_unique<Recorder>(make_backbone(c.optimizer, c.batch_size, lo, hi), batches);
  };
}

Outcome reduction_identity() {
  std::ostringstream text;
  bool pass = true;
  for (const auto kind : {OptimizerKind::kGrad, OptimizerKind::kAdam, OptimizerKind::kCmaEs,
                          OptimizerKind::kBoQei, OptimizerKind::kBoQucb}) {
    RunConfig dyn = base_config("branin", kind, Method::kDynamo, 5);
    dyn.penalty.beta = 0.0;
    dyn.pinned_lambda = 0.0;
    RunConfig base = base_config("branin", kind, Method::kBaseline, 5);
    if (kind == OptimizerKind::kBoQei || kind == OptimizerKind::kBoQucb) {
      dyn.max_iterations = base.max_iterations = 12;
    }
    const Task task = make_task("branin");
    const auto ds = make_dataset(base, task);
    std::vector<Matrix> a, b;
    const auto ra = run(dyn, task, ds, recording_factory(&a));
    const auto rb = run(base, task, ds, recording_factory(&b));
    const bool same = a == b && ra.top_k.candidates.designs == rb.top_k.candidates.designs &&
                      ra.top_k.penalized_scores == rb.top_k.penalized_scores;
    pass = pass && same && !a.empty();
    text << ' ' << to_string(kind) << (same ? " identical" : " DIFFERS") << " (" << a.size() << " batches)";
  }
  return {pass, "trajectories:" + text.str()};
}

Outcome mixed_path() {
  Rng rng(1111);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int n = 25;
    const Vector c = uniform_vector(rng, n, -1.0, 1.0);
    PenaltyConfig kl;
    kl.beta = rng.uniform(0.01, 5.0);
    kl.w0 = rng.uniform(-0.3, 0.3);
    PenaltyConfig mixed = kl;
    mixed.divergence = Divergence::kMixedChi2;
    mixed.gamma = 1.0;
    const auto tw = tau_weight(uniform_vector(rng, n, 0, 1), rng.uniform(0, 5));
    const double lam = rng.uniform(0, 10);
    double ec = 0.0, echi = 0.0;
    for (int i = 0; i < n; ++i) {
      ec += tw.weights[i] * c[i];
      echi += tw.weights[i] * (lam * c[i] + 0.5 * lam * c[i] * lam * c[i]);
    }
    const double gamma_term = kl.beta * mixed.gamma * (lam * (ec - kl.w0) - echi);
    worst = std::max(worst, std::abs(g_lower(lam, c, tw, mixed) - g_lower(lam, c, tw, kl) - gamma_term));
  }
  RunConfig c = base_config("branin", OptimizerKind::kAdam, Method::kDynamo, 0);
  c.penalty.divergence = Divergence::kMixedChi2;
  std::string run_status = "completed";
  bool ran = true;
  try {
    const auto r = run(c);
    run_status += " (" + std::to_string(r.iterations) + " iterations, Best@128 " + fmt(r.metrics.best_at_k) + ")";
  } catch (const std::exception& e) {
    ran = false;
    run_status = std::string("failed: ") + e.what();
  }
  return {worst <= kMixedTol && ran, "worst gamma-term deviation " + fmt(worst) + "; mixed-chi2 Branin run " + run_status};
}

struct Criterion {
  const char* name;
  Outcome (*fn)();
};

const Criterion kCriteria[] = {
    {"dual machinery", dual_machinery},
    {"gradient integrity", gradient_integrity},
    {"critic contract", critic_contract},
    {"diversity collapse on Branin", diversity_collapse},
    {"mode coverage", mode_coverage},
    {"beta/tau ablation trends", ablation_trends},
    {"protocol conformance", protocol_conformance},
    {"metric oracle equivalence", metric_equivalence},
    {"KL estimator calibration", kl_calibration},
    {"reduction identity", reduction_identity},
    {"mixed chi-squared path", mixed_path},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  const int count = static_cast<int>(std::size(kCriteria));
  if (only < 0 || only > count) {
    std::cerr << "usage: acceptance [1-" << count << "]\n";
    return 2;
  }
  int failures = 0;
  for (int i = 1; i <= count; ++i) {
    if (only != 0 && i != only) continue;
    const auto started = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = kCriteria[i - 1].fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i << " (" << kCriteria[i - 1].name << ", "
              << fmt(secs) << " s): " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}

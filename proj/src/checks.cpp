#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "dynamo/cli.hpp"
#include "dynamo/density.hpp"
#include "dynamo/duality.hpp"
#include "dynamo/error.hpp"
#include "dynamo/metrics.hpp"
#include "dynamo/neural.hpp"
#include "dynamo/rng.hpp"
#include "dynamo/sobol.hpp"
#include "dynamo/tasks.hpp"

namespace dynamo {

namespace {

using Check = std::pair<std::string, std::function<bool()>>;

Vector random_vector(Rng& rng, int n, double lo, double hi) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

std::vector<Check> checks() {
  std::vector<Check> out;
  out.emplace_back("tau weights sum to one", [] {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
      const Vector y = random_vector(rng, 20, 0.0, 1.0);
      const TauWeights tw = tau_weight(y, rng.uniform(0.0, 50.0));
      if (std::abs(tw.weights.sum() - 1.0) > 1e-12 || (tw.weights.array() < 0.0).any()) return false;
    }
    return true;
  });
  out.emplace_back("dual lower bound is concave", [] {
    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
      const Vector c = random_vector(rng, 16, -0.05, 0.05);
      const TauWeights tw = tau_weight(random_vector(rng, 16, 0.0, 1.0), 1.0);
      PenaltyConfig cfg;
      cfg.beta = rng.uniform(0.1, 5.0);
      const double h = 1e-2;
      for (double lam = h; lam < 20.0; lam += 0.5) {
        const double second = g_lower(lam + h, c, tw, cfg) - 2.0 * g_lower(lam, c, tw, cfg) +
                              g_lower(lam - h, c, tw, cfg);
        if (second > 1e-9) return false;
      }
    }
    return true;
  });
  out.emplace_back("dual solver trace is nondecreasing", [] {
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
      const Vector c = random_vector(rng, 16, -0.5, 0.5);
      const TauWeights tw = tau_weight(random_vector(rng, 16, 0.0, 1.0), 1.0);
      const DualSolution sol = solve_lambda(c, tw, PenaltyConfig{});
      for (std::size_t i = 1; i < sol.trace.size(); ++i) {
        if (sol.trace[i].second < sol.trace[i - 1].second) return false;
      }
      if (sol.lambda_star < 0.0) return false;
    }
    return true;
  });
  out.emplace_back("sobol points stay in bounds", [] {
    const Matrix x = sobol_init(3, 256, Vector::Constant(3, -4.0), Vector::Constant(3, 4.0), 7);
    return (x.array() >= -4.0).all() && (x.array() < 4.0).all();
  });
  out.emplace_back("critic parameters stay in the clip box", [] {
    Rng rng(4);
    Matrix real(40, 2), fake(16, 2);
    for (int i = 0; i < 40; ++i) real.row(i) = random_vector(rng, 2, -1.0, 1.0).transpose();
    for (int i = 0; i < 16; ++i) fake.row(i) = random_vector(rng, 2, 1.0, 3.0).transpose();
    Critic critic = make_critic(2, CriticArchitecture{}, 5);
    CriticOptions opts;
    opts.max_steps = 50;
    train_critic(critic, real, Vector::Constant(40, 1.0 / 40.0), fake, opts);
    return critic.net.max_abs_parameter() <= critic.clip_bound;
  });
  out.emplace_back("pairwise diversity is permutation invariant", [] {
    Rng rng(6);
    Matrix x(12, 3);
    for (int i = 0; i < 12; ++i) x.row(i) = random_vector(rng, 3, -1.0, 1.0).transpose();
    const Matrix rev = x.colwise().reverse();
    return std::abs(pairwise_diversity(x) - pairwise_diversity(rev)) < 1e-12;
  });
  out.emplace_back("levenshtein triangle inequality", [] {
    Rng rng(7);
    auto word = [&] {
      std::string s(rng.below(6) + 1, 'A');
      for (auto& ch : s) ch = "ACGT"[rng.below(4)];
      return s;
    };
    for (int t = 0; t < 200; ++t) {
      const std::string a = word(), b = word(), c = word();
      if (levenshtein(a, c) > levenshtein(a, b) + levenshtein(b, c)) return false;
      if (levenshtein(a, b) != levenshtein(b, a)) return false;
    }
    return true;
  });
  out.emplace_back("kde log density integrates to one (1-D)", [] {
    Matrix pts(3, 1);
    pts << -1.0, 0.0, 2.0;
    const KdeModel kde = fit_kde(pts, BandwidthRule::fixed(0.5));
    double total = 0.0;
    const double h = 1e-3;
    for (double x = -8.0; x < 10.0; x += h) total += std::exp(kde.log_density(Vector::Constant(1, x))) * h;
    return std::abs(total - 1.0) < 1e-6;
  });
  out.emplace_back("branin maxima agree", [] {
    const double pi = 3.14159265358979323846;
    const double a = branin_max(Vector{{-pi, 12.275}});
    const double b = branin_max(Vector{{pi, 2.275}});
    const double c = branin_max(Vector{{9.42478, 2.475}});
    return std::abs(a - b) < 1e-4 && std::abs(b - c) < 1e-4;
  });
  return out;
}

}  // namespace

int run_checks(std::ostream& out) {
  int failures = 0;
  for (const auto& [name, fn] : checks()) {
    bool ok = false;
    std::string detail;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      detail = std::string(" (") + e.what() + ")";
    }
    out << (ok ? "PASS " : "FAIL ") << name << detail << '\n';
    if (!ok) ++failures;
  }
  return failures;
}

}  // namespace dynamo

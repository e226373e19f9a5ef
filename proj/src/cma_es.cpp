#include "dynamo/cma_es.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dynamo/error.hpp"

namespace dynamo {

int cma_default_population(int d) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(d))));
}

CmaState cma_init(const Vector& mean, double sigma, int lambda) {
  const int n = static_cast<int>(mean.size());
  if (n < 1) throw DomainError("cma_init: empty mean");
  if (!(sigma > 0.0)) throw DomainError("cma_init: sigma must be positive");
  CmaState s;
  s.mean = mean;
  s.sigma = sigma;
  s.cov = Matrix::Identity(n, n);
  s.eig_vectors = Matrix::Identity(n, n);
  s.eig_sqrt = Vector::Ones(n);
  s.path_sigma = Vector::Zero(n);
  s.path_c = Vector::Zero(n);
  s.lambda = lambda > 0 ? lambda : cma_default_population(n);
  if (s.lambda < 2) s.lambda = 2;
  s.mu = s.lambda / 2;

  const double dn = static_cast<double>(n);
  s.weights.resize(s.mu);
  for (int i = 0; i < s.mu; ++i) {
    s.weights[i] = std::log((static_cast<double>(s.lambda) + 1.0) / 2.0) - std::log(i + 1.0);
  }
  s.weights /= s.weights.sum();
  s.mueff = 1.0 / s.weights.squaredNorm();

  s.cc = (4.0 + s.mueff / dn) / (dn + 4.0 + 2.0 * s.mueff / dn);
  s.cs = (s.mueff + 2.0) / (dn + s.mueff + 5.0);
  s.c1 = 2.0 / ((dn + 1.3) * (dn + 1.3) + s.mueff);
  s.cmu = std::min(1.0 - s.c1, 2.0 * (s.mueff - 2.0 + 1.0 / s.mueff) /
                                   ((dn + 2.0) * (dn + 2.0) + s.mueff));
  s.damps = 1.0 + 2.0 * std::max(0.0, std::sqrt((s.mueff - 1.0) / (dn + 1.0)) - 1.0) + s.cs;
  s.chi_n = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));
  return s;
}

double reflect_into(double x, double lo, double hi) {
  const double width = hi - lo;
  double t = std::fmod(x - lo, 2.0 * width);
  if (t < 0.0) t += 2.0 * width;
  const double y = t <= width ? lo + t : hi - (t - width);
  return std::clamp(y, lo, hi);
}

namespace {

void decompose(CmaState& s) {
  s.cov = 0.5 * (s.cov + s.cov.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s.cov);
  Vector values = eig.eigenvalues();
  bool repaired = false;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!(values[i] >= kCmaEigenFloor)) {
      values[i] = kCmaEigenFloor;
      repaired = true;
    }
  }
  s.eig_vectors = eig.eigenvectors();
  s.eig_sqrt = values.cwiseSqrt();
  if (repaired) {
    ++s.repairs;
    s.cov = s.eig_vectors * values.asDiagonal() * s.eig_vectors.transpose();
  }
}

}  // namespace

CmaStepResult cma_step(CmaState& s, const std::function<double(const Vector&)>& score,
                       const Vector& lower, const Vector& upper, Rng& rng) {
  const int n = s.dim();
  if (lower.size() != n || upper.size() != n) throw DomainError("cma_step: bounds dimension");
  if (!(s.sigma > 0.0)) throw DomainError("cma_step: sigma must be positive");

  CmaStepResult out;
  out.population.resize(s.lambda, n);
  out.scores.resize(s.lambda);
  Matrix steps(s.lambda, n);  // y = (x - m) / sigma after reflection
  for (int k = 0; k < s.lambda; ++k) {
    Vector z(n);
    for (int j = 0; j < n; ++j) z[j] = rng.normal();
    Vector x = s.mean + s.sigma * (s.eig_vectors * s.eig_sqrt.cwiseProduct(z));
    for (int j = 0; j < n; ++j) x[j] = reflect_into(x[j], lower[j], upper[j]);
    out.population.row(k) = x.transpose();
    steps.row(k) = ((x - s.mean) / s.sigma).transpose();
  }
  for (int k = 0; k < s.lambda; ++k) {
    const double v = score(out.population.row(k).transpose());
    if (std::isnan(v)) throw NumericError("NaN score in CMA-ES population row " + std::to_string(k));
    out.scores[k] = v;
  }

  std::vector<int> order(static_cast<std::size_t>(s.lambda));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return out.scores[a] > out.scores[b]; });

  Vector y_w = Vector::Zero(n);
  for (int i = 0; i < s.mu; ++i) y_w += s.weights[i] * steps.row(order[static_cast<std::size_t>(i)]).transpose();
  s.mean += s.sigma * y_w;

  // C^{-1/2} y_w
  const Vector inv_sqrt_y = s.eig_vectors * (s.eig_vectors.transpose() * y_w).cwiseQuotient(s.eig_sqrt);
  s.path_sigma = (1.0 - s.cs) * s.path_sigma +
                 std::sqrt(s.cs * (2.0 - s.cs) * s.mueff) * inv_sqrt_y;
  ++s.generation;
  const double dn = static_cast<double>(n);
  const double ps_norm = s.path_sigma.norm();
  const double hsig_bound =
      (1.4 + 2.0 / (dn + 1.0)) * s.chi_n *
      std::sqrt(1.0 - std::pow(1.0 - s.cs, 2.0 * static_cast<double>(s.generation)));
  const double hsig = ps_norm < hsig_bound ? 1.0 : 0.0;
  s.path_c = (1.0 - s.cc) * s.path_c + hsig * std::sqrt(s.cc * (2.0 - s.cc) * s.mueff) * y_w;

  Matrix rank_mu = Matrix::Zero(n, n);
  for (int i = 0; i < s.mu; ++i) {
    const Vector y = steps.row(order[static_cast<std::size_t>(i)]).transpose();
    rank_mu += s.weights[i] * y * y.transpose();
  }
  const double delta_h = (1.0 - hsig) * s.cc * (2.0 - s.cc);
  s.cov = (1.0 - s.c1 - s.cmu) * s.cov +
          s.c1 * (s.path_c * s.path_c.transpose() + delta_h * s.cov) + s.cmu * rank_mu;

  s.sigma *= std::exp((s.cs / s.damps) * (ps_norm / s.chi_n - 1.0));
  if (!std::isfinite(s.sigma) || !(s.sigma > 0.0)) {
    throw NumericError("CMA-ES step size left (0, inf)");
  }
  s.sigma = std::max(s.sigma, 1e-300);
  decompose(s);
  return out;
}

}  // namespace dynamo

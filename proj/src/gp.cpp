#include "dynamo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dynamo/error.hpp"
#include "dynamo/rng.hpp"
#include "dynamo/sobol.hpp"

namespace dynamo {

double GpModel::kernel(const Vector& a, const Vector& b) const {
  return signal_variance *
         std::exp(-0.5 * (a - b).cwiseQuotient(lengthscales).squaredNorm());
}

namespace {

// Solves L^T x = b for lower-triangular L.
template <typename Rhs>
Matrix solve_lt(const Matrix& l, const Rhs& b) {
  return l.transpose().triangularView<Eigen::Upper>().solve(b);
}

Matrix kernel_matrix(const Matrix& x, const Vector& ls, double s2) {
  const auto n = x.rows();
  const Matrix xs = x.array().rowwise() / ls.transpose().array();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = s2;
    for (Eigen::Index j = 0; j < i; ++j) {
      k(i, j) = k(j, i) = s2 * std::exp(-0.5 * (xs.row(i) - xs.row(j)).squaredNorm());
    }
  }
  return k;
}

// Cholesky of k + noise I with escalating jitter.
Matrix robust_cholesky(const Matrix& k, double noise, double scale, double* jitter_used) {
  double jitter = 0.0;
  for (int attempt = 0; attempt < 10; ++attempt) {
    Matrix a = k;
    a.diagonal().array() += noise + jitter;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() == Eigen::Success) {
      const Matrix l = llt.matrixL();
      if (l.diagonal().minCoeff() > 0.0 && l.allFinite()) {
        if (jitter_used) *jitter_used = jitter;
        return l;
      }
    }
    jitter = jitter == 0.0 ? 1e-10 * scale : jitter * 10.0;
  }
  throw IllConditionedError("GP kernel matrix is not positive definite after max jitter");
}

GpModel condition(const Matrix& inputs, const Vector& targets, double target_mean,
                  const Vector& ls, double s2, double noise) {
  GpModel m;
  m.inputs = inputs;
  m.targets = targets;
  m.target_mean = target_mean;
  m.lengthscales = ls;
  m.signal_variance = s2;
  m.noise_variance = noise;
  const Matrix k = kernel_matrix(inputs, ls, s2);
  m.cholesky_lower = robust_cholesky(k, noise, s2, &m.jitter);
  const Vector centered = targets.array() - target_mean;
  m.alpha = solve_lt(m.cholesky_lower, m.cholesky_lower.triangularView<Eigen::Lower>().solve(centered));
  const double n = static_cast<double>(inputs.rows());
  m.log_marginal_likelihood = -0.5 * centered.dot(m.alpha) -
                              m.cholesky_lower.diagonal().array().log().sum() -
                              0.5 * n * std::log(2.0 * std::numbers::pi);
  return m;
}

}  // namespace

GpModel gp_condition(const Matrix& inputs, const Vector& targets, const Vector& lengthscales,
                     double signal_variance, double noise_variance) {
  if (inputs.rows() < 2) throw PreconditionError("GP needs at least 2 training points");
  if (targets.size() != inputs.rows()) throw DomainError("GP target count mismatch");
  return condition(inputs, targets, targets.mean(), lengthscales, signal_variance, noise_variance);
}

GpModel gp_fit(const Matrix& inputs, const Vector& targets, const GpFitOptions& options) {
  const auto n = inputs.rows();
  const auto d = inputs.cols();
  if (n < 2) throw PreconditionError("GP needs at least 2 training points");
  if (targets.size() != n) throw DomainError("GP target count mismatch");
  if (!inputs.allFinite() || !targets.allFinite()) throw DomainError("GP data must be finite");

  const double y_mean = targets.mean();
  const Vector centered = targets.array() - y_mean;
  double y_var = centered.squaredNorm() / static_cast<double>(n);
  if (!(y_var > 1e-12)) y_var = 1.0;
  Vector range(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    range[j] = inputs.col(j).maxCoeff() - inputs.col(j).minCoeff();
    if (!(range[j] > 1e-12)) range[j] = 1.0;
  }

  // theta = [log l_1..l_d, log s2, log noise]
  const Eigen::Index p = d + 2;
  Vector lo(p), hi(p);
  lo.head(d) = (range * 1e-3).array().log();
  hi.head(d) = (range * 1e3).array().log();
  lo[d] = std::log(y_var * 1e-6);
  hi[d] = std::log(y_var * 1e6);
  lo[d + 1] = std::log(options.min_noise);
  hi[d + 1] = std::log(std::max(y_var, options.min_noise) * 10.0);

  Rng rng(derive_seed(options.seed, 0x6770));
  GpModel best;
  double best_lml = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    Vector theta(p);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double jitter = r == 0 ? 0.0 : rng.uniform(-1.0, 1.0);
      theta[j] = std::log(0.5 * range[j]) + jitter;
    }
    theta[d] = std::log(y_var);
    theta[d + 1] = options.fixed_noise ? std::log(*options.fixed_noise)
                                       : std::log(std::max(1e-3 * y_var, options.min_noise));
    theta = theta.cwiseMax(lo).cwiseMin(hi);
    if (options.fixed_noise) theta[d + 1] = std::log(*options.fixed_noise);

    Vector m1 = Vector::Zero(p), m2 = Vector::Zero(p);
    for (int t = 1; t <= options.steps; ++t) {
      const Vector ls = theta.head(d).array().exp();
      const double s2 = std::exp(theta[d]);
      const double noise = std::exp(theta[d + 1]);
      Matrix k = kernel_matrix(inputs, ls, s2);
      Matrix l;
      try {
        l = robust_cholesky(k, noise, s2, nullptr);
      } catch (const IllConditionedError&) {
        break;
      }
      const auto lv = l.triangularView<Eigen::Lower>();
      const Vector alpha = solve_lt(l, lv.solve(centered));
      const Matrix kinv = solve_lt(l, lv.solve(Matrix::Identity(n, n)));
      const Matrix inner = alpha * alpha.transpose() - kinv;

      Vector grad(p);
      for (Eigen::Index j = 0; j < d; ++j) {
        double g = 0.0;
        for (Eigen::Index a = 0; a < n; ++a) {
          for (Eigen::Index b = 0; b < a; ++b) {
            const double diff = inputs(a, j) - inputs(b, j);
            g += inner(a, b) * k(a, b) * diff * diff / (ls[j] * ls[j]);
          }
        }
        grad[j] = g;  // symmetric pairs: 2 * 0.5
      }
      grad[d] = 0.5 * (inner.array() * k.array()).sum();
      grad[d + 1] = options.fixed_noise ? 0.0 : 0.5 * noise * inner.trace();
      if (!grad.allFinite()) break;

      m1 = 0.9 * m1 + 0.1 * grad;
      m2 = 0.999 * m2 + 0.001 * grad.cwiseProduct(grad);
      const Vector mhat = m1 / (1.0 - std::pow(0.9, t));
      const Vector vhat = m2 / (1.0 - std::pow(0.999, t));
      theta += options.learning_rate * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + 1e-8).matrix());
      theta = theta.cwiseMax(lo).cwiseMin(hi);
      if (options.fixed_noise) theta[d + 1] = std::log(*options.fixed_noise);
    }
    GpModel candidate;
    try {
      candidate = condition(inputs, targets, y_mean, theta.head(d).array().exp(),
                            std::exp(theta[d]), std::exp(theta[d + 1]));
    } catch (const IllConditionedError&) {
      continue;
    }
    if (!have_best || candidate.log_marginal_likelihood > best_lml) {
      best_lml = candidate.log_marginal_likelihood;
      best = std::move(candidate);
      have_best = true;
    }
  }
  if (!have_best) throw IllConditionedError("GP fit failed for every restart");
  return best;
}

GpPrediction gp_posterior(const GpModel& model, const Vector& x) {
  if (x.size() != model.dim()) throw DomainError("gp_posterior: dimension mismatch");
  const auto n = model.inputs.rows();
  Vector kx(n);
  for (Eigen::Index i = 0; i < n; ++i) kx[i] = model.kernel(x, model.inputs.row(i).transpose());
  GpPrediction p;
  p.mean = model.target_mean + kx.dot(model.alpha);
  const Vector v = model.cholesky_lower.triangularView<Eigen::Lower>().solve(kx);
  p.variance = std::max(0.0, model.signal_variance - v.squaredNorm());
  return p;
}

GpPrediction gp_posterior_grad(const GpModel& model, const Vector& x) {
  if (x.size() != model.dim()) throw DomainError("gp_posterior: dimension mismatch");
  const auto n = model.inputs.rows();
  const auto d = model.inputs.cols();
  Vector kx(n);
  Matrix dk(n, d);  // d k(x, x_i) / dx
  const Vector inv_l2 = model.lengthscales.array().square().inverse();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector diff = x - model.inputs.row(i).transpose();
    kx[i] = model.kernel(x, model.inputs.row(i).transpose());
    dk.row(i) = (-kx[i] * diff.cwiseProduct(inv_l2)).transpose();
  }
  GpPrediction p;
  p.mean = model.target_mean + kx.dot(model.alpha);
  const Vector v = model.cholesky_lower.triangularView<Eigen::Lower>().solve(kx);
  const double var = model.signal_variance - v.squaredNorm();
  p.variance = std::max(0.0, var);
  p.mean_grad = dk.transpose() * model.alpha;
  const Vector kinv_k = solve_lt(model.cholesky_lower, v);
  p.variance_grad = var > 0.0 ? Vector(-2.0 * dk.transpose() * kinv_k) : Vector::Zero(d);
  return p;
}

double expected_improvement(double mean, double sigma, double best) {
  const double delta = mean - best;
  if (!(sigma > 0.0)) return std::max(delta, 0.0);
  const double z = delta / sigma;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return delta * cdf + sigma * pdf;
}

double upper_confidence_bound(double mean, double sigma, double beta_ucb) {
  return mean + std::sqrt(beta_ucb) * sigma;
}

double Acquisition::operator()(const GpPrediction& p) const {
  const double sigma = std::sqrt(p.variance);
  return kind == Kind::kQucb ? upper_confidence_bound(p.mean, sigma, beta_ucb)
                             : expected_improvement(p.mean, sigma, best);
}

namespace {

// Acquisition value and gradient at x.
double acquisition_with_grad(const GpModel& model, const Acquisition& acq, const Vector& x,
                             Vector* grad) {
  const GpPrediction p = gp_posterior_grad(model, x);
  const double sigma = std::sqrt(p.variance);
  const Vector sigma_grad =
      sigma > 1e-12 ? Vector(p.variance_grad / (2.0 * sigma)) : Vector::Zero(x.size());
  if (acq.kind == Acquisition::Kind::kQucb) {
    *grad = p.mean_grad + std::sqrt(acq.beta_ucb) * sigma_grad;
    return upper_confidence_bound(p.mean, sigma, acq.beta_ucb);
  }
  if (sigma <= 1e-12) {
    *grad = p.mean > acq.best ? p.mean_grad : Vector::Zero(x.size());
    return std::max(p.mean - acq.best, 0.0);
  }
  const double z = (p.mean - acq.best) / sigma;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  // dEI/dmu = Phi(z), dEI/dsigma = phi(z)
  *grad = cdf * p.mean_grad + pdf * sigma_grad;
  return (p.mean - acq.best) * cdf + sigma * pdf;
}

}  // namespace

Matrix bo_candidate_pool(const GpModel& model, const Acquisition& acq, const Vector& lower,
                         const Vector& upper, std::uint64_t seed, const BoOptions& options,
                         Vector* values) {
  const int d = model.dim();
  const int pool = std::max(1, options.pool_size);
  Matrix base = sobol_init(d, pool, lower, upper, seed);
  Vector base_values(pool);
  for (int i = 0; i < pool; ++i) base_values[i] = acq(gp_posterior(model, base.row(i).transpose()));

  const int refine = std::min(options.refine_count, pool);
  std::vector<int> order(static_cast<std::size_t>(pool));
  for (int i = 0; i < pool; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return base_values[a] > base_values[b]; });

  Matrix all(pool + refine, d);
  Vector all_values(pool + refine);
  all.topRows(pool) = base;
  all_values.head(pool) = base_values;
  const Vector width = upper - lower;
  for (int r = 0; r < refine; ++r) {
    Vector x = base.row(order[static_cast<std::size_t>(r)]).transpose();
    Vector g;
    double value = acquisition_with_grad(model, acq, x, &g);
    for (int s = 0; s < options.refine_steps; ++s) {
      // step of fixed length in unit-cube coordinates along the gradient
      const Vector u = g.cwiseProduct(width);
      const double norm = u.norm();
      if (!(norm > 0.0)) break;
      Vector trial = x + options.refine_step * width.cwiseProduct(u) / norm;
      trial = trial.cwiseMax(lower).cwiseMin(upper);
      Vector trial_g;
      const double trial_value = acquisition_with_grad(model, acq, trial, &trial_g);
      if (!(trial_value > value)) break;
      x = trial;
      value = trial_value;
      g = trial_g;
    }
    all.row(pool + r) = x.transpose();
    all_values[pool + r] = value;
  }
  if (values) *values = all_values;
  return all;
}

Matrix bo_acquire(const GpModel& model, const Acquisition& acq, int b, const Vector& lower,
                  const Vector& upper, std::uint64_t seed, const BoOptions& options) {
  if (b < 1) throw PreconditionError("bo_acquire: b must be >= 1");
  BoOptions opts = options;
  opts.pool_size = std::max(opts.pool_size, 4 * b);
  Vector values;
  const Matrix pool = bo_candidate_pool(model, acq, lower, upper, seed, opts, &values);
  const auto m = pool.rows();
  const int d = model.dim();

  const double spread = values.maxCoeff() - values.minCoeff();
  const double height = spread > 0.0 ? spread : 1.0;
  const Vector radius = opts.penalty_radius * model.lengthscales;
  std::vector<bool> taken(static_cast<std::size_t>(m), false);
  Vector adjusted = values;
  Matrix batch(b, d);
  int filled = 0;
  while (filled < b) {
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      if (best < 0 || adjusted[i] > adjusted[best]) best = i;
    }
    if (best < 0) throw UnsupportedError("bo_acquire: candidate pool exhausted");
    const Vector chosen = pool.row(best).transpose();
    batch.row(filled++) = chosen.transpose();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      const Vector diff = pool.row(i).transpose() - chosen;
      if (diff.norm() <= opts.min_separation) {
        taken[static_cast<std::size_t>(i)] = true;
        continue;
      }
      adjusted[i] -= height * std::exp(-0.5 * diff.cwiseQuotient(radius).squaredNorm());
    }
  }
  return batch;
}

}  // namespace dynamo

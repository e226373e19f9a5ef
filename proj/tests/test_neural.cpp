#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "dynamo/error.hpp"
#include "dynamo/neural.hpp"
#include "dynamo/tasks.hpp"
#include "helpers.hpp"

using namespace dynamo;

namespace {

// Straight-line re-implementation of the forward pass.
double reference_forward(const Mlp& net, const Vector& x) {
  std::vector<double> a(x.data(), x.data() + x.size());
  if (net.input_offset().size() == x.size()) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      a[j] = (a[j] - net.input_offset()[static_cast<Eigen::Index>(j)]) /
             net.input_scale()[static_cast<Eigen::Index>(j)];
    }
  }
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::vector<double> z(static_cast<std::size_t>(layers[l].weight.rows()));
    for (std::size_t o = 0; o < z.size(); ++o) {
      double s = layers[l].bias[static_cast<Eigen::Index>(o)];
      for (std::size_t i = 0; i < a.size(); ++i) {
        s += layers[l].weight(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i)) * a[i];
      }
      if (l + 1 < layers.size()) {
        if (net.activation() == Activation::kTanh) s = std::tanh(s);
        else if (s < 0.0) s *= net.leaky_slope();
      }
      z[o] = s;
    }
    a = z;
  }
  return a[0];
}

}  // namespace

TEST_CASE("forward pass basics") {
  Mlp zero({3, 4, 1}, Activation::kLeakyRelu);
  CHECK(zero.forward(Vector{{1.0, -2.0, 3.0}}) == 0.0);
  CHECK(zero.parameter_count() == (3 + 1) * 4 + (4 + 1) * 1);

  Mlp linear({2, 1}, Activation::kLeakyRelu);
  linear.layers()[0].weight << 1.0, 1.0;
  CHECK(linear.forward(Vector{{2.0, 3.0}}) == 5.0);
  const Vector g = linear.grad_input(Vector{{-7.0, 0.5}});
  CHECK(g[0] == 1.0);
  CHECK(g[1] == 1.0);
  CHECK_THROWS_AS(linear.forward(Vector{{1.0}}), DomainError);
}

TEST_CASE("forward matches an independent implementation") {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const Activation act = t % 2 ? Activation::kTanh : Activation::kLeakyRelu;
    Mlp net = Mlp::uniform_init({3, 8, 5, 1}, act, 100 + t, 0.2);
    if (t % 3 == 0) net.set_input_transform(test::random_vector(rng, 3, -1, 1), test::random_vector(rng, 3, 0.5, 2));
    const Vector x = test::random_vector(rng, 3, -3, 3);
    CHECK(std::abs(net.forward(x) - reference_forward(net, x)) < 1e-12);
    const Matrix xs = test::random_matrix(rng, 4, 3, -3, 3);
    const Vector batch = net.forward_batch(xs);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(batch[i] - net.forward(xs.row(i).transpose())) < 1e-12);
  }
}

TEST_CASE("leaky slope scales the gradient on the negative path") {
  Mlp net({1, 1, 1}, Activation::kLeakyRelu, 0.2);
  net.layers()[0].weight(0, 0) = 1.0;
  net.layers()[1].weight(0, 0) = 1.0;
  CHECK(net.grad_input(Vector{{-1.0}})[0] == doctest::Approx(0.2));
  CHECK(net.grad_input(Vector{{1.0}})[0] == doctest::Approx(1.0));
}

TEST_CASE("input gradient matches finite differences") {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const Mlp net = Mlp::uniform_init({4, 16, 16, 1}, t % 2 ? Activation::kTanh : Activation::kLeakyRelu, t);
    const Vector x = test::random_vector(rng, 4, -2, 2);
    const Vector g = net.grad_input(x);
    for (int j = 0; j < 4; ++j) {
      Vector xp = x, xm = x;
      xp[j] += 1e-5;
      xm[j] -= 1e-5;
      const double fd = (net.forward(xp) - net.forward(xm)) / 2e-5;
      CHECK(std::abs(fd - g[j]) <= 1e-4 * std::max(1.0, std::abs(g[j])));
    }
  }
}

TEST_CASE("parameter gradient matches finite differences") {
  Rng rng(3);
  Mlp net = Mlp::uniform_init({2, 5, 1}, Activation::kTanh, 7);
  const Matrix xs = test::random_matrix(rng, 6, 2, -1, 1);
  const Vector dout = test::random_vector(rng, 6, -1, 1);
  const auto grad = net.parameter_gradient(xs, dout);
  auto objective = [&](const Mlp& m) { return dout.dot(m.forward_batch(xs)); };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    for (Eigen::Index i = 0; i < net.layers()[l].weight.size(); ++i) {
      Mlp p = net, m = net;
      p.layers()[l].weight.data()[i] += 1e-6;
      m.layers()[l].weight.data()[i] -= 1e-6;
      CHECK(std::abs((objective(p) - objective(m)) / 2e-6 - grad[l].weight.data()[i]) < 1e-6);
    }
  }
}

TEST_CASE("serialization round trip") {
  Mlp net = Mlp::uniform_init({3, 4, 1}, Activation::kTanh, 5);
  net.set_input_transform(Vector{{0.1, 0.2, 0.3}}, Vector{{1.0, 2.0, 3.0}});
  CHECK(Mlp::from_json(net.to_json()) == net);
}

TEST_CASE("surrogate fitting") {
  SUBCASE("linear data with a linear model") {
    Rng rng(4);
    const Matrix x = test::random_matrix(rng, 200, 3, -4, 4);
    const Vector y = x * Vector{{0.5, -1.0, 2.0}} + Vector::Constant(200, 0.3);
    const auto ds = OfflineDataset::create(x, y);
    SurrogateOptions opts;
    opts.hidden = {};
    opts.epochs = 300;
    opts.learning_rate = 0.01;
    const Mlp net = fit_surrogate(ds, opts);
    CHECK(mean_squared_error(net, ds.designs(), ds.norm_scores()) < 1e-6);
  }
  SUBCASE("zero epochs is rejected") {
    Matrix x(2, 1);
    x << 0.0, 1.0;
    SurrogateOptions opts;
    opts.epochs = 0;
    CHECK_THROWS_AS(fit_surrogate(OfflineDataset::create(x, Vector{{0.0, 1.0}}), opts), PreconditionError);
  }
  SUBCASE("branin MSE drops tenfold") {
    const auto ds = generate_offline(make_task("branin"), 800, Sampler::sobol(), std::nullopt, 5);
    std::vector<double> trace;
    fit_surrogate(ds, SurrogateOptions{}, &trace);
    REQUIRE(trace.size() == 101);
    CHECK(trace.back() < trace.front() / 10.0);
  }
}

TEST_CASE("critic training") {
  SUBCASE("identical real and fake keep W at zero") {
    Rng rng(6);
    const Matrix x = test::random_matrix(rng, 16, 2, -1, 1);
    Critic critic = make_zero_critic(2, CriticArchitecture{});
    const auto trace = train_critic(critic, x, Vector::Constant(16, 1.0 / 16.0), x, CriticOptions{});
    for (double w : trace.w) CHECK(std::abs(w) < 1e-6);
  }
  SUBCASE("critic separates real from fake") {
    Matrix real(1, 1), fake(1, 1);
    real << 1.0;
    fake << -1.0;
    Critic critic = make_critic(1, CriticArchitecture{}, 3);
    CriticOptions opts;
    opts.tolerance = 0.0;
    const auto trace = train_critic(critic, real, Vector::Ones(1), fake, opts);
    CHECK(critic(Vector{{1.0}}) > critic(Vector{{-1.0}}));
    for (double m : trace.max_abs_param) CHECK(m <= 0.01);
  }
}

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dynamo/dataset.hpp"
#include "dynamo/error.hpp"
#include "dynamo/tasks.hpp"
#include "helpers.hpp"

using namespace dynamo;

TEST_CASE("scores are min-max normalized") {
  Matrix x(3, 1);
  x << 0.0, 1.0, 2.0;
  const auto ds = OfflineDataset::create(x, Vector{{0.0, 5.0, 10.0}});
  CHECK(ds.norm_scores()[0] == 0.0);
  CHECK(ds.norm_scores()[1] == 0.5);
  CHECK(ds.norm_scores()[2] == 1.0);
  CHECK(ds.lower_bound()[0] == kDefaultLowerBound);
  CHECK(ds.upper_bound()[0] == kDefaultUpperBound);
  CHECK(ds.denormalize(0.5) == doctest::Approx(5.0));
}

TEST_CASE("degenerate and malformed datasets are rejected") {
  Matrix x(2, 1);
  x << 0.0, 1.0;
  CHECK_THROWS_AS(OfflineDataset::create(x, Vector{{3.0, 3.0}}), DegenerateDatasetError);
  Matrix one(1, 1);
  one << 0.0;
  CHECK_THROWS_AS(OfflineDataset::create(one, Vector{{1.0}}), DegenerateDatasetError);
  Matrix out(2, 1);
  out << 0.0, 9.0;
  CHECK_THROWS_AS(OfflineDataset::create(out, Vector{{0.0, 1.0}}), DomainError);
}

TEST_CASE("csv parse error names the row") {
  const std::string text = "x0,x1,y\n0,0,1\n1,2\n";
  try {
    parse_dataset_csv(text);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
  }
  CHECK_THROWS_AS(parse_dataset_csv("x0,y\n0,1\n0,1\n"), DegenerateDatasetError);
}

TEST_CASE("csv and json round trips preserve everything") {
  const Task task = make_task("branin");
  const auto ds = generate_offline(task, 50, Sampler::sobol(), std::nullopt, 3);
  for (const auto& back : {parse_dataset_csv(dataset_to_csv(ds)), parse_dataset_json(dataset_to_json(ds))}) {
    CHECK(back.designs() == ds.designs());
    CHECK(back.raw_scores() == ds.raw_scores());
    CHECK(back.lower_bound() == ds.lower_bound());
    CHECK(back.upper_bound() == ds.upper_bound());
  }
  const Task seq = make_task("seq-toy");
  const auto sd = generate_offline(seq, 20, Sampler::sobol(), std::nullopt, 1);
  const auto back = parse_dataset_csv(dataset_to_csv(sd));
  CHECK(back.kind() == DesignKind::kDiscreteRelaxed);
  REQUIRE(back.alphabet());
  CHECK(*back.alphabet() == *sd.alphabet());
}

TEST_CASE("800-row branin dataset reloads from disk") {
  const Task task = make_task("branin");
  const auto ds = generate_offline(task, 800, Sampler::sobol(), std::nullopt, 11);
  const auto path = std::filesystem::temp_directory_path() / "dynamo_test_branin.csv";
  save_dataset(ds, path, DatasetFormat::kCsv);
  const auto back = load_dataset(path);
  CHECK(back.size() == 800);
  CHECK(back.dim() == 2);
  CHECK(back.norm_scores().minCoeff() >= 0.0);
  CHECK(back.norm_scores().maxCoeff() <= 1.0);
  std::filesystem::remove(path);
}

TEST_CASE("tau weights") {
  Matrix x(2, 1);
  x << 0.0, 1.0;
  SUBCASE("tau 0 is uniform") {
    Rng rng(4);
    const Vector y = test::random_vector(rng, 7, 0.0, 1.0);
    const auto tw = tau_weight(y, 0.0);
    for (int i = 0; i < 7; ++i) CHECK(tw.weights[i] == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
  }
  SUBCASE("exact two-point case") {
    const auto tw = tau_weight(Vector{{0.0, std::log(2.0)}}, 1.0);
    CHECK(tw.weights[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(tw.weights[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  }
  SUBCASE("negative tau is a domain error") {
    CHECK_THROWS_AS(tau_weight(Vector{{0.0, 1.0}}, -0.1), DomainError);
  }
  SUBCASE("tau 50 concentrates on the top decile and matches the naive formula") {
    const Task task = make_task("branin");
    const auto ds = generate_offline(task, 800, Sampler::sobol(), std::nullopt, 2);
    const auto tw = tau_weight(ds, 50.0);
    CHECK(std::abs(tw.weights.sum() - 1.0) < 1e-12);
    CHECK((tw.weights.array() > 0.0).all());
    Vector naive = (50.0 * ds.norm_scores().array()).exp();
    naive /= naive.sum();
    CHECK((naive - tw.weights).cwiseAbs().maxCoeff() < 1e-12);
    Vector sorted = ds.norm_scores();
    std::sort(sorted.begin(), sorted.end());
    const double cut = sorted[static_cast<Eigen::Index>(0.9 * 800)];
    double top = 0.0, top_naive = 0.0;
    for (int i = 0; i < ds.size(); ++i) {
      if (ds.norm_scores()[i] >= cut) {
        top += tw.weights[i];
        top_naive += naive[i];
      }
    }
    CHECK(std::abs(top - top_naive) < 1e-12);
    CHECK(top > 0.5);
  }
}

// Branin's top decile spans only the last ~2% of the normalized score range,
// so exp(50 y) separates it from the rest by a factor of about e and the mass
// settles near 0.67. Kept as a known failure.
TEST_CASE("tau 50 puts over 0.99 of the mass on the Branin top decile" * doctest::may_fail()) {
  const auto ds = generate_offline(make_task("branin"), 800, Sampler::sobol(), std::nullopt, 2);
  const auto tw = tau_weight(ds, 50.0);
  Vector sorted = ds.norm_scores();
  std::sort(sorted.begin(), sorted.end());
  const double cut = sorted[static_cast<Eigen::Index>(0.9 * 800)];
  double top = 0.0;
  for (int i = 0; i < ds.size(); ++i) {
    if (ds.norm_scores()[i] >= cut) top += tw.weights[i];
  }
  CHECK(top > 0.99);
}

TEST_CASE("weighted expectation") {
  CHECK(weighted_expectation(tau_weight(Vector{{0.2, 0.2, 0.2}}, 1.0), Vector{{1.0, 2.0, 3.0}}) ==
        doctest::Approx(2.0));
  TauWeights tw;
  tw.weights = Vector{{1.0 / 3.0, 2.0 / 3.0}};
  CHECK(weighted_expectation(tw, Vector{{3.0, 0.0}}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(weighted_expectation(tw, Vector{{1.0}}), DomainError);

  Rng rng(9);
  const Vector y = test::random_vector(rng, 40, 0.0, 1.0);
  const Vector c = test::random_vector(rng, 40, -1.0, 1.0);
  const auto w = tau_weight(y, 1.0);
  double z = 0.0, num = 0.0;
  for (int i = 0; i < 40; ++i) {
    z += std::exp(y[i]);
    num += std::exp(y[i]) * c[i];
  }
  CHECK(std::abs(weighted_expectation(w, c) - num / z) < 1e-12);
}

TEST_CASE("relaxed one-hot decode") {
  const Alphabet a{"ACGT", 3};
  CHECK(decode_relaxed(encode_one_hot("GTA", a), a) == "GTA");
  CHECK(decode_relaxed(Vector::Constant(12, 0.25), a) == "AAA");
  Vector x = Vector::Zero(12);
  x[2] = 0.9;
  x[3] = 0.9;
  CHECK(decode_relaxed(x, a).front() == 'G');
}

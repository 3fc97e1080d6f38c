#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oed/errors.hpp"
#include "oed/model.hpp"

using namespace oed;

namespace {

double gaussian_log_density(double y, double mean, double sigma) {
  const double z = (y - mean) / sigma;
  return std::log(std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi)));
}

}  // namespace

TEST_CASE("simple model values") {
  CHECK(simple_model(0.0, 0.7) == 0.0);
  CHECK(simple_model(1.0, 0.2) == doctest::Approx(1.04).epsilon(1e-15));
  CHECK(simple_model(1.0, 1.0) == doctest::Approx(1.0 + std::exp(-0.8)).epsilon(1e-15));
  CHECK(simple_model(1.0, 1.0) == doctest::Approx(1.449329).epsilon(1e-6));
}

TEST_CASE("batch model wraps copies of the base model") {
  auto base = std::make_shared<SimpleModel>();
  auto one = make_batch_model(base, 1);
  auto two = make_batch_model(base, 2);
  CHECK(two->n_design() == 2);
  CHECK(two->n_obs() == 2);
  CHECK(two->n_theta() == 1);

  for (double th : {0.0, 0.3, 0.77, 1.0}) {
    for (double d : {0.0, 0.2, 0.55, 1.0}) {
      const Vector t{th}, x{d};
      CHECK((*one)(t, x) == (*base)(t, x));
      const Vector pair{d, d};
      const Vector out = (*two)(t, pair);
      CHECK(out[0] == out[1]);
    }
  }
  const Vector out = (*two)(Vector{1.0}, Vector{0.2, 1.0});
  CHECK(out[0] == doctest::Approx(1.04));
  CHECK(out[1] == doctest::Approx(1.449329).epsilon(1e-6));
  CHECK_THROWS_AS(make_batch_model(base, 0), ConfigError);
  CHECK_THROWS_AS((*two)(Vector{1.0}, Vector{0.2}), DimensionMismatch);
}

TEST_CASE("log likelihood") {
  SimpleModel model;
  const auto noise = NoiseModel::constant(1, 0.01);
  const Vector theta{0.5}, design{0.2};
  const double g = simple_model(0.5, 0.2);

  SUBCASE("zero residual") {
    const Vector y{g};
    CHECK(log_likelihood(model, noise, y, theta, design) ==
          doctest::Approx(-std::log(0.01) - 0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
    CHECK(log_likelihood(model, noise, y, theta, design) == doctest::Approx(3.686231).epsilon(1e-6));
  }
  SUBCASE("one standard deviation") {
    const Vector y0{g}, y1{g + 0.01};
    const double diff = log_likelihood(model, noise, y0, theta, design) -
                        log_likelihood(model, noise, y1, theta, design);
    CHECK(diff == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("matches a direct density evaluation") {
    const Vector y{0.565};
    CHECK(log_likelihood(model, noise, y, theta, design) ==
          doctest::Approx(gaussian_log_density(0.565, g, 0.01)).epsilon(1e-12));
  }
  SUBCASE("relative noise") {
    const NoiseModel rel({NoiseComponent{0.1, 0.001, false}});
    const Vector y{0.6};
    CHECK(log_likelihood(model, rel, y, theta, design) ==
          doctest::Approx(gaussian_log_density(0.6, g, 0.1 * g + 0.001)).epsilon(1e-12));
  }
}

TEST_CASE("zero noise is rejected") {
  SimpleModel model;
  const NoiseModel zero({NoiseComponent{0.0, 0.0, false}});
  Rng rng(1);
  CHECK_THROWS_AS(sample_observation(model, zero, Vector{0.5}, Vector{0.2}, rng), NonpositiveNoise);
  CHECK_THROWS_AS(log_likelihood(model, zero, Vector{0.5}, Vector{0.5}, Vector{0.2}),
                  NonpositiveNoise);
  CHECK_THROWS_AS(NoiseModel({NoiseComponent{-0.1, 0.01, false}}), ConfigError);
}

TEST_CASE("sample_observation moments and reproducibility") {
  SimpleModel model;
  const auto noise = NoiseModel::constant(1, 0.01);
  const Vector theta{0.8}, design{0.6};
  const double g = simple_model(0.8, 0.6);
  Rng rng(42);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = sample_observation(model, noise, theta, design, rng)[0];
    sum += y;
    sum2 += (y - g) * (y - g);
  }
  const double mean = sum / n;
  CHECK(std::abs(mean - g) < 4.0 * 0.01 / std::sqrt(double(n)));
  const double var = sum2 / n;
  CHECK(std::abs(var / 1e-4 - 1.0) < 0.1);

  Rng a(7), b(7);
  CHECK(sample_observation(model, noise, theta, design, a) ==
        sample_observation(model, noise, theta, design, b));
}

TEST_CASE("batch likelihood is the sum of per-experiment likelihoods") {
  auto base = std::make_shared<SimpleModel>();
  auto two = make_batch_model(base, 2);
  const NoiseModel single({NoiseComponent{0.05, 0.01, false}});
  const NoiseModel both = single.repeated(2);
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const Vector theta{uniform01(rng)};
    const Vector d{uniform01(rng), uniform01(rng)};
    const Vector y{uniform01(rng) * 1.5, uniform01(rng) * 1.5};
    const double joint = log_likelihood(*two, both, y, theta, d);
    const double split = log_likelihood(*base, single, Vector{y[0]}, theta, Vector{d[0]}) +
                         log_likelihood(*base, single, Vector{y[1]}, theta, Vector{d[1]});
    CHECK(joint == doctest::Approx(split).epsilon(1e-13));
  }
}

TEST_CASE("likelihood integrates to one over y") {
  SimpleModel model;
  const auto noise = NoiseModel::constant(1, 0.01);
  const Vector theta{0.4}, design{0.9};
  const double g = simple_model(0.4, 0.9);
  // Trapezoid rule over +-12 sigma.
  const int n = 24001;
  const double lo = g - 0.12, h = 0.24 / (n - 1);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vector y{lo + i * h};
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    total += w * std::exp(log_likelihood(model, noise, y, theta, design));
  }
  CHECK(std::abs(total * h - 1.0) < 1e-6);
}

TEST_CASE("model evaluation is deterministic") {
  SimpleModel model;
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const Vector t{uniform01(rng)}, d{uniform01(rng)};
    CHECK(model(t, d) == model(t, d));
  }
}

TEST_CASE("box projection and shrinking") {
  const Box box({{0.0, 1.0}, {-2.0, 2.0}});
  const Vector p = box.project(Vector{1.5, -3.0});
  CHECK(p == Vector{1.0, -2.0});
  CHECK(box.contains(p));
  const Vector margin{0.1, 0.5};
  const Box inner = box.shrunk(margin);
  CHECK(inner[0].lo == doctest::Approx(0.1));
  CHECK(inner[1].hi == doctest::Approx(1.5));
  const Vector too_big{0.6, 0.1};
  CHECK_THROWS_AS(box.shrunk(too_big), EmptyShrunkenBox);
  CHECK_THROWS_AS(Box({{1.0, 1.0}}), ConfigError);
}

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

#include "doctest.h"
#include "oed/errors.hpp"
#include "oed/stoch_opt.hpp"

using namespace oed;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// f(d) = |d - target|^2 plus Gaussian noise of standard deviation sigma
// drawn from the call's seed.
NoisyObjective noisy_quadratic(Vector target, double sigma) {
  return [target = std::move(target), sigma](std::span<const double> d, std::uint64_t seed) {
    double f = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) f += (d[i] - target[i]) * (d[i] - target[i]);
    if (sigma > 0.0) {
      Rng rng(seed);
      f += sigma * standard_normal(rng);
    }
    return f;
  };
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

const Box kUnit({{0.0, 1.0}});
const Box kUnit2({{0.0, 1.0}, {0.0, 1.0}});

}  // namespace

TEST_CASE("gain sequences are positive and nonincreasing") {
  GainSchedule g{0.3, 50.0, 0.602, 0.05, 0.101};
  double prev_a = INFINITY, prev_c = INFINITY;
  for (std::size_t k = 0; k < 1000; ++k) {
    CHECK(g.a_k(k) > 0.0);
    CHECK(g.c_k(k) > 0.0);
    CHECK(g.a_k(k) <= prev_a);
    CHECK(g.c_k(k) <= prev_c);
    prev_a = g.a_k(k);
    prev_c = g.c_k(k);
  }
  CHECK(g.a_k(0) == doctest::Approx(0.3 / std::pow(51.0, 0.602)));
  CHECK(g.c_k(9) == doctest::Approx(0.05 / std::pow(10.0, 0.101)));
  g.alpha = 1.5;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  CHECK_THROWS_AS((GainSchedule{-1.0, 0.0, 0.602, 0.1, 0.101}.validate()), ConfigError);
}

TEST_CASE("SPSA gradient is exact for a 1-D linear objective") {
  const NoisyObjective f = [](std::span<const double> d, std::uint64_t) { return 3.0 * d[0]; };
  const std::vector<double> d{0.5};
  Rng rng(1);
  std::map<double, int> seen;
  for (int t = 0; t < 40; ++t) {
    const auto est = spsa_gradient(f, d, 0.25, rng, 9);
    CHECK(est.gradient[0] == 3.0);
    ++seen[est.delta[0]];
  }
  CHECK(seen.size() == 2);
}

TEST_CASE("SPSA gradient of a linear objective is unbiased over sign patterns") {
  const std::vector<double> g{1.5, -2.0, 0.25};
  const NoisyObjective f = [&g](std::span<const double> d, std::uint64_t) {
    return g[0] * d[0] + g[1] * d[1] + g[2] * d[2];
  };
  const std::vector<double> d{0.4, 0.5, 0.6};
  Rng rng(5);
  std::map<std::vector<double>, Vector> by_pattern;
  for (int t = 0; t < 400 && by_pattern.size() < 8; ++t) {
    const auto est = spsa_gradient(f, d, 0.125, rng, 0);
    by_pattern[est.delta] = est.gradient;
  }
  REQUIRE(by_pattern.size() == 8);
  for (std::size_t i = 0; i < 3; ++i) {
    double mean = 0.0;
    for (const auto& [delta, grad] : by_pattern) mean += grad[i] / 8.0;
    CHECK(mean == doctest::Approx(g[i]).epsilon(1e-12));
  }
}

TEST_CASE("SPSA gradient is exact for a 1-D quadratic") {
  const NoisyObjective f = [](std::span<const double> d, std::uint64_t) { return d[0] * d[0]; };
  const std::vector<double> d{1.0};
  Rng rng(2);
  for (int t = 0; t < 10; ++t) CHECK(spsa_gradient(f, d, 0.1, rng, 0).gradient[0] == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("common random numbers make the pair noise-free and repeatable") {
  const NoisyObjective f = noisy_quadratic({0.5}, 0.3);
  const std::vector<double> d{0.5};
  Rng a(17), b(17);
  const auto x = spsa_gradient(f, d, 0.1, a, 1234);
  const auto y = spsa_gradient(f, d, 0.1, b, 1234);
  CHECK(std::memcmp(&x.gradient[0], &y.gradient[0], sizeof(double)) == 0);
  // Same noise on both sides: the symmetric difference of a quadratic
  // centred at d is zero.
  CHECK(std::abs(x.gradient[0]) < 1e-12);
}

TEST_CASE("nonfinite objective values are rejected") {
  const NoisyObjective f = [](std::span<const double> d, std::uint64_t) { return d[0] > 0.5 ? NAN : 0.0; };
  Rng rng(1);
  const std::vector<double> d{0.5};
  CHECK_THROWS_AS(spsa_gradient(f, d, 0.1, rng, 0), NonfiniteObjective);
}

TEST_CASE("SPSA descends a deterministic quadratic") {
  const NoisyObjective f = noisy_quadratic({0.5}, 0.0);
  const std::vector<double> d0{0.9};
  std::size_t pilot = 0;
  const GainSchedule g = default_gains(f, d0, kUnit, 500, 3, &pilot);
  CHECK(pilot == 20);
  const OptTrace trace = spsa_run(f, d0, g, kUnit, 1000, 3);
  CHECK(trace.budget_used == 1000);
  CHECK(std::abs(trace.final_design[0] - 0.5) < 0.05);
  for (std::size_t i = 0; i + 1 < trace.iterates.size(); ++i) {
    CHECK(trace.iterates[i].evals == 2 * (i + 1));
    CHECK(kUnit.contains(trace.iterates[i].design));
  }
}

TEST_CASE("SPSA ensemble on a noisy quadratic") {
  const NoisyObjective f = noisy_quadratic({0.5}, 0.1);
  std::vector<double> err;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const std::vector<double> d0{0.9};
    const GainSchedule g = default_gains(f, d0, kUnit, 500, s);
    const OptTrace trace = spsa_run(f, d0, g, kUnit, 1000, s);
    for (const auto& it : trace.iterates) REQUIRE(kUnit.contains(it.design));
    err.push_back(std::abs(trace.final_design[0] - 0.5));
  }
  CHECK(median(err) < 0.1);
}

TEST_CASE("SPSA start and perturbation checks") {
  const NoisyObjective f = noisy_quadratic({0.5}, 0.0);
  const GainSchedule g{0.1, 10.0, 0.602, 0.01, 0.101};
  const std::vector<double> outside{1.2};
  CHECK_THROWS_AS(spsa_run(f, outside, g, kUnit, 100, 0), InfeasibleStart);
  const GainSchedule wide{0.1, 10.0, 0.602, 0.6, 0.101};
  const std::vector<double> d0{0.5};
  CHECK_THROWS_AS(spsa_run(f, d0, wide, kUnit, 100, 0), EmptyShrunkenBox);
  const OptTrace odd = spsa_run(f, d0, g, kUnit, 101, 0);
  CHECK(odd.budget_used == 100);
}

TEST_CASE("SPSA iterates respect the shrunken box") {
  // Optimum outside the box: iterates pile up at the shrunken boundary.
  const NoisyObjective f = noisy_quadratic({1.4, -0.3}, 0.0);
  const GainSchedule g{0.5, 10.0, 0.602, 0.05, 0.101};
  const std::vector<double> d0{0.5, 0.5};
  const OptTrace trace = spsa_run(f, d0, g, kUnit2, 400, 1);
  for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
    const double c = g.c_k(trace.iterates[i].k);
    for (double x : trace.iterates[i].design) {
      CHECK(x >= c - 1e-15);
      CHECK(x <= 1.0 - c + 1e-15);
    }
  }
  CHECK(trace.final_design[0] > 0.9);
  CHECK(trace.final_design[1] < 0.1);
}

TEST_CASE("Nelder-Mead converges on a deterministic quadratic") {
  const NoisyObjective f = noisy_quadratic({0.3, 0.7}, 0.0);
  const std::vector<double> d0{0.9, 0.1};
  const OptTrace trace = nmns_run(f, d0, kUnit2, 199, NmnsParams{}, 0);
  CHECK(trace.budget_used <= 199);
  CHECK(distance(trace.final_design, std::vector<double>{0.3, 0.7}) < 1e-4);
}

TEST_CASE("Nelder-Mead stops on collapse and keeps exact budgets") {
  const NoisyObjective f = noisy_quadratic({0.3, 0.7}, 0.0);
  const std::vector<double> d0{0.9, 0.1};
  const OptTrace long_run = nmns_run(f, d0, kUnit2, 100000, NmnsParams{}, 0);
  CHECK(long_run.stop_reason == "collapse");
  CHECK(long_run.budget_used < 100000);
  std::size_t calls = 0;
  const NoisyObjective counted = [&](std::span<const double> d, std::uint64_t s) {
    ++calls;
    return f(d, s);
  };
  for (std::size_t budget : {1, 2, 3, 7, 50, 51}) {
    calls = 0;
    const OptTrace t = nmns_run(counted, d0, kUnit2, budget, NmnsParams{}, 0);
    CHECK(t.budget_used == calls);
    CHECK(t.budget_used == budget);
    CHECK(t.stop_reason == "budget");
  }
}

TEST_CASE("Nelder-Mead ensemble on a noisy quadratic") {
  const NoisyObjective f = noisy_quadratic({0.3, 0.7}, 0.01);
  std::vector<double> err;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const std::vector<double> d0{0.9, 0.1};
    const OptTrace trace = nmns_run(f, d0, kUnit2, 500, NmnsParams{}, s);
    for (const auto& it : trace.iterates) REQUIRE(kUnit2.contains(it.design));
    err.push_back(distance(trace.final_design, std::vector<double>{0.3, 0.7}));
  }
  CHECK(median(err) < 0.1);
}

TEST_CASE("Nelder-Mead projects trial points into the box") {
  const NoisyObjective f = noisy_quadratic({1.4, -0.3}, 0.0);
  const std::vector<double> d0{1.0, 0.0};
  const OptTrace trace = nmns_run(f, d0, kUnit2, 300, NmnsParams{}, 0);
  for (const auto& it : trace.iterates) CHECK(kUnit2.contains(it.design));
  CHECK(trace.final_design[0] == 1.0);
  CHECK(trace.final_design[1] == 0.0);
  const std::vector<double> outside{0.5, 1.5};
  CHECK_THROWS_AS(nmns_run(f, outside, kUnit2, 10, NmnsParams{}, 0), InfeasibleStart);
  NmnsParams bad;
  bad.shrink = 1.0;
  CHECK_THROWS_AS(nmns_run(f, d0, kUnit2, 10, bad, 0), ConfigError);
}

TEST_CASE("ensemble runs rescore, record failures and ignore worker count") {
  const NoisyObjective f = noisy_quadratic({0.3, 0.7}, 0.01);
  std::size_t rescored = 0;
  const Rescorer rescore = [&](std::span<const double> d) {
    ++rescored;
    return EigEstimate{-distance(d, std::vector<double>{0.3, 0.7}), 0.001, 1, 1};
  };
  EnsembleConfig cfg;
  cfg.n_runs = 1;
  cfg.budget = 300;
  cfg.seed = 4;
  const auto single = ensemble_run(f, kUnit2, cfg, rescore);
  REQUIRE(single.size() == 1);
  CHECK(single[0].ok);
  CHECK(rescored == 1);
  const OptTrace direct = nmns_run(f, single[0].start, kUnit2, 300, NmnsParams{},
                                   stream_seed(4, stream::kRun, 0));
  CHECK(direct.final_design == single[0].trace.final_design);

  const NoisyObjective flaky = [&](std::span<const double> d, std::uint64_t s) {
    return d[0] > 0.95 ? NAN : f(d, s);
  };
  const Rescorer plain = [](std::span<const double> d) { return EigEstimate{d[0], 0.0, 1, 1}; };
  cfg.n_runs = 12;
  cfg.optimizer = Optimizer::Spsa;
  cfg.budget = 200;
  cfg.start = {0.97, 0.5};
  const auto rows = ensemble_run(flaky, kUnit2, cfg, plain);
  for (const auto& r : rows) {
    CHECK_FALSE(r.ok);
    CHECK(r.error_kind == "NonfiniteObjective");
  }
  std::ostringstream csv;
  write_ensemble_csv(csv, rows, 2);
  CHECK(csv.str().find("0,nan,nan,nan,nan\n") != std::string::npos);

  cfg.start.clear();
  for (Optimizer opt : {Optimizer::Spsa, Optimizer::Nmns}) {
    cfg.optimizer = opt;
    cfg.workers = 1;
    const auto one = ensemble_run(f, kUnit2, cfg, plain);
    cfg.workers = 4;
    const auto four = ensemble_run(f, kUnit2, cfg, plain);
    std::ostringstream a, b;
    write_ensemble_csv(a, one, 2);
    write_ensemble_csv(b, four, 2);
    CHECK(a.str() == b.str());
    for (const auto& r : one) {
      CHECK(r.ok);
      CHECK(kUnit2.contains(r.trace.final_design));
      CHECK(r.trace.budget_used <= cfg.budget);
    }
  }
}

TEST_CASE("trace CSV layout") {
  const NoisyObjective f = noisy_quadratic({0.3, 0.7}, 0.0);
  const std::vector<double> d0{0.9, 0.1};
  const OptTrace trace = nmns_run(f, d0, kUnit2, 6, NmnsParams{}, 0);
  std::ostringstream out;
  write_trace_csv(out, trace, -1.0);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "k,evals,d_1,d_2,score");
  std::string first;
  std::getline(in, first);
  CHECK(first.rfind("0,3,", 0) == 0);
  CHECK(optimizer_from_string("spsa") == Optimizer::Spsa);
  CHECK_THROWS_AS(optimizer_from_string("annealing"), ConfigError);
}

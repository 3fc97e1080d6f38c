#include <atomic>
#include <cmath>
#include <mutex>
#include <set>
#include <sstream>
#include <unordered_set>

#include "doctest.h"
#include "oed/errors.hpp"
#include "oed/kahan.hpp"
#include "oed/quadrature.hpp"

using namespace oed;

namespace {

double apply(const QuadRule1D& rule, double (*f)(double)) {
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(rule.nodes[i]);
  return s;
}

// E[xi^m] under the uniform probability density on [-1, 1].
double monomial_mean(int m) { return m % 2 ? 0.0 : 1.0 / (m + 1); }

IntegrandFamily scalar(std::size_t dim, std::function<double(std::span<const double>)> f) {
  IntegrandFamily fam;
  fam.dim = dim;
  fam.evaluate = [f](std::span<const double> xi, std::span<double> out) { out[0] = f(xi); };
  return fam;
}

// Full tensor Clenshaw-Curtis rule with the given level per dimension.
double tensor_cc(const std::vector<int>& levels, const std::function<double(std::span<const double>)>& f) {
  const std::size_t d = levels.size();
  std::vector<const QuadRule1D*> rules;
  std::size_t total = 1;
  for (int l : levels) {
    rules.push_back(&cc_rule(l));
    total *= rules.back()->nodes.size();
  }
  double sum = 0.0;
  std::vector<double> x(d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    double w = 1.0;
    for (std::size_t q = 0; q < d; ++q) {
      const std::size_t n = rules[q]->nodes.size();
      x[q] = rules[q]->nodes[rest % n];
      w *= rules[q]->weights[rest % n];
      rest /= n;
    }
    sum += w * f(x);
  }
  return sum;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Smolyak rule by the combination technique over full tensor rules.
double combination_smolyak(int dim, int level, const std::function<double(std::span<const double>)>& f) {
  double total = 0.0;
  const int top = level + dim - 1;
  std::vector<int> k(dim, 1);
  for (;;) {
    int s = 0;
    for (int v : k) s += v;
    if (s >= level && s <= top) {
      const double c = ((top - s) % 2 ? -1.0 : 1.0) * binomial(dim - 1, top - s);
      total += c * tensor_cc(k, f);
    }
    int q = dim - 1;
    while (q >= 0) {
      ++k[q];
      int sum = 0;
      for (int v : k) sum += v;
      if (sum <= top) break;
      k[q] = 1;
      --q;
    }
    if (q < 0) break;
  }
  return total;
}

}  // namespace

TEST_CASE("compensated summation") {
  CHECK(kahan_sum({}) == 0.0);
  const std::vector<double> hard{1.0, 1e16, 1.0, -1e16};
  double naive = 0.0;
  for (double v : hard) naive += v;
  CHECK(naive == 0.0);
  CHECK(kahan_sum(hard) == 2.0);

  KahanSum acc;
  for (int i = 0; i < 10000000; ++i) acc += 0.1;
  CHECK(std::abs(acc.value() - 1e6) < 1e-6);
}

TEST_CASE("Clenshaw-Curtis rules") {
  CHECK(cc_rule(1).nodes == std::vector<double>{0.0});
  CHECK(cc_rule(1).weights == std::vector<double>{1.0});

  const auto& two = cc_rule(2);
  REQUIRE(two.nodes.size() == 3);
  CHECK(two.nodes[0] == 1.0);
  CHECK(two.nodes[1] == 0.0);
  CHECK(two.nodes[2] == -1.0);
  CHECK(two.weights[0] == doctest::Approx(1.0 / 6).epsilon(1e-15));
  CHECK(two.weights[1] == doctest::Approx(4.0 / 6).epsilon(1e-15));
  CHECK(two.weights[2] == doctest::Approx(1.0 / 6).epsilon(1e-15));

  for (int l = 1; l <= 14; ++l) {
    const auto& rule = cc_rule(l);
    CHECK(rule.nodes.size() == cc_size(l));
    double s = 0.0;
    for (double w : rule.weights) s += w;
    CHECK(std::abs(s - 1.0) < 1e-14);
    if (l >= 2) CHECK(apply(rule, [](double x) { return x * x; }) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  }
}

TEST_CASE("rules integrate monomials up to degree n_l - 1") {
  for (int l = 2; l <= 11; ++l) {
    const auto& rule = cc_rule(l);
    const int top = static_cast<int>(cc_size(l)) - 1;
    for (int m = 0; m <= top; ++m) {
      double s = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::pow(rule.nodes[i], m);
      CHECK(std::abs(s - monomial_mean(m)) < 1e-12);
    }
  }
}

TEST_CASE("nodes are nested bit-identically") {
  for (int l = 2; l <= 8; ++l) {
    const auto& fine = cc_rule(l);
    const auto& coarse = cc_rule(l - 1);
    const std::set<double> fine_nodes(fine.nodes.begin(), fine.nodes.end());
    for (double x : coarse.nodes) CHECK(fine_nodes.count(x) == 1);
  }
  // Symmetric nodes are exact negatives.
  const auto& r = cc_rule(7);
  for (std::size_t i = 0; i < r.nodes.size(); ++i) CHECK(r.nodes[i] == -r.nodes[r.nodes.size() - 1 - i]);
}

TEST_CASE("difference rules") {
  const auto& d1 = difference_rule(1);
  CHECK(d1.weights == cc_rule(1).weights);

  auto f = [](double x) { return std::exp(x); };
  double telescoped = 0.0;
  for (int l = 1; l <= 4; ++l) telescoped += apply(difference_rule(l), f);
  CHECK(telescoped == doctest::Approx(apply(cc_rule(4), f)).epsilon(1e-15));

  for (int l = 3; l <= 8; ++l) {
    const auto& diff = difference_rule(l);
    CHECK(diff.nodes.size() == cc_size(l));
    const int top = static_cast<int>(cc_size(l - 1)) - 1;
    for (int m = 0; m <= top; ++m) {
      double s = 0.0;
      for (std::size_t i = 0; i < diff.nodes.size(); ++i) s += diff.weights[i] * std::pow(diff.nodes[i], m);
      CHECK(std::abs(s) < 1e-13);
    }
  }
}

TEST_CASE("admissibility") {
  std::unordered_set<MultiIndex, MultiIndexHash> old;
  CHECK(admissible(MultiIndex{1, 1}, old));
  old.insert({1, 1});
  CHECK(admissible(MultiIndex{2, 1}, old));
  old.insert({2, 1});
  CHECK(!admissible(MultiIndex{2, 2}, old));
  old.insert({1, 2});
  CHECK(admissible(MultiIndex{2, 2}, old));
}

TEST_CASE("dasq on a constant") {
  const auto res = dasq(scalar(3, [](auto) { return 1.0; }), DasqOptions{1e-12, 1000, 1, {}});
  CHECK(res.values[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(res.eta == 0.0);
  CHECK(res.stop == DasqStop::Tolerance);
  // The start node plus the two new nodes of each of the three forward neighbours.
  CHECK(res.evaluations == 7);
}

TEST_CASE("dasq on a separable quadratic") {
  const auto res = dasq(scalar(2, [](auto x) { return x[0] * x[0] + x[1] * x[1]; }),
                        DasqOptions{1e-12, 1000, 1, {}});
  CHECK(res.values[0] == doctest::Approx(2.0 / 3).epsilon(1e-15));
  std::set<MultiIndex> old, summed;
  for (const auto& r : res.indices) {
    summed.insert(r.k);
    if (!r.active) old.insert(r.k);
  }
  CHECK(old.count({2, 1}) == 1);
  CHECK(old.count({1, 2}) == 1);
  CHECK(summed.count({3, 1}) == 1);
  CHECK(summed.count({1, 3}) == 1);
  // The only mixed index is the admissibility fill-in (2,2).
  for (const auto& k : summed) {
    if (k[0] > 1 && k[1] > 1) CHECK(k == MultiIndex{2, 2});
  }
}

TEST_CASE("dasq on a smooth exponential") {
  auto f = [](std::span<const double> x) { return std::exp(x[0] + 0.5 * x[1]); };
  const auto res = dasq(scalar(2, f), DasqOptions{1e-10, 100000, 1, {}});
  const double reference = tensor_cc({10, 10}, f);
  CHECK(std::abs(res.values[0] / reference - 1.0) < 1e-8);
  CHECK(reference == doctest::Approx(std::sinh(1.0) * std::sinh(0.5) / 0.5).epsilon(1e-13));
  CHECK(res.stop == DasqStop::Tolerance);
}

TEST_CASE("every distinct node is evaluated once") {
  std::mutex m;
  std::set<std::vector<double>> seen;
  std::atomic<int> calls{0};
  IntegrandFamily fam;
  fam.dim = 3;
  fam.evaluate = [&](std::span<const double> xi, std::span<double> out) {
    ++calls;
    std::lock_guard<std::mutex> lock(m);
    seen.insert(std::vector<double>(xi.begin(), xi.end()));
    out[0] = std::exp(xi[0] + 0.3 * xi[1] + 0.1 * xi[2] * xi[0]);
  };
  const auto res = dasq(fam, DasqOptions{1e-9, 5000, 2, {}});
  CHECK(calls.load() == static_cast<int>(res.evaluations));
  CHECK(seen.size() == res.evaluations);
}

TEST_CASE("evaluation budget stops adaptation") {
  auto f = [](std::span<const double> x) { return 1.0 / (1.1 + x[0] + 0.5 * x[1]); };
  const auto res = dasq(scalar(2, f), DasqOptions{1e-15, 50, 1, {}});
  CHECK(res.stop == DasqStop::MaxEvaluations);
  CHECK(res.evaluations > 50);
}

TEST_CASE("index sets stay consistent") {
  auto f = [](std::span<const double> x) { return std::cos(x[0] + 2 * x[1] + x[2]); };
  const auto res = dasq(scalar(3, f), DasqOptions{1e-8, 4000, 1, {}});
  std::unordered_set<MultiIndex, MultiIndexHash> old;
  double eta = 0.0;
  for (const auto& r : res.indices) {
    if (!r.active) old.insert(r.k);
  }
  for (const auto& r : res.indices) {
    CHECK(admissible(r.k, old));
    if (r.active) {
      CHECK(old.count(r.k) == 0);
      eta += r.hbar;
    }
  }
  CHECK(res.eta == doctest::Approx(eta).epsilon(1e-12));

  std::ostringstream csv;
  write_index_sets_csv(csv, res);
  CHECK(csv.str().rfind("k_1,k_2,k_3,set,hbar\n", 0) == 0);
}

TEST_CASE("smolyak consistency") {
  auto f = [](std::span<const double> x) { return std::exp(x[0] + x[1] + x[2]); };
  const double direct = combination_smolyak(3, 5, f);
  const auto res = smolyak_quadrature(scalar(3, f), 5);
  CHECK(std::abs(res.values[0] - direct) < 1e-12);
  for (const auto& r : res.indices) CHECK(in_smolyak_set(r.k, 5));

  const auto grid = smolyak_grid(3, 5);
  double s = 0.0, w = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    s += grid.weights[i] * f(grid.point(i));
    w += grid.weights[i];
  }
  CHECK(std::abs(s - direct) < 1e-12);
  CHECK(std::abs(w - 1.0) < 1e-13);
  CHECK(grid.size() == res.evaluations);
}

TEST_CASE("anisotropic integrand refines the active dimension") {
  auto f = [](std::span<const double> x) { return std::exp(x[0]) + 1e-6 * x[1]; };
  const auto res = dasq(scalar(2, f), DasqOptions{1e-8, 10000, 1, {}});
  const auto levels = res.max_levels();
  CHECK(levels[0] > levels[1]);
}

TEST_CASE("non-finite integrand is reported") {
  auto f = [](std::span<const double> x) { return 1.0 / x[0]; };
  CHECK_THROWS_AS(dasq(scalar(1, f), DasqOptions{}), NonfiniteIntegrand);
}

TEST_CASE("grouped normalization of vector integrands") {
  // Two groups: the second has tiny magnitude but must still converge.
  IntegrandFamily fam;
  fam.dim = 2;
  fam.n_raw = 2;
  fam.n_values = 2;
  fam.groups = {0, 1};
  fam.evaluate = [](std::span<const double> x, std::span<double> out) {
    out[0] = std::exp(x[0]);
    out[1] = 1e-9 * std::exp(2.0 * x[1]);
  };
  const auto res = dasq(fam, DasqOptions{1e-10, 100000, 1, {}});
  CHECK(res.values[0] == doctest::Approx(std::sinh(1.0)).epsilon(1e-9));
  CHECK(res.values[1] == doctest::Approx(1e-9 * std::sinh(2.0) / 2.0).epsilon(1e-9));
}

TEST_CASE("deep rules keep their weights accurate") {
  for (int level : {13, 14}) {
    const QuadRule1D& rule = cc_rule(level);
    const auto n = static_cast<std::int64_t>(rule.nodes.size()) - 1;
    // Oracle: the cosine-moment sum in long double, for a sample of nodes.
    for (std::int64_t i : {std::int64_t{0}, std::int64_t{1}, std::int64_t{7}, n / 3, n / 2}) {
      long double s = 1.0L;
      for (std::int64_t j = 1; j <= n / 2; ++j) {
        const long double b = (2 * j == n) ? 1.0L : 2.0L;
        s -= b / static_cast<long double>(4 * j * j - 1) *
             std::cos(2.0L * 3.14159265358979323846264338327950288L * static_cast<long double>(i * j % n) /
                      static_cast<long double>(n));
      }
      const long double c = (i == 0 || i == n) ? 1.0L : 2.0L;
      const double expected = static_cast<double>(0.5L * c / static_cast<long double>(n) * s);
      CHECK(std::abs(rule.weights[static_cast<std::size_t>(i)] - expected) < 1e-16);
    }
  }
  for (int level = 13; level <= 17; ++level) {
    const QuadRule1D& rule = cc_rule(level);
    KahanSum total;
    for (double w : rule.weights) total += w;
    CHECK(std::abs(total.value() - 1.0) < 1e-14);
    CHECK(std::abs(apply(rule, [](double x) { return x * x * x; })) < 1e-15);
    CHECK(std::abs(apply(rule, [](double x) { return std::pow(x, 40); }) - monomial_mean(40)) < 1e-13);
    CHECK(std::abs(apply(rule, [](double x) { return std::exp(x); }) - 0.5 * (std::exp(1.0) - std::exp(-1.0))) < 1e-14);
  }
}

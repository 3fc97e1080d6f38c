#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "oed/model.hpp"
#include "oed/random.hpp"

namespace oed {

/// Unnormalized log density; non-finite values count as -inf.
using LogDensity = std::function<double(std::span<const double>)>;

/// ln prior + ln likelihood of observed data y at a design.
LogDensity make_log_posterior(ModelPtr model, UniformPrior prior, NoiseModel noise,
                              Vector design, Vector y);

inline double finite_or_minus_inf(double v) {
  return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
}

/// ln min(1, exp(x)).
inline double log_accept(double x) { return std::isnan(x) ? -INFINITY : std::min(0.0, x); }

template <typename State>
struct DrOutcome {
  State state;
  double log_density = 0.0;
  /// 0 stayed, 1 first proposal accepted, 2 delayed-rejection retry accepted.
  int stage = 0;
  bool tried_second = false;
};

/// One Metropolis-Hastings step with a single delayed-rejection retry.
///
/// `propose1(x, rng)` draws from q1(x, .) and `log_q1(x, y)` is its log
/// density; `propose2(x, rng)` draws from a second-stage proposal symmetric
/// in (x, y2). With a1(x, y) = min(1, pi(y) q1(y, x) / (pi(x) q1(x, y))) the
/// retry is accepted with
///   min(1, pi(y2) q1(y2, y1) (1 - a1(y2, y1)) / (pi(x) q1(x, y1) (1 - a1(x, y1)))),
/// which keeps pi invariant and reversible.
template <typename State, typename Target, typename Propose1, typename LogQ1, typename Propose2>
DrOutcome<State> delayed_rejection_step(const State& x, double log_px, Target&& log_pi,
                                        Propose1&& propose1, LogQ1&& log_q1,
                                        Propose2&& propose2, bool use_retry, Rng& rng) {
  auto log_a1 = [&](const State& from, double log_pf, const State& to, double log_pt) -> double {
    if (log_pt == -INFINITY) return -INFINITY;
    return log_accept(log_pt + log_q1(to, from) - log_pf - log_q1(from, to));
  };
  State y1 = propose1(x, rng);
  const double log_py1 = finite_or_minus_inf(log_pi(y1));
  const double log_a1_fwd = log_a1(x, log_px, y1, log_py1);
  if (std::log(uniform01(rng)) < log_a1_fwd) return {std::move(y1), log_py1, 1, false};
  if (!use_retry) return {x, log_px, 0, false};

  State y2 = propose2(x, rng);
  const double log_py2 = finite_or_minus_inf(log_pi(y2));
  if (log_py2 == -INFINITY) return {x, log_px, 0, true};
  const double a1_back = std::exp(log_a1(y2, log_py2, y1, log_py1));
  if (a1_back >= 1.0) return {x, log_px, 0, true};
  const double log_num = log_py2 + log_q1(y2, y1) + std::log1p(-a1_back);
  const double log_den = log_px + log_q1(x, y1) + std::log1p(-std::exp(log_a1_fwd));
  const double log_a2 = log_accept(log_num - log_den);
  if (std::log(uniform01(rng)) < log_a2) return {std::move(y2), log_py2, 2, true};
  return {x, log_px, 0, true};
}

struct DramConfig {
  /// Initial proposal covariance, n x n row major; empty uses
  /// diag(initial_scale^2).
  std::vector<double> proposal_cov;
  double initial_scale = 0.1;
  bool adapt = true;
  std::size_t adapt_start = 1000;
  std::size_t adapt_interval = 100;
  double epsilon = 1e-8;
  /// Second-stage covariance = dr_scale * current covariance.
  bool delayed_rejection = true;
  double dr_scale = 0.2;
  /// Default: the first 20% of the chain.
  std::optional<std::size_t> burn_in;
  std::size_t thin = 1;
  std::uint64_t seed = 0;

  void validate(std::size_t n_theta) const;
};

struct Chain {
  std::size_t n_theta = 0;
  /// One row per step (the state after the step), row major.
  std::vector<double> samples;
  std::vector<double> log_post;
  /// Per step: 0 stayed, 1 stage one accepted, 2 stage two accepted.
  std::vector<int> stage;
  std::size_t proposals_stage1 = 0, accepted_stage1 = 0;
  std::size_t proposals_stage2 = 0, accepted_stage2 = 0;
  std::size_t adaptations = 0;
  std::size_t burn_in = 0;
  std::size_t thin = 1;
  /// Final proposal covariance, n x n row major.
  std::vector<double> proposal_cov;

  std::size_t size() const { return log_post.size(); }
  std::span<const double> sample(std::size_t i) const {
    return std::span<const double>(samples).subspan(i * n_theta, n_theta);
  }
};

/// DRAM: Gaussian random-walk Metropolis with one delayed-rejection retry
/// and adaptive-Metropolis covariance C = s_d (Cov(x_0..x_n) + eps I),
/// s_d = 2.4^2 / n, recomputed from the full history every adapt_interval
/// steps from adapt_start on. Throws NonfiniteStart.
Chain dram_run(const LogDensity& log_posterior, std::span<const double> x0,
               const DramConfig& cfg, std::size_t n_steps);

struct ChainStats {
  std::size_t retained = 0;
  Vector mean;
  /// n x n row major.
  std::vector<double> covariance;
  double acceptance_stage1 = 0.0;
  double acceptance_stage2 = 0.0;
  /// Fraction of steps that moved.
  double acceptance = 0.0;
  /// Per coordinate, from the initial positive sequence of autocorrelations.
  Vector ess;
};

/// Moments of samples burn_in, burn_in + thin, ... Throws EmptyChain.
ChainStats chain_stats(const Chain& chain, std::size_t burn_in, std::size_t thin);
ChainStats chain_stats(const Chain& chain);

/// Effective sample size of a scalar series; 1 for a constant series.
double effective_sample_size(std::span<const double> series);

/// Density on a uniform tensor grid (first coordinate slowest), normalized
/// to integrate to 1 under the trapezoid rule.
struct DensityGrid {
  std::vector<Vector> axes;
  std::vector<double> density;
  std::size_t size() const { return density.size(); }
  Vector point(std::size_t i) const;
  /// -sum w p ln p under the trapezoid rule.
  double entropy() const;
  /// Trapezoid-rule mean of coordinate q.
  double mean(std::size_t q) const;
};

/// Throws AllMinusInfinity when no grid value is finite.
DensityGrid posterior_grid(const LogDensity& log_posterior, const Box& bounds,
                           std::size_t resolution);

/// `step,theta_1..theta_n,logpost,stage_accepted`.
void write_chain_csv(std::ostream& out, const Chain& chain);
/// `theta_1..theta_n,density`.
void write_grid_csv(std::ostream& out, const DensityGrid& grid);

}  // namespace oed

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "oed/eig.hpp"
#include "oed/model.hpp"

namespace oed {

// Both optimizers minimize a NoisyObjective; maximize U(d) by negating it.

/// a_k = a / (A + k + 1)^alpha, c_k = c / (k + 1)^gamma.
struct GainSchedule {
  double a = 0.1;
  double A = 0.0;
  double alpha = 0.602;
  double c = 0.01;
  double gamma = 0.101;

  double a_k(std::size_t k) const;
  double c_k(std::size_t k) const;
  /// Throws ConfigError unless a, c > 0, A >= 0 and alpha, gamma in (0, 1].
  void validate() const;
};

struct OptIterate {
  std::size_t k = 0;
  Vector design;
  /// Noisy evaluations consumed so far.
  std::size_t evals = 0;
  /// SPSA: mean of the perturbed pair around `design`. NMNS: value of the
  /// best vertex. Not evaluated: NaN.
  double score = 0.0;
};

struct OptTrace {
  std::vector<OptIterate> iterates;
  Vector final_design;
  std::size_t budget_used = 0;
  /// "budget" or "collapse".
  std::string stop_reason;
};

struct SpsaGradient {
  Vector gradient;
  Vector delta;
  double f_plus = 0.0;
  double f_minus = 0.0;
};

/// g_i = (f(d + c_k Delta) - f(d - c_k Delta)) / (2 c_k Delta_i) with
/// Delta_i = +-1 drawn from `rng`. Both evaluations use `eval_seed`.
/// Throws NonfiniteObjective.
SpsaGradient spsa_gradient(const NoisyObjective& objective, std::span<const double> design,
                           double c_k, Rng& rng, std::uint64_t eval_seed);

/// Gains from the usual practical rules: c from the spread of 10 pilot
/// evaluations at d0 (kept within [0.001, 0.05] of the smallest box width),
/// A = 10% of the iteration count, and a such that the first step moves
/// about 5% of the smallest box width for the average of 5 pilot gradients.
/// `pilot_evals` receives the number of objective calls (20).
GainSchedule default_gains(const NoisyObjective& objective, std::span<const double> d0,
                           const Box& feasible, std::size_t iterations, std::uint64_t seed,
                           std::size_t* pilot_evals = nullptr);

/// d_{k+1} = P_{k+1}(d_k - a_k g_k), where P_k projects onto the box shrunk
/// by c_k so every perturbed point stays feasible. Runs while two more
/// evaluations fit in `budget`. Throws InfeasibleStart, EmptyShrunkenBox.
OptTrace spsa_run(const NoisyObjective& objective, std::span<const double> d0,
                  const GainSchedule& gains, const Box& feasible, std::size_t budget,
                  std::uint64_t seed);

struct NmnsParams {
  double reflect = 1.0;
  double expand = 2.0;
  double contract = 0.5;
  /// 0.5 is the textbook value; a gentler shrink tolerates noise better.
  double shrink = 0.9;
  /// Initial edge length as a fraction of each box width.
  double edge = 0.1;
  bool reevaluate_best_on_shrink = true;
  void validate() const;
};

/// Nelder-Mead with trial points clamped into the box. Every evaluation uses
/// a fresh stream. Stops when the next evaluation would exceed `budget` or
/// the simplex has collapsed to machine precision. Throws InfeasibleStart.
OptTrace nmns_run(const NoisyObjective& objective, std::span<const double> d0,
                  const Box& feasible, std::size_t budget, const NmnsParams& params,
                  std::uint64_t seed);

enum class Optimizer { Spsa, Nmns };

const char* to_string(Optimizer opt);
Optimizer optimizer_from_string(const std::string& name);

struct EnsembleConfig {
  Optimizer optimizer = Optimizer::Nmns;
  std::size_t n_runs = 100;
  std::size_t budget = 10000;
  /// Start every run here; empty draws a uniform start per run.
  Vector start;
  /// SPSA gains; empty means default_gains per run.
  std::vector<GainSchedule> gains;
  NmnsParams nmns;
  std::uint64_t seed = 0;
  /// Threads across runs.
  std::size_t workers = 1;
  void validate() const;
};

/// High-quality score of a final design, e.g. a large-sample EIG estimate.
using Rescorer = std::function<EigEstimate(std::span<const double> design)>;

struct EnsembleRow {
  std::size_t run = 0;
  bool ok = false;
  Vector start;
  OptTrace trace;
  EigEstimate score;
  std::string error_kind;
  std::string error_message;
};

/// Independent seeded runs, each followed by one rescore of its final
/// design. A failing run is recorded and the others continue.
std::vector<EnsembleRow> ensemble_run(const NoisyObjective& objective, const Box& feasible,
                                      const EnsembleConfig& cfg, const Rescorer& rescore);

/// `k,evals,d_1..d_nd,score`; scores are multiplied by `score_sign`.
void write_trace_csv(std::ostream& out, const OptTrace& trace, double score_sign = 1.0);

/// `run,d_1..d_nd,eig_hq,stderr_hq`; failed runs print nan.
void write_ensemble_csv(std::ostream& out, const std::vector<EnsembleRow>& rows,
                        std::size_t n_design);

}  // namespace oed

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "oed/model.hpp"

namespace oed {

/// Settings of the nested Monte Carlo estimator.
struct EigConfig {
  std::size_t n_out = 1000;
  std::size_t n_in = 1000;
  /// Share one prior batch between the outer samples and every inner sum.
  bool reuse = true;
  std::uint64_t seed = 0;
  /// Threads used across outer samples.
  std::size_t workers = 1;

  /// Throws ConfigError for zero sizes or reuse with n_in != n_out.
  void validate() const;
};

struct EigEstimate {
  double value = 0.0;      // nats
  double std_error = 0.0;  // nats
  std::size_t n_out = 0;
  std::size_t n_in = 0;
};

/// Everything the estimator needs besides the design and sample sizes.
struct EigProblem {
  ModelPtr model;
  UniformPrior prior;
  NoiseModel noise;

  /// Throws DimensionMismatch when model, prior and noise disagree.
  void validate() const;
};

/// Expected information gain at one design,
///   U(d) ~ 1/n_out sum_i [ ln p(y_i | theta_i, d) - ln p^(y_i | d) ],
/// with p^ the n_in-sample prior average of the likelihood, accumulated in
/// log space. Outer samples are drawn from streams derived from cfg.seed,
/// summands are stored per index and summed in index order, so the result
/// does not depend on cfg.workers.
EigEstimate estimate_eig(const EigProblem& problem, std::span<const double> design,
                         const EigConfig& cfg);

/// Uniform tensor grid over a box, `per_dim` nodes per coordinate, first
/// coordinate varying slowest.
std::vector<Vector> uniform_grid(const Box& box, std::size_t per_dim);

struct ScanConfig {
  EigConfig eig;
  /// Use the same random stream at every node (common random numbers)
  /// instead of per-node streams seed ^ hash(node index).
  bool common_random_numbers = false;
  /// Threads across nodes; each node's estimate then runs single-threaded.
  std::size_t workers = 1;
};

struct ScanCell {
  Vector design;
  bool ok = false;
  EigEstimate estimate;
  std::string error_kind;
  std::string error_message;
};

/// One estimate per grid node. Errors at a node are recorded in its cell
/// and the scan continues.
std::vector<ScanCell> grid_scan(const EigProblem& problem,
                                const std::vector<Vector>& grid,
                                const ScanConfig& cfg);

/// Seed used at a scan node.
std::uint64_t scan_node_seed(const ScanConfig& cfg, std::size_t node);

/// Writes `d_1,...,d_nd,eig,std_err,n_out,n_in`; failed cells get nan.
void write_scan_csv(std::ostream& out, const std::vector<ScanCell>& cells);

struct BiasStudyConfig {
  std::vector<std::size_t> n_in_list;
  bool reuse = true;
  /// Outer samples shared by every n_in; realizations partition them.
  std::size_t total_outer = 100000;
  /// Realizations for the resample variant. The reuse variant uses
  /// total_outer / n_in realizations of the n_out = n_in estimator.
  std::size_t replications = 10;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void validate() const;
};

struct BiasRow {
  std::size_t n_in = 0;
  bool reuse = true;
  double mean = 0.0;
  double std = 0.0;  // spread of the realization values
  std::size_t replications = 0;
};

/// Sampling distribution of the estimator as a function of n_in.
///
/// One set of outer pairs (theta_i, y_i) is drawn once and shared by every
/// row (common random numbers), so differences between rows reflect only the
/// inner evidence estimates. Reuse: realization r uses outer samples
/// [r n_in, (r+1) n_in) as both outer and inner batch. Resample: each outer
/// sample gets a fresh inner batch of n_in prior draws; realizations are
/// `replications` equal blocks of the outer samples.
std::vector<BiasRow> bias_study(const EigProblem& problem, std::span<const double> design,
                                const BiasStudyConfig& cfg);

void write_bias_csv(std::ostream& out, const std::vector<BiasRow>& rows);

/// Noisy objective used by the optimizers: value at a design for a given
/// random stream. Calls with equal seeds are common random numbers.
using NoisyObjective = std::function<double(std::span<const double>, std::uint64_t)>;

/// Objective returning estimate_eig(...).value with cfg.seed replaced by the
/// call's seed.
NoisyObjective eig_objective(EigProblem problem, EigConfig cfg);

}  // namespace oed

#include "oed/eig.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "oed/csv.hpp"
#include "oed/errors.hpp"
#include "oed/evidence.hpp"
#include "oed/kahan.hpp"
#include "oed/parallel.hpp"

namespace oed {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

struct OuterBatch {
  std::size_t n = 0;
  std::size_t n_theta = 0;
  std::size_t n_obs = 0;
  std::vector<double> theta;
  std::vector<double> output;
  std::vector<double> y;
  std::vector<double> loglik;

  std::span<const double> y_at(std::size_t i) const {
    return std::span<const double>(y).subspan(i * n_obs, n_obs);
  }
};

void check_design(const EigProblem& problem, std::span<const double> design) {
  if (design.size() != problem.model->n_design()) {
    std::ostringstream msg;
    msg << problem.model->name() << " expects " << problem.model->n_design()
        << " design variables, got " << design.size();
    throw DimensionMismatch(msg.str());
  }
}

// Outer pairs (theta_i, y_i): prior draws and standard-normal noise come from
// two sequential streams, so the pairs depend only on (seed, n).
OuterBatch draw_outer(const EigProblem& problem, std::span<const double> design,
                      std::size_t n, std::uint64_t seed, std::size_t workers) {
  const ForwardModel& model = *problem.model;
  OuterBatch b;
  b.n = n;
  b.n_theta = model.n_theta();
  b.n_obs = model.n_obs();
  b.theta.resize(n * b.n_theta);
  b.output.resize(n * b.n_obs);
  b.y.resize(n * b.n_obs);
  b.loglik.resize(n);

  Rng prior_rng(stream_seed(seed, stream::kPrior));
  for (std::size_t i = 0; i < n; ++i) {
    problem.prior.sample_into(prior_rng, std::span<double>(b.theta).subspan(i * b.n_theta, b.n_theta));
  }
  Rng noise_rng(stream_seed(seed, stream::kNoise));
  for (double& z : b.y) z = standard_normal(noise_rng);

  parallel_for(n, workers, [&](std::size_t i) {
    const auto th = std::span<const double>(b.theta).subspan(i * b.n_theta, b.n_theta);
    const auto g = std::span<double>(b.output).subspan(i * b.n_obs, b.n_obs);
    model.evaluate(th, design, g);
    const auto yi = std::span<double>(b.y).subspan(i * b.n_obs, b.n_obs);
    for (std::size_t c = 0; c < b.n_obs; ++c) {
      yi[c] = g[c] + problem.noise.sigma(c, g[c]) * yi[c];
    }
    b.loglik[i] = log_likelihood_from_output(problem.noise, yi, g);
  });
  return b;
}

// ln p^(y_i) for outer samples [begin, begin + count) using exactly those
// samples' outputs as the inner batch.
void reuse_log_evidence(const EigProblem& problem, const OuterBatch& b,
                        std::size_t begin, std::size_t count, std::size_t workers,
                        std::span<double> out) {
  const auto outputs = std::span<const double>(b.output).subspan(begin * b.n_obs, count * b.n_obs);
  const double log_n = std::log(static_cast<double>(count));
  if (b.n_obs == 1 && problem.noise.is_constant()) {
    const double sigma = problem.noise.sigma(0, 0.0);
    const GaussKernelSum kernel(outputs, sigma);
    const double shift = std::log(sigma) + kHalfLog2Pi + log_n;
    parallel_for(count, workers, [&](std::size_t k) {
      out[begin + k] = kernel.log_sum(b.y[begin + k]) - shift;
    });
    return;
  }
  const InnerLikelihoods inner(problem.noise, outputs, b.n_obs);
  parallel_for(count, workers,
               [&](std::size_t k) { out[begin + k] = inner.log_mean(b.y_at(begin + k)); });
}

std::uint64_t inner_tag(std::size_t n_in) {
  return stream::kInner ^ mix64(static_cast<std::uint64_t>(n_in));
}

// ln p^(y) from a fresh batch of n_in prior draws, streamed without storage.
double resample_log_evidence(const EigProblem& problem, std::span<const double> design,
                             std::span<const double> y, std::size_t n_in,
                             std::uint64_t seed) {
  const ForwardModel& model = *problem.model;
  const NoiseModel& noise = problem.noise;
  const std::size_t n_obs = model.n_obs();
  Rng rng(seed);
  Vector theta(model.n_theta());
  Vector g(n_obs);
  LogSumExp acc(negligible_log_gap(n_in));
  if (noise.is_constant()) {
    Vector half_precision(n_obs);
    double log_norm = 0.0;
    for (std::size_t c = 0; c < n_obs; ++c) {
      const double s = noise.sigma(c, 0.0);
      half_precision[c] = 0.5 / (s * s);
      log_norm += std::log(s) + kHalfLog2Pi;
    }
    for (std::size_t j = 0; j < n_in; ++j) {
      problem.prior.sample_into(rng, theta);
      model.evaluate(theta, design, g);
      double q = 0.0;
      for (std::size_t c = 0; c < n_obs; ++c) {
        const double r = y[c] - g[c];
        q += r * r * half_precision[c];
      }
      acc.add(-q - log_norm);
    }
  } else {
    for (std::size_t j = 0; j < n_in; ++j) {
      problem.prior.sample_into(rng, theta);
      model.evaluate(theta, design, g);
      acc.add(log_likelihood_from_output(noise, y, g));
    }
  }
  return acc.value() - std::log(static_cast<double>(n_in));
}

struct MeanSe {
  double mean = 0.0;
  double std = 0.0;
  double se = 0.0;
};

MeanSe mean_and_spread(std::span<const double> v) {
  MeanSe r;
  const auto n = static_cast<double>(v.size());
  r.mean = kahan_sum(v) / n;
  if (v.size() < 2) return r;
  KahanSum ss;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(ss.value() / (n - 1.0));
  r.se = r.std / std::sqrt(n);
  return r;
}

void check_summand(double s, std::size_t i) {
  if (!std::isfinite(s)) {
    std::ostringstream msg;
    msg << "non-finite information-gain summand " << s << " at outer sample " << i;
    throw NonfiniteObjective(msg.str());
  }
}

}  // namespace

void EigConfig::validate() const {
  if (n_out == 0) throw ConfigError("n_out must be positive");
  if (n_in == 0) throw ConfigError("n_in must be positive");
  if (reuse && n_in != n_out) {
    throw ConfigError("reuse requires n_in == n_out (got n_in=" + std::to_string(n_in) +
                      ", n_out=" + std::to_string(n_out) + ")");
  }
}

void EigProblem::validate() const {
  if (!model) throw ConfigError("no forward model");
  if (prior.dim() != model->n_theta()) {
    throw DimensionMismatch("prior dimension does not match the model's parameter count");
  }
  if (noise.size() != model->n_obs()) {
    throw DimensionMismatch("noise model size does not match the model's output count");
  }
}

EigEstimate estimate_eig(const EigProblem& problem, std::span<const double> design,
                         const EigConfig& cfg) {
  cfg.validate();
  problem.validate();
  check_design(problem, design);

  const OuterBatch b = draw_outer(problem, design, cfg.n_out, cfg.seed, cfg.workers);
  std::vector<double> log_evidence(cfg.n_out);
  if (cfg.reuse) {
    reuse_log_evidence(problem, b, 0, cfg.n_out, cfg.workers, log_evidence);
  } else {
    const std::uint64_t tag = inner_tag(cfg.n_in);
    parallel_for(cfg.n_out, cfg.workers, [&](std::size_t i) {
      log_evidence[i] = resample_log_evidence(problem, design, b.y_at(i), cfg.n_in,
                                              stream_seed(cfg.seed, tag, i));
    });
  }

  std::vector<double> summand(cfg.n_out);
  for (std::size_t i = 0; i < cfg.n_out; ++i) {
    summand[i] = b.loglik[i] - log_evidence[i];
    check_summand(summand[i], i);
  }
  const MeanSe m = mean_and_spread(summand);
  return EigEstimate{m.mean, m.se, cfg.n_out, cfg.n_in};
}

std::vector<Vector> uniform_grid(const Box& box, std::size_t per_dim) {
  if (per_dim < 2) throw ConfigError("a uniform grid needs at least 2 nodes per dimension");
  const std::size_t nd = box.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < nd; ++i) total *= per_dim;
  std::vector<Vector> grid(total, Vector(nd));
  const auto steps = static_cast<double>(per_dim - 1);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (std::size_t q = nd; q-- > 0;) {
      const std::size_t k = rest % per_dim;
      rest /= per_dim;
      const Interval& iv = box[q];
      grid[flat][q] = k + 1 == per_dim ? iv.hi : iv.lo + (iv.width() * static_cast<double>(k)) / steps;
    }
  }
  return grid;
}

std::uint64_t scan_node_seed(const ScanConfig& cfg, std::size_t node) {
  return cfg.common_random_numbers ? cfg.eig.seed : stream_seed(cfg.eig.seed, node);
}

std::vector<ScanCell> grid_scan(const EigProblem& problem, const std::vector<Vector>& grid,
                                const ScanConfig& cfg) {
  if (grid.empty()) throw ConfigError("scan grid is empty");
  cfg.eig.validate();
  problem.validate();
  std::vector<ScanCell> cells(grid.size());
  const bool across_nodes = cfg.workers > 1;
  parallel_for(grid.size(), cfg.workers, [&](std::size_t node) {
    ScanCell& cell = cells[node];
    cell.design = grid[node];
    EigConfig eig = cfg.eig;
    eig.seed = scan_node_seed(cfg, node);
    if (across_nodes) eig.workers = 1;
    try {
      cell.estimate = estimate_eig(problem, cell.design, eig);
      cell.ok = true;
    } catch (const Error& e) {
      cell.error_kind = e.kind();
      cell.error_message = e.what();
    }
  });
  return cells;
}

void write_scan_csv(std::ostream& out, const std::vector<ScanCell>& cells) {
  const std::size_t nd = cells.empty() ? 0 : cells.front().design.size();
  for (std::size_t q = 0; q < nd; ++q) out << "d_" << q + 1 << ',';
  out << "eig,std_err,n_out,n_in\n";
  for (const auto& cell : cells) {
    for (double x : cell.design) out << format_double(x) << ',';
    if (cell.ok) {
      out << format_double(cell.estimate.value) << ',' << format_double(cell.estimate.std_error)
          << ',' << cell.estimate.n_out << ',' << cell.estimate.n_in << '\n';
    } else {
      out << "nan,nan,0,0\n";
    }
  }
}

void BiasStudyConfig::validate() const {
  if (n_in_list.empty()) throw ConfigError("bias study needs at least one n_in");
  if (replications < 2) throw ConfigError("bias study needs at least 2 replications");
  for (std::size_t n_in : n_in_list) {
    if (n_in == 0) throw ConfigError("n_in must be positive");
    if (reuse && total_outer / n_in < 2) {
      throw ConfigError("total_outer must hold at least 2 reuse realizations of n_in=" +
                        std::to_string(n_in));
    }
  }
  if (!reuse && total_outer < replications) {
    throw ConfigError("total_outer must be at least the number of replications");
  }
}

std::vector<BiasRow> bias_study(const EigProblem& problem, std::span<const double> design,
                                const BiasStudyConfig& cfg) {
  cfg.validate();
  problem.validate();
  check_design(problem, design);
  const OuterBatch b = draw_outer(problem, design, cfg.total_outer, cfg.seed, cfg.workers);

  std::vector<BiasRow> rows;
  std::vector<double> log_evidence(cfg.total_outer);
  for (std::size_t n_in : cfg.n_in_list) {
    const std::size_t realizations = cfg.reuse ? cfg.total_outer / n_in : cfg.replications;
    const std::size_t block = cfg.reuse ? n_in : cfg.total_outer / realizations;
    const std::size_t used = realizations * block;
    if (cfg.reuse) {
      for (std::size_t r = 0; r < realizations; ++r) {
        reuse_log_evidence(problem, b, r * block, block, cfg.workers, log_evidence);
      }
    } else {
      const std::uint64_t tag = inner_tag(n_in);
      parallel_for(used, cfg.workers, [&](std::size_t i) {
        log_evidence[i] = resample_log_evidence(problem, design, b.y_at(i), n_in,
                                                stream_seed(cfg.seed, tag, i));
      });
    }
    std::vector<double> values(realizations);
    std::vector<double> summand(block);
    for (std::size_t r = 0; r < realizations; ++r) {
      for (std::size_t k = 0; k < block; ++k) {
        const std::size_t i = r * block + k;
        summand[k] = b.loglik[i] - log_evidence[i];
        check_summand(summand[k], i);
      }
      values[r] = kahan_sum(summand) / static_cast<double>(block);
    }
    const MeanSe m = mean_and_spread(values);
    rows.push_back(BiasRow{n_in, cfg.reuse, m.mean, m.std, realizations});
  }
  return rows;
}

void write_bias_csv(std::ostream& out, const std::vector<BiasRow>& rows) {
  out << "n_in,reuse,mean,std,replications\n";
  for (const auto& r : rows) {
    out << r.n_in << ',' << (r.reuse ? "true" : "false") << ',' << format_double(r.mean) << ','
        << format_double(r.std) << ',' << r.replications << '\n';
  }
}

NoisyObjective eig_objective(EigProblem problem, EigConfig cfg) {
  cfg.validate();
  problem.validate();
  return [problem = std::move(problem), cfg](std::span<const double> design,
                                             std::uint64_t seed) {
    EigConfig c = cfg;
    c.seed = seed;
    return estimate_eig(problem, design, c).value;
  };
}

}  // namespace oed

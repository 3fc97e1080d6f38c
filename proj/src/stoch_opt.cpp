#include "oed/stoch_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "oed/csv.hpp"
#include "oed/errors.hpp"
#include "oed/parallel.hpp"

namespace oed {

namespace {

double checked(double v, std::span<const double> design) {
  if (!std::isfinite(v)) {
    std::string where;
    for (double x : design) where += (where.empty() ? "" : ", ") + format_double(x);
    throw NonfiniteObjective("objective returned " + format_double(v) + " at (" + where + ")");
  }
  return v;
}

void require_feasible_start(const Box& feasible, std::span<const double> d0) {
  if (d0.size() != feasible.size()) {
    throw DimensionMismatch("start point has " + std::to_string(d0.size()) +
                            " coordinates, the feasible box " + std::to_string(feasible.size()));
  }
  if (!feasible.contains(d0)) throw InfeasibleStart("start point lies outside the feasible box");
}

Box shrunk_by(const Box& box, double margin) {
  const Vector m(box.size(), margin);
  return box.shrunk(m);
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

double GainSchedule::a_k(std::size_t k) const {
  return a / std::pow(A + static_cast<double>(k) + 1.0, alpha);
}

double GainSchedule::c_k(std::size_t k) const {
  return c / std::pow(static_cast<double>(k) + 1.0, gamma);
}

void GainSchedule::validate() const {
  if (!(a > 0.0 && std::isfinite(a))) throw ConfigError("SPSA gain a must be positive");
  if (!(c > 0.0 && std::isfinite(c))) throw ConfigError("SPSA gain c must be positive");
  if (!(A >= 0.0 && std::isfinite(A))) throw ConfigError("SPSA stability constant A must be >= 0");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("SPSA alpha must lie in (0, 1]");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("SPSA gamma must lie in (0, 1]");
}

SpsaGradient spsa_gradient(const NoisyObjective& objective, std::span<const double> design,
                           double c_k, Rng& rng, std::uint64_t eval_seed) {
  const std::size_t n = design.size();
  SpsaGradient out;
  out.delta.resize(n);
  for (auto& s : out.delta) s = (rng() >> 63) ? 1.0 : -1.0;
  Vector plus(design.begin(), design.end()), minus = plus;
  for (std::size_t i = 0; i < n; ++i) {
    plus[i] += c_k * out.delta[i];
    minus[i] -= c_k * out.delta[i];
  }
  out.f_plus = checked(objective(plus, eval_seed), plus);
  out.f_minus = checked(objective(minus, eval_seed), minus);
  out.gradient.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.gradient[i] = (out.f_plus - out.f_minus) / (2.0 * c_k * out.delta[i]);
  }
  return out;
}

GainSchedule default_gains(const NoisyObjective& objective, std::span<const double> d0,
                           const Box& feasible, std::size_t iterations, std::uint64_t seed,
                           std::size_t* pilot_evals) {
  require_feasible_start(feasible, d0);
  const double width = feasible.min_width();
  GainSchedule g;
  g.A = 0.1 * static_cast<double>(iterations);

  constexpr std::size_t kPilot = 10;
  std::vector<double> f(kPilot);
  for (std::size_t i = 0; i < kPilot; ++i) {
    f[i] = checked(objective(d0, stream_seed(seed, stream::kPilot, i)), d0);
  }
  const double mean = std::accumulate(f.begin(), f.end(), 0.0) / kPilot;
  double ss = 0.0;
  for (double v : f) ss += (v - mean) * (v - mean);
  const double spread = std::sqrt(ss / (kPilot - 1));
  g.c = std::clamp(spread, 1e-3 * width, 0.05 * width);

  const Box inner = shrunk_by(feasible, g.c);
  const Vector start = inner.project(d0);
  Rng rng(stream_seed(seed, stream::kPilot, kPilot));
  constexpr std::size_t kGradients = 5;
  double mag = 0.0;
  for (std::size_t j = 0; j < kGradients; ++j) {
    const auto est = spsa_gradient(objective, start, g.c, rng,
                                   stream_seed(seed, stream::kPilot, kPilot + 1 + j));
    double m = 0.0;
    for (double v : est.gradient) m = std::max(m, std::abs(v));
    mag += m / kGradients;
  }
  // A flat pilot gives no scale; fall back to a unit gradient.
  if (!(mag > 0.0)) mag = 1.0;
  g.a = 0.05 * width * std::pow(g.A + 1.0, g.alpha) / mag;
  if (pilot_evals) *pilot_evals = kPilot + 2 * kGradients;
  return g;
}

OptTrace spsa_run(const NoisyObjective& objective, std::span<const double> d0,
                  const GainSchedule& gains, const Box& feasible, std::size_t budget,
                  std::uint64_t seed) {
  gains.validate();
  require_feasible_start(feasible, d0);
  OptTrace trace;
  Rng rng(stream_seed(seed, stream::kPerturb));
  Vector d = shrunk_by(feasible, gains.c_k(0)).project(d0);
  std::size_t evals = 0;
  std::size_t k = 0;
  for (; evals + 2 <= budget; ++k) {
    const double c = gains.c_k(k);
    const auto est = spsa_gradient(objective, d, c, rng, stream_seed(seed, stream::kEval, k));
    evals += 2;
    trace.iterates.push_back({k, d, evals, 0.5 * (est.f_plus + est.f_minus)});
    Vector next = d;
    const double a = gains.a_k(k);
    for (std::size_t i = 0; i < d.size(); ++i) next[i] -= a * est.gradient[i];
    d = shrunk_by(feasible, gains.c_k(k + 1)).project(next);
  }
  trace.iterates.push_back({k, d, evals, nan()});
  trace.final_design = d;
  trace.budget_used = evals;
  trace.stop_reason = "budget";
  return trace;
}

void NmnsParams::validate() const {
  if (!(reflect > 0.0)) throw ConfigError("Nelder-Mead reflection must be positive");
  if (!(expand > 1.0 && expand > reflect)) {
    throw ConfigError("Nelder-Mead expansion must exceed 1 and the reflection");
  }
  if (!(contract > 0.0 && contract < 1.0)) throw ConfigError("Nelder-Mead contraction must lie in (0, 1)");
  if (!(shrink > 0.0 && shrink < 1.0)) throw ConfigError("Nelder-Mead shrink must lie in (0, 1)");
  if (!(edge > 0.0 && edge <= 0.5)) throw ConfigError("Nelder-Mead edge fraction must lie in (0, 0.5]");
}

OptTrace nmns_run(const NoisyObjective& objective, std::span<const double> d0,
                  const Box& feasible, std::size_t budget, const NmnsParams& params,
                  std::uint64_t seed) {
  params.validate();
  require_feasible_start(feasible, d0);
  const std::size_t n = d0.size();
  OptTrace trace;
  std::size_t evals = 0;

  auto evaluate = [&](const Vector& x) {
    const double v = checked(objective(x, stream_seed(seed, stream::kEval, evals)), x);
    ++evals;
    return v;
  };

  struct Vertex {
    Vector x;
    double f;
  };
  std::vector<Vertex> simplex;
  simplex.reserve(n + 1);
  auto finish = [&](const char* reason) {
    const auto best = std::min_element(simplex.begin(), simplex.end(),
                                       [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    trace.final_design = simplex.empty() ? Vector(d0.begin(), d0.end()) : best->x;
    trace.budget_used = evals;
    trace.stop_reason = reason;
    return trace;
  };

  // Axis-aligned start; an edge that would leave the box points inward.
  for (std::size_t v = 0; v <= n; ++v) {
    if (evals >= budget) return finish("budget");
    Vector x(d0.begin(), d0.end());
    if (v > 0) {
      const Interval& b = feasible[v - 1];
      const double h = params.edge * b.width();
      x[v - 1] = x[v - 1] + h <= b.hi ? x[v - 1] + h : x[v - 1] - h;
      x = feasible.project(x);
    }
    simplex.push_back({x, evaluate(x)});
  }

  auto order = [&] {
    std::stable_sort(simplex.begin(), simplex.end(),
                     [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
  };
  auto collapsed = [&] {
    double spread = 0.0;
    for (std::size_t v = 1; v <= n; ++v) {
      for (std::size_t i = 0; i < n; ++i) {
        spread = std::max(spread, std::abs(simplex[v].x[i] - simplex[0].x[i]) / feasible[i].width());
      }
    }
    return spread <= std::numeric_limits<double>::epsilon();
  };
  auto along = [&](const Vector& from, const Vector& to, double t) {
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = from[i] + t * (to[i] - from[i]);
    return feasible.project(x);
  };

  order();
  for (std::size_t k = 0;; ++k) {
    trace.iterates.push_back({k, simplex[0].x, evals, simplex[0].f});
    if (collapsed()) return finish("collapse");
    if (evals >= budget) return finish("budget");

    Vector centroid(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v].x[i] / static_cast<double>(n);
    }
    const Vertex& worst = simplex[n];
    const Vector xr = along(centroid, worst.x, -params.reflect);
    const double fr = evaluate(xr);

    if (fr < simplex[0].f) {
      if (evals >= budget) {
        simplex[n] = {xr, fr};
      } else {
        const Vector xe = along(centroid, worst.x, -params.expand);
        const double fe = evaluate(xe);
        simplex[n] = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
      }
    } else if (fr < simplex[n - 1].f) {
      simplex[n] = {xr, fr};
    } else {
      bool accepted = false;
      if (evals < budget) {
        const bool outside = fr < worst.f;
        const Vector xc = outside ? along(centroid, xr, params.contract)
                                  : along(centroid, worst.x, params.contract);
        const double fc = evaluate(xc);
        if (outside ? fc <= fr : fc < worst.f) {
          simplex[n] = {xc, fc};
          accepted = true;
        }
      }
      if (!accepted) {
        for (std::size_t v = 1; v <= n && evals < budget; ++v) {
          simplex[v].x = along(simplex[0].x, simplex[v].x, params.shrink);
          simplex[v].f = evaluate(simplex[v].x);
        }
        if (params.reevaluate_best_on_shrink && evals < budget) simplex[0].f = evaluate(simplex[0].x);
      }
    }
    order();
  }
}

const char* to_string(Optimizer opt) { return opt == Optimizer::Spsa ? "spsa" : "nmns"; }

Optimizer optimizer_from_string(const std::string& name) {
  if (name == "spsa") return Optimizer::Spsa;
  if (name == "nmns") return Optimizer::Nmns;
  throw ConfigError("unknown optimizer '" + name + "' (expected spsa or nmns)");
}

void EnsembleConfig::validate() const {
  if (n_runs == 0) throw ConfigError("ensemble needs at least one run");
  if (budget < 2) throw ConfigError("optimizer budget must allow at least 2 evaluations");
  if (!gains.empty() && gains.size() != 1 && gains.size() != n_runs) {
    throw ConfigError("give one SPSA gain schedule or one per run");
  }
  for (const auto& g : gains) g.validate();
  nmns.validate();
}

std::vector<EnsembleRow> ensemble_run(const NoisyObjective& objective, const Box& feasible,
                                      const EnsembleConfig& cfg, const Rescorer& rescore) {
  cfg.validate();
  if (!cfg.start.empty()) require_feasible_start(feasible, cfg.start);
  std::vector<EnsembleRow> rows(cfg.n_runs);
  parallel_for(cfg.n_runs, cfg.workers, [&](std::size_t r) {
    EnsembleRow& row = rows[r];
    row.run = r;
    const std::uint64_t run_seed = stream_seed(cfg.seed, stream::kRun, r);
    if (cfg.start.empty()) {
      Rng rng(stream_seed(run_seed, stream::kStart));
      row.start = UniformPrior(feasible).sample(rng);
    } else {
      row.start = cfg.start;
    }
    try {
      if (cfg.optimizer == Optimizer::Spsa) {
        std::size_t pilot = 0;
        GainSchedule gains;
        if (cfg.gains.empty()) {
          gains = default_gains(objective, row.start, feasible, cfg.budget / 2, run_seed, &pilot);
        } else {
          gains = cfg.gains.size() == 1 ? cfg.gains.front() : cfg.gains[r];
        }
        if (pilot > cfg.budget) throw ConfigError("budget too small for SPSA gain calibration");
        row.trace = spsa_run(objective, row.start, gains, feasible, cfg.budget - pilot, run_seed);
        row.trace.budget_used += pilot;
        for (auto& it : row.trace.iterates) it.evals += pilot;
      } else {
        row.trace = nmns_run(objective, row.start, feasible, cfg.budget, cfg.nmns, run_seed);
      }
      row.score = rescore(row.trace.final_design);
      row.ok = true;
    } catch (const Error& e) {
      row.error_kind = e.kind();
      row.error_message = e.what();
    }
  });
  return rows;
}

void write_trace_csv(std::ostream& out, const OptTrace& trace, double score_sign) {
  const std::size_t nd = trace.final_design.size();
  out << "k,evals";
  for (std::size_t q = 0; q < nd; ++q) out << ",d_" << q + 1;
  out << ",score\n";
  for (const auto& it : trace.iterates) {
    out << it.k << ',' << it.evals;
    for (double x : it.design) out << ',' << format_double(x);
    out << ',' << format_double(score_sign * it.score) << '\n';
  }
}

void write_ensemble_csv(std::ostream& out, const std::vector<EnsembleRow>& rows,
                        std::size_t n_design) {
  out << "run";
  for (std::size_t q = 0; q < n_design; ++q) out << ",d_" << q + 1;
  out << ",eig_hq,stderr_hq\n";
  for (const auto& row : rows) {
    out << row.run;
    for (std::size_t q = 0; q < n_design; ++q) {
      out << ',' << (row.ok ? format_double(row.trace.final_design[q]) : "nan");
    }
    if (row.ok) {
      out << ',' << format_double(row.score.value) << ',' << format_double(row.score.std_error) << '\n';
    } else {
      out << ",nan,nan\n";
    }
  }
}

}  // namespace oed

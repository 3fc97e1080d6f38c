#include "cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "cli/acceptance.hpp"
#include "cli/registry.hpp"
#include "oed/csv.hpp"
#include "oed/errors.hpp"
#include "oed/kinetics/observables.hpp"
#include "oed/mcmc.hpp"
#include "oed/pce.hpp"
#include "oed/stoch_opt.hpp"

namespace oed::cli {

namespace fs = std::filesystem;

namespace {

std::ofstream open_artifact(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CommandFailure("IoError", "cannot write " + path.string(), kExitFailure);
  return out;
}

void close_artifact(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw CommandFailure("IoError", "failed writing " + path.string(), kExitFailure);
}

// Provenance as a JSON object for JSON artifacts.
Json provenance_json(const RunConfig& cfg, const std::string& command) {
  Json shown = cfg.resolved;
  shown.erase("workers");
  shown.erase("out");
  return Json{{"command", command}, {"seed", cfg.seed}, {"config", shown}};
}

void write_json(const fs::path& path, const Json& j) {
  auto out = open_artifact(path);
  out << j.dump(2) << '\n';
  close_artifact(out, path);
}

std::string format_vector(std::span<const double> v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s + ")";
}

void check_size(const Vector& v, std::size_t n, const std::string& what) {
  if (v.size() != n) {
    throw ConfigError("'" + what + "' needs " + std::to_string(n) + " values, got " +
                      std::to_string(v.size()));
  }
}

Json to_json(const Vector& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

void scan(const RunConfig& cfg, std::ostream& log) {
  const ModelSetup setup = build_model(cfg);
  const auto grid = uniform_grid(setup.design_box, cfg.scan_nodes);
  ScanConfig sc{cfg.estimator, cfg.common_random_numbers, cfg.workers};
  const auto cells = grid_scan(setup.problem(), grid, sc);

  const fs::path path = cfg.out / "scan.csv";
  auto out = open_artifact(path);
  write_comment_block(out, provenance(cfg, "scan"));
  write_scan_csv(out, cells);
  close_artifact(out, path);

  std::size_t failed = 0;
  const ScanCell* best = nullptr;
  for (const auto& c : cells) {
    if (!c.ok) {
      ++failed;
      continue;
    }
    if (!best || c.estimate.value > best->estimate.value) best = &c;
  }
  log << "scan: " << cells.size() << " nodes written to " << path.string() << '\n';
  if (best) {
    log << "scan: argmax " << format_vector(best->design) << " eig " << format_double(best->estimate.value)
        << " +- " << format_double(best->estimate.std_error) << '\n';
  }
  if (failed) {
    const auto& first = *std::find_if(cells.begin(), cells.end(), [](const ScanCell& c) { return !c.ok; });
    throw CommandFailure(first.error_kind, std::to_string(failed) + " of " + std::to_string(cells.size()) +
                                               " scan nodes failed; first: " + first.error_message,
                         kExitFailure);
  }
}

void optimize(const RunConfig& cfg, std::ostream& log) {
  const ModelSetup setup = build_model(cfg);
  const EigProblem problem = setup.problem();
  EigConfig inner = cfg.estimator;
  inner.workers = 1;
  const NoisyObjective utility = eig_objective(problem, inner);
  const NoisyObjective objective = [utility](std::span<const double> d, std::uint64_t seed) {
    return -utility(d, seed);
  };
  EigConfig hq = cfg.optimize.rescore;
  hq.seed = stream_seed(cfg.seed, stream::kRescore);
  hq.workers = 1;
  const Rescorer rescore = [&](std::span<const double> d) { return estimate_eig(problem, d, hq); };
  EnsembleConfig ens = cfg.optimize.ensemble;
  if (!ens.start.empty()) check_size(ens.start, setup.model->n_design(), "optimize.start");
  const auto rows = ensemble_run(objective, setup.design_box, ens, rescore);

  const std::string prov = provenance(cfg, "optimize");
  const fs::path path = cfg.out / "ensemble.csv";
  auto out = open_artifact(path);
  write_comment_block(out, prov);
  write_ensemble_csv(out, rows, setup.model->n_design());
  close_artifact(out, path);
  std::size_t failed = 0;
  for (const auto& row : rows) {
    if (!row.ok) {
      ++failed;
      continue;
    }
    char name[32];
    std::snprintf(name, sizeof name, "run_%04zu.csv", row.run);
    const fs::path trace_path = cfg.out / "traces" / name;
    auto trace = open_artifact(trace_path);
    write_comment_block(trace, prov + "\nrun " + std::to_string(row.run));
    write_trace_csv(trace, row.trace, -1.0);
    close_artifact(trace, trace_path);
  }
  const EnsembleRow* best = nullptr;
  for (const auto& row : rows) {
    if (row.ok && (!best || row.score.value > best->score.value)) best = &row;
  }
  log << "optimize: " << rows.size() << " " << to_string(ens.optimizer) << " runs written to "
      << path.string() << '\n';
  if (best) {
    log << "optimize: best final design " << format_vector(best->trace.final_design) << " eig "
        << format_double(best->score.value) << '\n';
  }
  if (failed) {
    const auto& first = *std::find_if(rows.begin(), rows.end(), [](const EnsembleRow& r) { return !r.ok; });
    throw CommandFailure(first.error_kind, std::to_string(failed) + " of " + std::to_string(rows.size()) +
                                               " runs failed; first: " + first.error_message,
                         kExitFailure);
  }
}

void surrogate(const RunConfig& cfg, std::ostream& log) {
  const ModelSetup setup = build_model(cfg);
  if (setup.experiments != 1) throw ConfigError("surrogates are built for a single experiment");
  const InputMap map(setup.prior, setup.base_design_box);
  NispResult res = nisp_project(*setup.base, map, cfg.surrogate.nisp);
  if (setup.base->name() == "kinetics") {
    res.expansion.output_names = kinetics::ObservableSet::names();
    res.expansion.output_units = kinetics::ObservableSet::units();
  }

  const fs::path path = cfg.out / cfg.surrogate.file;
  auto out = open_artifact(path);
  save_expansion(out, res.expansion, provenance(cfg, "surrogate"));
  close_artifact(out, path);

  Json report = provenance_json(cfg, "surrogate");
  report["expansion_file"] = cfg.surrogate.file;
  report["p"] = res.expansion.p;
  report["terms"] = res.expansion.n_terms();
  report["stop"] = to_string(res.stop);
  report["eta"] = res.eta;
  report["evaluations"] = res.evaluations;
  report["max_levels"] = res.max_levels;
  if (cfg.surrogate.error_level > 0) {
    const auto errors = relative_l2_error(res.expansion, *setup.base, cfg.surrogate.error_level, cfg.workers);
    Json e = Json::object();
    for (std::size_t c = 0; c < errors.size(); ++c) e[res.expansion.output_names[c]] = errors[c];
    report["error_level"] = cfg.surrogate.error_level;
    report["relative_l2_error"] = e;
    log << "surrogate: max relative L2 error " << format_double(*std::max_element(errors.begin(), errors.end()))
        << '\n';
  }
  write_json(cfg.out / "surrogate_report.json", report);
  log << "surrogate: p=" << res.expansion.p << ", " << res.evaluations << " model runs, stop "
      << to_string(res.stop) << ", written to " << path.string() << '\n';
  if (res.stop == DasqStop::MaxEvaluations) {
    const std::string msg = "max_evals=" + std::to_string(cfg.surrogate.nisp.max_evals) +
                            " reached with eta=" + format_double(res.eta) + " above tol";
    if (cfg.surrogate.require_tolerance) throw CommandFailure("BudgetExhausted", msg, kExitBudget);
    log << "surrogate: warning: " << msg << '\n';
  }
}

void infer(const RunConfig& cfg, std::ostream& log) {
  const ModelSetup setup = build_model(cfg);
  const InferSettings& s = cfg.infer;
  const std::size_t nt = setup.model->n_theta();
  if (!s.design) throw ConfigError("'infer.design' is required");
  check_size(*s.design, setup.model->n_design(), "infer.design");
  if (!setup.design_box.contains(*s.design)) throw ConfigError("'infer.design' lies outside the design box");
  Vector y;
  if (s.data) {
    y = *s.data;
    check_size(y, setup.model->n_obs(), "infer.data");
  } else {
    if (!s.theta_true) throw ConfigError("'infer' needs 'data' or 'theta_true'");
    check_size(*s.theta_true, nt, "infer.theta_true");
    Rng rng = make_rng(stream_seed(cfg.seed, stream::kNoise));
    y = sample_observation(*setup.model, setup.noise, *s.theta_true, *s.design, rng);
  }
  const LogDensity log_post = make_log_posterior(setup.model, UniformPrior(setup.prior), setup.noise, *s.design, y);

  Vector start(nt);
  for (std::size_t i = 0; i < nt; ++i) start[i] = 0.5 * (setup.prior[i].lo + setup.prior[i].hi);
  if (s.start) {
    check_size(*s.start, nt, "infer.start");
    start = *s.start;
  }
  DramConfig dram = s.dram;
  dram.proposal_cov.assign(nt * nt, 0.0);
  for (std::size_t i = 0; i < nt; ++i) {
    const double sd = s.initial_scale * setup.prior[i].width();
    dram.proposal_cov[i * nt + i] = sd * sd;
  }
  dram.validate(nt);
  const Chain chain = dram_run(log_post, start, dram, s.n_steps);
  const ChainStats stats = chain_stats(chain);

  const std::string prov = provenance(cfg, "infer");
  const fs::path chain_path = cfg.out / "chain.csv";
  auto out = open_artifact(chain_path);
  write_comment_block(out, prov);
  write_chain_csv(out, chain);
  close_artifact(out, chain_path);

  Json summary = provenance_json(cfg, "infer");
  summary["design"] = to_json(*s.design);
  summary["data"] = to_json(y);
  summary["burn_in"] = chain.burn_in;
  summary["thin"] = chain.thin;
  summary["retained"] = stats.retained;
  summary["mean"] = to_json(stats.mean);
  summary["covariance"] = to_json(stats.covariance);
  summary["ess"] = to_json(stats.ess);
  summary["acceptance"] = stats.acceptance;
  summary["acceptance_stage1"] = stats.acceptance_stage1;
  summary["acceptance_stage2"] = stats.acceptance_stage2;
  summary["adaptations"] = chain.adaptations;

  if (s.grid_resolution > 0) {
    if (nt > 2) {
      log << "infer: density grid skipped for " << nt << " parameters\n";
    } else {
      const DensityGrid grid = posterior_grid(log_post, setup.prior, s.grid_resolution);
      const fs::path grid_path = cfg.out / "density.csv";
      auto g = open_artifact(grid_path);
      write_comment_block(g, prov);
      write_grid_csv(g, grid);
      close_artifact(g, grid_path);
      Vector gm(nt);
      for (std::size_t q = 0; q < nt; ++q) gm[q] = grid.mean(q);
      summary["grid_mean"] = to_json(gm);
      summary["grid_entropy"] = grid.entropy();
    }
  }
  write_json(cfg.out / "posterior_summary.json", summary);
  log << "infer: " << chain.size() << " steps, posterior mean " << format_vector(stats.mean) << ", acceptance "
      << format_double(stats.acceptance) << '\n';
}

void bias(const RunConfig& cfg, std::ostream& log) {
  const ModelSetup setup = build_model(cfg);
  if (!cfg.bias.design) throw ConfigError("'bias.design' is required");
  check_size(*cfg.bias.design, setup.model->n_design(), "bias.design");
  const auto rows = bias_study(setup.problem(), *cfg.bias.design, cfg.bias.study);
  const fs::path path = cfg.out / "bias.csv";
  auto out = open_artifact(path);
  write_comment_block(out, provenance(cfg, "bias"));
  write_bias_csv(out, rows);
  close_artifact(out, path);
  log << "bias: " << rows.size() << " rows written to " << path.string() << '\n';
}

std::string csv_quote(const std::string& s) {
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

void validate(const RunConfig& cfg, std::ostream& log) {
  AcceptanceOptions opts;
  opts.criteria = cfg.criteria;
  opts.seed = cfg.seed;
  opts.workers = cfg.workers;
  opts.scratch = cfg.out / "scratch";
  opts.on_result = [&log](const CriterionResult& r) { log << format_result(r) << std::endl; };
  const auto results = run_acceptance(opts);
  fs::remove_all(opts.scratch);

  const fs::path path = cfg.out / "validate.csv";
  auto out = open_artifact(path);
  write_comment_block(out, provenance(cfg, "validate"));
  out << "criterion,name,passed,detail\n";
  std::size_t failed = 0;
  for (const auto& r : results) {
    out << r.id << ',' << csv_quote(r.name) << ',' << (r.passed ? "true" : "false") << ','
        << csv_quote(r.detail) << '\n';
    failed += !r.passed;
  }
  close_artifact(out, path);
  log << "validate: " << results.size() - failed << " of " << results.size() << " criteria passed\n";
  if (failed) {
    throw CommandFailure("AcceptanceFailure", std::to_string(failed) + " acceptance criteria failed",
                         kExitFailure);
  }
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"scan", "optimize", "surrogate", "infer", "bias", "validate"};
  return names;
}

void run_command(const std::string& command, const RunConfig& cfg, std::ostream& log) {
  if (command == "scan") return scan(cfg, log);
  if (command == "optimize") return optimize(cfg, log);
  if (command == "surrogate") return surrogate(cfg, log);
  if (command == "infer") return infer(cfg, log);
  if (command == "bias") return bias(cfg, log);
  if (command == "validate") return validate(cfg, log);
  throw ConfigError("unknown command '" + command + "'");
}

std::string error_record(const std::string& kind, const std::string& message, const std::string& command) {
  return Json{{"error", {{"kind", kind}, {"message", message}, {"command", command}}}}.dump();
}

}  // namespace oed::cli

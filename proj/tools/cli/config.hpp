#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "oed/eig.hpp"
#include "oed/mcmc.hpp"
#include "oed/model.hpp"
#include "oed/pce.hpp"
#include "oed/stoch_opt.hpp"

namespace oed::cli {

using Json = nlohmann::json;

struct ModelSettings {
  /// simple, simple-batch2, kinetics or pce-surrogate.
  std::string name = "simple";
  /// Conditionally independent copies of the base model.
  std::size_t experiments = 1;
  /// Expansion file for pce-surrogate.
  std::string expansion;
  std::string mechanism;
  std::string thermo;
  double pressure = 101325.0;
  double t_end = 1.0;
  double rtol = 1e-8;
  double atol = 1e-14;
};

struct OptimizeSettings {
  EnsembleConfig ensemble;
  /// Applied to every run when present; otherwise gains are tuned per run.
  std::optional<GainSchedule> gains;
  EigConfig rescore;
};

struct SurrogateSettings {
  NispOptions nisp;
  /// Smolyak level of the L2 error report; 0 skips the report.
  int error_level = 0;
  /// Treat stopping on max_evals before tol as a failure.
  bool require_tolerance = false;
  std::string file = "expansion.txt";
};

struct InferSettings {
  std::optional<Vector> design;
  std::optional<Vector> theta_true;
  std::optional<Vector> data;
  std::optional<Vector> start;
  std::size_t n_steps = 20000;
  /// Initial proposal standard deviation per coordinate, as a fraction of
  /// the prior width.
  double initial_scale = 0.1;
  DramConfig dram;
  /// Nodes per dimension of the posterior density grid; 0 skips it.
  std::size_t grid_resolution = 201;
};

struct BiasSettings {
  std::optional<Vector> design;
  BiasStudyConfig study;
};

/// Validated run configuration.
struct RunConfig {
  /// Defaults merged with the user's values.
  Json resolved;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::filesystem::path out = "out";
  ModelSettings model;
  std::optional<Box> prior;
  std::optional<Box> design_box;
  std::optional<double> noise_sigma;
  std::optional<std::vector<NoiseComponent>> noise_components;
  EigConfig estimator;
  std::size_t scan_nodes = 101;
  bool common_random_numbers = false;
  OptimizeSettings optimize;
  SurrogateSettings surrogate;
  InferSettings infer;
  BiasSettings bias;
  std::vector<int> criteria;
};

/// Every recognized key with its default; null defaults accept any type and
/// are checked when the value is read.
const Json& config_defaults();

/// Applies `path.to.key=value`; the value is parsed as JSON and taken as a
/// string when that fails.
void apply_override(Json& user, std::string_view assignment);

/// Rejects unknown keys and mistyped values, merges defaults and checks
/// every setting. Throws ConfigError.
RunConfig resolve_config(const Json& user);

/// Reads a JSON file. Throws ConfigError.
Json read_config_file(const std::filesystem::path& path);

/// Text embedded in every artifact: command, seed and the resolved config
/// without the execution-only keys (workers, out).
std::string provenance(const RunConfig& cfg, std::string_view command);

}  // namespace oed::cli

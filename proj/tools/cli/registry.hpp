#pragma once

#include "cli/config.hpp"
#include "oed/eig.hpp"
#include "oed/model.hpp"

namespace oed::cli {

/// Model chosen by name with its prior, design box and noise, after
/// config overrides.
struct ModelSetup {
  /// One experiment.
  ModelPtr base;
  /// `experiments` copies of base.
  ModelPtr model;
  std::size_t experiments = 1;
  Box prior;
  Box design_box;
  NoiseModel noise;
  /// Box of one experiment's design.
  Box base_design_box;

  EigProblem problem() const { return EigProblem{model, UniformPrior(prior), noise}; }
};

/// Known model names.
const std::vector<std::string>& model_names();

/// Throws ConfigError for unknown names or inconsistent sizes.
ModelSetup build_model(const RunConfig& cfg);

}  // namespace oed::cli

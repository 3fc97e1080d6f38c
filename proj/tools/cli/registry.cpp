#include "cli/registry.hpp"

#include <fstream>

#include "oed/errors.hpp"
#include "oed/kinetics/kinetics_model.hpp"
#include "oed/pce.hpp"

namespace oed::cli {

namespace {

constexpr double kSimpleNoiseSigma = 0.01;

Box repeated_box(const Box& box, std::size_t copies) {
  std::vector<Interval> bounds;
  for (std::size_t c = 0; c < copies; ++c) {
    bounds.insert(bounds.end(), box.bounds().begin(), box.bounds().end());
  }
  return Box(std::move(bounds));
}

Box split_box(const std::vector<Interval>& bounds, std::size_t from, std::size_t n) {
  return Box(std::vector<Interval>(bounds.begin() + from, bounds.begin() + from + n));
}

struct BaseSetup {
  ModelPtr model;
  Box prior;
  Box design_box;
  NoiseModel noise;
};

BaseSetup simple_base() {
  return {std::make_shared<SimpleModel>(), Box({{0.0, 1.0}}), Box({{0.0, 1.0}}),
          NoiseModel::constant(1, kSimpleNoiseSigma)};
}

BaseSetup kinetics_base(const ModelSettings& m) {
  if (m.mechanism.empty() != m.thermo.empty()) {
    throw ConfigError("'model.kinetics.mechanism' and 'model.kinetics.thermo' go together");
  }
  auto mech = std::make_shared<const kinetics::Mechanism>(
      m.mechanism.empty() ? kinetics::default_mechanism()
                          : kinetics::load_mechanism(m.mechanism, m.thermo));
  kinetics::KineticsSettings s;
  s.pressure = m.pressure;
  s.integration.t_end = m.t_end;
  s.integration.rtol = m.rtol;
  s.integration.atol = m.atol;
  return {std::make_shared<kinetics::KineticsModel>(std::move(mech), s), kinetics::kinetics_prior_box(),
          kinetics::kinetics_design_box(), kinetics::kinetics_noise()};
}

BaseSetup surrogate_base(const ModelSettings& m) {
  if (m.expansion.empty()) throw ConfigError("model 'pce-surrogate' needs 'model.expansion'");
  std::ifstream in(m.expansion);
  if (!in) throw ConfigError("cannot open expansion file " + m.expansion);
  auto surrogate = std::make_shared<PceSurrogate>(load_expansion(in));
  const PCExpansion& pce = surrogate->expansion();
  const auto& b = pce.map.bounds();
  const NoiseModel noise = pce.output_names == kinetics::ObservableSet::names()
                               ? kinetics::kinetics_noise()
                               : NoiseModel::constant(pce.n_outputs(), kSimpleNoiseSigma);
  return {surrogate, split_box(b, 0, pce.map.n_theta()),
          split_box(b, pce.map.n_theta(), pce.map.n_design()), noise};
}

}  // namespace

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {"simple", "simple-batch2", "kinetics", "pce-surrogate"};
  return names;
}

ModelSetup build_model(const RunConfig& cfg) {
  const ModelSettings& m = cfg.model;
  BaseSetup base;
  std::size_t experiments = m.experiments;
  if (m.name == "simple") {
    base = simple_base();
  } else if (m.name == "simple-batch2") {
    if (experiments != 1) throw ConfigError("model 'simple-batch2' fixes two experiments");
    base = simple_base();
    experiments = 2;
  } else if (m.name == "kinetics") {
    base = kinetics_base(m);
  } else if (m.name == "pce-surrogate") {
    base = surrogate_base(m);
  } else {
    std::string known;
    for (const auto& n : model_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown model '" + m.name + "' (known: " + known + ")");
  }

  ModelSetup s;
  s.base = base.model;
  s.experiments = experiments;
  s.model = experiments == 1 ? base.model : make_batch_model(base.model, experiments);

  s.prior = cfg.prior.value_or(base.prior);
  if (s.prior.size() != s.model->n_theta()) {
    throw ConfigError("'prior' needs " + std::to_string(s.model->n_theta()) + " intervals");
  }
  if (cfg.design_box) {
    if (cfg.design_box->size() != s.model->n_design()) {
      throw ConfigError("'design_box' needs " + std::to_string(s.model->n_design()) + " intervals");
    }
    s.design_box = *cfg.design_box;
    s.base_design_box = split_box(s.design_box.bounds(), 0, base.model->n_design());
  } else {
    s.base_design_box = base.design_box;
    s.design_box = repeated_box(base.design_box, experiments);
  }

  NoiseModel noise = base.noise;
  if (cfg.noise_sigma) noise = NoiseModel::constant(base.model->n_obs(), *cfg.noise_sigma);
  if (cfg.noise_components) {
    if (cfg.noise_components->size() != base.model->n_obs()) {
      throw ConfigError("'noise.components' needs one entry per output (" +
                        std::to_string(base.model->n_obs()) + ")");
    }
    noise = NoiseModel(*cfg.noise_components);
  }
  s.noise = noise.repeated(experiments);
  s.problem().validate();
  return s;
}

}  // namespace oed::cli

#include "oed/kinetics/kinetics_model.hpp"

#include <cmath>

#include "oed/errors.hpp"

namespace oed::kinetics {

KineticsModel::KineticsModel(std::shared_ptr<const Mechanism> mechanism, KineticsSettings settings)
    : mechanism_(std::move(mechanism)), settings_(settings) {
  if (!mechanism_) throw ConfigError("kinetics model needs a mechanism");
  if (settings_.scaled_reaction >= mechanism_->n_reactions() ||
      settings_.activation_reaction >= mechanism_->n_reactions()) {
    throw ConfigError("kinetics model: reaction index out of range");
  }
  if (!(settings_.pressure > 0.0)) throw ConfigError("kinetics model: pressure must be positive");
}

Mechanism KineticsModel::perturbed(std::span<const double> theta) const {
  Mechanism mech = *mechanism_;
  auto& reactions = mech.mutable_reactions();
  reactions[settings_.scaled_reaction].A *= std::exp(theta[0]);
  reactions[settings_.activation_reaction].Ea = theta[1];
  return mech;
}

Trajectory KineticsModel::trajectory(std::span<const double> theta, std::span<const double> design) const {
  const Mechanism mech = perturbed(theta);
  const MixtureState init = initial_state(design[1], design[0], settings_.pressure, mech);
  return integrate(mech, init, settings_.integration);
}

void KineticsModel::evaluate(std::span<const double> theta, std::span<const double> design,
                             std::span<double> out) const {
  const Vector obs = extract_observables(trajectory(theta, design)).as_vector();
  std::copy(obs.begin(), obs.end(), out.begin());
}

Box kinetics_prior_box() { return Box({{-0.05, 0.05}, {0.0, 2.7196e7}}); }

Box kinetics_design_box() { return Box({{900.0, 1050.0}, {0.5, 1.2}}); }

NoiseModel kinetics_noise() {
  std::vector<NoiseComponent> c;
  for (int i = 0; i < 5; ++i) c.push_back({0.1, 1e-5, true});
  for (int i = 0; i < 5; ++i) c.push_back({0.1, 0.0, false});
  return NoiseModel(std::move(c));
}

}  // namespace oed::kinetics

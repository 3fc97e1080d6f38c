#pragma once

#include <memory>
#include <string>

#include "oed/kinetics/observables.hpp"
#include "oed/model.hpp"

namespace oed::kinetics {

struct KineticsSettings {
  double pressure = kOneAtmosphere;
  IntegrationOptions integration{};
  /// Reaction whose pre-exponential factor is scaled by exp(theta_1).
  std::size_t scaled_reaction = 0;
  /// Reaction whose activation energy is set to theta_2 (J/kmol).
  std::size_t activation_reaction = 2;

  KineticsSettings() { integration.stop_after_ignition = true; }
};

/// theta = (ln(A_1 / A_1^0), Ea_3), design = (T0 [K], phi); outputs are the
/// ten ignition observables of ObservableSet::as_vector().
class KineticsModel final : public ForwardModel {
 public:
  explicit KineticsModel(std::shared_ptr<const Mechanism> mechanism, KineticsSettings settings = {});

  std::size_t n_theta() const override { return 2; }
  std::size_t n_design() const override { return 2; }
  std::size_t n_obs() const override { return ObservableSet::kCount; }
  std::string name() const override { return "kinetics"; }
  void evaluate(std::span<const double> theta, std::span<const double> design,
                std::span<double> out) const override;

  /// Mechanism with theta applied.
  Mechanism perturbed(std::span<const double> theta) const;
  Trajectory trajectory(std::span<const double> theta, std::span<const double> design) const;
  const Mechanism& mechanism() const { return *mechanism_; }
  const KineticsSettings& settings() const { return settings_; }

 private:
  std::shared_ptr<const Mechanism> mechanism_;
  KineticsSettings settings_;
};

/// Prior support of theta and the design box used with KineticsModel.
Box kinetics_prior_box();
Box kinetics_design_box();
/// Linear 10% noise on peak values and 10% + 1e-5 s on the characteristic
/// times, mapped to the log-time observables.
NoiseModel kinetics_noise();

}  // namespace oed::kinetics

#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "oed/kinetics/reactor.hpp"

namespace oed::kinetics {

/// States at the accepted steps plus dense-output samples between them.
struct Trajectory {
  std::vector<std::string> species;
  double pressure = kOneAtmosphere;
  Vector time;
  Vector temperature;
  /// Mole fractions, one row per point.
  Vector mole_fractions;
  /// Chemical enthalpy change rate, J/(kg s).
  Vector dh_dt;
  std::size_t steps = 0;
  std::size_t rhs_evaluations = 0;
  /// Steps in which a mass fraction below -atol was clipped to zero.
  std::size_t clip_events = 0;

  std::size_t size() const { return time.size(); }
  double x(std::size_t point, std::size_t species_index) const {
    return mole_fractions[point * species.size() + species_index];
  }
  /// Column of one species' mole fraction. Throws ConfigError.
  Vector species_series(const std::string& name) const;
};

struct IntegrationOptions {
  double t_end = 1.0;
  double rtol = 1e-8;
  /// Mass-fraction absolute tolerance.
  double atol = 1e-14;
  /// Temperature absolute tolerance, K.
  double atol_temperature = 1e-6;
  /// Dense-output samples recorded inside each step.
  std::size_t dense_samples = 4;
  std::size_t max_steps = 200000;
  /// Stop once ignition is over: the heat release peak and the peaks of the
  /// tracked radicals lie well behind and every signal has decayed.
  bool stop_after_ignition = false;
};

/// Integrates the adiabatic constant-pressure reactor with BDF. Throws
/// StepFailure.
Trajectory integrate(const Mechanism& mech, const MixtureState& initial, const IntegrationOptions& options);
Trajectory integrate(const Mechanism& mech, const MixtureState& initial, double t_end, double rtol, double atol);

/// Radicals whose peaks are observed.
inline const std::array<std::string, 4> kRadicals{"O", "H", "HO2", "H2O2"};

struct ObservableSet {
  /// ln of the time of peak heat release (most negative dh/dt), ln s.
  double ln_tau_ign = 0.0;
  /// ln of the peak times of X_O, X_H, X_HO2, X_H2O2.
  std::array<double, 4> ln_tau_radical{};
  /// Most negative dh/dt, J/(kg s).
  double dh_dt_peak = 0.0;
  std::array<double, 4> x_peak{};

  static constexpr std::size_t kCount = 10;
  /// Order: ln tau_ign, ln tau_O, ln tau_H, ln tau_HO2, ln tau_H2O2,
  /// dh/dt peak, X_O, X_H, X_HO2, X_H2O2.
  Vector as_vector() const;
  static std::vector<std::string> names();
  static std::vector<std::string> units();
};

struct Peak {
  double time = 0.0;
  double value = 0.0;
};

/// Maximum of a sampled signal refined by the parabola through the discrete
/// maximum and its two neighbours. Throws NoPeak when the discrete maximum
/// sits on either end of the window.
Peak refined_peak(const Vector& time, const Vector& signal, const std::string& label);

/// Throws NoPeak, ConfigError (empty trajectory or missing species).
ObservableSet extract_observables(const Trajectory& trajectory);

}  // namespace oed::kinetics

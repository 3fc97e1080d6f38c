#pragma once

#include <span>
#include <vector>

#include "oed/kinetics/mechanism.hpp"
#include "oed/model.hpp"

namespace oed::kinetics {

inline constexpr double kOneAtmosphere = 101325.0;

struct MixtureState {
  /// K.
  double temperature = 300.0;
  /// Mole fractions, one per mechanism species.
  Vector mole_fractions;
  /// Pa.
  double pressure = kOneAtmosphere;

  /// Throws ConfigError unless T > 0, p > 0, X >= 0 and sum X = 1 within 1e-12.
  void validate(std::size_t n_species) const;
};

Vector mass_fractions(const Mechanism& mech, std::span<const double> mole_fractions);
Vector mole_fractions(const Mechanism& mech, std::span<const double> mass_fractions);
/// kg/kmol, from mass fractions.
double mean_weight(const Mechanism& mech, std::span<const double> mass_fractions);
/// Ideal-gas density, kg/m^3.
double density(const Mechanism& mech, double temperature, double pressure, std::span<const double> mass_fractions);
/// J/(kg K).
double cp_mass(const Mechanism& mech, double temperature, std::span<const double> mass_fractions);
/// J/kg.
double enthalpy_mass(const Mechanism& mech, double temperature, std::span<const double> mass_fractions);
/// kmol of each element per kg of mixture.
Vector element_totals(const Mechanism& mech, std::span<const double> mass_fractions);

/// H2/O2 mixture with X_O2 / X_H2 = 0.5 / phi. Throws ConfigError.
MixtureState initial_state(double phi, double temperature, double pressure, const Mechanism& mech);

struct ReactorRates {
  Vector dY_dt;
  double dT_dt = 0.0;
  /// Chemical enthalpy change sum_n h_n dY_n/dt, J/(kg s); negative while
  /// heat is released.
  double dh_dt = 0.0;
};

/// Adiabatic constant-pressure reactor:
///   dY_j/dt = omega_j W_j / rho,  dT/dt = -sum_n h_n omega_n W_n / (rho c_p).
ReactorRates reactor_rates(const Mechanism& mech, double temperature, double pressure,
                           std::span<const double> mass_fractions);

/// Same as reactor_rates on a packed state y = (Y_1..Y_ns, T), writing
/// (dY/dt, dT/dt) to `dydt`; returns dh/dt.
double reactor_rhs(const Mechanism& mech, double pressure, std::span<const double> y, std::span<double> dydt);

}  // namespace oed::kinetics

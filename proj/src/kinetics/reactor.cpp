#include "oed/kinetics/reactor.hpp"

#include <cmath>
#include <string>

#include "oed/errors.hpp"
#include "oed/kahan.hpp"

namespace oed::kinetics {

void MixtureState::validate(std::size_t n_species) const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be positive");
  if (!(pressure > 0.0) || !std::isfinite(pressure)) throw ConfigError("pressure must be positive");
  if (mole_fractions.size() != n_species) throw ConfigError("one mole fraction per species is required");
  KahanSum sum;
  for (double x : mole_fractions) {
    if (!(x >= 0.0)) throw ConfigError("mole fractions must be nonnegative");
    sum += x;
  }
  if (std::abs(sum.value() - 1.0) > 1e-12) throw ConfigError("mole fractions must sum to 1");
}

Vector mass_fractions(const Mechanism& mech, std::span<const double> mole_fractions) {
  Vector y(mech.n_species());
  KahanSum w;
  for (std::size_t j = 0; j < y.size(); ++j) {
    y[j] = mole_fractions[j] * mech.weight(j);
    w += y[j];
  }
  for (double& v : y) v /= w.value();
  return y;
}

Vector mole_fractions(const Mechanism& mech, std::span<const double> mass_fractions) {
  Vector x(mech.n_species());
  KahanSum n;
  for (std::size_t j = 0; j < x.size(); ++j) {
    x[j] = mass_fractions[j] / mech.weight(j);
    n += x[j];
  }
  for (double& v : x) v /= n.value();
  return x;
}

double mean_weight(const Mechanism& mech, std::span<const double> mass_fractions) {
  double n = 0.0;
  for (std::size_t j = 0; j < mech.n_species(); ++j) n += mass_fractions[j] / mech.weight(j);
  return 1.0 / n;
}

double density(const Mechanism& mech, double temperature, double pressure, std::span<const double> mass_fractions) {
  return pressure * mean_weight(mech, mass_fractions) / (kGasConstant * temperature);
}

double cp_mass(const Mechanism& mech, double temperature, std::span<const double> mass_fractions) {
  double cp = 0.0;
  for (std::size_t j = 0; j < mech.n_species(); ++j) {
    cp += mass_fractions[j] * mech.species()[j].cp_molar(temperature) / mech.weight(j);
  }
  return cp;
}

double enthalpy_mass(const Mechanism& mech, double temperature, std::span<const double> mass_fractions) {
  KahanSum h;
  for (std::size_t j = 0; j < mech.n_species(); ++j) {
    h += mass_fractions[j] * mech.species()[j].h_molar(temperature) / mech.weight(j);
  }
  return h.value();
}

Vector element_totals(const Mechanism& mech, std::span<const double> mass_fractions) {
  Vector e(mech.n_elements(), 0.0);
  for (std::size_t k = 0; k < e.size(); ++k) {
    KahanSum s;
    for (std::size_t j = 0; j < mech.n_species(); ++j) {
      s += mech.composition(k, j) * mass_fractions[j] / mech.weight(j);
    }
    e[k] = s.value();
  }
  return e;
}

MixtureState initial_state(double phi, double temperature, double pressure, const Mechanism& mech) {
  if (!(phi > 0.0) || !std::isfinite(phi)) throw ConfigError("equivalence ratio must be positive");
  MixtureState s;
  s.temperature = temperature;
  s.pressure = pressure;
  s.mole_fractions.assign(mech.n_species(), 0.0);
  // Stoichiometric 2 H2 + O2: (X_O2 / X_H2)_stoic = 1/2.
  const double o2_per_h2 = 0.5 / phi;
  s.mole_fractions[mech.species_index("H2")] = 1.0 / (1.0 + o2_per_h2);
  s.mole_fractions[mech.species_index("O2")] = o2_per_h2 / (1.0 + o2_per_h2);
  s.validate(mech.n_species());
  return s;
}

double reactor_rhs(const Mechanism& mech, double pressure, std::span<const double> y, std::span<double> dydt) {
  const std::size_t ns = mech.n_species();
  const double temperature = y[ns];
  const auto mass = y.first(ns);
  const double rho = density(mech, temperature, pressure, mass);
  std::vector<double> c(ns), omega(ns);
  for (std::size_t j = 0; j < ns; ++j) c[j] = rho * mass[j] / mech.weight(j);
  production_rates(mech, temperature, c, omega);
  double cp = 0.0, release = 0.0;
  for (std::size_t j = 0; j < ns; ++j) {
    const auto& sp = mech.species()[j];
    dydt[j] = omega[j] * mech.weight(j) / rho;
    cp += mass[j] * sp.cp_molar(temperature) / mech.weight(j);
    release += sp.h_molar(temperature) * omega[j];
  }
  const double dh_dt = release / rho;
  dydt[ns] = -dh_dt / cp;
  return dh_dt;
}

ReactorRates reactor_rates(const Mechanism& mech, double temperature, double pressure,
                           std::span<const double> mass_fractions) {
  const std::size_t ns = mech.n_species();
  Vector y(mass_fractions.begin(), mass_fractions.end());
  y.push_back(temperature);
  Vector dydt(ns + 1);
  ReactorRates out;
  out.dh_dt = reactor_rhs(mech, pressure, y, dydt);
  out.dT_dt = dydt[ns];
  dydt.pop_back();
  out.dY_dt = std::move(dydt);
  return out;
}

}  // namespace oed::kinetics

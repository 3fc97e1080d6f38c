#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oed/kinetics/thermo.hpp"

namespace oed::kinetics {

/// (species index, stoichiometric coefficient).
using StoichTerm = std::pair<std::size_t, int>;

struct Reaction {
  std::string equation;
  std::vector<StoichTerm> reactants;
  std::vector<StoichTerm> products;
  /// k_f = A T^b exp(-Ea / (R_u T)); A in (m^3/kmol)^(order-1)/s/K^b, Ea in J/kmol.
  double A = 0.0;
  double b = 0.0;
  double Ea = 0.0;
  bool reversible = true;
  bool third_body = false;
  /// Collision efficiency per species (third-body reactions only).
  std::vector<double> efficiencies;

  /// Sum of product minus reactant coefficients (M excluded).
  int delta_nu() const;
};

struct RateConstants {
  double forward = 0.0;
  double reverse = 0.0;
};

class Mechanism {
 public:
  Mechanism() = default;
  /// Throws ParseError on unknown species or an element imbalance.
  Mechanism(std::vector<Species> species, std::vector<Reaction> reactions);

  std::size_t n_species() const { return species_.size(); }
  std::size_t n_reactions() const { return reactions_.size(); }
  std::size_t n_elements() const { return elements_.size(); }
  const std::vector<Species>& species() const { return species_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  std::vector<Reaction>& mutable_reactions() { return reactions_; }
  const std::vector<std::string>& elements() const { return elements_; }
  /// Atoms of element e in species j.
  int composition(std::size_t e, std::size_t j) const { return composition_[e * species_.size() + j]; }
  double weight(std::size_t j) const { return species_[j].weight; }
  /// Throws ConfigError for an unknown name.
  std::size_t species_index(const std::string& name) const;

 private:
  std::vector<Species> species_;
  std::vector<Reaction> reactions_;
  std::vector<std::string> elements_;
  std::vector<int> composition_;
};

/// Parses one reaction record: `equation, A, b, Ea[, third_body: S:eff, ...]`.
/// `<=>` or `=` marks a reversible reaction, `=>` an irreversible one.
Reaction parse_reaction(const std::string& record, const std::vector<Species>& species);

/// Mechanism text: a `species:` line naming the species (taken from `thermo`)
/// followed by one reaction record per line. Throws ParseError.
Mechanism parse_mechanism(std::istream& in, const std::vector<Species>& thermo);
Mechanism load_mechanism(const std::string& mechanism_path, const std::string& thermo_path);
/// The bundled H2-O2 mechanism and thermo data.
Mechanism default_mechanism();

/// Delta G / (R_u T) at standard pressure.
double delta_g_over_rt(const Reaction& reaction, double temperature, std::span<const Species> species);

/// k_f by the modified Arrhenius law and k_r = k_f / K_c with
/// K_c = exp(-Delta G / (R_u T)) (p_std / (R_u T))^{delta nu}; k_r = 0 when
/// irreversible.
RateConstants rate_constants(const Reaction& reaction, double temperature,
                             std::span<const Species> species);

/// Forward and reverse rates of progress (kmol/m^3/s) per reaction from
/// molar concentrations; third-body reactions include the factor M.
void rates_of_progress(const Mechanism& mech, double temperature, std::span<const double> concentrations,
                       std::span<double> forward, std::span<double> reverse);

/// Molar production rates (kmol/m^3/s) from concentrations.
void production_rates(const Mechanism& mech, double temperature, std::span<const double> concentrations,
                      std::span<double> omega_dot);

}  // namespace oed::kinetics

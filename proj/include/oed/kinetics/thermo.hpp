#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace oed::kinetics {

/// Universal gas constant, J / (kmol K).
inline constexpr double kGasConstant = 8314.472;
/// Standard-state pressure of the thermo data, Pa.
inline constexpr double kStandardPressure = 101325.0;

/// Two-range NASA 7-coefficient polynomial.
struct Nasa7 {
  double t_low = 200.0;
  double t_mid = 1000.0;
  double t_high = 3500.0;
  std::array<double, 7> low{};
  std::array<double, 7> high{};

  /// Coefficients for T; the ranges extrapolate beyond their bounds.
  const std::array<double, 7>& coefficients(double temperature) const {
    return temperature < t_mid ? low : high;
  }
  double cp_over_r(double temperature) const;
  double h_over_rt(double temperature) const;
  double s_over_r(double temperature) const;
};

struct Species {
  std::string name;
  /// kg / kmol.
  double weight = 0.0;
  std::vector<std::pair<std::string, int>> elements;
  Nasa7 thermo;

  /// Per kmol: J/(kmol K), J/kmol, J/(kmol K).
  double cp_molar(double temperature) const;
  double h_molar(double temperature) const;
  double s_molar(double temperature) const;
  int atoms(const std::string& element) const;
};

/// Parses `species NAME` blocks with `weight`, `elements E:n ...`,
/// `temperatures lo mid hi`, `low a1..a7`, `high a1..a7` and `end`.
/// Throws ParseError.
std::vector<Species> parse_thermo(std::istream& in);
std::vector<Species> load_thermo(const std::string& path);

}  // namespace oed::kinetics

#include "oed/kinetics/mechanism.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "oed/errors.hpp"

namespace oed::kinetics {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

double parse_number(const std::string& token, const std::string& context) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size() || !std::isfinite(v)) {
    throw ParseError("bad number '" + token + "' in " + context);
  }
  return v;
}

std::size_t find_species(const std::vector<Species>& species, const std::string& name, const std::string& ctx) {
  for (std::size_t j = 0; j < species.size(); ++j) {
    if (species[j].name == name) return j;
  }
  throw ParseError(ctx + ": unknown species '" + name + "'");
}

// Parses "2 OH + H + M"; returns whether M appeared.
bool parse_side(const std::string& side, const std::vector<Species>& species, std::vector<StoichTerm>& terms,
                const std::string& ctx) {
  bool has_m = false;
  for (const std::string& raw : split(side, '+')) {
    if (raw.empty()) throw ParseError(ctx + ": empty term");
    int coeff = 1;
    std::string name = raw;
    std::size_t digits = 0;
    while (digits < raw.size() && std::isdigit(static_cast<unsigned char>(raw[digits]))) ++digits;
    if (digits > 0 && digits < raw.size()) {
      coeff = std::stoi(raw.substr(0, digits));
      name = trim(raw.substr(digits));
    }
    if (name == "M") {
      if (has_m || coeff != 1) throw ParseError(ctx + ": M may appear once");
      has_m = true;
      continue;
    }
    const std::size_t j = find_species(species, name, ctx);
    auto it = std::find_if(terms.begin(), terms.end(), [&](const StoichTerm& t) { return t.first == j; });
    if (it == terms.end()) {
      terms.emplace_back(j, coeff);
    } else {
      it->second += coeff;
    }
  }
  return has_m;
}

}  // namespace

int Reaction::delta_nu() const {
  int d = 0;
  for (const auto& [j, n] : products) d += n;
  for (const auto& [j, n] : reactants) d -= n;
  return d;
}

Mechanism::Mechanism(std::vector<Species> species, std::vector<Reaction> reactions)
    : species_(std::move(species)), reactions_(std::move(reactions)) {
  for (const auto& s : species_) {
    for (const auto& [el, n] : s.elements) {
      if (std::find(elements_.begin(), elements_.end(), el) == elements_.end()) elements_.push_back(el);
    }
  }
  composition_.assign(elements_.size() * species_.size(), 0);
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    for (std::size_t j = 0; j < species_.size(); ++j) {
      composition_[e * species_.size() + j] = species_[j].atoms(elements_[e]);
    }
  }
  for (auto& r : reactions_) {
    const std::string ctx = "reaction '" + r.equation + "'";
    if (!(r.A > 0.0) || !std::isfinite(r.b) || !std::isfinite(r.Ea)) {
      throw ParseError(ctx + ": A must be positive and b, Ea finite");
    }
    for (const auto* side : {&r.reactants, &r.products}) {
      for (const auto& [j, n] : *side) {
        if (j >= species_.size() || n <= 0) throw ParseError(ctx + ": bad species term");
      }
    }
    for (std::size_t e = 0; e < elements_.size(); ++e) {
      long balance = 0;
      for (const auto& [j, n] : r.reactants) balance -= static_cast<long>(n) * composition(e, j);
      for (const auto& [j, n] : r.products) balance += static_cast<long>(n) * composition(e, j);
      if (balance != 0) throw ParseError(ctx + ": element " + elements_[e] + " is not balanced");
    }
    if (r.third_body) {
      if (r.efficiencies.empty()) r.efficiencies.assign(species_.size(), 1.0);
      if (r.efficiencies.size() != species_.size()) throw ParseError(ctx + ": efficiency count");
    }
  }
}

std::size_t Mechanism::species_index(const std::string& name) const {
  for (std::size_t j = 0; j < species_.size(); ++j) {
    if (species_[j].name == name) return j;
  }
  throw ConfigError("unknown species '" + name + "'");
}

Reaction parse_reaction(const std::string& record, const std::vector<Species>& species) {
  const std::string ctx = "reaction record '" + record + "'";
  const auto fields = split(record, ',');
  if (fields.size() < 4) throw ParseError(ctx + ": expected equation, A, b, Ea");
  Reaction r;
  r.equation = fields[0];
  std::string lhs, rhs;
  if (const auto p = r.equation.find("<=>"); p != std::string::npos) {
    lhs = r.equation.substr(0, p);
    rhs = r.equation.substr(p + 3);
  } else if (const auto q = r.equation.find("=>"); q != std::string::npos) {
    lhs = r.equation.substr(0, q);
    rhs = r.equation.substr(q + 2);
    r.reversible = false;
  } else if (const auto s = r.equation.find('='); s != std::string::npos) {
    lhs = r.equation.substr(0, s);
    rhs = r.equation.substr(s + 1);
  } else {
    throw ParseError(ctx + ": equation needs '<=>', '=>' or '='");
  }
  const bool m_left = parse_side(trim(lhs), species, r.reactants, ctx);
  const bool m_right = parse_side(trim(rhs), species, r.products, ctx);
  if (m_left != m_right) throw ParseError(ctx + ": M must appear on both sides");
  r.third_body = m_left;
  r.A = parse_number(fields[1], ctx);
  r.b = parse_number(fields[2], ctx);
  r.Ea = parse_number(fields[3], ctx);
  if (r.third_body) r.efficiencies.assign(species.size(), 1.0);
  for (std::size_t f = 4; f < fields.size(); ++f) {
    std::string entry = fields[f];
    if (f == 4) {
      const std::string tag = "third_body:";
      if (entry.rfind(tag, 0) != 0) throw ParseError(ctx + ": expected 'third_body:'");
      if (!r.third_body) throw ParseError(ctx + ": efficiencies given without M");
      entry = trim(entry.substr(tag.size()));
    }
    const auto colon = entry.find(':');
    if (colon == std::string::npos) throw ParseError(ctx + ": efficiencies are S:eff");
    const std::size_t j = find_species(species, trim(entry.substr(0, colon)), ctx);
    const double eff = parse_number(trim(entry.substr(colon + 1)), ctx);
    if (eff < 0.0) throw ParseError(ctx + ": negative efficiency");
    r.efficiencies[j] = eff;
  }
  return r;
}

Mechanism parse_mechanism(std::istream& in, const std::vector<Species>& thermo) {
  std::vector<Species> species;
  std::vector<Reaction> reactions;
  std::string line;
  std::size_t line_no = 0;
  bool have_species = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.rfind("species:", 0) == 0) {
      if (have_species) throw ParseError("mechanism line " + std::to_string(line_no) + ": second species list");
      std::istringstream names(line.substr(8));
      std::string name;
      while (names >> name) {
        species.push_back(thermo[find_species(thermo, name, "mechanism line " + std::to_string(line_no))]);
      }
      have_species = true;
      continue;
    }
    if (!have_species) throw ParseError("mechanism: the species list must come first");
    reactions.push_back(parse_reaction(line, species));
  }
  if (!have_species) throw ParseError("mechanism: no species list");
  return Mechanism(std::move(species), std::move(reactions));
}

Mechanism load_mechanism(const std::string& mechanism_path, const std::string& thermo_path) {
  const auto thermo = load_thermo(thermo_path);
  std::ifstream in(mechanism_path);
  if (!in) throw ParseError("cannot open mechanism file " + mechanism_path);
  return parse_mechanism(in, thermo);
}

Mechanism default_mechanism() {
  const std::string dir = OED_DATA_DIR;
  return load_mechanism(dir + "/h2o2_mechanism.txt", dir + "/h2o2_thermo.txt");
}

double delta_g_over_rt(const Reaction& reaction, double temperature, std::span<const Species> species) {
  double dg = 0.0;
  for (const auto& [j, n] : reaction.products) {
    const auto& th = species[j].thermo;
    dg += n * (th.h_over_rt(temperature) - th.s_over_r(temperature));
  }
  for (const auto& [j, n] : reaction.reactants) {
    const auto& th = species[j].thermo;
    dg -= n * (th.h_over_rt(temperature) - th.s_over_r(temperature));
  }
  return dg;
}

RateConstants rate_constants(const Reaction& reaction, double temperature, std::span<const Species> species) {
  RateConstants k;
  k.forward = reaction.A * std::exp(reaction.b * std::log(temperature) - reaction.Ea / (kGasConstant * temperature));
  if (reaction.reversible) {
    const double ln_kc = -delta_g_over_rt(reaction, temperature, species) +
                         reaction.delta_nu() * std::log(kStandardPressure / (kGasConstant * temperature));
    k.reverse = k.forward * std::exp(-ln_kc);
  }
  return k;
}

namespace {

double concentration_product(const std::vector<StoichTerm>& terms, std::span<const double> c) {
  double p = 1.0;
  for (const auto& [j, n] : terms) {
    for (int i = 0; i < n; ++i) p *= c[j];
  }
  return p;
}

}  // namespace

void rates_of_progress(const Mechanism& mech, double temperature, std::span<const double> concentrations,
                       std::span<double> forward, std::span<double> reverse) {
  const std::size_t ns = mech.n_species();
  std::vector<double> g(ns);
  for (std::size_t j = 0; j < ns; ++j) {
    const auto& th = mech.species()[j].thermo;
    g[j] = th.h_over_rt(temperature) - th.s_over_r(temperature);
  }
  const double ln_t = std::log(temperature);
  const double inv_rt = 1.0 / (kGasConstant * temperature);
  const double ln_p_rt = std::log(kStandardPressure * inv_rt);
  for (std::size_t m = 0; m < mech.n_reactions(); ++m) {
    const Reaction& r = mech.reactions()[m];
    const double kf = r.A * std::exp(r.b * ln_t - r.Ea * inv_rt);
    double third = 1.0;
    if (r.third_body) {
      third = 0.0;
      for (std::size_t j = 0; j < ns; ++j) third += r.efficiencies[j] * concentrations[j];
    }
    forward[m] = third * kf * concentration_product(r.reactants, concentrations);
    if (r.reversible) {
      double dg = 0.0;
      for (const auto& [j, n] : r.products) dg += n * g[j];
      for (const auto& [j, n] : r.reactants) dg -= n * g[j];
      const double ln_kc = -dg + r.delta_nu() * ln_p_rt;
      reverse[m] = third * kf * std::exp(-ln_kc) * concentration_product(r.products, concentrations);
    } else {
      reverse[m] = 0.0;
    }
  }
}

void production_rates(const Mechanism& mech, double temperature, std::span<const double> concentrations,
                      std::span<double> omega_dot) {
  std::vector<double> fwd(mech.n_reactions()), rev(mech.n_reactions());
  rates_of_progress(mech, temperature, concentrations, fwd, rev);
  std::fill(omega_dot.begin(), omega_dot.end(), 0.0);
  for (std::size_t m = 0; m < mech.n_reactions(); ++m) {
    const Reaction& r = mech.reactions()[m];
    const double q = fwd[m] - rev[m];
    for (const auto& [j, n] : r.reactants) omega_dot[j] -= n * q;
    for (const auto& [j, n] : r.products) omega_dot[j] += n * q;
  }
}

}  // namespace oed::kinetics

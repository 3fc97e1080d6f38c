#include "oed/kinetics/thermo.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "oed/errors.hpp"

namespace oed::kinetics {

namespace {

// Atomic weights, kg/kmol.
const std::map<std::string, double>& atomic_weights() {
  static const std::map<std::string, double> table{
      {"H", 1.00794}, {"O", 15.9994}, {"N", 14.0067}, {"Ar", 39.948}, {"C", 12.0107}, {"He", 4.002602}};
  return table;
}

double parse_number(const std::string& token, const std::string& context) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size() || !std::isfinite(v)) {
    throw ParseError("bad number '" + token + "' in " + context);
  }
  return v;
}

std::array<double, 7> parse_coefficients(std::istringstream& fields, const std::string& context) {
  std::array<double, 7> a{};
  for (auto& v : a) {
    std::string tok;
    if (!(fields >> tok)) throw ParseError("expected 7 coefficients in " + context);
    v = parse_number(tok, context);
  }
  std::string extra;
  if (fields >> extra) throw ParseError("more than 7 coefficients in " + context);
  return a;
}

void validate(const Species& s) {
  const std::string ctx = "species " + s.name;
  if (!(s.weight > 0.0)) throw ParseError(ctx + ": weight must be positive");
  if (s.elements.empty()) throw ParseError(ctx + ": no elements");
  if (!(s.thermo.t_low < s.thermo.t_mid && s.thermo.t_mid < s.thermo.t_high)) {
    throw ParseError(ctx + ": temperatures must increase");
  }
  double w = 0.0;
  for (const auto& [el, n] : s.elements) {
    const auto it = atomic_weights().find(el);
    if (it == atomic_weights().end()) throw ParseError(ctx + ": unknown element " + el);
    if (n <= 0) throw ParseError(ctx + ": atom counts must be positive");
    w += n * it->second;
  }
  if (std::abs(w - s.weight) > 1e-6 * w) {
    throw ParseError(ctx + ": weight disagrees with its elements");
  }
}

}  // namespace

double Nasa7::cp_over_r(double temperature) const {
  const auto& a = coefficients(temperature);
  const double t = temperature;
  return a[0] + t * (a[1] + t * (a[2] + t * (a[3] + t * a[4])));
}

double Nasa7::h_over_rt(double temperature) const {
  const auto& a = coefficients(temperature);
  const double t = temperature;
  return a[0] + t * (a[1] / 2 + t * (a[2] / 3 + t * (a[3] / 4 + t * a[4] / 5))) + a[5] / t;
}

double Nasa7::s_over_r(double temperature) const {
  const auto& a = coefficients(temperature);
  const double t = temperature;
  return a[0] * std::log(t) + t * (a[1] + t * (a[2] / 2 + t * (a[3] / 3 + t * a[4] / 4))) + a[6];
}

double Species::cp_molar(double temperature) const { return kGasConstant * thermo.cp_over_r(temperature); }
double Species::h_molar(double temperature) const {
  return kGasConstant * temperature * thermo.h_over_rt(temperature);
}
double Species::s_molar(double temperature) const { return kGasConstant * thermo.s_over_r(temperature); }

int Species::atoms(const std::string& element) const {
  for (const auto& [el, n] : elements) {
    if (el == element) return n;
  }
  return 0;
}

std::vector<Species> parse_thermo(std::istream& in) {
  std::vector<Species> out;
  std::string line;
  std::size_t line_no = 0;
  bool open = false;
  bool have_low = false, have_high = false, have_temps = false;
  Species cur;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string key;
    if (!(fields >> key)) continue;
    const std::string ctx = "thermo line " + std::to_string(line_no);
    if (key == "species") {
      if (open) throw ParseError(ctx + ": missing 'end'");
      cur = Species{};
      if (!(fields >> cur.name)) throw ParseError(ctx + ": species needs a name");
      open = true;
      have_low = have_high = have_temps = false;
      continue;
    }
    if (!open) throw ParseError(ctx + ": '" + key + "' outside a species block");
    if (key == "weight") {
      std::string tok;
      fields >> tok;
      cur.weight = parse_number(tok, ctx);
    } else if (key == "elements") {
      std::string tok;
      while (fields >> tok) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos) throw ParseError(ctx + ": element entries are E:n");
        cur.elements.emplace_back(tok.substr(0, colon),
                                  static_cast<int>(parse_number(tok.substr(colon + 1), ctx)));
      }
    } else if (key == "temperatures") {
      std::string a, b, c;
      if (!(fields >> a >> b >> c)) throw ParseError(ctx + ": temperatures needs 3 values");
      cur.thermo.t_low = parse_number(a, ctx);
      cur.thermo.t_mid = parse_number(b, ctx);
      cur.thermo.t_high = parse_number(c, ctx);
      have_temps = true;
    } else if (key == "low") {
      cur.thermo.low = parse_coefficients(fields, ctx);
      have_low = true;
    } else if (key == "high") {
      cur.thermo.high = parse_coefficients(fields, ctx);
      have_high = true;
    } else if (key == "end") {
      if (!have_low || !have_high || !have_temps) throw ParseError(ctx + ": incomplete species " + cur.name);
      validate(cur);
      for (const auto& s : out) {
        if (s.name == cur.name) throw ParseError(ctx + ": duplicate species " + cur.name);
      }
      out.push_back(cur);
      open = false;
    } else {
      throw ParseError(ctx + ": unknown key '" + key + "'");
    }
  }
  if (open) throw ParseError("thermo: missing 'end' for " + cur.name);
  return out;
}

std::vector<Species> load_thermo(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open thermo file " + path);
  return parse_thermo(in);
}

}  // namespace oed::kinetics

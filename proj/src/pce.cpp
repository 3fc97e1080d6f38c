#include "oed/pce.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "oed/csv.hpp"
#include "oed/errors.hpp"
#include "oed/kahan.hpp"
#include "oed/parallel.hpp"

namespace oed {

namespace {

// Legendre tables for every dimension of one point: table[q * (p+1) + n].
void legendre_table(std::span<const double> xi, std::size_t p, std::vector<double>& table) {
  table.resize(xi.size() * (p + 1));
  for (std::size_t q = 0; q < xi.size(); ++q) {
    legendre_values(xi[q], p, std::span<double>(table).subspan(q * (p + 1), p + 1));
  }
}

double basis_from_table(const MultiIndex& i, const std::vector<double>& table, std::size_t p) {
  double v = 1.0;
  for (std::size_t q = 0; q < i.size(); ++q) v *= table[q * (p + 1) + static_cast<std::size_t>(i[q])];
  return v;
}

void split_input(const InputMap& map, std::span<const double> xi, Vector& theta, Vector& design) {
  theta.resize(map.n_theta());
  design.resize(map.n_design());
  for (std::size_t q = 0; q < map.dim(); ++q) {
    const double x = map.to_physical(q, xi[q]);
    if (q < map.n_theta()) {
      theta[q] = x;
    } else {
      design[q - map.n_theta()] = x;
    }
  }
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError("not a number: '" + text + "'");
  }
  return v;
}

std::size_t parse_size(const std::string& text) {
  std::size_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError("not a nonnegative integer: '" + text + "'");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

// Smallest total degree that the 1D difference rule of `level` does not
// annihilate: one more than the exactness of the level below.
int difference_degree(int level) {
  if (level <= 1) return 0;
  const int below = level - 1;
  const int exact = below == 1 ? 1 : (1 << (below - 1)) + 1;
  return exact + 1;
}

}  // namespace

bool nisp_requires(const MultiIndex& k, std::size_t p) {
  long total = 0;
  for (int level : k) {
    if (level > 31) return false;
    total += difference_degree(level);
  }
  return total <= 2 * static_cast<long>(p);
}

InputMap::InputMap(const Box& theta_box, const Box& design_box)
    : n_theta_(theta_box.size()) {
  bounds_ = theta_box.bounds();
  bounds_.insert(bounds_.end(), design_box.bounds().begin(), design_box.bounds().end());
}

InputMap::InputMap(std::vector<Interval> bounds, std::size_t n_theta)
    : bounds_(std::move(bounds)), n_theta_(n_theta) {
  if (n_theta_ > bounds_.size()) throw ConfigError("more parameters than mapped dimensions");
  static_cast<void>(Box(bounds_));
}

double InputMap::to_physical(std::size_t i, double xi) const {
  const Interval& b = bounds_[i];
  return 0.5 * (b.lo + b.hi) + 0.5 * b.width() * xi;
}

double InputMap::to_xi(std::size_t i, double x) const {
  const Interval& b = bounds_[i];
  return (2.0 * x - (b.lo + b.hi)) / b.width();
}

Vector InputMap::to_physical(std::span<const double> xi) const {
  if (xi.size() != dim()) throw DimensionMismatch("input map dimension mismatch");
  Vector x(dim());
  for (std::size_t i = 0; i < dim(); ++i) x[i] = to_physical(i, xi[i]);
  return x;
}

Vector InputMap::to_xi(std::span<const double> x) const {
  if (x.size() != dim()) throw DimensionMismatch("input map dimension mismatch");
  Vector xi(dim());
  for (std::size_t i = 0; i < dim(); ++i) xi[i] = to_xi(i, x[i]);
  return xi;
}

std::size_t total_order_count(std::size_t n_s, std::size_t p, std::size_t limit) {
  // C(n_s + p, p) built incrementally; each partial product is an integer.
  std::size_t count = 1;
  for (std::size_t k = 1; k <= p; ++k) {
    const std::size_t num = n_s + k;
    if (count > limit || count > static_cast<std::size_t>(-1) / num) {
      throw ConfigError("total-order basis too large for n_s=" + std::to_string(n_s) +
                        ", p=" + std::to_string(p));
    }
    count = count * num / k;
  }
  if (count > limit) {
    throw ConfigError("total-order basis of " + std::to_string(count) + " terms exceeds the limit");
  }
  return count;
}

std::vector<MultiIndex> total_order_indices(std::size_t n_s, std::size_t p) {
  if (n_s == 0) throw ConfigError("expansion needs at least one dimension");
  std::vector<MultiIndex> out;
  out.reserve(total_order_count(n_s, p));
  MultiIndex cur(n_s, 0);
  // Fill positions q.. with total `left`, first entry descending.
  auto fill = [&](auto&& self, std::size_t q, int left) -> void {
    if (q + 1 == n_s) {
      cur[q] = left;
      out.push_back(cur);
      return;
    }
    for (int a = left; a >= 0; --a) {
      cur[q] = a;
      self(self, q + 1, left - a);
    }
  };
  for (std::size_t t = 0; t <= p; ++t) fill(fill, 0, static_cast<int>(t));
  return out;
}

void legendre_values(double x, std::size_t p, std::span<double> out) {
  out[0] = 1.0;
  if (p == 0) return;
  out[1] = x;
  for (std::size_t n = 1; n < p; ++n) {
    const auto nn = static_cast<double>(n);
    out[n + 1] = ((2.0 * nn + 1.0) * x * out[n] - nn * out[n - 1]) / (nn + 1.0);
  }
}

double basis_eval(const MultiIndex& i, std::span<const double> xi) {
  if (i.size() != xi.size()) throw DimensionMismatch("multi-index and point dimensions differ");
  double v = 1.0;
  std::vector<double> vals;
  for (std::size_t q = 0; q < i.size(); ++q) {
    vals.resize(static_cast<std::size_t>(i[q]) + 1);
    legendre_values(xi[q], static_cast<std::size_t>(i[q]), vals);
    v *= vals.back();
  }
  return v;
}

double basis_norm(const MultiIndex& i) {
  double n = 1.0;
  for (int v : i) n /= 2.0 * v + 1.0;
  return n;
}

Vector pce_eval(const PCExpansion& pce, std::span<const double> xi) {
  if (xi.size() != pce.n_s()) {
    throw DimensionMismatch("expansion has " + std::to_string(pce.n_s()) + " inputs, got " +
                            std::to_string(xi.size()));
  }
  std::vector<double> table;
  legendre_table(xi, pce.p, table);
  std::vector<double> psi(pce.n_terms());
  for (std::size_t k = 0; k < psi.size(); ++k) psi[k] = basis_from_table(pce.indices[k], table, pce.p);
  Vector out(pce.n_outputs());
  for (std::size_t c = 0; c < out.size(); ++c) {
    KahanSum acc;
    for (std::size_t k = 0; k < psi.size(); ++k) acc += pce.coefficient(c, k) * psi[k];
    out[c] = acc.value();
  }
  return out;
}

PhysicalEval pce_eval_physical(const PCExpansion& pce, std::span<const double> theta,
                               std::span<const double> design) {
  const InputMap& map = pce.map;
  if (theta.size() != map.n_theta() || design.size() != map.n_design()) {
    throw DimensionMismatch("surrogate input sizes do not match its input map");
  }
  Vector xi(map.dim());
  bool outside = false;
  for (std::size_t q = 0; q < map.dim(); ++q) {
    const double x = q < map.n_theta() ? theta[q] : design[q - map.n_theta()];
    xi[q] = map.to_xi(q, x);
    if (!(x >= map.bounds()[q].lo && x <= map.bounds()[q].hi)) outside = true;
  }
  return PhysicalEval{pce_eval(pce, xi), outside};
}

NispResult nisp_project(const ForwardModel& model, const InputMap& map,
                        const NispOptions& options) {
  if (map.n_theta() != model.n_theta() || map.n_design() != model.n_design()) {
    throw DimensionMismatch("input map does not match the model's parameter and design sizes");
  }
  NispResult result;
  PCExpansion& pce = result.expansion;
  pce.p = options.p;
  pce.map = map;
  pce.indices = total_order_indices(map.dim(), options.p);
  const std::size_t n_terms = pce.indices.size();
  const std::size_t n_y = model.n_obs();
  for (std::size_t c = 0; c < n_y; ++c) pce.output_names.push_back("G_" + std::to_string(c + 1));

  IntegrandFamily family;
  family.dim = map.dim();
  family.n_raw = n_y;
  family.n_values = n_y * n_terms;
  family.groups.resize(family.n_values);
  for (std::size_t r = 0; r < family.n_values; ++r) family.groups[r] = r / n_terms;
  family.evaluate = [&](std::span<const double> xi, std::span<double> raw) {
    Vector theta, design;
    split_input(map, xi, theta, design);
    model.evaluate(theta, design, raw);
  };
  const std::size_t p = options.p;
  const auto& indices = pce.indices;
  family.transform = [&indices, p, n_terms](std::span<const double> xi,
                                            std::span<const double> raw,
                                            std::span<double> values) {
    thread_local std::vector<double> table;
    legendre_table(xi, p, table);
    for (std::size_t k = 0; k < n_terms; ++k) {
      const double psi = basis_from_table(indices[k], table, p);
      for (std::size_t c = 0; c < raw.size(); ++c) values[c * n_terms + k] = raw[c] * psi;
    }
  };

  DasqOptions dq;
  dq.tol = options.tol;
  dq.max_evals = options.max_evals;
  dq.workers = options.workers;
  dq.required = [p](const MultiIndex& k) { return nisp_requires(k, p); };
  result.quadrature = dasq(family, dq);

  pce.coefficients.resize(family.n_values);
  for (std::size_t r = 0; r < family.n_values; ++r) {
    pce.coefficients[r] = result.quadrature.values[r] / basis_norm(indices[r % n_terms]);
  }
  result.stop = result.quadrature.stop;
  result.eta = result.quadrature.eta;
  result.evaluations = result.quadrature.evaluations;
  result.max_levels = result.quadrature.max_levels();
  return result;
}

std::vector<double> relative_l2_error(const PCExpansion& pce, const ForwardModel& model,
                                      int level, std::size_t workers) {
  if (pce.n_outputs() != model.n_obs()) {
    throw DimensionMismatch("expansion and model have different output counts");
  }
  const SparseGrid grid = smolyak_grid(pce.n_s(), level);
  const std::size_t n_y = model.n_obs();
  std::vector<double> sq_err(grid.size() * n_y), sq_ref(grid.size() * n_y);
  parallel_for(grid.size(), workers, [&](std::size_t g) {
    Vector theta, design;
    const auto xi = grid.point(g);
    split_input(pce.map, xi, theta, design);
    Vector exact(n_y);
    model.evaluate(theta, design, exact);
    const Vector approx = pce_eval(pce, xi);
    for (std::size_t c = 0; c < n_y; ++c) {
      const double e = exact[c] - approx[c];
      sq_err[g * n_y + c] = e * e;
      sq_ref[g * n_y + c] = exact[c] * exact[c];
    }
  });
  std::vector<double> out(n_y);
  for (std::size_t c = 0; c < n_y; ++c) {
    KahanSum num, den;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      num += grid.weights[g] * sq_err[g * n_y + c];
      den += grid.weights[g] * sq_ref[g * n_y + c];
    }
    if (den.value() == 0.0) {
      throw ZeroDenominator("output " + pce.output_names[c] + " is identically zero on the grid");
    }
    out[c] = num.value() / den.value();
  }
  return out;
}

void save_expansion(std::ostream& out, const PCExpansion& pce, const std::string& comment) {
  write_comment_block(out, comment);
  out << "pce-expansion 1\n";
  out << "n_s " << pce.n_s() << '\n';
  out << "p " << pce.p << '\n';
  out << "n_theta " << pce.map.n_theta() << '\n';
  for (const auto& b : pce.map.bounds()) {
    out << "bounds " << format_double(b.lo) << ' ' << format_double(b.hi) << '\n';
  }
  out << "outputs " << pce.n_outputs() << '\n';
  for (std::size_t c = 0; c < pce.n_outputs(); ++c) {
    const bool has_unit = c < pce.output_units.size() && !pce.output_units[c].empty();
    out << "output " << pce.output_names[c] << ' ' << (has_unit ? pce.output_units[c] : "-") << '\n';
  }
  out << "terms " << pce.n_terms() << '\n';
  for (std::size_t q = 0; q < pce.n_s(); ++q) out << "i_" << q + 1 << ',';
  out << "c,coefficient\n";
  for (std::size_t k = 0; k < pce.n_terms(); ++k) {
    for (std::size_t c = 0; c < pce.n_outputs(); ++c) {
      for (int v : pce.indices[k]) out << v << ',';
      out << c << ',' << format_double(pce.coefficient(c, k)) << '\n';
    }
  }
}

PCExpansion load_expansion(std::istream& in) {
  std::string line;
  auto next = [&]() -> std::string {
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] != '#') return line;
    }
    throw ParseError("unexpected end of expansion file");
  };
  auto expect = [&](const std::string& key) {
    std::istringstream ss(next());
    std::string word;
    ss >> word;
    if (word != key) throw ParseError("expected '" + key + "', found '" + word + "'");
    std::string rest;
    std::getline(ss, rest);
    if (!rest.empty() && rest[0] == ' ') rest.erase(0, 1);
    return rest;
  };

  if (expect("pce-expansion") != "1") throw ParseError("unsupported expansion file version");
  const std::size_t n_s = parse_size(expect("n_s"));
  PCExpansion pce;
  pce.p = parse_size(expect("p"));
  const std::size_t n_theta = parse_size(expect("n_theta"));
  std::vector<Interval> bounds(n_s);
  for (auto& b : bounds) {
    std::istringstream ss(expect("bounds"));
    std::string lo, hi;
    ss >> lo >> hi;
    b = Interval{parse_double(lo), parse_double(hi)};
  }
  pce.map = InputMap(bounds, n_theta);
  const std::size_t n_y = parse_size(expect("outputs"));
  for (std::size_t c = 0; c < n_y; ++c) {
    std::istringstream ss(expect("output"));
    std::string name, unit;
    ss >> name >> unit;
    if (name.empty()) throw ParseError("output line without a name");
    pce.output_names.push_back(name);
    pce.output_units.push_back(unit == "-" ? "" : unit);
  }
  const std::size_t n_terms = parse_size(expect("terms"));
  pce.indices = total_order_indices(n_s, pce.p);
  if (pce.indices.size() != n_terms) throw ParseError("term count does not match (n_s, p)");
  next();  // column header
  pce.coefficients.assign(n_y * n_terms, 0.0);
  for (std::size_t k = 0; k < n_terms; ++k) {
    for (std::size_t c = 0; c < n_y; ++c) {
      const auto cells = split_csv(next());
      if (cells.size() != n_s + 2) throw ParseError("malformed coefficient row: " + line);
      for (std::size_t q = 0; q < n_s; ++q) {
        if (parse_size(cells[q]) != static_cast<std::size_t>(pce.indices[k][q])) {
          throw ParseError("coefficient rows are not in graded-lex order: " + line);
        }
      }
      if (parse_size(cells[n_s]) != c) throw ParseError("unexpected output index: " + line);
      pce.coefficients[c * n_terms + k] = parse_double(cells[n_s + 1]);
    }
  }
  return pce;
}

PceSurrogate::PceSurrogate(PCExpansion pce) : pce_(std::move(pce)) {
  if (pce_.n_terms() == 0 || pce_.n_outputs() == 0) throw ConfigError("empty expansion");
}

void PceSurrogate::evaluate(std::span<const double> theta, std::span<const double> design,
                            std::span<double> out) const {
  const PhysicalEval e = pce_eval_physical(pce_, theta, design);
  std::copy(e.values.begin(), e.values.end(), out.begin());
}

}  // namespace oed

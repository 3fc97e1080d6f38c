#include "oed/quadrature.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>
#include <optional>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "oed/csv.hpp"
#include "oed/errors.hpp"
#include "oed/kahan.hpp"
#include "oed/parallel.hpp"
#include "oed/random.hpp"

namespace oed {

namespace {

constexpr std::int64_t kFinest = std::int64_t{1} << (kMaxQuadLevel - 1);

void check_level(int level) {
  if (level < 1 || level > kMaxQuadLevel) {
    throw ConfigError("quadrature level " + std::to_string(level) + " outside [1, " +
                      std::to_string(kMaxQuadLevel) + "]");
  }
}

// cos(2 pi m / n) from the reduced fraction, exact at multiples of pi/2.
double cos_two_pi_fraction(std::int64_t m, std::int64_t n) {
  m %= n;
  if (m == 0) return 1.0;
  if (2 * m == n) return -1.0;
  if (4 * m == n || 4 * m == 3 * n) return 0.0;
  const std::int64_t g = std::gcd(m, n);
  return std::cos(2.0 * std::numbers::pi * static_cast<double>(m / g) /
                  static_cast<double>(n / g));
}

// Deepest level whose weights use the O(n^2) compensated cosine sum.
constexpr int kDirectWeightLevel = 12;

// s_i = sum_{j=1}^{n/2} b_j / (4 j^2 - 1) cos(2 pi i j / n), b_{n/2} = 1, else 2.
std::vector<double> cosine_sums_direct(std::int64_t n) {
  std::vector<double> out(static_cast<std::size_t>(n / 2 + 1));
  for (std::int64_t i = 0; i <= n / 2; ++i) {
    KahanSum s;
    for (std::int64_t j = 1; j <= n / 2; ++j) {
      const double b = (2 * j == n) ? 1.0 : 2.0;
      s += b / static_cast<double>(4 * j * j - 1) * cos_two_pi_fraction(j * i, n);
    }
    out[static_cast<std::size_t>(i)] = s.value();
  }
  return out;
}

// Same sums as a type-I cosine transform of a_m (m = 2j), via an FFT of the
// even extension of length 2n.
std::vector<double> cosine_sums_fft(std::int64_t n) {
  const auto nn = static_cast<std::size_t>(n);
  std::vector<double> a(nn + 1, 0.0);
  for (std::int64_t j = 1; j <= n / 2; ++j) {
    const double b = (2 * j == n) ? 1.0 : 2.0;
    a[static_cast<std::size_t>(2 * j)] = b / static_cast<double>(4 * j * j - 1);
  }
  std::vector<double> ext(2 * nn);
  for (std::size_t m = 0; m <= nn; ++m) ext[m] = a[m];
  for (std::size_t m = 1; m < nn; ++m) ext[2 * nn - m] = a[m];
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, ext);
  std::vector<double> out(nn / 2 + 1);
  for (std::size_t i = 0; i <= nn / 2; ++i) {
    const double sign = i % 2 ? -1.0 : 1.0;
    out[i] = 0.5 * (spectrum[i].real() - a[0] + sign * a[nn]);
  }
  return out;
}

QuadRule1D build_cc_rule(int level) {
  QuadRule1D rule;
  rule.level = level;
  if (level == 1) {
    rule.nodes = {0.0};
    rule.weights = {1.0};
    rule.positions = {kFinest / 2};
    return rule;
  }
  const std::int64_t n = std::int64_t{1} << (level - 1);
  const std::int64_t stride = kFinest / n;
  rule.nodes.resize(n + 1);
  rule.weights.resize(n + 1);
  rule.positions.resize(n + 1);
  for (std::int64_t i = 0; i <= n; ++i) {
    rule.positions[i] = i * stride;
    rule.nodes[i] = cc_node(i * stride);
  }
  const std::vector<double> moment_sum = level <= kDirectWeightLevel ? cosine_sums_direct(n) : cosine_sums_fft(n);
  for (std::int64_t i = 0; i <= n / 2; ++i) {
    const double c = (i == 0 || i == n) ? 1.0 : 2.0;
    const double w = 0.5 * c / static_cast<double>(n) * (1.0 - moment_sum[static_cast<std::size_t>(i)]);
    rule.weights[i] = w;
    rule.weights[n - i] = w;
  }
  return rule;
}

QuadRule1D build_difference_rule(int level) {
  QuadRule1D diff = cc_rule(level);
  if (level == 1) return diff;
  const QuadRule1D& coarse = cc_rule(level - 1);
  for (std::size_t c = 0; c < coarse.positions.size(); ++c) {
    // Positions ascend with the node index.
    const auto it = std::lower_bound(diff.positions.begin(), diff.positions.end(), coarse.positions[c]);
    diff.weights[static_cast<std::size_t>(it - diff.positions.begin())] -= coarse.weights[c];
  }
  return diff;
}

// Rules are immutable once built; keep them for the life of the process.
template <QuadRule1D (*Build)(int)>
const QuadRule1D& memo_rule(int level) {
  check_level(level);
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<QuadRule1D>> rules;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = rules[level];
  if (!slot) slot = std::make_unique<QuadRule1D>(Build(level));
  return *slot;
}

struct PositionHash {
  std::size_t operator()(const std::vector<std::int64_t>& key) const noexcept {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (auto p : key) h = mix64(h ^ static_cast<std::uint64_t>(p));
    return static_cast<std::size_t>(h);
  }
};

// Evaluated nodes keyed by finest-grid positions.
class NodeCache {
 public:
  explicit NodeCache(std::size_t n_raw) : n_raw_(n_raw) {}

  std::size_t size() const { return slots_.size(); }

  std::optional<std::size_t> find(const std::vector<std::int64_t>& key) const {
    const auto it = slots_.find(key);
    if (it == slots_.end()) return std::nullopt;
    return it->second;
  }

  std::span<const double> raw(std::size_t slot) const {
    return std::span<const double>(raw_).subspan(slot * n_raw_, n_raw_);
  }

  void insert(const std::vector<std::int64_t>& key, std::span<const double> raw) {
    slots_.emplace(key, slots_.size());
    raw_.insert(raw_.end(), raw.begin(), raw.end());
  }

 private:
  std::size_t n_raw_;
  std::unordered_map<std::vector<std::int64_t>, std::size_t, PositionHash> slots_;
  std::vector<double> raw_;
};

class Integrator {
 public:
  Integrator(const IntegrandFamily& family, std::size_t workers)
      : family_(family), workers_(workers), cache_(family.n_raw) {}

  std::size_t evaluations() const { return cache_.size(); }

  // Delta_k applied to every integrand.
  std::vector<double> contribution(const MultiIndex& k) {
    const std::size_t dim = family_.dim;
    std::vector<const QuadRule1D*> rules(dim);
    std::size_t total = 1;
    for (std::size_t q = 0; q < dim; ++q) {
      rules[q] = &difference_rule(k[q]);
      total *= rules[q]->nodes.size();
    }

    // Evaluate the nodes not seen before, in tensor order.
    std::vector<std::size_t> slot(total);
    std::vector<std::size_t> missing;
    std::vector<double> missing_xi;
    {
      std::unordered_map<std::vector<std::int64_t>, std::size_t, PositionHash> queued;
      std::vector<std::int64_t> key(dim);
      for (std::size_t flat = 0; flat < total; ++flat) {
        tensor_key(rules, flat, key);
        if (const auto known = cache_.find(key)) {
          slot[flat] = *known;
          continue;
        }
        const auto [it, inserted] = queued.emplace(key, cache_.size() + missing.size());
        slot[flat] = it->second;
        if (!inserted) continue;
        missing.push_back(flat);
        for (auto p : key) missing_xi.push_back(cc_node(p));
      }
    }
    std::vector<double> fresh(missing.size() * family_.n_raw);
    parallel_for(missing.size(), workers_, [&](std::size_t m) {
      const auto xi = std::span<const double>(missing_xi).subspan(m * dim, dim);
      const auto raw = std::span<double>(fresh).subspan(m * family_.n_raw, family_.n_raw);
      family_.evaluate(xi, raw);
      for (double v : raw) {
        if (!std::isfinite(v)) throw NonfiniteIntegrand("integrand is not finite at a quadrature node");
      }
    });
    {
      std::vector<std::int64_t> key(dim);
      for (std::size_t m = 0; m < missing.size(); ++m) {
        tensor_key(rules, missing[m], key);
        cache_.insert(key, std::span<const double>(fresh).subspan(m * family_.n_raw, family_.n_raw));
      }
    }

    std::vector<KahanSum> acc(family_.n_values);
    std::vector<double> xi(dim);
    std::vector<double> values(family_.n_values);
    for (std::size_t flat = 0; flat < total; ++flat) {
      const double weight = tensor_point(rules, flat, xi);
      std::span<const double> f = cache_.raw(slot[flat]);
      if (family_.transform) {
        family_.transform(xi, f, values);
        for (double v : values) {
          if (!std::isfinite(v)) throw NonfiniteIntegrand("integrand is not finite at a quadrature node");
        }
        f = values;
      }
      for (std::size_t r = 0; r < family_.n_values; ++r) acc[r] += weight * f[r];
    }
    std::vector<double> out(family_.n_values);
    for (std::size_t r = 0; r < family_.n_values; ++r) out[r] = acc[r].value();
    return out;
  }

 private:
  // Positions of tensor node `flat` (first dimension slowest) and its weight.
  static double tensor_key(const std::vector<const QuadRule1D*>& rules, std::size_t flat,
                           std::vector<std::int64_t>& key) {
    double weight = 1.0;
    for (std::size_t q = rules.size(); q-- > 0;) {
      const std::size_t n = rules[q]->nodes.size();
      const std::size_t i = flat % n;
      flat /= n;
      key[q] = rules[q]->positions[i];
      weight *= rules[q]->weights[i];
    }
    return weight;
  }

  // Node coordinates of tensor node `flat` and its weight.
  static double tensor_point(const std::vector<const QuadRule1D*>& rules, std::size_t flat,
                             std::vector<double>& xi) {
    double weight = 1.0;
    for (std::size_t q = rules.size(); q-- > 0;) {
      const std::size_t n = rules[q]->nodes.size();
      const std::size_t i = flat % n;
      flat /= n;
      xi[q] = rules[q]->nodes[i];
      weight *= rules[q]->weights[i];
    }
    return weight;
  }

  const IntegrandFamily& family_;
  std::size_t workers_;
  NodeCache cache_;
};

void validate_family(const IntegrandFamily& family) {
  if (family.dim == 0) throw ConfigError("integrand dimension must be positive");
  if (family.n_raw == 0 || family.n_values == 0) throw ConfigError("integrand family is empty");
  if (!family.evaluate) throw ConfigError("integrand family has no evaluate function");
  if (!family.transform && family.n_raw != family.n_values) {
    throw DimensionMismatch("without a transform the raw and integrand sizes must agree");
  }
  if (!family.groups.empty() && family.groups.size() != family.n_values) {
    throw DimensionMismatch("one normalization group per integrand is required");
  }
}

}  // namespace

std::size_t cc_size(int level) {
  check_level(level);
  return level == 1 ? 1 : (std::size_t{1} << (level - 1)) + 1;
}

double cc_node(std::int64_t position) {
  // cos(pi p / M) = sin(pi (M - 2p) / (2M)), evaluated on the reduced fraction.
  std::int64_t num = kFinest - 2 * position;
  std::int64_t den = 2 * kFinest;
  if (num == 0) return 0.0;
  const double sign = num < 0 ? -1.0 : 1.0;
  num = num < 0 ? -num : num;
  if (2 * num == den) return sign;
  const std::int64_t g = std::gcd(num, den);
  num /= g;
  den /= g;
  return sign * std::sin(std::numbers::pi * static_cast<double>(num) / static_cast<double>(den));
}

const QuadRule1D& cc_rule(int level) { return memo_rule<build_cc_rule>(level); }

const QuadRule1D& difference_rule(int level) {
  return memo_rule<build_difference_rule>(level);
}

std::size_t MultiIndexHash::operator()(const MultiIndex& k) const noexcept {
  std::uint64_t h = 0x13198a2e03707344ULL;
  for (int v : k) h = mix64(h ^ static_cast<std::uint64_t>(v));
  return static_cast<std::size_t>(h);
}

const char* to_string(DasqStop stop) {
  switch (stop) {
    case DasqStop::Tolerance: return "tolerance";
    case DasqStop::MaxEvaluations: return "max_evals";
    case DasqStop::Exhausted: return "exhausted";
  }
  return "unknown";
}

std::vector<int> DasqResult::max_levels() const {
  std::vector<int> levels;
  for (const auto& rec : indices) {
    if (levels.empty()) levels.assign(rec.k.size(), 1);
    for (std::size_t q = 0; q < rec.k.size(); ++q) levels[q] = std::max(levels[q], rec.k[q]);
  }
  return levels;
}

DasqResult dasq(const IntegrandFamily& family, const DasqOptions& options) {
  validate_family(family);
  const std::size_t n_values = family.n_values;
  std::vector<std::size_t> group(n_values);
  std::size_t n_groups = n_values;
  if (family.groups.empty()) {
    std::iota(group.begin(), group.end(), 0);
  } else {
    group = family.groups;
    n_groups = *std::max_element(group.begin(), group.end()) + 1;
  }

  Integrator integrator(family, options.workers);
  std::vector<KahanSum> v(n_values);

  // Adds Delta_k to the integrals and returns the total-effect indicator.
  auto accept = [&](const MultiIndex& k) {
    const std::vector<double> delta = integrator.contribution(k);
    for (std::size_t r = 0; r < n_values; ++r) v[r] += delta[r];
    std::vector<double> scale(n_groups, 1e-30);
    for (std::size_t r = 0; r < n_values; ++r) {
      scale[group[r]] = std::max(scale[group[r]], std::abs(v[r].value()));
    }
    double hbar = 0.0;
    for (std::size_t r = 0; r < n_values; ++r) {
      hbar = std::max(hbar, std::abs(delta[r]) / scale[group[r]]);
    }
    return hbar;
  };

  struct Entry {
    MultiIndex k;
    double hbar;
  };
  std::vector<Entry> active;
  std::vector<IndexRecord> old_records;
  std::unordered_set<MultiIndex, MultiIndexHash> old_set;

  const MultiIndex start(family.dim, 1);
  active.push_back({start, accept(start)});
  KahanSum eta(active.front().hbar);

  DasqResult result;
  for (bool first = true;; first = false) {
    // A single midpoint value says nothing about the integrand's variation,
    // so the starting index is always refined once.
    const auto is_required = [&](const Entry& e) { return options.required && options.required(e.k); };
    const bool floor_done = std::none_of(active.begin(), active.end(), is_required);
    if (!first && floor_done && eta.value() <= options.tol) {
      result.stop = DasqStop::Tolerance;
      break;
    }
    if (integrator.evaluations() > options.max_evals) {
      result.stop = DasqStop::MaxEvaluations;
      break;
    }
    if (active.empty()) {
      result.stop = DasqStop::Exhausted;
      break;
    }
    // Below tolerance only required indices are still worth refining.
    const bool only_required = !first && eta.value() <= options.tol;
    std::size_t best = active.size();
    for (std::size_t a = 0; a < active.size(); ++a) {
      if (only_required && !is_required(active[a])) continue;
      if (best == active.size() || active[a].hbar > active[best].hbar) best = a;
    }
    Entry chosen = std::move(active[best]);
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best));
    eta -= chosen.hbar;
    old_set.insert(chosen.k);
    old_records.push_back({chosen.k, chosen.hbar, false});

    for (std::size_t p = 0; p < family.dim; ++p) {
      MultiIndex j = chosen.k;
      if (++j[p] > kMaxQuadLevel) continue;
      if (!admissible(j, old_set)) continue;
      if (options.admit && !options.admit(j)) continue;
      const double hbar = accept(j);
      active.push_back({std::move(j), hbar});
      eta += hbar;
    }
  }

  result.values.resize(n_values);
  for (std::size_t r = 0; r < n_values; ++r) result.values[r] = v[r].value();
  result.eta = std::max(0.0, eta.value());
  result.evaluations = integrator.evaluations();
  result.indices = std::move(old_records);
  for (auto& e : active) result.indices.push_back({std::move(e.k), e.hbar, true});
  return result;
}

bool in_smolyak_set(const MultiIndex& k, int level) {
  long total = 0;
  for (int v : k) total += v;
  return total <= static_cast<long>(level) + static_cast<long>(k.size()) - 1;
}

DasqResult smolyak_quadrature(const IntegrandFamily& family, int level, std::size_t workers) {
  check_level(level);
  DasqOptions options;
  options.tol = -1.0;
  options.max_evals = static_cast<std::size_t>(-1);
  options.workers = workers;
  options.admit = [level](const MultiIndex& k) { return in_smolyak_set(k, level); };
  return dasq(family, options);
}

SparseGrid smolyak_grid(std::size_t dim, int level) {
  check_level(level);
  if (dim == 0) throw ConfigError("sparse grid dimension must be positive");
  std::map<std::vector<std::int64_t>, KahanSum> merged;

  MultiIndex k(dim, 1);
  const long budget = static_cast<long>(level) + static_cast<long>(dim) - 1;
  std::vector<std::int64_t> key(dim);
  // Enumerate every k with |k|_1 <= budget (odometer over the simplex).
  for (;;) {
    std::vector<const QuadRule1D*> rules(dim);
    std::size_t total = 1;
    for (std::size_t q = 0; q < dim; ++q) {
      rules[q] = &difference_rule(k[q]);
      total *= rules[q]->nodes.size();
    }
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::size_t rest = flat;
      double weight = 1.0;
      for (std::size_t q = dim; q-- > 0;) {
        const std::size_t n = rules[q]->nodes.size();
        const std::size_t i = rest % n;
        rest /= n;
        key[q] = rules[q]->positions[i];
        weight *= rules[q]->weights[i];
      }
      merged[key] += weight;
    }

    std::size_t q = dim;
    while (q-- > 0) {
      ++k[q];
      long sum = 0;
      for (int v : k) sum += v;
      if (sum <= budget) break;
      k[q] = 1;
    }
    if (q == static_cast<std::size_t>(-1)) break;
  }

  SparseGrid grid;
  grid.dim = dim;
  grid.points.reserve(merged.size() * dim);
  grid.weights.reserve(merged.size());
  for (const auto& [pos, w] : merged) {
    for (auto p : pos) grid.points.push_back(cc_node(p));
    grid.weights.push_back(w.value());
  }
  return grid;
}

void write_index_sets_csv(std::ostream& out, const DasqResult& result) {
  const std::size_t dim = result.indices.empty() ? 0 : result.indices.front().k.size();
  for (std::size_t q = 0; q < dim; ++q) out << "k_" << q + 1 << ',';
  out << "set,hbar\n";
  for (const auto& rec : result.indices) {
    for (int v : rec.k) out << v << ',';
    out << (rec.active ? "active" : "old") << ',' << format_double(rec.hbar) << '\n';
  }
}

}  // namespace oed

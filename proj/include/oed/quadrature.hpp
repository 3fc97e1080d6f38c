#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace oed {

/// Deepest Clenshaw-Curtis level supported (2^29 + 1 nodes).
inline constexpr int kMaxQuadLevel = 30;

/// One-dimensional rule on [-1, 1] with weights against the uniform
/// probability density 1/2, so weights of a full rule sum to 1.
///
/// `positions` identify nodes on the finest nested grid: the node cos(pi p / M)
/// with M = 2^(kMaxQuadLevel - 1) has position p. Equal positions are equal
/// nodes across levels, and node values are computed from the reduced
/// position so they are bit-identical at every level.
struct QuadRule1D {
  int level = 1;
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<std::int64_t> positions;
};

/// Number of nodes at a level: 1 for level 1, 2^(l-1) + 1 above.
std::size_t cc_size(int level);

/// Nested Clenshaw-Curtis rule. Nodes run from +1 down to -1.
const QuadRule1D& cc_rule(int level);

/// Q_l - Q_(l-1) on the nodes of level l (Q_0 = 0).
const QuadRule1D& difference_rule(int level);

/// Node value of a finest-grid position.
double cc_node(std::int64_t position);

using MultiIndex = std::vector<int>;

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& k) const noexcept;
};

/// True iff k - e_q is in `old_set` for every q with k_q > 1.
template <typename Set>
bool admissible(const MultiIndex& k, const Set& old_set) {
  MultiIndex back = k;
  for (std::size_t q = 0; q < k.size(); ++q) {
    if (k[q] <= 1) continue;
    --back[q];
    const bool found = old_set.find(back) != old_set.end();
    ++back[q];
    if (!found) return false;
  }
  return true;
}

/// A family of integrands sharing one evaluation per node.
///
/// `evaluate` computes the cached raw vector at a node (the expensive part,
/// e.g. a model run). `transform` turns it into the integrand values; when
/// empty the raw vector is the integrand. `groups[r]` assigns integrand r to
/// a normalization group for the error indicator; empty means one group per
/// integrand.
struct IntegrandFamily {
  std::size_t dim = 1;
  std::size_t n_raw = 1;
  std::size_t n_values = 1;
  std::function<void(std::span<const double> xi, std::span<double> raw)> evaluate;
  std::function<void(std::span<const double> xi, std::span<const double> raw,
                     std::span<double> values)>
      transform;
  std::vector<std::size_t> groups;
};

struct DasqOptions {
  double tol = 1e-8;
  std::size_t max_evals = 10000;
  /// Threads for the new nodes of one multi-index.
  std::size_t workers = 1;
  /// Extra acceptance rule for forward neighbours; empty admits everything.
  std::function<bool(const MultiIndex&)> admit;
  /// Active indices for which this holds are refined before the tolerance
  /// stop may fire; empty requires nothing.
  std::function<bool(const MultiIndex&)> required;
};

enum class DasqStop { Tolerance, MaxEvaluations, Exhausted };

const char* to_string(DasqStop stop);

struct IndexRecord {
  MultiIndex k;
  double hbar = 0.0;
  bool active = false;
};

struct DasqResult {
  std::vector<double> values;
  double eta = 0.0;
  std::size_t evaluations = 0;
  DasqStop stop = DasqStop::Exhausted;
  /// Old-set members in acceptance order, then the remaining active set.
  std::vector<IndexRecord> indices;

  /// Highest level per dimension over all summed multi-indices.
  std::vector<int> max_levels() const;
};

/// Dimension-adaptive sparse quadrature of E[f_r(xi)], xi ~ U[-1,1]^dim.
///
/// Starts from k = (1,...,1). Each step moves the active index with the
/// largest total-effect indicator to the old set, adds its admissible forward
/// neighbours to the active set, and sums their tensorized difference rules
/// into every integral. The local indicator of index k for integrand r is
/// |Delta_k f_r|; the total-effect indicator is the largest of these after
/// dividing by max(max |v| over r's group, 1e-30). The global indicator eta
/// is the sum over the active set. The starting index is always refined.
/// Afterwards the loop stops when eta <= tol and no required index is active,
/// or when the number of
/// distinct nodes evaluated exceeds max_evals (both checked before each
/// step), or when no active index is left.
DasqResult dasq(const IntegrandFamily& family, const DasqOptions& options);

/// Isotropic Smolyak level-L index set |k|_1 <= L + dim - 1.
bool in_smolyak_set(const MultiIndex& k, int level);

/// dasq with forward neighbours restricted to the Smolyak set and no
/// tolerance stop, i.e. the full isotropic Smolyak rule of `level`.
DasqResult smolyak_quadrature(const IntegrandFamily& family, int level,
                              std::size_t workers = 1);

/// Distinct nodes and combined weights of the isotropic Smolyak rule.
struct SparseGrid {
  std::size_t dim = 0;
  std::vector<double> points;  // n x dim, row major
  std::vector<double> weights;
  std::size_t size() const { return weights.size(); }
  std::span<const double> point(std::size_t i) const {
    return std::span<const double>(points).subspan(i * dim, dim);
  }
};

SparseGrid smolyak_grid(std::size_t dim, int level);

/// Writes `k_1..k_d,set,hbar` with set = old|active.
void write_index_sets_csv(std::ostream& out, const DasqResult& result);

}  // namespace oed

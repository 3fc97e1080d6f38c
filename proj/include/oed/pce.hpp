#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "oed/model.hpp"
#include "oed/quadrature.hpp"

namespace oed {

/// Affine maps between xi in [-1, 1] and physical coordinates. The first
/// n_theta dimensions are parameters, the rest design variables.
class InputMap {
 public:
  InputMap() = default;
  InputMap(const Box& theta_box, const Box& design_box);
  InputMap(std::vector<Interval> bounds, std::size_t n_theta);

  std::size_t dim() const { return bounds_.size(); }
  std::size_t n_theta() const { return n_theta_; }
  std::size_t n_design() const { return bounds_.size() - n_theta_; }
  const std::vector<Interval>& bounds() const { return bounds_; }

  double to_physical(std::size_t i, double xi) const;
  double to_xi(std::size_t i, double x) const;
  Vector to_physical(std::span<const double> xi) const;
  Vector to_xi(std::span<const double> x) const;

 private:
  std::vector<Interval> bounds_;
  std::size_t n_theta_ = 0;
};

/// (n + p choose p); throws ConfigError when it would exceed `limit`.
std::size_t total_order_count(std::size_t n_s, std::size_t p, std::size_t limit = 50000000);

/// All multi-indices with |i|_1 <= p in graded lexicographic order: by total
/// degree, then with the first entry descending, e.g. for n_s = 2, p = 2:
/// (0,0) (1,0) (0,1) (2,0) (1,1) (0,2).
std::vector<MultiIndex> total_order_indices(std::size_t n_s, std::size_t p);

/// P_0(x) .. P_p(x), standard Legendre polynomials.
void legendre_values(double x, std::size_t p, std::span<double> out);

/// prod_j P_{i_j}(xi_j).
double basis_eval(const MultiIndex& i, std::span<const double> xi);

/// E[Psi_i^2] = prod_j 1 / (2 i_j + 1) under the uniform probability weight.
double basis_norm(const MultiIndex& i);

/// Total-order Legendre expansion of every model output over (theta, d).
struct PCExpansion {
  std::size_t p = 0;
  InputMap map;
  std::vector<MultiIndex> indices;
  std::vector<std::string> output_names;
  /// Optional, one per output when present.
  std::vector<std::string> output_units;
  /// n_outputs x n_terms, row major.
  std::vector<double> coefficients;

  std::size_t n_s() const { return map.dim(); }
  std::size_t n_terms() const { return indices.size(); }
  std::size_t n_outputs() const { return output_names.size(); }
  double coefficient(std::size_t c, std::size_t term) const {
    return coefficients[c * indices.size() + term];
  }
};

/// Surrogate values at xi. Inputs outside [-1, 1] are evaluated anyway.
Vector pce_eval(const PCExpansion& pce, std::span<const double> xi);

struct PhysicalEval {
  Vector values;
  /// True when some input lies outside the mapped box.
  bool extrapolated = false;
};

PhysicalEval pce_eval_physical(const PCExpansion& pce, std::span<const double> theta,
                               std::span<const double> design);

struct NispOptions {
  std::size_t p = 4;
  double tol = 1e-8;
  std::size_t max_evals = 10000;
  std::size_t workers = 1;
};

struct NispResult {
  PCExpansion expansion;
  DasqStop stop = DasqStop::Exhausted;
  double eta = 0.0;
  std::size_t evaluations = 0;
  std::vector<int> max_levels;
  DasqResult quadrature;
};

/// True iff the tensor difference rule of k acts on some polynomial of total
/// degree <= 2p. The union of these indices integrates every product of two
/// basis terms exactly.
bool nisp_requires(const MultiIndex& k, std::size_t p);

/// Pseudospectral projection: coefficient (c, i) = E[G_c Psi_i] / E[Psi_i^2]
/// with all numerators integrated by one dimension-adaptive quadrature run.
/// Model outputs are cached per node; the error indicator is normalized per
/// output. The tolerance stop waits until every index with nisp_requires has
/// been reached, so polynomial models of degree <= p are recovered exactly
/// whenever the evaluation budget allows.
NispResult nisp_project(const ForwardModel& model, const InputMap& map,
                        const NispOptions& options);

/// Per-output e_c = E[(G_c - G^_c)^2] / E[G_c^2] on the isotropic Smolyak
/// grid of `level`. Throws ZeroDenominator when E[G_c^2] is zero.
std::vector<double> relative_l2_error(const PCExpansion& pce, const ForwardModel& model,
                                      int level, std::size_t workers = 1);

/// Text persistence. `comment` lines are written with a "# " prefix.
void save_expansion(std::ostream& out, const PCExpansion& pce, const std::string& comment = "");
PCExpansion load_expansion(std::istream& in);

/// A saved or projected expansion used as a forward model.
class PceSurrogate final : public ForwardModel {
 public:
  explicit PceSurrogate(PCExpansion pce);

  std::size_t n_theta() const override { return pce_.map.n_theta(); }
  std::size_t n_design() const override { return pce_.map.n_design(); }
  std::size_t n_obs() const override { return pce_.n_outputs(); }
  std::string name() const override { return "pce-surrogate"; }
  void evaluate(std::span<const double> theta, std::span<const double> design,
                std::span<double> out) const override;

  const PCExpansion& expansion() const { return pce_; }

 private:
  PCExpansion pce_;
};

}  // namespace oed

#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>

#include <Eigen/Dense>

#include "oed/model.hpp"

namespace oed::kinetics {

/// dy/dt = f(t, y), written to the last argument.
using OdeRhs = std::function<void(double, std::span<const double>, std::span<double>)>;

struct BdfOptions {
  double rtol = 1e-6;
  /// One value for all components or one per component.
  Vector atol{1e-12};
  /// 0 picks the first step automatically.
  double first_step = 0.0;
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 1000000;
  /// The first `nonnegative` components are clipped to 0 after a step when
  /// they fall below -atol.
  std::size_t nonnegative = 0;
};

/// Variable-order (1 to 5), variable-step backward differentiation formulas
/// in the Nordsieck-like backward-difference form. Newton iterations reuse
/// the LU factors of I - c J across steps; J is a forward-difference
/// Jacobian refreshed only when Newton fails to converge.
class BdfSolver {
 public:
  static constexpr std::size_t kMaxOrder = 5;

  /// Throws ConfigError for bad tolerances or t_bound <= t0.
  BdfSolver(OdeRhs rhs, double t0, Vector y0, double t_bound, BdfOptions options);

  /// Advances one accepted step; false once t_bound has been reached.
  /// Throws StepFailure when the step size underflows or max_steps is hit.
  bool step();

  double t() const { return t_; }
  double t_old() const { return t_old_; }
  const Vector& y() const { return y_; }
  std::size_t order() const { return order_; }
  bool finished() const { return t_ >= t_bound_; }

  /// Interpolant of the last accepted step, exact at t_old() and t().
  void dense(double t, std::span<double> out) const;

  std::size_t steps() const { return steps_; }
  std::size_t rejected_steps() const { return rejected_; }
  std::size_t rhs_evaluations() const { return rhs_evals_; }
  std::size_t jacobian_evaluations() const { return jac_evals_; }
  std::size_t factorizations() const { return lu_count_; }
  /// Steps in which a component was clipped to zero.
  std::size_t clip_events() const { return clip_events_; }

 private:
  void eval(double t, std::span<const double> y, std::span<double> f);
  void compute_jacobian(double t, const Eigen::VectorXd& y);
  void change_differences(double factor);
  double rms(const Eigen::VectorXd& v) const;
  bool newton(double t_new, const Eigen::VectorXd& y_predict, double c, const Eigen::VectorXd& psi,
              const Eigen::VectorXd& scale, Eigen::VectorXd& y_new, Eigen::VectorXd& d, std::size_t& iters);

  OdeRhs rhs_;
  std::size_t n_;
  double t_;
  double t_old_;
  double t_bound_;
  Vector y_;
  BdfOptions opt_;
  Eigen::VectorXd atol_;
  double newton_tol_;
  double h_abs_ = 0.0;
  std::size_t order_ = 1;
  std::size_t equal_steps_ = 0;
  // Row i holds the i-th backward difference scaled to the current step.
  Eigen::MatrixXd diff_;
  Eigen::MatrixXd jac_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  bool lu_valid_ = false;
  bool jac_current_ = false;
  // Dense output of the last step.
  Eigen::MatrixXd dense_diff_;
  std::size_t dense_order_ = 1;
  double dense_h_ = 0.0;
  std::size_t steps_ = 0, rejected_ = 0, rhs_evals_ = 0, jac_evals_ = 0, lu_count_ = 0, clip_events_ = 0;
};

}  // namespace oed::kinetics

#include "oed/kinetics/bdf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "oed/errors.hpp"

namespace oed::kinetics {

namespace {

constexpr std::size_t kNewtonMaxIter = 4;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;
constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Coefficients {
  std::array<double, BdfSolver::kMaxOrder + 2> gamma{};
  std::array<double, BdfSolver::kMaxOrder + 2> alpha{};
  std::array<double, BdfSolver::kMaxOrder + 2> error_const{};
  Coefficients() {
    for (std::size_t k = 1; k < gamma.size(); ++k) gamma[k] = gamma[k - 1] + 1.0 / static_cast<double>(k);
    alpha = gamma;
    for (std::size_t k = 0; k < error_const.size(); ++k) error_const[k] = 1.0 / static_cast<double>(k + 1);
  }
};

const Coefficients& coefficients() {
  static const Coefficients c;
  return c;
}

// Maps differences for step h to differences for step factor * h.
Eigen::MatrixXd step_change_matrix(std::size_t order, double factor) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(order + 1), static_cast<Eigen::Index>(order + 1));
  m.row(0).setOnes();
  for (std::size_t i = 1; i <= order; ++i) {
    for (std::size_t j = 1; j <= order; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (static_cast<double>(i) - 1.0 - factor * static_cast<double>(j)) / static_cast<double>(i);
    }
  }
  for (Eigen::Index i = 1; i < m.rows(); ++i) m.row(i) = m.row(i).cwiseProduct(m.row(i - 1));
  return m;
}

}  // namespace

BdfSolver::BdfSolver(OdeRhs rhs, double t0, Vector y0, double t_bound, BdfOptions options)
    : rhs_(std::move(rhs)), n_(y0.size()), t_(t0), t_old_(t0), t_bound_(t_bound), y_(std::move(y0)),
      opt_(std::move(options)) {
  if (!(opt_.rtol > 0.0) || !std::isfinite(opt_.rtol)) throw ConfigError("rtol must be positive");
  if (opt_.atol.size() != 1 && opt_.atol.size() != n_) throw ConfigError("atol needs 1 or n values");
  for (double a : opt_.atol) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("atol must be positive");
  }
  if (!(t_bound > t0)) throw ConfigError("t_bound must exceed t0");
  if (n_ == 0) throw ConfigError("empty ODE state");
  if (opt_.nonnegative > n_) throw ConfigError("nonnegative exceeds the state size");
  opt_.rtol = std::max(opt_.rtol, 100 * kEps);
  atol_.resize(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) atol_[static_cast<Eigen::Index>(i)] = opt_.atol.size() == 1 ? opt_.atol[0] : opt_.atol[i];
  newton_tol_ = std::max(10 * kEps / opt_.rtol, std::min(0.03, std::sqrt(opt_.rtol)));

  const Eigen::Map<const Eigen::VectorXd> y(y_.data(), static_cast<Eigen::Index>(n_));
  Eigen::VectorXd f0(static_cast<Eigen::Index>(n_));
  eval(t_, y_, std::span<double>(f0.data(), n_));

  if (opt_.first_step > 0.0) {
    h_abs_ = std::min(opt_.first_step, t_bound_ - t_);
  } else {
    const double span = t_bound_ - t_;
    const Eigen::VectorXd scale = atol_ + opt_.rtol * y.cwiseAbs();
    const double d0 = rms(y.cwiseQuotient(scale));
    const double d1 = rms(f0.cwiseQuotient(scale));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    const Eigen::VectorXd y1 = y + h0 * f0;
    Eigen::VectorXd f1(static_cast<Eigen::Index>(n_));
    eval(t_ + h0, std::span<const double>(y1.data(), n_), std::span<double>(f1.data(), n_));
    const double d2 = rms((f1 - f0).cwiseQuotient(scale)) / h0;
    const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3) : std::sqrt(0.01 / std::max(d1, d2));
    h_abs_ = std::min({100 * h0, h1, span});
  }
  h_abs_ = std::min(h_abs_, opt_.max_step);

  diff_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kMaxOrder + 3), static_cast<Eigen::Index>(n_));
  diff_.row(0) = y.transpose();
  diff_.row(1) = (h_abs_ * f0).transpose();
  compute_jacobian(t_, y);
  dense_diff_ = diff_.topRows(2);
}

void BdfSolver::eval(double t, std::span<const double> y, std::span<double> f) {
  ++rhs_evals_;
  rhs_(t, y, f);
}

double BdfSolver::rms(const Eigen::VectorXd& v) const {
  return v.norm() / std::sqrt(static_cast<double>(v.size()));
}

void BdfSolver::compute_jacobian(double t, const Eigen::VectorXd& y) {
  ++jac_evals_;
  const auto n = static_cast<Eigen::Index>(n_);
  jac_.resize(n, n);
  Eigen::VectorXd f0(n), f1(n);
  eval(t, std::span<const double>(y.data(), n_), std::span<double>(f0.data(), n_));
  Eigen::VectorXd yp = y;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double floor = atol_[j] / opt_.rtol;
    const double target = y[j] + std::sqrt(kEps) * std::max(std::abs(y[j]), floor);
    const double delta = target - y[j];
    yp[j] = target;
    eval(t, std::span<const double>(yp.data(), n_), std::span<double>(f1.data(), n_));
    jac_.col(j) = (f1 - f0) / delta;
    yp[j] = y[j];
  }
  jac_current_ = true;
  lu_valid_ = false;
}

void BdfSolver::change_differences(double factor) {
  const Eigen::MatrixXd r = step_change_matrix(order_, factor);
  const Eigen::MatrixXd u = step_change_matrix(order_, 1.0);
  const Eigen::MatrixXd ru = r * u;
  const auto rows = static_cast<Eigen::Index>(order_ + 1);
  diff_.topRows(rows) = (ru.transpose() * diff_.topRows(rows)).eval();
}

bool BdfSolver::newton(double t_new, const Eigen::VectorXd& y_predict, double c, const Eigen::VectorXd& psi,
                       const Eigen::VectorXd& scale, Eigen::VectorXd& y_new, Eigen::VectorXd& d,
                       std::size_t& iters) {
  const auto n = static_cast<Eigen::Index>(n_);
  d.setZero(n);
  y_new = y_predict;
  Eigen::VectorXd f(n);
  double dy_norm_old = -1.0;
  for (std::size_t k = 0; k < kNewtonMaxIter; ++k) {
    iters = k + 1;
    eval(t_new, std::span<const double>(y_new.data(), n_), std::span<double>(f.data(), n_));
    if (!f.allFinite()) return false;
    const Eigen::VectorXd dy = lu_.solve(c * f - psi - d);
    const double dy_norm = rms(dy.cwiseQuotient(scale));
    double rate = -1.0;
    if (dy_norm_old > 0.0) {
      rate = dy_norm / dy_norm_old;
      if (rate >= 1.0 ||
          std::pow(rate, static_cast<double>(kNewtonMaxIter - k)) / (1.0 - rate) * dy_norm > newton_tol_) {
        return false;
      }
    }
    y_new += dy;
    d += dy;
    if (dy_norm == 0.0 || (rate >= 0.0 && rate / (1.0 - rate) * dy_norm < newton_tol_)) return true;
    dy_norm_old = dy_norm;
  }
  return false;
}

bool BdfSolver::step() {
  if (finished()) return false;
  if (steps_ >= opt_.max_steps) {
    throw StepFailure("BDF reached max_steps = " + std::to_string(opt_.max_steps) + " at t = " + std::to_string(t_));
  }
  const auto& co = coefficients();
  const auto n = static_cast<Eigen::Index>(n_);
  const double min_step = 10.0 * std::abs(std::nextafter(t_, INFINITY) - t_);
  if (h_abs_ > opt_.max_step) {
    change_differences(opt_.max_step / h_abs_);
    h_abs_ = opt_.max_step;
    equal_steps_ = 0;
  } else if (h_abs_ < min_step) {
    change_differences(min_step / h_abs_);
    h_abs_ = min_step;
    equal_steps_ = 0;
  }

  Eigen::VectorXd y_new(n), d(n), scale(n);
  double t_new = t_;
  double error_norm = 0.0;
  double safety = 0.9;
  for (;;) {
    if (h_abs_ < min_step) throw StepFailure("BDF step size underflow at t = " + std::to_string(t_));
    t_new = t_ + h_abs_;
    if (t_new > t_bound_) {
      t_new = t_bound_;
      change_differences((t_new - t_) / h_abs_);
      equal_steps_ = 0;
      lu_valid_ = false;
    }
    const double h = t_new - t_;
    h_abs_ = h;
    const auto rows = static_cast<Eigen::Index>(order_ + 1);
    const Eigen::VectorXd y_predict = diff_.topRows(rows).colwise().sum().transpose();
    scale = atol_ + opt_.rtol * y_predict.cwiseAbs();
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 1; i <= order_; ++i) psi += co.gamma[i] * diff_.row(static_cast<Eigen::Index>(i)).transpose();
    psi /= co.alpha[order_];
    const double c = h / co.alpha[order_];

    bool converged = false;
    std::size_t iters = 0;
    for (;;) {
      if (!lu_valid_) {
        lu_.compute(Eigen::MatrixXd::Identity(n, n) - c * jac_);
        ++lu_count_;
        lu_valid_ = true;
      }
      converged = newton(t_new, y_predict, c, psi, scale, y_new, d, iters);
      if (converged || jac_current_) break;
      compute_jacobian(t_new, y_predict);
    }
    if (!converged) {
      ++rejected_;
      h_abs_ *= 0.5;
      change_differences(0.5);
      equal_steps_ = 0;
      lu_valid_ = false;
      continue;
    }
    safety = 0.9 * (2.0 * kNewtonMaxIter + 1.0) / (2.0 * kNewtonMaxIter + static_cast<double>(iters));
    scale = atol_ + opt_.rtol * y_new.cwiseAbs();
    error_norm = rms((co.error_const[order_] * d).cwiseQuotient(scale));
    if (error_norm > 1.0) {
      ++rejected_;
      const double factor =
          std::max(kMinFactor, safety * std::pow(error_norm, -1.0 / static_cast<double>(order_ + 1)));
      h_abs_ *= factor;
      change_differences(factor);
      equal_steps_ = 0;
      // The LU factors stay: Newton converged, so they are still usable.
      continue;
    }
    break;
  }

  ++steps_;
  ++equal_steps_;
  t_old_ = t_;
  t_ = t_new;
  jac_current_ = false;
  const auto k = static_cast<Eigen::Index>(order_);
  diff_.row(k + 2) = d.transpose() - diff_.row(k + 1);
  diff_.row(k + 1) = d.transpose();
  for (Eigen::Index i = k; i >= 0; --i) diff_.row(i) += diff_.row(i + 1);

  bool clipped = false;
  for (std::size_t i = 0; i < opt_.nonnegative; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (diff_(0, ii) < -atol_[ii]) {
      diff_(0, ii) = 0.0;
      clipped = true;
    }
  }
  clip_events_ += clipped;
  for (std::size_t i = 0; i < n_; ++i) y_[i] = diff_(0, static_cast<Eigen::Index>(i));

  dense_order_ = order_;
  dense_h_ = h_abs_;
  dense_diff_ = diff_.topRows(static_cast<Eigen::Index>(order_ + 1));

  if (equal_steps_ < order_ + 1) return true;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double error_m = order_ > 1 ? rms((co.error_const[order_ - 1] * diff_.row(k).transpose()).cwiseQuotient(scale)) : kInf;
  const double error_p =
      order_ < kMaxOrder ? rms((co.error_const[order_ + 1] * diff_.row(k + 2).transpose()).cwiseQuotient(scale)) : kInf;
  const std::array<double, 3> norms{error_m, error_norm, error_p};
  std::array<double, 3> factors{};
  for (std::size_t i = 0; i < 3; ++i) {
    factors[i] = std::pow(norms[i], -1.0 / static_cast<double>(order_ + i));
  }
  const auto best = static_cast<std::size_t>(std::max_element(factors.begin(), factors.end()) - factors.begin());
  order_ = order_ + best - 1;
  const double factor = std::min(kMaxFactor, safety * factors[best]);
  h_abs_ *= factor;
  change_differences(factor);
  equal_steps_ = 0;
  lu_valid_ = false;
  return true;
}

void BdfSolver::dense(double t, std::span<double> out) const {
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::VectorXd y = dense_diff_.row(0).transpose();
  double p = 1.0;
  for (std::size_t i = 0; i < dense_order_; ++i) {
    const double shift = t_ - dense_h_ * static_cast<double>(i);
    p *= (t - shift) / (dense_h_ * static_cast<double>(i + 1));
    y += p * dense_diff_.row(static_cast<Eigen::Index>(i + 1)).transpose();
  }
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = y[i];
}

}  // namespace oed::kinetics

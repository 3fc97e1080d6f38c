#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "oed/kahan.hpp"
#include "oed/model.hpp"

namespace oed {

/// Streaming log-sum-exp.
///
/// Keeps a running max-shift so no term underflows before the shift is
/// applied. Terms more than `cutoff` nats below the running maximum are
/// counted but not exponentiated; the cutoff is chosen by the caller so the
/// skipped mass stays below double rounding of the total.
class LogSumExp {
 public:
  explicit LogSumExp(double cutoff = 80.0) : cutoff_(cutoff) {}

  void add(double log_term);
  /// ln(sum of exp(terms)); -inf when empty or all terms are -inf.
  double value() const;

 private:
  double cutoff_;
  double max_ = -std::numeric_limits<double>::infinity();
  KahanSum sum_;
};

/// Cutoff (nats) below which n terms cannot move the sum in double precision.
double negligible_log_gap(std::size_t n_terms);

/// Likelihood terms of a fixed set of model outputs ("inner samples").
///
/// Precomputes 1/(2 sigma^2) and sum(ln sigma) per inner sample so that each
/// ln p(y | G_j) costs a few flops. With output-independent noise the samples
/// are also sorted by their first output, and log_mean() only visits the
/// window of samples whose first component lies within a few standard
/// deviations of y; terms outside the window are provably invisible or the
/// query falls back to the full sum.
class InnerLikelihoods {
 public:
  InnerLikelihoods(const NoiseModel& noise, std::span<const double> outputs,
                   std::size_t n_obs);

  std::size_t size() const { return n_; }
  /// ln p(y | G_j) for one inner sample j.
  double log_term(std::span<const double> y, std::size_t j) const;
  /// ln( (1/n) sum_j p(y | G_j) ).
  double log_mean(std::span<const double> y) const;
  /// Same quantity summed over every inner sample.
  double log_mean_exact(std::span<const double> y) const;

 private:
  std::size_t n_;
  std::size_t n_obs_;
  std::vector<double> outputs_;
  std::vector<double> half_precision_;
  std::vector<double> log_norm_;
  bool windowed_ = false;
  double window_ = 0.0;
  std::vector<double> first_sorted_;
  std::vector<std::size_t> order_;
};

/// Sum of Gaussian kernels exp(-(y - g_j)^2 / (2 sigma^2)) over a fixed set of
/// scalar centers g_j, evaluated by a box-wise Taylor (fast Gauss) expansion.
///
/// Centers are binned into boxes of width sigma. For each box the moments
/// sum_j exp(-r_j^2/2) r_j^m / m!, r_j = (g_j - c)/sigma, are precomputed, so a
/// query needs O(boxes within the cutoff x order) work instead of O(n). Boxes
/// farther than kCutoff standard deviations are skipped; when the skipped mass
/// could be visible in double precision the query falls back to the exact sum.
class GaussKernelSum {
 public:
  static constexpr int kOrder = 40;
  static constexpr double kCutoff = 13.0;

  GaussKernelSum(std::span<const double> centers, double sigma);

  /// ln sum_j exp(-(y - g_j)^2 / (2 sigma^2)).
  double log_sum(double y) const;
  /// Same quantity by direct summation (reference path).
  double log_sum_exact(double y) const;

  std::size_t size() const { return sorted_.size(); }

 private:
  struct BoxMoments {
    long index;
    double center;
    std::size_t count;
    double moments[kOrder];
  };

  double sigma_;
  double origin_;
  std::vector<double> sorted_;
  std::vector<BoxMoments> boxes_;
};

}  // namespace oed

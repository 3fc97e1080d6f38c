#include "oed/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oed/errors.hpp"

namespace oed {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

void LogSumExp::add(double log_term) {
  if (log_term == kNegInf) return;
  if (log_term > max_) {
    if (max_ != kNegInf) {
      const double rescaled = sum_.value() * std::exp(max_ - log_term);
      sum_ = KahanSum(rescaled);
    }
    max_ = log_term;
    sum_ += 1.0;
  } else if (log_term >= max_ - cutoff_) {
    sum_ += std::exp(log_term - max_);
  }
}

double LogSumExp::value() const {
  if (max_ == kNegInf) return kNegInf;
  return max_ + std::log(sum_.value());
}

double negligible_log_gap(std::size_t n_terms) {
  // exp(-37) < 2^-53; n terms each that far below the max are invisible.
  return 37.0 + std::log(static_cast<double>(std::max<std::size_t>(n_terms, 1)));
}

InnerLikelihoods::InnerLikelihoods(const NoiseModel& noise,
                                   std::span<const double> outputs,
                                   std::size_t n_obs)
    : n_(n_obs == 0 ? 0 : outputs.size() / n_obs),
      n_obs_(n_obs),
      outputs_(outputs.begin(), outputs.end()),
      half_precision_(outputs.size()),
      log_norm_(n_) {
  if (noise.size() != n_obs) {
    throw DimensionMismatch("noise model size does not match model outputs");
  }
  for (std::size_t j = 0; j < n_; ++j) {
    double norm = 0.0;
    for (std::size_t c = 0; c < n_obs_; ++c) {
      const double s = noise.sigma(c, outputs_[j * n_obs_ + c]);
      half_precision_[j * n_obs_ + c] = 0.5 / (s * s);
      norm += std::log(s) + kHalfLog2Pi;
    }
    log_norm_[j] = norm;
  }
  if (noise.is_constant() && n_obs_ > 0 && n_ > 0) {
    windowed_ = true;
    const double sigma0 = noise.sigma(0, 0.0);
    window_ = sigma0 * std::sqrt(2.0 * (negligible_log_gap(n_) + 2.0));
    order_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) order_[j] = j;
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return outputs_[a * n_obs_] < outputs_[b * n_obs_];
    });
    first_sorted_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) first_sorted_[j] = outputs_[order_[j] * n_obs_];
  }
}

double InnerLikelihoods::log_term(std::span<const double> y, std::size_t j) const {
  const double* g = &outputs_[j * n_obs_];
  const double* hp = &half_precision_[j * n_obs_];
  double q = 0.0;
  for (std::size_t c = 0; c < n_obs_; ++c) {
    const double r = y[c] - g[c];
    q += r * r * hp[c];
  }
  return -q - log_norm_[j];
}

double InnerLikelihoods::log_mean(std::span<const double> y) const {
  if (!windowed_) return log_mean_exact(y);
  const auto lo = std::lower_bound(first_sorted_.begin(), first_sorted_.end(), y[0] - window_);
  const auto hi = std::upper_bound(lo, first_sorted_.end(), y[0] + window_);
  const auto first = static_cast<std::size_t>(lo - first_sorted_.begin());
  const auto last = static_cast<std::size_t>(hi - first_sorted_.begin());
  LogSumExp acc(negligible_log_gap(n_));
  for (std::size_t k = first; k < last; ++k) acc.add(log_term(y, order_[k]));
  const std::size_t skipped = n_ - (last - first);
  if (skipped > 0) {
    // A skipped term has a first-component residual beyond the window, so its
    // log is below -window^2 hp_0 - log_norm (both constant across samples).
    const double bound = std::log(static_cast<double>(skipped)) -
                         window_ * window_ * half_precision_[0] - log_norm_[0];
    const double included = acc.value();
    if (!(bound < included - 39.0)) return log_mean_exact(y);
  }
  return acc.value() - std::log(static_cast<double>(n_));
}

double InnerLikelihoods::log_mean_exact(std::span<const double> y) const {
  LogSumExp acc(negligible_log_gap(n_));
  for (std::size_t j = 0; j < n_; ++j) acc.add(log_term(y, j));
  return acc.value() - std::log(static_cast<double>(n_));
}

GaussKernelSum::GaussKernelSum(std::span<const double> centers, double sigma)
    : sigma_(sigma), sorted_(centers.begin(), centers.end()) {
  if (!(sigma_ > 0.0)) throw NonpositiveNoise("kernel width must be positive");
  std::sort(sorted_.begin(), sorted_.end());
  if (sorted_.empty()) return;
  origin_ = sorted_.front();
  std::size_t j = 0;
  while (j < sorted_.size()) {
    const long index = static_cast<long>(std::floor((sorted_[j] - origin_) / sigma_));
    BoxMoments box{};
    box.index = index;
    box.center = origin_ + (static_cast<double>(index) + 0.5) * sigma_;
    KahanSum acc[kOrder];
    for (; j < sorted_.size(); ++j) {
      const long k = static_cast<long>(std::floor((sorted_[j] - origin_) / sigma_));
      if (k != index) break;
      const double r = (sorted_[j] - box.center) / sigma_;
      double term = std::exp(-0.5 * r * r);
      for (int m = 0; m < kOrder; ++m) {
        acc[m] += term;
        term *= r / static_cast<double>(m + 1);
      }
      ++box.count;
    }
    for (int m = 0; m < kOrder; ++m) box.moments[m] = acc[m].value();
    boxes_.push_back(box);
  }
}

double GaussKernelSum::log_sum(double y) const {
  if (sorted_.empty()) return kNegInf;
  const double pos = (y - origin_) / sigma_;
  const double lo_index = std::floor(pos - kCutoff);
  const double hi_index = std::ceil(pos + kCutoff);
  auto first = std::lower_bound(boxes_.begin(), boxes_.end(), lo_index,
                                [](const BoxMoments& b, double v) {
                                  return static_cast<double>(b.index) < v;
                                });
  KahanSum total;
  std::size_t included = 0;
  for (auto it = first; it != boxes_.end() && static_cast<double>(it->index) <= hi_index;
       ++it) {
    const double s = (y - it->center) / sigma_;
    if (std::abs(s) > kCutoff) continue;
    double series = it->moments[kOrder - 1];
    for (int m = kOrder - 2; m >= 0; --m) series = series * s + it->moments[m];
    total += std::exp(-0.5 * s * s) * series;
    included += it->count;
  }
  const std::size_t excluded = sorted_.size() - included;
  const double sum = total.value();
  if (excluded > 0) {
    // Every skipped center is more than kCutoff - 1/2 widths away from y.
    const double gap = kCutoff - 0.5;
    const double bound = static_cast<double>(excluded) * std::exp(-0.5 * gap * gap);
    if (!(sum > 0.0) || bound > 0x1.0p-56 * sum) return log_sum_exact(y);
  }
  return std::log(sum);
}

double GaussKernelSum::log_sum_exact(double y) const {
  LogSumExp acc(negligible_log_gap(sorted_.size()));
  for (double g : sorted_) {
    const double z = (y - g) / sigma_;
    acc.add(-0.5 * z * z);
  }
  return acc.value();
}

}  // namespace oed

#pragma once

#include <cmath>
#include <span>

namespace oed {

/// Running compensated sum (Kahan-Babuska / Neumaier variant).
///
/// The compensation term collects the low-order bits lost by each addition.
/// Unlike the plain Kahan update this also recovers the small operand when
/// the incoming term is larger in magnitude than the running sum, so
/// sequences such as {1, 1e16, 1, -1e16} sum exactly.
class KahanSum {
 public:
  KahanSum() = default;
  explicit KahanSum(double init) : sum_(init) {}

  KahanSum& operator+=(double value) {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      comp_ += (sum_ - t) + value;
    } else {
      comp_ += (value - t) + sum_;
    }
    sum_ = t;
    return *this;
  }

  KahanSum& operator-=(double value) { return *this += -value; }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Compensated sum of a sequence; 0 for an empty sequence.
inline double kahan_sum(std::span<const double> values) {
  KahanSum acc;
  for (double v : values) acc += v;
  return acc.value();
}

}  // namespace oed

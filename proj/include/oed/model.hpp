#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "oed/random.hpp"

namespace oed {

using Vector = std::vector<double>;

/// Closed interval [lo, hi] with lo < hi.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double width() const { return hi - lo; }
};

/// Axis-aligned box; used for prior supports and feasible design regions.
class Box {
 public:
  Box() = default;
  explicit Box(std::vector<Interval> bounds);

  std::size_t size() const { return bounds_.size(); }
  const Interval& operator[](std::size_t i) const { return bounds_[i]; }
  const std::vector<Interval>& bounds() const { return bounds_; }

  bool contains(std::span<const double> x) const;
  /// Componentwise clamp: the unique Euclidean-nearest point of the box.
  Vector project(std::span<const double> x) const;
  /// Box shrunk by margin[i] on both sides of coordinate i.
  /// Throws EmptyShrunkenBox when 2*margin[i] exceeds a width.
  Box shrunk(std::span<const double> margin) const;
  double min_width() const;

 private:
  std::vector<Interval> bounds_;
};

/// G(theta, d): parameters and design conditions to observables.
///
/// Implementations must be pure: identical inputs give bit-identical outputs,
/// and evaluate() may be called concurrently from several threads.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual std::size_t n_theta() const = 0;
  virtual std::size_t n_design() const = 0;
  virtual std::size_t n_obs() const = 0;
  virtual std::string name() const = 0;

  /// Writes n_obs() outputs to `out`. Sizes are not checked here.
  virtual void evaluate(std::span<const double> theta,
                        std::span<const double> design,
                        std::span<double> out) const = 0;

  /// Checked convenience wrapper around evaluate().
  Vector operator()(std::span<const double> theta,
                    std::span<const double> design) const;
};

using ModelPtr = std::shared_ptr<const ForwardModel>;

/// theta^3 d^2 + theta exp(-|0.2 - d|)
double simple_model(double theta, double d);

/// Scalar algebraic test model with one parameter and one design variable.
class SimpleModel final : public ForwardModel {
 public:
  std::size_t n_theta() const override { return 1; }
  std::size_t n_design() const override { return 1; }
  std::size_t n_obs() const override { return 1; }
  std::string name() const override { return "simple"; }
  void evaluate(std::span<const double> theta, std::span<const double> design,
                std::span<double> out) const override;
};

/// N conditionally independent experiments sharing theta. The design vector
/// is the concatenation (d_1, ..., d_N); output block i is base(theta, d_i).
class BatchModel final : public ForwardModel {
 public:
  BatchModel(ModelPtr base, std::size_t copies);

  std::size_t n_theta() const override { return base_->n_theta(); }
  std::size_t n_design() const override { return copies_ * base_->n_design(); }
  std::size_t n_obs() const override { return copies_ * base_->n_obs(); }
  std::string name() const override;
  void evaluate(std::span<const double> theta, std::span<const double> design,
                std::span<double> out) const override;

  const ForwardModel& base() const { return *base_; }
  std::size_t copies() const { return copies_; }

 private:
  ModelPtr base_;
  std::size_t copies_;
};

ModelPtr make_batch_model(ModelPtr base, std::size_t copies);

/// Independent uniform prior on a box.
class UniformPrior {
 public:
  UniformPrior() = default;
  explicit UniformPrior(Box support);

  std::size_t dim() const { return support_.size(); }
  const Box& support() const { return support_; }
  Vector sample(Rng& rng) const;
  void sample_into(Rng& rng, std::span<double> out) const;
  /// -inf outside the support.
  double log_density(std::span<const double> theta) const;

 private:
  Box support_;
  double log_volume_ = 0.0;
};

/// Per-component additive Gaussian noise.
///
/// sigma_c = rel_c * |G_c| + abs_c for linear components. For a log-time
/// component (the observable is ln t) the raw-time rule rel*t + abs is mapped
/// to log space to first order, giving sigma_c = rel_c + abs_c / exp(G_c).
struct NoiseComponent {
  double rel = 0.0;
  double abs = 0.0;
  bool log_time = false;
};

class NoiseModel {
 public:
  NoiseModel() = default;
  explicit NoiseModel(std::vector<NoiseComponent> components);
  static NoiseModel constant(std::size_t n_obs, double sigma);

  std::size_t size() const { return components_.size(); }
  const NoiseComponent& operator[](std::size_t c) const { return components_[c]; }
  /// True when no component depends on the model output.
  bool is_constant() const;
  /// Noise model of N stacked copies (for batch models).
  NoiseModel repeated(std::size_t copies) const;

  /// Throws NonpositiveNoise unless the result is finite and > 0.
  double sigma(std::size_t c, double g) const;

 private:
  std::vector<NoiseComponent> components_;
};

/// ln p(y | G) for independent Gaussian components.
double log_likelihood_from_output(const NoiseModel& noise,
                                  std::span<const double> y,
                                  std::span<const double> g);

double log_likelihood(const ForwardModel& model, const NoiseModel& noise,
                      std::span<const double> y, std::span<const double> theta,
                      std::span<const double> design);

/// Draws G(theta, d) + eps with eps_c ~ N(0, sigma_c^2).
Vector sample_observation(const ForwardModel& model, const NoiseModel& noise,
                          std::span<const double> theta,
                          std::span<const double> design, Rng& rng);

/// Adds noise to an already evaluated output, in place.
void perturb_output(const NoiseModel& noise, std::span<double> g, Rng& rng);

}  // namespace oed

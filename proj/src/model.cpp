#include "oed/model.hpp"

#include <cmath>
#include <limits>
#include <algorithm>
#include <sstream>

#include "oed/errors.hpp"

namespace oed {

Box::Box(std::vector<Interval> bounds) : bounds_(std::move(bounds)) {
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    const auto& b = bounds_[i];
    if (!(std::isfinite(b.lo) && std::isfinite(b.hi) && b.lo < b.hi)) {
      std::ostringstream msg;
      msg << "box coordinate " << i << " has empty or invalid bounds [" << b.lo
          << ", " << b.hi << "]";
      throw ConfigError(msg.str());
    }
  }
}

bool Box::contains(std::span<const double> x) const {
  if (x.size() != bounds_.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= bounds_[i].lo && x[i] <= bounds_[i].hi)) return false;
  }
  return true;
}

Vector Box::project(std::span<const double> x) const {
  if (x.size() != bounds_.size()) {
    throw DimensionMismatch("cannot project a point of the wrong dimension");
  }
  Vector out(x.begin(), x.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp(out[i], bounds_[i].lo, bounds_[i].hi);
  }
  return out;
}

Box Box::shrunk(std::span<const double> margin) const {
  if (margin.size() != bounds_.size()) {
    throw DimensionMismatch("shrink margin has the wrong dimension");
  }
  std::vector<Interval> inner(bounds_.size());
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    if (!(2.0 * margin[i] < bounds_[i].width())) {
      std::ostringstream msg;
      msg << "perturbation " << margin[i] << " leaves no feasible interior in "
          << "coordinate " << i << " (width " << bounds_[i].width() << ")";
      throw EmptyShrunkenBox(msg.str());
    }
    inner[i] = {bounds_[i].lo + margin[i], bounds_[i].hi - margin[i]};
  }
  return Box(std::move(inner));
}

double Box::min_width() const {
  double w = std::numeric_limits<double>::infinity();
  for (const auto& b : bounds_) w = std::min(w, b.width());
  return w;
}

Vector ForwardModel::operator()(std::span<const double> theta,
                                std::span<const double> design) const {
  if (theta.size() != n_theta() || design.size() != n_design()) {
    std::ostringstream msg;
    msg << name() << ": expected (" << n_theta() << ", " << n_design()
        << ") inputs, got (" << theta.size() << ", " << design.size() << ")";
    throw DimensionMismatch(msg.str());
  }
  Vector out(n_obs());
  evaluate(theta, design, out);
  return out;
}

double simple_model(double theta, double d) {
  return theta * theta * theta * d * d + theta * std::exp(-std::abs(0.2 - d));
}

void SimpleModel::evaluate(std::span<const double> theta,
                           std::span<const double> design,
                           std::span<double> out) const {
  out[0] = simple_model(theta[0], design[0]);
}

BatchModel::BatchModel(ModelPtr base, std::size_t copies)
    : base_(std::move(base)), copies_(copies) {
  if (!base_) throw ConfigError("batch model needs a base model");
  if (copies_ == 0) throw ConfigError("batch model needs at least one copy");
}

std::string BatchModel::name() const {
  return base_->name() + "-batch" + std::to_string(copies_);
}

void BatchModel::evaluate(std::span<const double> theta,
                          std::span<const double> design,
                          std::span<double> out) const {
  const std::size_t nd = base_->n_design();
  const std::size_t ny = base_->n_obs();
  for (std::size_t i = 0; i < copies_; ++i) {
    base_->evaluate(theta, design.subspan(i * nd, nd), out.subspan(i * ny, ny));
  }
}

ModelPtr make_batch_model(ModelPtr base, std::size_t copies) {
  return std::make_shared<BatchModel>(std::move(base), copies);
}

UniformPrior::UniformPrior(Box support) : support_(std::move(support)) {
  if (support_.size() == 0) throw ConfigError("prior needs at least one parameter");
  for (const auto& b : support_.bounds()) log_volume_ += std::log(b.width());
}

Vector UniformPrior::sample(Rng& rng) const {
  Vector out(dim());
  sample_into(rng, out);
  return out;
}

void UniformPrior::sample_into(Rng& rng, std::span<double> out) const {
  for (std::size_t i = 0; i < dim(); ++i) {
    const auto& b = support_[i];
    out[i] = b.lo + b.width() * uniform01(rng);
  }
}

double UniformPrior::log_density(std::span<const double> theta) const {
  if (!support_.contains(theta)) return -std::numeric_limits<double>::infinity();
  return -log_volume_;
}

NoiseModel::NoiseModel(std::vector<NoiseComponent> components)
    : components_(std::move(components)) {
  for (const auto& c : components_) {
    if (!(c.rel >= 0.0 && c.abs >= 0.0)) {
      throw ConfigError("noise factors must be nonnegative");
    }
  }
}

NoiseModel NoiseModel::constant(std::size_t n_obs, double sigma) {
  return NoiseModel(std::vector<NoiseComponent>(n_obs, NoiseComponent{0.0, sigma, false}));
}

bool NoiseModel::is_constant() const {
  for (const auto& c : components_) {
    if (c.rel != 0.0 || c.log_time) return false;
  }
  return true;
}

NoiseModel NoiseModel::repeated(std::size_t copies) const {
  std::vector<NoiseComponent> out;
  out.reserve(copies * components_.size());
  for (std::size_t i = 0; i < copies; ++i) {
    out.insert(out.end(), components_.begin(), components_.end());
  }
  return NoiseModel(std::move(out));
}

double NoiseModel::sigma(std::size_t c, double g) const {
  const auto& comp = components_[c];
  const double s = comp.log_time ? comp.rel + comp.abs / std::exp(g)
                                 : comp.rel * std::abs(g) + comp.abs;
  if (!(s > 0.0) || !std::isfinite(s)) {
    std::ostringstream msg;
    msg << "noise standard deviation " << s << " for component " << c
        << " at model output " << g;
    throw NonpositiveNoise(msg.str());
  }
  return s;
}

double log_likelihood_from_output(const NoiseModel& noise,
                                  std::span<const double> y,
                                  std::span<const double> g) {
  if (y.size() != g.size() || y.size() != noise.size()) {
    throw DimensionMismatch("observation, output and noise sizes differ");
  }
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  double ll = 0.0;
  for (std::size_t c = 0; c < y.size(); ++c) {
    const double s = noise.sigma(c, g[c]);
    const double z = (y[c] - g[c]) / s;
    ll += -0.5 * z * z - std::log(s) - kHalfLog2Pi;
  }
  return ll;
}

double log_likelihood(const ForwardModel& model, const NoiseModel& noise,
                      std::span<const double> y, std::span<const double> theta,
                      std::span<const double> design) {
  const Vector g = model(theta, design);
  return log_likelihood_from_output(noise, y, g);
}

void perturb_output(const NoiseModel& noise, std::span<double> g, Rng& rng) {
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double s = noise.sigma(c, g[c]);
    g[c] += s * standard_normal(rng);
  }
}

Vector sample_observation(const ForwardModel& model, const NoiseModel& noise,
                          std::span<const double> theta,
                          std::span<const double> design, Rng& rng) {
  Vector y = model(theta, design);
  if (y.size() != noise.size()) {
    throw DimensionMismatch("noise model size does not match model outputs");
  }
  perturb_output(noise, y, rng);
  return y;
}

}  // namespace oed

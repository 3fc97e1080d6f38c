#include "oed/mcmc.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <memory>
#include <numbers>
#include <numeric>
#include <ostream>

#include "oed/csv.hpp"
#include "oed/errors.hpp"
#include "oed/kahan.hpp"

namespace oed {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;


std::vector<double> to_row_major(const Mat& m) {
  std::vector<double> out(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  }
  return out;
}

// Gaussian random-walk proposal N(x, C) with its log density.
struct GaussianProposal {
  Mat chol;  // lower Cholesky factor of C
  double log_norm = 0.0;

  explicit GaussianProposal(const Mat& cov) {
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() != Eigen::Success) throw ConfigError("proposal covariance is not positive definite");
    chol = llt.matrixL();
    const auto n = static_cast<double>(cov.rows());
    log_norm = -0.5 * n * std::log(2.0 * std::numbers::pi) - chol.diagonal().array().log().sum();
  }

  Vec draw(const Vec& x, Rng& rng) const {
    Vec z(x.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = standard_normal(rng);
    return x + chol * z;
  }

  double log_density(const Vec& from, const Vec& to) const {
    const Vec r = chol.triangularView<Eigen::Lower>().solve(to - from);
    return log_norm - 0.5 * r.squaredNorm();
  }
};

}  // namespace

LogDensity make_log_posterior(ModelPtr model, UniformPrior prior, NoiseModel noise,
                              Vector design, Vector y) {
  if (!model) throw ConfigError("posterior needs a model");
  if (prior.dim() != model->n_theta()) throw DimensionMismatch("prior and model parameter counts differ");
  if (design.size() != model->n_design()) throw DimensionMismatch("design has the wrong size for the model");
  if (y.size() != model->n_obs() || noise.size() != model->n_obs()) {
    throw DimensionMismatch("data and noise must have one entry per model output");
  }
  return [model = std::move(model), prior = std::move(prior), noise = std::move(noise),
          design = std::move(design), y = std::move(y)](std::span<const double> theta) {
    const double lp = prior.log_density(theta);
    if (!std::isfinite(lp)) return lp;
    return lp + log_likelihood(*model, noise, y, theta, design);
  };
}

void DramConfig::validate(std::size_t n_theta) const {
  if (n_theta == 0) throw ConfigError("chain needs at least one parameter");
  if (!proposal_cov.empty() && proposal_cov.size() != n_theta * n_theta) {
    throw ConfigError("proposal covariance must be n_theta x n_theta");
  }
  if (proposal_cov.empty() && !(initial_scale > 0.0 && std::isfinite(initial_scale))) {
    throw ConfigError("initial proposal scale must be positive");
  }
  if (adapt_interval < 1) throw ConfigError("adaptation interval must be at least 1");
  if (!(epsilon > 0.0)) throw ConfigError("adaptation regularization must be positive");
  if (!(dr_scale > 0.0 && dr_scale < 1.0)) throw ConfigError("delayed-rejection scale must lie in (0, 1)");
  if (thin < 1) throw ConfigError("thinning stride must be at least 1");
}

Chain dram_run(const LogDensity& log_posterior, std::span<const double> x0,
               const DramConfig& cfg, std::size_t n_steps) {
  const std::size_t n = x0.size();
  cfg.validate(n);
  const auto ni = static_cast<Eigen::Index>(n);
  Vec x = Eigen::Map<const Vec>(x0.data(), ni);
  double log_px = log_posterior(x0);
  if (!std::isfinite(log_px)) throw NonfiniteStart("log posterior at the start point is not finite");

  Mat cov(ni, ni);
  if (cfg.proposal_cov.empty()) {
    cov = Mat::Identity(ni, ni) * (cfg.initial_scale * cfg.initial_scale);
  } else {
    for (Eigen::Index i = 0; i < ni; ++i) {
      for (Eigen::Index j = 0; j < ni; ++j) cov(i, j) = cfg.proposal_cov[static_cast<std::size_t>(i * ni + j)];
    }
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * cov.cwiseAbs().maxCoeff()) {
      throw ConfigError("proposal covariance must be symmetric");
    }
  }
  auto stage1 = std::make_unique<GaussianProposal>(cov);
  auto stage2 = std::make_unique<GaussianProposal>(cov * cfg.dr_scale);

  Chain chain;
  chain.n_theta = n;
  chain.samples.reserve(n_steps * n);
  chain.log_post.reserve(n_steps);
  chain.stage.reserve(n_steps);
  chain.thin = cfg.thin;
  chain.burn_in = cfg.burn_in.value_or(n_steps / 5);

  // Running mean and scatter of the history x_0 .. x_t (Welford).
  Vec mean = x;
  Mat scatter = Mat::Zero(ni, ni);
  std::size_t count = 1;
  const double s_d = 2.4 * 2.4 / static_cast<double>(n);

  auto target = [&](const Vec& v) { return log_posterior(std::span<const double>(v.data(), n)); };
  auto propose1 = [&](const Vec& from, Rng& r) { return stage1->draw(from, r); };
  auto log_q1 = [&](const Vec& from, const Vec& to) { return stage1->log_density(from, to); };
  auto propose2 = [&](const Vec& from, Rng& r) { return stage2->draw(from, r); };

  Rng rng(stream_seed(cfg.seed, stream::kChain));
  for (std::size_t t = 1; t <= n_steps; ++t) {
    auto out = delayed_rejection_step(x, log_px, target, propose1, log_q1, propose2,
                                      cfg.delayed_rejection, rng);
    ++chain.proposals_stage1;
    if (out.stage == 1) ++chain.accepted_stage1;
    if (out.tried_second) ++chain.proposals_stage2;
    if (out.stage == 2) ++chain.accepted_stage2;
    x = std::move(out.state);
    log_px = out.log_density;
    chain.samples.insert(chain.samples.end(), x.data(), x.data() + ni);
    chain.log_post.push_back(log_px);
    chain.stage.push_back(out.stage);

    ++count;
    const Vec delta = x - mean;
    mean += delta / static_cast<double>(count);
    scatter += delta * (x - mean).transpose();

    if (cfg.adapt && t >= cfg.adapt_start && (t - cfg.adapt_start) % cfg.adapt_interval == 0) {
      Mat adapted = s_d * (scatter / static_cast<double>(count - 1) + cfg.epsilon * Mat::Identity(ni, ni));
      adapted = 0.5 * (adapted + adapted.transpose());
      // The regularization keeps this positive definite; keep the previous
      // proposal if rounding says otherwise.
      Eigen::LLT<Mat> check(adapted);
      if (check.info() == Eigen::Success) {
        cov = adapted;
        stage1 = std::make_unique<GaussianProposal>(cov);
        stage2 = std::make_unique<GaussianProposal>(cov * cfg.dr_scale);
        ++chain.adaptations;
      }
    }
  }
  chain.proposal_cov = to_row_major(cov);
  return chain;
}

double effective_sample_size(std::span<const double> series) {
  const std::size_t m = series.size();
  if (m == 0) throw EmptyChain("no samples for an effective sample size");
  KahanSum s;
  for (double v : series) s += v;
  const double mean = s.value() / static_cast<double>(m);
  auto autocov = [&](std::size_t lag) {
    KahanSum acc;
    for (std::size_t i = 0; i + lag < m; ++i) acc += (series[i] - mean) * (series[i + lag] - mean);
    return acc.value() / static_cast<double>(m);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0) || m < 4) return c0 > 0.0 ? static_cast<double>(m) : 1.0;
  // Geyer's initial positive sequence: sum pairs rho_2k + rho_2k+1 while
  // they stay positive.
  double tau = -1.0;
  for (std::size_t k = 0; 2 * k + 1 < m; ++k) {
    const double pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
    if (!(pair > 0.0)) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / static_cast<double>(m));
  return static_cast<double>(m) / tau;
}

ChainStats chain_stats(const Chain& chain, std::size_t burn_in, std::size_t thin) {
  if (thin < 1) throw ConfigError("thinning stride must be at least 1");
  if (chain.size() == 0 || burn_in >= chain.size()) {
    throw EmptyChain("no samples left after a burn-in of " + std::to_string(burn_in) + " of " +
                     std::to_string(chain.size()));
  }
  const std::size_t n = chain.n_theta;
  std::vector<std::size_t> keep;
  for (std::size_t i = burn_in; i < chain.size(); i += thin) keep.push_back(i);

  ChainStats st;
  st.retained = keep.size();
  st.mean.assign(n, 0.0);
  for (std::size_t q = 0; q < n; ++q) {
    KahanSum acc;
    for (std::size_t i : keep) acc += chain.sample(i)[q];
    st.mean[q] = acc.value() / static_cast<double>(keep.size());
  }
  st.covariance.assign(n * n, 0.0);
  if (keep.size() > 1) {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        KahanSum acc;
        for (std::size_t i : keep) acc += (chain.sample(i)[a] - st.mean[a]) * (chain.sample(i)[b] - st.mean[b]);
        st.covariance[a * n + b] = acc.value() / static_cast<double>(keep.size() - 1);
      }
    }
  }
  auto rate = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  st.acceptance_stage1 = rate(chain.accepted_stage1, chain.proposals_stage1);
  st.acceptance_stage2 = rate(chain.accepted_stage2, chain.proposals_stage2);
  st.acceptance = rate(chain.accepted_stage1 + chain.accepted_stage2, chain.size());
  st.ess.resize(n);
  std::vector<double> series(keep.size());
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t r = 0; r < keep.size(); ++r) series[r] = chain.sample(keep[r])[q];
    st.ess[q] = effective_sample_size(series);
  }
  return st;
}

ChainStats chain_stats(const Chain& chain) { return chain_stats(chain, chain.burn_in, chain.thin); }

Vector DensityGrid::point(std::size_t i) const {
  Vector x(axes.size());
  for (std::size_t q = axes.size(); q-- > 0;) {
    x[q] = axes[q][i % axes[q].size()];
    i /= axes[q].size();
  }
  return x;
}

namespace {

// Trapezoid weight of flat node i.
double trapezoid_weight(const std::vector<Vector>& axes, std::size_t i) {
  double w = 1.0;
  for (std::size_t q = axes.size(); q-- > 0;) {
    const std::size_t m = axes[q].size();
    const std::size_t j = i % m;
    i /= m;
    const double h = (axes[q].back() - axes[q].front()) / static_cast<double>(m - 1);
    w *= (j == 0 || j + 1 == m) ? 0.5 * h : h;
  }
  return w;
}

}  // namespace

double DensityGrid::entropy() const {
  KahanSum acc;
  for (std::size_t i = 0; i < density.size(); ++i) {
    if (density[i] > 0.0) acc -= trapezoid_weight(axes, i) * density[i] * std::log(density[i]);
  }
  return acc.value();
}

double DensityGrid::mean(std::size_t q) const {
  KahanSum acc;
  for (std::size_t i = 0; i < density.size(); ++i) acc += trapezoid_weight(axes, i) * density[i] * point(i)[q];
  return acc.value();
}

DensityGrid posterior_grid(const LogDensity& log_posterior, const Box& bounds,
                           std::size_t resolution) {
  if (resolution < 2) throw ConfigError("grid resolution must be at least 2 per dimension");
  if (bounds.size() == 0) throw ConfigError("grid needs at least one dimension");
  DensityGrid grid;
  std::size_t total = 1;
  for (const auto& b : bounds.bounds()) {
    Vector axis(resolution);
    for (std::size_t j = 0; j < resolution; ++j) {
      axis[j] = b.lo + b.width() * static_cast<double>(j) / static_cast<double>(resolution - 1);
    }
    axis.back() = b.hi;
    grid.axes.push_back(std::move(axis));
    total *= resolution;
  }
  std::vector<double> lp(total);
  double peak = -INFINITY;
  for (std::size_t i = 0; i < total; ++i) {
    lp[i] = finite_or_minus_inf(log_posterior(grid.point(i)));
    peak = std::max(peak, lp[i]);
  }
  if (peak == -INFINITY) throw AllMinusInfinity("log posterior is -inf at every grid node");
  grid.density.resize(total);
  KahanSum mass;
  for (std::size_t i = 0; i < total; ++i) {
    grid.density[i] = std::exp(lp[i] - peak);
    mass += trapezoid_weight(grid.axes, i) * grid.density[i];
  }
  for (double& d : grid.density) d /= mass.value();
  return grid;
}

void write_chain_csv(std::ostream& out, const Chain& chain) {
  out << "step";
  for (std::size_t q = 0; q < chain.n_theta; ++q) out << ",theta_" << q + 1;
  out << ",logpost,stage_accepted\n";
  for (std::size_t i = 0; i < chain.size(); ++i) {
    out << i + 1;
    for (double v : chain.sample(i)) out << ',' << format_double(v);
    out << ',' << format_double(chain.log_post[i]) << ',' << chain.stage[i] << '\n';
  }
}

void write_grid_csv(std::ostream& out, const DensityGrid& grid) {
  for (std::size_t q = 0; q < grid.axes.size(); ++q) out << "theta_" << q + 1 << ',';
  out << "density\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (double v : grid.point(i)) out << format_double(v) << ',';
    out << format_double(grid.density[i]) << '\n';
  }
}

}  // namespace oed

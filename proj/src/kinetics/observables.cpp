#include "oed/kinetics/observables.hpp"

#include <algorithm>
#include <cmath>

#include "oed/errors.hpp"
#include "oed/kinetics/bdf.hpp"

namespace oed::kinetics {

Vector Trajectory::species_series(const std::string& name) const {
  const auto it = std::find(species.begin(), species.end(), name);
  if (it == species.end()) throw ConfigError("trajectory has no species '" + name + "'");
  const auto j = static_cast<std::size_t>(it - species.begin());
  Vector out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = x(i, j);
  return out;
}

namespace {

struct Recorder {
  const Mechanism& mech;
  Trajectory& traj;
  std::vector<double> dydt;

  void record(double t, std::span<const double> y) {
    const std::size_t ns = mech.n_species();
    traj.time.push_back(t);
    traj.temperature.push_back(y[ns]);
    const Vector x = mole_fractions(mech, y.first(ns));
    traj.mole_fractions.insert(traj.mole_fractions.end(), x.begin(), x.end());
    traj.dh_dt.push_back(reactor_rhs(mech, traj.pressure, y, dydt));
  }
};

// True once the heat-release peak and every radical peak lie behind and all
// of them have decayed clearly from their maxima.
bool ignition_over(const Trajectory& traj, const std::vector<std::size_t>& radicals, double t0_temperature) {
  const std::size_t n = traj.size();
  if (n < 3) return false;
  if (traj.temperature.back() < t0_temperature + 100.0) return false;
  const auto min_it = std::min_element(traj.dh_dt.begin(), traj.dh_dt.end());
  const double t_ign = traj.time[static_cast<std::size_t>(min_it - traj.dh_dt.begin())];
  if (traj.time.back() < 2.0 * t_ign) return false;
  if (traj.dh_dt.back() < 0.01 * *min_it) return false;
  const std::size_t ns = traj.species.size();
  for (std::size_t j : radicals) {
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, traj.mole_fractions[i * ns + j]);
    if (traj.mole_fractions[(n - 1) * ns + j] > 0.9 * peak) return false;
  }
  return true;
}

}  // namespace

Trajectory integrate(const Mechanism& mech, const MixtureState& initial, const IntegrationOptions& options) {
  const std::size_t ns = mech.n_species();
  initial.validate(ns);
  if (!(options.t_end > 0.0)) throw ConfigError("t_end must be positive");
  Trajectory traj;
  for (const auto& s : mech.species()) traj.species.push_back(s.name);
  traj.pressure = initial.pressure;

  Vector y0 = mass_fractions(mech, initial.mole_fractions);
  y0.push_back(initial.temperature);
  BdfOptions bopt;
  bopt.rtol = options.rtol;
  bopt.atol.assign(ns + 1, options.atol);
  bopt.atol[ns] = options.atol_temperature;
  bopt.max_steps = options.max_steps;
  bopt.nonnegative = ns;
  const double pressure = initial.pressure;
  BdfSolver solver(
      [&mech, pressure](double, std::span<const double> y, std::span<double> f) { reactor_rhs(mech, pressure, y, f); },
      0.0, y0, options.t_end, bopt);

  std::vector<std::size_t> radicals;
  for (const auto& name : kRadicals) {
    const auto it = std::find(traj.species.begin(), traj.species.end(), name);
    if (it != traj.species.end()) radicals.push_back(static_cast<std::size_t>(it - traj.species.begin()));
  }

  Recorder rec{mech, traj, std::vector<double>(ns + 1)};
  rec.record(0.0, y0);
  Vector sample(ns + 1);
  while (solver.step()) {
    const double t0 = solver.t_old(), t1 = solver.t();
    for (std::size_t s = 1; s <= options.dense_samples; ++s) {
      const double ts = t0 + (t1 - t0) * static_cast<double>(s) / static_cast<double>(options.dense_samples + 1);
      solver.dense(ts, sample);
      rec.record(ts, sample);
    }
    rec.record(t1, solver.y());
    if (options.stop_after_ignition && ignition_over(traj, radicals, initial.temperature)) break;
  }
  traj.steps = solver.steps();
  traj.rhs_evaluations = solver.rhs_evaluations();
  traj.clip_events = solver.clip_events();
  return traj;
}

Trajectory integrate(const Mechanism& mech, const MixtureState& initial, double t_end, double rtol, double atol) {
  IntegrationOptions opt;
  opt.t_end = t_end;
  opt.rtol = rtol;
  opt.atol = atol;
  return integrate(mech, initial, opt);
}

Peak refined_peak(const Vector& time, const Vector& signal, const std::string& label) {
  if (time.size() != signal.size() || time.size() < 3) throw NoPeak(label + ": fewer than 3 samples");
  const auto it = std::max_element(signal.begin(), signal.end());
  const auto i = static_cast<std::size_t>(it - signal.begin());
  if (i == 0 || i + 1 == signal.size()) throw NoPeak(label + ": signal is monotone over the window");
  const double t0 = time[i - 1], t1 = time[i], t2 = time[i + 1];
  const double f0 = signal[i - 1], f1 = signal[i], f2 = signal[i + 1];
  // Newton form of the interpolating parabola: f1 + a (t - t1) + b (t - t1)(t - t0).
  const double d01 = (f1 - f0) / (t1 - t0);
  const double d12 = (f2 - f1) / (t2 - t1);
  const double b = (d12 - d01) / (t2 - t0);
  Peak p{t1, f1};
  if (b < 0.0) {
    const double a = d01;
    // Stationary point of the parabola: a + b (2t - t1 - t0) = 0.
    const double t_star = 0.5 * (t0 + t1) - a / (2.0 * b);
    if (t_star > t0 && t_star < t2) {
      p.time = t_star;
      p.value = f1 + a * (t_star - t1) + b * (t_star - t1) * (t_star - t0);
    }
  }
  return p;
}

Vector ObservableSet::as_vector() const {
  return {ln_tau_ign, ln_tau_radical[0], ln_tau_radical[1], ln_tau_radical[2], ln_tau_radical[3],
          dh_dt_peak, x_peak[0], x_peak[1], x_peak[2], x_peak[3]};
}

std::vector<std::string> ObservableSet::names() {
  return {"ln_tau_ign", "ln_tau_O", "ln_tau_H", "ln_tau_HO2", "ln_tau_H2O2",
          "dhdt_peak",  "X_O_peak", "X_H_peak", "X_HO2_peak", "X_H2O2_peak"};
}

std::vector<std::string> ObservableSet::units() {
  return {"ln(s)", "ln(s)", "ln(s)", "ln(s)", "ln(s)", "J/(kg*s)", "-", "-", "-", "-"};
}

ObservableSet extract_observables(const Trajectory& trajectory) {
  if (trajectory.size() == 0) throw ConfigError("empty trajectory");
  ObservableSet obs;
  Vector release(trajectory.dh_dt.size());
  for (std::size_t i = 0; i < release.size(); ++i) release[i] = -trajectory.dh_dt[i];
  const Peak ign = refined_peak(trajectory.time, release, "heat release");
  if (!(ign.time > 0.0)) throw NoPeak("heat release: peak at t = 0");
  obs.ln_tau_ign = std::log(ign.time);
  obs.dh_dt_peak = -ign.value;
  for (std::size_t r = 0; r < kRadicals.size(); ++r) {
    const Peak p = refined_peak(trajectory.time, trajectory.species_series(kRadicals[r]), "X_" + kRadicals[r]);
    if (!(p.time > 0.0)) throw NoPeak("X_" + kRadicals[r] + ": peak at t = 0");
    obs.ln_tau_radical[r] = std::log(p.time);
    obs.x_peak[r] = p.value;
  }
  return obs;
}

}  // namespace oed::kinetics

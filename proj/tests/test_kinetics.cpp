#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "oed/errors.hpp"
#include "oed/kinetics/bdf.hpp"
#include "oed/kinetics/kinetics_model.hpp"
#include "oed/random.hpp"

using namespace oed;
using namespace oed::kinetics;

namespace {

const Mechanism& h2o2() {
  static const Mechanism mech = default_mechanism();
  return mech;
}

// Two isomers with identical thermo; "A" and "B" both one argon atom.
std::vector<Species> isomer_thermo() {
  std::istringstream in(R"(species A
  weight 39.948
  elements Ar:1
  temperatures 200 1000 3500
  low 3.5 1e-3 0 0 0 -1000 4
  high 3.5 1e-3 0 0 0 -1000 4
end
species B
  weight 39.948
  elements Ar:1
  temperatures 200 1000 3500
  low 3.5 1e-3 0 0 0 -1000 4
  high 3.5 1e-3 0 0 0 -1000 4
end
)");
  return parse_thermo(in);
}

Mechanism isomer_mechanism(const std::string& reactions) {
  std::istringstream in("species: A B\n" + reactions);
  return parse_mechanism(in, isomer_thermo());
}

// Random reacting H2-O2 state: mass fractions and temperature.
Vector random_state(Rng& rng) {
  Vector y(h2o2().n_species());
  for (double& v : y) v = std::exp(-12.0 * uniform01(rng));
  const double s = std::accumulate(y.begin(), y.end(), 0.0);
  for (double& v : y) v /= s;
  y.push_back(800.0 + 2200.0 * uniform01(rng));
  return y;
}

}  // namespace

TEST_CASE("thermo data are continuous and match reference formation values") {
  for (const auto& s : h2o2().species()) {
    const double tm = s.thermo.t_mid;
    const auto lo = [&](auto f) { Nasa7 th = s.thermo; th.high = th.low; return (th.*f)(tm); };
    const auto hi = [&](auto f) { Nasa7 th = s.thermo; th.low = th.high; return (th.*f)(tm); };
    INFO(s.name);
    CHECK(std::abs(lo(&Nasa7::cp_over_r) / hi(&Nasa7::cp_over_r) - 1.0) < 1e-3);
    CHECK(std::abs(lo(&Nasa7::h_over_rt) / hi(&Nasa7::h_over_rt) - 1.0) < 1e-3);
    CHECK(std::abs(lo(&Nasa7::s_over_r) / hi(&Nasa7::s_over_r) - 1.0) < 1e-3);
  }
  // Standard enthalpies of formation (J/kmol) and entropies at 298.15 K.
  const auto& sp = h2o2().species();
  const auto idx = [&](const char* n) { return h2o2().species_index(n); };
  CHECK(sp[idx("H2O")].h_molar(298.15) == doctest::Approx(-241.826e6).epsilon(1e-3));
  CHECK(sp[idx("H")].h_molar(298.15) == doctest::Approx(217.998e6).epsilon(1e-3));
  CHECK(sp[idx("O")].h_molar(298.15) == doctest::Approx(249.175e6).epsilon(1e-3));
  CHECK(std::abs(sp[idx("H2")].h_molar(298.15)) < 1e4);
  CHECK(std::abs(sp[idx("O2")].h_molar(298.15)) < 1e4);
  CHECK(sp[idx("H2O")].s_molar(298.15) == doctest::Approx(188.835e3).epsilon(1e-3));
  CHECK(sp[idx("H2O")].cp_molar(1000.0) == doctest::Approx(41.27e3).epsilon(5e-3));
}

TEST_CASE("mechanism loading validates species and element balance") {
  CHECK(h2o2().n_species() == 8);
  CHECK(h2o2().n_reactions() == 19);
  CHECK(h2o2().n_elements() == 2);
  int third = 0;
  for (const auto& r : h2o2().reactions()) {
    third += r.third_body;
    if (r.third_body) {
      CHECK(r.efficiencies[h2o2().species_index("H2")] == 2.5);
      CHECK(r.efficiencies[h2o2().species_index("H2O")] == 12.0);
      CHECK(r.efficiencies[h2o2().species_index("O2")] == 1.0);
    }
  }
  CHECK(third == 6);
  const auto& r5 = h2o2().reactions()[4];
  REQUIRE(r5.products.size() == 1);
  CHECK(r5.products[0].second == 2);
  CHECK(r5.delta_nu() == 1);

  const auto thermo = load_thermo(std::string(OED_DATA_DIR) + "/h2o2_thermo.txt");
  const auto bad = [&](const std::string& text) {
    std::istringstream in("species: H2 O2 H O OH H2O HO2 H2O2\n" + text);
    return parse_mechanism(in, thermo);
  };
  CHECK_THROWS_AS(bad("H + O2 <=> OH, 1, 0, 0\n"), ParseError);
  CHECK_THROWS_AS(bad("H + CO <=> O + OH, 1, 0, 0\n"), ParseError);
  CHECK_THROWS_AS(bad("H + O2 + M <=> HO2, 1, 0, 0\n"), ParseError);
  CHECK_THROWS_AS(bad("H + O2 <=> O + OH, fast, 0, 0\n"), ParseError);
  CHECK_THROWS_AS(bad("H + O2 <=> O + OH, -1, 0, 0\n"), ParseError);
  CHECK_THROWS_AS(bad("H + O2 <=> O + OH, 1, 0, 0, third_body: H2:2\n"), ParseError);
  CHECK_NOTHROW(bad("2 OH <=> O + H2O, 1, 0, 0\n"));

  std::istringstream wrong_weight("species X\n weight 3\n elements H:2\n temperatures 200 1000 3000\n"
                                  " low 1 0 0 0 0 0 0\n high 1 0 0 0 0 0 0\nend\n");
  CHECK_THROWS_AS(parse_thermo(wrong_weight), ParseError);
}

TEST_CASE("rate constants") {
  const auto thermo = isomer_thermo();
  const Mechanism mech = isomer_mechanism("A <=> B, 7.5, 0, 0\nA <=> B, 4, 0, 1e7\n");
  for (double t : {300.0, 1000.0, 2500.0}) {
    const RateConstants k = rate_constants(mech.reactions()[0], t, thermo);
    CHECK(k.forward == doctest::Approx(7.5).epsilon(1e-15));
    // Symmetric thermo and no change in moles: K_c = 1.
    CHECK(k.reverse == doctest::Approx(k.forward).epsilon(1e-14));
  }
  Reaction half = mech.reactions()[1];
  const double t = 1234.0;
  half.Ea = kGasConstant * t * std::log(2.0);
  CHECK(rate_constants(half, t, thermo).forward == doctest::Approx(2.0).epsilon(1e-14));

  // Equilibrium constant of H2 + M <=> H + H + M from species Gibbs energies.
  const auto& sp = h2o2().species();
  const auto& r5 = h2o2().reactions()[4];
  const double temp = 1500.0;
  const std::size_t h2 = h2o2().species_index("H2"), h = h2o2().species_index("H");
  const double dg = 2 * (sp[h].h_molar(temp) - temp * sp[h].s_molar(temp)) -
                    (sp[h2].h_molar(temp) - temp * sp[h2].s_molar(temp));
  const double kc = std::exp(-dg / (kGasConstant * temp)) * kStandardPressure / (kGasConstant * temp);
  const RateConstants k5 = rate_constants(r5, temp, sp);
  CHECK(k5.forward / k5.reverse == doctest::Approx(kc).epsilon(1e-12));
  CHECK(k5.forward == doctest::Approx(4.57e16 * std::pow(temp, -1.4) *
                                      std::exp(-436725920.0 / (kGasConstant * temp))).epsilon(1e-13));
}

TEST_CASE("production rates") {
  SUBCASE("no hydrogen atoms: nothing happens in H + O2 <=> O + OH") {
    const auto thermo = load_thermo(std::string(OED_DATA_DIR) + "/h2o2_thermo.txt");
    std::istringstream in("species: H2 O2 H O OH H2O HO2 H2O2\nH + O2 <=> O + OH, 1.92e11, 0, 68784960\n");
    const Mechanism r1 = parse_mechanism(in, thermo);
    Vector c(8, 0.0), w(8);
    c[r1.species_index("H2")] = 0.02;
    c[r1.species_index("O2")] = 0.01;
    production_rates(r1, 1200.0, c, w);
    for (double v : w) CHECK(v == 0.0);
  }
  SUBCASE("elements are neither created nor destroyed") {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
      const Vector y = random_state(rng);
      const double temp = y.back();
      const double rho = density(h2o2(), temp, kOneAtmosphere, std::span(y).first(8));
      Vector c(8), w(8);
      for (std::size_t j = 0; j < 8; ++j) c[j] = rho * y[j] / h2o2().weight(j);
      production_rates(h2o2(), temp, c, w);
      for (std::size_t e = 0; e < h2o2().n_elements(); ++e) {
        double sum = 0.0, mag = 0.0;
        for (std::size_t j = 0; j < 8; ++j) {
          sum += h2o2().composition(e, j) * w[j];
          mag += std::abs(h2o2().composition(e, j) * w[j]);
        }
        REQUIRE(std::abs(sum) <= 1e-12 * mag);
      }
    }
  }
  SUBCASE("each reversible reaction is balanced at its own equilibrium") {
    Rng rng(6);
    const auto& sp = h2o2().species();
    for (std::size_t m = 0; m < h2o2().n_reactions(); ++m) {
      const Reaction& r = h2o2().reactions()[m];
      for (double temp : {900.0, 1500.0, 2800.0}) {
        Vector c(8);
        for (double& v : c) v = 1e-3 * (0.1 + uniform01(rng));
        // Solve for the first product's concentration so that
        // prod C^nu'' / prod C^nu' = K_c.
        const double ln_kc = -delta_g_over_rt(r, temp, sp) +
                             r.delta_nu() * std::log(kStandardPressure / (kGasConstant * temp));
        double ln_ratio = ln_kc;
        for (const auto& [j, n] : r.reactants) ln_ratio += n * std::log(c[j]);
        const auto [p0, n0] = r.products[0];
        for (std::size_t q = 1; q < r.products.size(); ++q) ln_ratio -= r.products[q].second * std::log(c[r.products[q].first]);
        bool p0_is_reactant = false;
        for (const auto& [j, n] : r.reactants) p0_is_reactant |= j == p0;
        REQUIRE_FALSE(p0_is_reactant);
        c[p0] = std::exp(ln_ratio / n0);
        Vector fwd(19), rev(19);
        rates_of_progress(h2o2(), temp, c, fwd, rev);
        INFO("reaction " << m + 1 << " at " << temp);
        CHECK(std::abs(fwd[m] - rev[m]) <= 1e-10 * fwd[m]);
      }
    }
  }
}

TEST_CASE("reactor right-hand side conserves mass and enthalpy") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector y = random_state(rng);
    const auto mass = std::span(y).first(8);
    const ReactorRates rr = reactor_rates(h2o2(), y.back(), kOneAtmosphere, mass);
    double sum = 0.0, mag = 0.0, dh = 0.0, dh_mag = 0.0;
    for (std::size_t j = 0; j < 8; ++j) {
      sum += rr.dY_dt[j];
      mag += std::abs(rr.dY_dt[j]);
      const double hj = h2o2().species()[j].h_molar(y.back()) / h2o2().weight(j);
      dh += hj * rr.dY_dt[j];
      dh_mag += std::abs(hj * rr.dY_dt[j]);
    }
    REQUIRE(std::abs(sum) <= 1e-12 * mag);
    const double cp = cp_mass(h2o2(), y.back(), mass);
    REQUIRE(std::abs(cp * rr.dT_dt + dh) <= 1e-12 * dh_mag);
    REQUIRE(rr.dh_dt == doctest::Approx(dh).epsilon(1e-12));
  }
}

TEST_CASE("initial mixtures") {
  const auto s1 = initial_state(1.0, 1000.0, kOneAtmosphere, h2o2());
  CHECK(s1.mole_fractions[h2o2().species_index("H2")] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(s1.mole_fractions[h2o2().species_index("O2")] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const auto s2 = initial_state(0.5, 1000.0, kOneAtmosphere, h2o2());
  CHECK(s2.mole_fractions[h2o2().species_index("O2")] == doctest::Approx(s2.mole_fractions[h2o2().species_index("H2")]));
  for (double phi : {0.5, 0.8, 1.0, 1.2}) {
    const auto s = initial_state(phi, 950.0, kOneAtmosphere, h2o2());
    const Vector y = mass_fractions(h2o2(), s.mole_fractions);
    CHECK(std::abs(std::accumulate(y.begin(), y.end(), 0.0) - 1.0) <= 1e-14);
    const Vector x = mole_fractions(h2o2(), y);
    for (std::size_t j = 0; j < x.size(); ++j) CHECK(x[j] == doctest::Approx(s.mole_fractions[j]).epsilon(1e-14));
  }
  CHECK_THROWS_AS(initial_state(0.0, 1000.0, kOneAtmosphere, h2o2()), ConfigError);
  CHECK_THROWS_AS(initial_state(1.0, -5.0, kOneAtmosphere, h2o2()), ConfigError);
}

TEST_CASE("BDF solver on reference problems") {
  SUBCASE("Robertson's stiff chemistry") {
    const OdeRhs rob = [](double, std::span<const double> y, std::span<double> f) {
      f[0] = -0.04 * y[0] + 1e4 * y[1] * y[2];
      f[1] = 0.04 * y[0] - 1e4 * y[1] * y[2] - 3e7 * y[1] * y[1];
      f[2] = 3e7 * y[1] * y[1];
    };
    BdfOptions opt;
    opt.rtol = 1e-8;
    opt.atol = {1e-12, 1e-16, 1e-12};
    BdfSolver solver(rob, 0.0, {1.0, 0.0, 0.0}, 40.0, opt);
    std::size_t max_order = 0;
    while (solver.step()) max_order = std::max(max_order, solver.order());
    // Reference values at t = 40.
    CHECK(solver.y()[0] == doctest::Approx(0.7158270687).epsilon(1e-6));
    CHECK(solver.y()[1] == doctest::Approx(9.185534764e-6).epsilon(1e-5));
    CHECK(solver.y()[2] == doctest::Approx(0.2841637457).epsilon(1e-6));
    CHECK(max_order >= 3);
    CHECK(solver.steps() < 2000);
  }
  SUBCASE("dense output of exponential decay") {
    BdfOptions opt;
    opt.rtol = 1e-9;
    opt.atol = {1e-14};
    BdfSolver solver([](double, std::span<const double> y, std::span<double> f) { f[0] = -3.0 * y[0]; }, 0.0, {1.0},
                     2.0, opt);
    double worst = 0.0;
    double out[1];
    while (solver.step()) {
      for (int s = 0; s <= 4; ++s) {
        const double t = solver.t_old() + (solver.t() - solver.t_old()) * s / 4.0;
        solver.dense(t, out);
        worst = std::max(worst, std::abs(out[0] - std::exp(-3.0 * t)) / std::exp(-3.0 * t));
      }
    }
    CHECK(solver.t() == 2.0);
    CHECK(worst < 1e-7);
  }
  SUBCASE("clipping and failures") {
    BdfOptions opt;
    opt.atol = {1e-6};
    opt.nonnegative = 1;
    BdfSolver down([](double, std::span<const double>, std::span<double> f) { f[0] = -1.0; }, 0.0, {0.5}, 2.0, opt);
    while (down.step()) REQUIRE(down.y()[0] >= -1e-6);
    CHECK(down.clip_events() > 0);

    opt.max_steps = 3;
    BdfSolver slow([](double, std::span<const double> y, std::span<double> f) { f[0] = -y[0]; }, 0.0, {1.0}, 1e6, opt);
    CHECK_THROWS_AS(while (slow.step()) {}, StepFailure);
    opt.rtol = 0.0;
    CHECK_THROWS_AS(BdfSolver([](double, std::span<const double>, std::span<double>) {}, 0.0, {1.0}, 1.0, opt),
                    ConfigError);
  }
}

TEST_CASE("integration of trivial mechanisms") {
  SUBCASE("no reactions: the state does not change") {
    const Mechanism none = isomer_mechanism("");
    MixtureState s{1000.0, {0.3, 0.7}, kOneAtmosphere};
    const Trajectory tr = integrate(none, s, 1.0, 1e-8, 1e-14);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      REQUIRE(tr.temperature[i] == 1000.0);
      REQUIRE(tr.x(i, 0) == doctest::Approx(0.3).epsilon(1e-15));
    }
  }
  SUBCASE("first-order isomerization follows exp(-k t)") {
    const double k = 50.0;
    const Mechanism iso = isomer_mechanism("A => B, 50, 0, 0\n");
    MixtureState s{1000.0, {1.0, 0.0}, kOneAtmosphere};
    const double rtol = 1e-7;
    const Trajectory tr = integrate(iso, s, 0.1, rtol, 1e-14);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const double exact = std::exp(-k * tr.time[i]);
      // Error measured on the scale of X_A(0) = 1.
      REQUIRE(std::abs(tr.x(i, 0) - exact) <= 10 * rtol);
      REQUIRE(tr.temperature[i] == doctest::Approx(1000.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("hydrogen-oxygen ignition invariants") {
  const double rtol = 1e-8;
  for (double phi : {0.5, 1.0, 1.2}) {
    const auto s = initial_state(phi, 1000.0, kOneAtmosphere, h2o2());
    IntegrationOptions opt;
    opt.rtol = rtol;
    opt.stop_after_ignition = true;
    const Trajectory tr = integrate(h2o2(), s, opt);
    const Vector y0 = mass_fractions(h2o2(), s.mole_fractions);
    const double h0 = enthalpy_mass(h2o2(), s.temperature, y0);
    const Vector e0 = element_totals(h2o2(), y0);
    double h_drift = 0.0, e_drift = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const Vector x(tr.mole_fractions.begin() + static_cast<long>(i * 8), tr.mole_fractions.begin() + static_cast<long>(i * 8 + 8));
      const Vector y = mass_fractions(h2o2(), x);
      h_drift = std::max(h_drift, std::abs(enthalpy_mass(h2o2(), tr.temperature[i], y) - h0) / std::abs(h0));
      const Vector e = element_totals(h2o2(), y);
      for (std::size_t k = 0; k < e.size(); ++k) e_drift = std::max(e_drift, std::abs(e[k] - e0[k]) / e0[k]);
    }
    INFO("phi " << phi);
    CHECK(h_drift < 1e-6);
    CHECK(e_drift < 10 * rtol);
    CHECK(tr.temperature.back() > 2500.0);
    CHECK(tr.clip_events == 0);
  }
}

TEST_CASE("mass is conserved at every right-hand-side call along a trajectory") {
  const auto s = initial_state(1.0, 1050.0, kOneAtmosphere, h2o2());
  Vector y0 = mass_fractions(h2o2(), s.mole_fractions);
  y0.push_back(s.temperature);
  std::size_t calls = 0, violations = 0;
  BdfOptions opt;
  opt.rtol = 1e-8;
  opt.atol.assign(9, 1e-14);
  opt.atol[8] = 1e-6;
  BdfSolver solver(
      [&](double, std::span<const double> y, std::span<double> f) {
        reactor_rhs(h2o2(), kOneAtmosphere, y, f);
        double sum = 0.0, mag = 0.0;
        for (std::size_t j = 0; j < 8; ++j) {
          sum += f[j];
          mag += std::abs(f[j]);
        }
        ++calls;
        violations += std::abs(sum) > 1e-12 * mag;
      },
      0.0, y0, 2e-4, opt);
  while (solver.step()) {
  }
  CHECK(calls > 1000);
  CHECK(violations == 0);
}

TEST_CASE("equilibrium end state has vanishing rates") {
  const auto s = initial_state(1.0, 1050.0, kOneAtmosphere, h2o2());
  const Trajectory tr = integrate(h2o2(), s, 1.0, 1e-9, 1e-16);
  const std::size_t last = tr.size() - 1;
  const Vector x(tr.mole_fractions.end() - 8, tr.mole_fractions.end());
  const ReactorRates rr = reactor_rates(h2o2(), tr.temperature[last], kOneAtmosphere, mass_fractions(h2o2(), x));
  const double peak = *std::min_element(tr.dh_dt.begin(), tr.dh_dt.end());
  CHECK(std::abs(rr.dh_dt) < 1e-8 * std::abs(peak));
  CHECK(std::abs(rr.dT_dt) < 1e-2);
}

TEST_CASE("ignition delay decreases with initial temperature") {
  const KineticsModel model(std::make_shared<Mechanism>(h2o2()));
  const double nominal_ea3 = h2o2().reactions()[2].Ea;
  const Vector theta{0.0, nominal_ea3};
  double previous = INFINITY;
  for (double t0 : {900.0, 975.0, 1050.0}) {
    const Vector g = model(theta, Vector{t0, 1.0});
    INFO("T0 " << t0 << " ln tau " << g[0]);
    CHECK(g[0] < previous);
    previous = g[0];
  }
}

TEST_CASE("kinetics forward model") {
  const KineticsModel model(std::make_shared<Mechanism>(h2o2()));
  const Vector theta{0.02, 1.2e7};
  const Vector design{1000.0, 0.8};
  const Vector g1 = model(theta, design);
  const Vector g2 = model(theta, design);
  REQUIRE(g1.size() == 10);
  CHECK(std::memcmp(g1.data(), g2.data(), sizeof(double) * 10) == 0);
  for (double v : g1) CHECK(std::isfinite(v));
  CHECK(g1[5] < 0.0);
  for (int i = 6; i < 10; ++i) {
    CHECK(g1[i] > 0.0);
    CHECK(g1[i] < 1.0);
  }
  // A faster chain-branching step ignites sooner.
  const Vector faster = model(Vector{0.05, 1.2e7}, design);
  const Vector slower = model(Vector{-0.05, 1.2e7}, design);
  CHECK(faster[0] < g1[0]);
  CHECK(g1[0] < slower[0]);
  // The model leaves the shared mechanism untouched.
  CHECK(model.mechanism().reactions()[0].A == h2o2().reactions()[0].A);
  CHECK(model.perturbed(theta).reactions()[2].Ea == 1.2e7);

  const NoiseModel noise = kinetics_noise();
  REQUIRE(noise.size() == 10);
  for (std::size_t c = 0; c < 10; ++c) CHECK(noise.sigma(c, g1[c]) > 0.0);
  CHECK(noise.sigma(0, std::log(1e-3)) == doctest::Approx(0.1 + 1e-5 / 1e-3));
  CHECK(kinetics_prior_box()[1].hi == 2.7196e7);
  CHECK(kinetics_design_box()[0].lo == 900.0);
}

TEST_CASE("observable extraction") {
  Trajectory tr;
  tr.species = {"O", "H", "HO2", "H2O2"};
  const double tau = 5e-4;
  for (int i = 0; i <= 40; ++i) {
    const double t = 1e-3 * i / 40.0 + 3e-6 * (i % 3);
    tr.time.push_back(t);
    tr.temperature.push_back(1000.0);
    const double u = (t - tau) / 1e-3;
    const double xh = 0.01 - 0.5 * u * u;
    tr.mole_fractions.insert(tr.mole_fractions.end(), {0.002 - (t - 4e-4) * (t - 4e-4), xh,
                                                       1e-4 - (t - 3e-4) * (t - 3e-4), 1e-5 - (t - 2e-4) * (t - 2e-4)});
    tr.dh_dt.push_back(-1e9 + 1e15 * (t - 6e-4) * (t - 6e-4));
  }
  const ObservableSet obs = extract_observables(tr);
  CHECK(std::exp(obs.ln_tau_radical[1]) == doctest::Approx(tau).epsilon(1e-10));
  CHECK(obs.x_peak[1] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(std::exp(obs.ln_tau_ign) == doctest::Approx(6e-4).epsilon(1e-10));
  CHECK(obs.dh_dt_peak == doctest::Approx(-1e9).epsilon(1e-10));
  CHECK(std::exp(obs.ln_tau_radical[0]) == doctest::Approx(4e-4).epsilon(1e-10));
  CHECK(ObservableSet::names().size() == obs.as_vector().size());

  Trajectory shifted = tr;
  const double shift = 2e-4;
  // Shift every signal by moving the clock; peaks keep their values.
  for (double& t : shifted.time) t += shift;
  const ObservableSet later = extract_observables(shifted);
  CHECK(std::exp(later.ln_tau_ign) - std::exp(obs.ln_tau_ign) == doctest::Approx(shift).epsilon(1e-9));
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(std::exp(later.ln_tau_radical[r]) - std::exp(obs.ln_tau_radical[r]) == doctest::Approx(shift).epsilon(1e-9));
    CHECK(later.x_peak[r] == obs.x_peak[r]);
  }
  CHECK(later.dh_dt_peak == obs.dh_dt_peak);

  Trajectory monotone = tr;
  for (std::size_t i = 0; i < monotone.size(); ++i) monotone.mole_fractions[i * 4 + 2] = monotone.time[i];
  CHECK_THROWS_AS(extract_observables(monotone), NoPeak);
  CHECK_THROWS_AS(extract_observables(Trajectory{}), ConfigError);
}

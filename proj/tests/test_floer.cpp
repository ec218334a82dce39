#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cpo/errors.hpp"
#include "cpo/floer.hpp"
#include "cpo/spectrum.hpp"

using namespace cpo;
constexpr double pi = std::numbers::pi;

namespace {
const Potential kHarmonic = build_potential({0, 0, 1});
const Potential kDW = build_potential({0, 0, -2, 0, 1});

LoopState harmonic_orbit(double E, int n = 8) {
  const double a = std::sqrt(E);
  return circle_seed(0.0, a, a, pi, E, n);
}

RefinedOrbit well_orbit(double E) {
  const RealOrbit o = real_orbits(curve(kDW, E)).back();
  return refine_orbit(kDW, trajectory_seed(kDW, E, o.right, o.time_period, 16));
}

RefinedOrbit tunneling_orbit(double E) {
  const EnergyCurve c = curve(kDW, E);
  const HomologyBasis b = homology_basis(c);
  const GeneratorContour& g = b.generators[1];
  const Cx T = generator_period(c, g).time_period;
  return refine_orbit(kDW, trajectory_seed(kDW, E, g.focus_b, T, 16));
}

double state_distance(const LoopState& a, const LoopState& b) {
  double d = std::abs(a.period - b.period);
  for (std::size_t i = 0; i < a.q.size(); ++i) d += std::abs(a.q[i] - b.q[i]) + std::abs(a.p[i] - b.p[i]);
  return d;
}
}  // namespace

TEST_CASE("loop state helpers") {
  const LoopState s = harmonic_orbit(1.0);
  CHECK(s.n_modes == 8);
  CHECK(s.q.size() == 17);
  CHECK(state_distance(s.shifted(1.0), s) < 1e-12);
  const LoopState r2 = s.dilated(2);
  CHECK(r2.n_modes == 16);
  CHECK(r2.period == 2.0 * s.period);
  CHECK(std::abs(action(kHarmonic, r2) - 2.0 * action(kHarmonic, s)) < 1e-12);
  CHECK(s.resized(12).n_modes == 12);
  CHECK(state_distance(s.resized(12).resized(8), s) == 0.0);
  CHECK_THROWS_AS(LoopState::zeros(0, 1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(s.dilated(0), ValidationError);
}

TEST_CASE("action of closed-form loops") {
  CHECK(std::abs(action(kHarmonic, harmonic_orbit(1.0)) - pi) < 1e-12);
  CHECK(std::abs(action(kHarmonic, harmonic_orbit(2.5)) - 2.5 * pi) < 1e-12);
  CHECK(std::abs(action(kHarmonic, LoopState::zeros(8, Cx(0.7, 0.2), 0.0))) < 1e-15);
}

TEST_CASE("unresolved loops are rejected") {
  LoopState s = harmonic_orbit(1.0);
  s.qk(8) = 0.1;
  try {
    action(kHarmonic, s);
    FAIL("expected resolution error");
  } catch (const NumericalError& e) {
    CHECK(e.code() == "resolution");
  }
}

TEST_CASE("critical residual") {
  CHECK(critical_residual(kHarmonic, harmonic_orbit(1.0)) < 1e-10);
  LoopState a = harmonic_orbit(1.0), b = harmonic_orbit(1.0);
  a.period += 1e-3;
  b.period += 2e-3;
  const double ra = critical_residual(kHarmonic, a), rb = critical_residual(kHarmonic, b);
  CHECK(ra > 1e-5);
  CHECK(rb / ra == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("Newton refinement of the harmonic orbit") {
  const LoopState seed = circle_seed(0.05, 0.9, 1.1, 3.0, 1.0, 8);
  const RefinedOrbit o = refine_orbit(kHarmonic, seed);
  CHECK(std::abs(o.state.period - pi) < 1e-9);
  CHECK(std::abs(o.action - pi) < 1e-9);
  CHECK(o.residual < 1e-10);
  CHECK(critical_residual(kHarmonic, o.state) < 1e-10);
  REQUIRE_FALSE(o.residual_history.empty());
  CHECK(o.residual_history.back() == doctest::Approx(o.residual));
}

TEST_CASE("Newton refinement on the double well matches the period lattice") {
  SUBCASE("well orbit") {
    const RefinedOrbit o = well_orbit(-0.5);
    REQUIRE(o.cycle);
    CHECK(o.cycle->coords == std::vector<int>{1, 0});
    const PeriodData pd = cycle_period(curve(kDW, -0.5), *o.cycle);
    CHECK(std::abs(o.action - pd.action) < 1e-7 * std::abs(pd.action));
    CHECK(std::abs(o.state.period - pd.time_period) < 1e-7 * std::abs(pd.time_period));
  }
  SUBCASE("tunneling orbit from the imaginary-time seed") {
    const RefinedOrbit o = tunneling_orbit(-0.5);
    REQUIRE(o.cycle);
    CHECK(o.cycle->coords == std::vector<int>{0, 1});
    CHECK(std::abs(o.action.real()) < 1e-6);
    const PeriodData pd = cycle_period(curve(kDW, -0.5), *o.cycle);
    CHECK(std::abs(o.action - pd.action) < 1e-6 * std::abs(pd.action));
    CHECK(std::abs(o.state.period - pd.time_period) < 1e-6 * std::abs(pd.time_period));
  }
}

TEST_CASE("refinement is gauge invariant") {
  const RealOrbit ro = real_orbits(curve(kDW, 0.5)).back();
  const LoopState seed = trajectory_seed(kDW, 0.5, ro.right, ro.time_period, 16);
  const RefinedOrbit a = refine_orbit(kDW, seed);
  const RefinedOrbit b = refine_orbit(kDW, seed.shifted(0.137));
  CHECK(std::abs(a.action - b.action) < 1e-9);
  CHECK(std::abs(a.state.period - b.state.period) < 1e-9);
}

TEST_CASE("refinement failures") {
  SUBCASE("iteration budget exhausted") {
    RefineOptions opt;
    opt.max_iterations = 1;
    try {
      refine_orbit(kDW, circle_seed(1.0, 0.3, 0.5, 2.0, -0.5, 8), opt);
      FAIL("expected no_convergence");
    } catch (const NoConvergenceError& e) {
      CHECK(e.code() == "no_convergence");
      CHECK_FALSE(e.residual_history().empty());
    }
  }
  SUBCASE("bad options") {
    RefineOptions opt;
    opt.tol = 0.0;
    CHECK_THROWS_AS(refine_orbit(kHarmonic, harmonic_orbit(1.0), opt), ValidationError);
  }
}

TEST_CASE("fixed points: residual and flow speed vanish together") {
  const RefinedOrbit o = well_orbit(-0.5);
  CHECK(critical_residual(kDW, o.state) < 1e-9);
  CHECK(flow_speed(kDW, o.state) < 1e-9);
  LoopState off = o.state;
  off.qk(2) += 1e-4;
  off.qk(-2) += 1e-4;
  CHECK(critical_residual(kDW, off) > 1e-7);
  CHECK(flow_speed(kDW, off) > 1e-7);
}

TEST_CASE("flow from an exact orbit is stationary") {
  const LoopState s = harmonic_orbit(1.0);
  const FlowTrajectory tr = integrate_flow(kHarmonic, s, 1.0, FlowDirection::down);
  CHECK(tr.states.back().first == doctest::Approx(1.0));
  CHECK(state_distance(tr.states.back().second, s) < 1e-8);
}

TEST_CASE("down-flow from a perturbed orbit") {
  const RefinedOrbit o = well_orbit(-0.5);
  LoopState start = o.state;
  start.qk(2) += 1e-2;
  start.qk(-2) += 1e-2;
  start.period += 1e-3;
  const FlowTrajectory tr = integrate_flow(kDW, start, 0.01, FlowDirection::down);
  REQUIRE(tr.morse_series.size() > 3);
  const auto& ms = tr.morse_series;
  for (std::size_t i = 1; i < ms.size(); ++i) {
    CHECK(ms[i].tau > ms[i - 1].tau);
    CHECK(ms[i].re_f <= ms[i - 1].re_f + 1e-9);
    CHECK(std::abs(ms[i].im_f - ms[0].im_f) < 1e-6 * (ms[i].tau + 1e-3));
  }
  CHECK(ms.back().re_f < ms.front().re_f);
  // the series is recomputable from the stored states
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    const Cx f = Cx(0, 1) * action(kDW, tr.states[i].second);
    CHECK(std::abs(f.real() - ms[i].re_f) < 1e-12);
    CHECK(std::abs(f.imag() - ms[i].im_f) < 1e-12);
  }
  // finite-difference rate of the Morse function equals -|grad|^2
  for (std::size_t i = 1; i + 1 < tr.states.size(); i += 2) {
    const double h = 1e-7;
    const double speed = flow_speed(kDW, tr.states[i].second);
    const FlowTrajectory step = integrate_flow(kDW, tr.states[i].second, h, FlowDirection::down, 1e-13);
    const double rate = (step.morse_series.back().re_f - step.morse_series.front().re_f) / h;
    CHECK(rate == doctest::Approx(-speed * speed).epsilon(1e-3));
  }
}

TEST_CASE("flow keeps the time-reversal symmetry of a real orbit") {
  const RefinedOrbit o = well_orbit(-0.5);
  LoopState start = o.state;
  start.qk(3) += 5e-3;
  start.qk(-3) += 5e-3;
  for (FlowDirection dir : {FlowDirection::down, FlowDirection::up}) {
    const FlowTrajectory tr = integrate_flow(kDW, start, 0.005, dir);
    for (const auto& [tau, s] : tr.states)
      for (int k = 1; k <= s.n_modes; ++k) {
        CHECK(std::abs(s.qk(k) - s.qk(-k)) < 1e-8);
        CHECK(std::abs(s.pk(k) + s.pk(-k)) < 1e-8);
      }
  }
}

TEST_CASE("up-flow raises the Morse function") {
  LoopState start = harmonic_orbit(1.0);
  start.qk(2) += 1e-2;
  start.qk(-2) += 1e-2;
  const FlowTrajectory tr = integrate_flow(kHarmonic, start, 0.01, FlowDirection::up);
  for (std::size_t i = 1; i < tr.morse_series.size(); ++i)
    CHECK(tr.morse_series[i].re_f >= tr.morse_series[i - 1].re_f - 1e-9);
  CHECK_THROWS_AS(integrate_flow(kHarmonic, start, 0.0, FlowDirection::up), ValidationError);
}

TEST_CASE("one-loop amplitudes of the harmonic orbit") {
  const LoopState s = harmonic_orbit(1.0, 16);
  const auto amps = gaussian_amplitudes(kHarmonic, s, 4);
  REQUIRE(amps.size() == 4);
  for (int r = 1; r <= 4; ++r) {
    const GaussianAmplitude& a = amps[std::size_t(r - 1)];
    // Maslov phase advances by pi per repetition (two turning points)
    CHECK(std::abs(a.amplitude - Cx(r % 2 ? -0.5 : 0.5)) < 1e-9);
    CHECK(std::abs(a.det_ratio - 1.0) < 1e-9);
    CHECK(a.maslov == 2);
    CHECK(a.next_smallest > 1e-6);
    CHECK(std::abs(gaussian_amplitude(kHarmonic, s, r).amplitude - a.amplitude) < 1e-12);
  }
}

TEST_CASE("harmonic one-loop trace term reproduces the density at E = 1") {
  const double sigma = 0.5, E = 1.0;
  const LoopState s = harmonic_orbit(E, 16);
  const auto amps = gaussian_amplitudes(kHarmonic, s, 20);
  double d = phase_space_volume(kHarmonic, E);
  for (int r = 1; r <= 20; ++r) {
    const Cx term = amps[std::size_t(r - 1)].amplitude * std::exp(Cx(0, r * pi * E));
    d += 2 * term.real() * std::exp(-0.5 * std::pow(r * pi * sigma, 2));
  }
  const Spectrum spec = eigenvalues(kHarmonic, 20);
  const double grid[] = {E};
  const double exact = smoothed_density(spec, sigma, grid)[0];
  CHECK(std::abs(d - exact) < 0.05 * exact);
}

TEST_CASE("amplitude preconditions and degenerate orbits") {
  LoopState off = harmonic_orbit(1.0);
  off.period += 1e-3;
  CHECK_THROWS_AS(gaussian_amplitude(kHarmonic, off, 1), ValidationError);
  CHECK_THROWS_AS(gaussian_amplitude(kHarmonic, harmonic_orbit(1.0), 0), ValidationError);
  // constant loop at the flat minimum of q^4: the Hessian has extra zero modes
  const Potential quartic = build_potential({0, 0, 0, 0, 1});
  try {
    gaussian_amplitude(quartic, LoopState::zeros(8, 1.0, 0.0), 1);
    FAIL("expected degenerate_orbit");
  } catch (const NumericalError& e) {
    CHECK(e.code() == "degenerate_orbit");
  }
}

TEST_CASE("class matching") {
  const EnergyCurve c = curve(kDW, -0.5);
  const auto lat = period_lattice(c);
  const Cx S = 2.0 * lat[0].action - lat[1].action, T = 2.0 * lat[0].time_period - lat[1].time_period;
  const ClassMatch m = match_class(c, S, T);
  CHECK(m.cycle.coords == std::vector<int>{2, -1});
  CHECK(m.residual < 1e-10);
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cpo/errors.hpp"
#include "cpo/spectrum.hpp"
#include "cpo/traceformula.hpp"

using namespace cpo;
constexpr double pi = std::numbers::pi;

namespace {
const Potential kHarmonic = build_potential({0, 0, 1});
const Potential kQuartic = build_potential({0, 0, 0, 0, 1});
const Potential kDW = build_potential({0, 0, -2, 0, 1});

Potential deep_well(double lambda) { return build_potential({lambda, 0, -2 * lambda, 0, lambda}); }

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[std::size_t(i)] = a + (b - a) * i / (n - 1);
  return g;
}

std::vector<double> local_maxima(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < y.size(); ++i)
    if (y[i] > y[i - 1] && y[i] >= y[i + 1]) {
      // parabolic refinement
      const double d = y[i - 1] - 2 * y[i] + y[i + 1];
      const double h = x[i + 1] - x[i];
      out.push_back(x[i] + (d != 0 ? 0.5 * h * (y[i - 1] - y[i + 1]) / d : 0.0));
    }
  return out;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}
}  // namespace

TEST_CASE("maslov indices") {
  CHECK(maslov_index(curve(kHarmonic, 1.0), Cycle{}).index == 2);
  CHECK_FALSE(maslov_index(curve(kHarmonic, 1.0), Cycle{}).flagged);

  const EnergyCurve below = curve(kDW, -0.5);
  const MaslovResult well = maslov_index(below, Cycle{{1, 0}, homology_basis(below).id});
  CHECK(well.index == 2);
  CHECK_FALSE(well.flagged);

  // above the barrier the real orbit is (2, 1); other cycles are flagged
  const EnergyCurve above = curve(kDW, 0.5);
  const std::string id = homology_basis(above).id;
  CHECK(maslov_index(above, Cycle{{2, 1}, id}).index == 2);
  const MaslovResult odd = maslov_index(above, Cycle{{1, -2}, id});
  CHECK(odd.flagged);
  CHECK(odd.index == 1);

  CHECK_THROWS_AS(maslov_index(above, Cycle{{1}, id}), ValidationError);
}

TEST_CASE("semiclassical density: harmonic peaks sit on the levels") {
  const double sigma = 0.3;
  const auto grid = linspace(1.5, 11.5, 2001);
  const DensityResult d = semiclassical_density(kHarmonic, grid, 12, sigma);
  REQUIRE(d.energies.size() == grid.size());
  const auto peaks = local_maxima(d.energies, d.density);
  REQUIRE(peaks.size() == 5);
  for (std::size_t n = 0; n < peaks.size(); ++n) CHECK(std::abs(peaks[n] - (2.0 * n + 3.0)) < sigma / 10);
}

TEST_CASE("semiclassical density: quartic peaks") {
  const double sigma = 0.25;
  const Spectrum spec = eigenvalues(kQuartic, 12);
  const double top = spec.eigenvalues[8] + 1.0;
  const auto grid = linspace(2.0, top, 1501);
  const DensityResult d = semiclassical_density(kQuartic, grid, 10, sigma);
  auto peaks = local_maxima(d.energies, d.density);
  // keep only prominent maxima
  std::vector<double> prominent;
  for (double p : peaks) {
    const auto it = std::lower_bound(d.energies.begin(), d.energies.end(), p);
    if (d.density[std::size_t(it - d.energies.begin())] > 0.2) prominent.push_back(p);
  }
  REQUIRE(prominent.size() >= 8);
  for (int n = 1; n <= 8; ++n) {
    const double e = spec.eigenvalues[std::size_t(n)];
    double best = 1e9;
    for (double p : prominent) best = std::min(best, std::abs(p - e));
    CHECK(best < sigma / 2);
  }
}

TEST_CASE("r_max = 0 and empty class lists reduce to the smooth density") {
  const auto grid = linspace(0.5, 6.0, 12);
  const DensityResult sc = semiclassical_density(kQuartic, grid, 0, 0.3);
  const DensityResult q = quantum_density(kQuartic, grid, {}, 4, 0.3);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double gamma = phase_space_volume(kQuartic, grid[i]);
    CHECK(std::abs(sc.density[i] - gamma) < 1e-12);
    CHECK(std::abs(q.density[i] - gamma) < 1e-12);
  }
  CHECK(semiclassical_terms(kQuartic, 2.0, 0).empty());
}

TEST_CASE("smooth level count is consistent with Gamma and the spectrum") {
  for (double E : {1.0, 5.0, 20.0}) {
    const double h = 1e-3;
    const double dn = (smooth_level_count(kQuartic, E + h) - smooth_level_count(kQuartic, E - h)) / (2 * h);
    CHECK(std::abs(dn - phase_space_volume(kQuartic, E)) < 1e-6);
  }
  // harmonic: N(E) = E / 2, exact levels at 2n + 1 sit at half-integers
  CHECK(std::abs(smooth_level_count(kHarmonic, 7.0) - 3.5) < 1e-8);
  const Spectrum spec = eigenvalues(kQuartic, 30);
  const double N = smooth_level_count(kQuartic, spec.eigenvalues[29]);
  CHECK(std::abs(N - 29.5) < 0.1);
  CHECK(smooth_level_count(kQuartic, -1.0) == 0.0);
}

TEST_CASE("semiclassical terms carry orbit data") {
  const auto terms = semiclassical_terms(kHarmonic, 3.0, 3);
  REQUIRE(terms.size() == 3);
  for (const TraceTerm& t : terms) {
    CHECK(t.provenance == Provenance::semiclassical);
    CHECK(std::abs(t.action - 3.0 * pi) < 1e-10);
    CHECK(std::abs(t.time_period - pi) < 1e-10);
    CHECK(t.maslov == 2);
  }
  CHECK(terms[2].repetition == 3);
  // two wells below the barrier, one orbit above
  CHECK(semiclassical_terms(kDW, -0.5, 1).size() == 2);
  CHECK(semiclassical_terms(kDW, 0.5, 1).size() == 1);
}

TEST_CASE("convergence in r_max is monotone for the harmonic oscillator") {
  const double sigma = 0.4;
  const auto grid = linspace(3.0, 15.0, 121);
  const Spectrum spec = eigenvalues(kHarmonic, 40);
  const auto exact = smoothed_density(spec, sigma, grid);
  double prev = 1e9;
  for (int r : {1, 2, 3, 5, 8}) {
    const double err = max_abs_diff(semiclassical_density(kHarmonic, grid, r, sigma).density, exact);
    CHECK(err <= prev + 1e-12);
    prev = err;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("quantum density: harmonic real class matches the exact density") {
  const double sigma = 0.5;
  const auto grid = linspace(2.0, 12.0, 41);
  const DensityResult q = quantum_density(kHarmonic, grid, {ClassSpec::real()}, 10, sigma);
  REQUIRE(q.density.size() == grid.size());
  const Spectrum spec = eigenvalues(kHarmonic, 30);
  const auto exact = smoothed_density(spec, sigma, grid);
  double peak = 0;
  for (double x : exact) peak = std::max(peak, x);
  CHECK(max_abs_diff(q.density, exact) < 0.1 * peak);
  CHECK(std::find(q.notes.begin(), q.notes.end(), "amplitudes are one-loop (Gaussian) approximations") !=
        q.notes.end());
}

TEST_CASE("quantum terms: tunneling class has a complex action") {
  const Potential V = deep_well(8.0);
  const EnergyCurve c = curve(V, 4.0);
  const std::string id = homology_basis(c).id;
  const auto terms = quantum_terms(V, 4.0, {ClassSpec::of(Cycle{{0, 1}, id})}, 3, 0.3);
  REQUIRE_FALSE(terms.empty());
  for (const TraceTerm& t : terms) {
    CHECK(t.provenance == Provenance::one_loop_quantum);
    CHECK(t.action.imag() > 0.5);
    CHECK(std::abs(t.action.real()) < 1e-8);
    CHECK(t.intersection == 1);
    CHECK(std::abs(t.amplitude) > 0);
  }
  const auto real = quantum_terms(V, 4.0, {ClassSpec::real()}, 2, 0.3);
  REQUIRE(real.size() == 4);  // two wells, r = 1, 2
  for (const TraceTerm& t : real) CHECK(std::abs(t.action.imag()) < 1e-10);
}

TEST_CASE("intersection rule") {
  CHECK(intersection_rule(Cx(2.0, 0.0), std::nullopt) == 1);
  CHECK(intersection_rule(Cx(0.0, 1.0), std::nullopt) == 1);
  CHECK(intersection_rule(Cx(0.0, -1.0), std::nullopt) == 0);
  CHECK(intersection_rule(Cx(0.0, 1.0), 2) == 2);
  CHECK(intersection_rule(Cx(0.0, -1.0), 0) == 0);
  CHECK_THROWS_AS(intersection_rule(Cx(0.0, -1.0), 1), ValidationError);
}

TEST_CASE("classes with Im S < 0 are excluded with a note") {
  const Potential V = deep_well(8.0);
  const std::string id = homology_basis(curve(V, 4.0)).id;
  const auto grid = linspace(3.5, 4.5, 5);
  const DensityResult q = quantum_density(V, grid, {ClassSpec::of(Cycle{{0, -1}, id})}, 2, 0.3);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(q.density[i] - phase_space_volume(V, grid[i])) < 1e-12);
  bool noted = false;
  for (const auto& n : q.notes) noted |= n.find("Im S < 0") != std::string::npos;
  CHECK(noted);
  CHECK_THROWS_AS(quantum_density(V, grid, {ClassSpec::of(Cycle{{0, -1}, id}, 1)}, 2, 0.3), ValidationError);
}

TEST_CASE("density argument validation") {
  const std::vector<double> grid{1.0};
  CHECK_THROWS_AS(semiclassical_density(kHarmonic, {}, 1, 0.3), ValidationError);
  CHECK_THROWS_AS(semiclassical_density(kHarmonic, grid, -1, 0.3), ValidationError);
  CHECK_THROWS_AS(semiclassical_density(kHarmonic, grid, 1, 0.0), ValidationError);
  QuantumOptions opt;
  opt.amplitude_nodes = 0;
  CHECK_THROWS_AS(quantum_density(kHarmonic, grid, {ClassSpec::real()}, 1, 0.3, opt), ValidationError);
}

TEST_CASE("EBK levels") {
  const EbkResult h = ebk_levels(kHarmonic, 0, 20);
  REQUIRE(h.levels.size() == 21);
  for (const auto& l : h.levels) CHECK(std::abs(l.energy - (2.0 * l.n + 1.0)) < 1e-9);

  // quartic: intrinsic WKB error at n = 0, then decreasing
  const EbkResult q = ebk_levels(kQuartic, 0, 8);
  const Spectrum spec = eigenvalues(kQuartic, 9);
  double prev = 1e9;
  for (const auto& l : q.levels) {
    const double rel = std::abs(l.energy - spec.eigenvalues[std::size_t(l.n)]) / spec.eigenvalues[std::size_t(l.n)];
    if (l.n >= 1) {
      CHECK(rel < 0.02);
      CHECK(rel < prev);
    }
    prev = rel;
  }

  const Potential V = deep_well(16.0);
  // only n = 0 lies below the barrier at 16; it falls inside the split doublet
  const EbkResult w = ebk_levels(V, 0, 0);
  const Spectrum sw = eigenvalues(V, 2);
  REQUIRE(w.levels.size() == 1);
  CHECK(w.levels[0].energy > sw.eigenvalues[0]);
  CHECK(w.levels[0].energy < sw.eigenvalues[1]);
  CHECK_THROWS_AS(ebk_levels(kHarmonic, 3, 2), ValidationError);
}

TEST_CASE("tunneling report") {
  const TunnelingReport one = tunneling_report({deep_well(8.0)}, 0);
  CHECK(one.points.size() == 1);
  CHECK_FALSE(one.slope.has_value());
  CHECK(one.points[0].theta > 0);
  CHECK_FALSE(one.points[0].above_barrier);

  const TunnelingReport mixed = tunneling_report({kQuartic, build_potential({0, 0.3, -2, 0, 1}), deep_well(8.0)}, 0);
  CHECK(mixed.points.size() == 1);
  REQUIRE(mixed.skipped.size() == 2);
  CHECK(mixed.skipped[0].first == 0);
  CHECK(mixed.skipped[1].first == 1);

  // deeper wells split less and have larger barrier actions
  const TunnelingReport fam = tunneling_report({deep_well(8.0), deep_well(16.0), deep_well(32.0)}, 0);
  REQUIRE(fam.points.size() == 3);
  REQUIRE(fam.slope.has_value());
  CHECK(fam.points[0].splitting > fam.points[1].splitting);
  CHECK(fam.points[1].splitting > fam.points[2].splitting);
  CHECK(fam.points[0].theta < fam.points[2].theta);
  CHECK(*fam.slope > 0);

  CHECK_THROWS_AS(tunneling_report({}, 0), ValidationError);
  CHECK_THROWS_AS(tunneling_report({kDW}, -1), ValidationError);
}

#include "cpo/periods.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cpo/errors.hpp"
#include "cpo/quadrature.hpp"

namespace cpo {

namespace {

constexpr double kRhoDefault = 0.8;        // clearance cosh(0.8) - 1 = 0.34 half-separations
constexpr double kRhoMin = 1e-4;           // below this a foreign branch point sits on the contour
constexpr double kContourRelTol = 1e-13;
constexpr int kMinNodes = 128;
constexpr int kMaxNodes = 1 << 18;

Cx ellipse_coordinate(Cx w, Cx center, Cx axis_half) {
  // w = c + axis_half * cosh(zeta); returns zeta with Re >= 0.
  Cx x = (w - center) / axis_half;
  Cx zeta = std::acosh(x);
  if (zeta.real() < 0) zeta = -zeta;
  return zeta;
}

struct ContourSums {
  Cx action, period;
};

// Trapezoid rule on the ellipse with sqrt continuation; returns sums and
// checks that the continued sqrt closes on itself.
ContourSums integrate_contour(const EnergyCurve& curve, const GeneratorContour& g, int n) {
  Cx p_prev = 0.0;
  Cx p_first = 0.0;
  ContourSums s{0.0, 0.0};
  for (int k = 0; k <= n; ++k) {
    const double th = 2.0 * std::numbers::pi * k / n;
    const Cx z = g.point(th);
    Cx p = std::sqrt(curve.radicand(z));
    if (k == 0) {
      p *= double(g.sheet);
      p_first = p;
    } else if (std::abs(p - p_prev) > std::abs(p + p_prev)) {
      p = -p;
    }
    p_prev = p;
    if (k == n) {
      if (std::abs(p - p_first) > 1e-6 * (std::abs(p_first) + 1e-12))
        throw NumericalError("contour_degeneracy", "continued sqrt does not close around the contour");
      break;
    }
    const Cx dz = g.tangent(th);
    s.action += p * dz;
    s.period += dz / (2.0 * p);
  }
  const double w = 2.0 * std::numbers::pi / n;
  s.action *= w;
  s.period *= w;
  return s;
}

PeriodData zero_period(const Cycle& c) { return {c, 0.0, 0.0}; }

}  // namespace

bool Cycle::trivial() const {
  return std::all_of(coords.begin(), coords.end(), [](int c) { return c == 0; });
}

bool Cycle::primitive() const {
  int g = 0;
  for (int c : coords) g = std::gcd(g, std::abs(c));
  return g == 1;
}

Cx GeneratorContour::point(double theta) const {
  const Cx center = 0.5 * (focus_a + focus_b);
  const Cx half = 0.5 * (focus_b - focus_a);
  return center + half * std::cosh(Cx(rho, theta));
}

Cx GeneratorContour::tangent(double theta) const {
  const Cx half = 0.5 * (focus_b - focus_a);
  return half * Cx(0.0, 1.0) * std::sinh(Cx(rho, theta));
}

HomologyBasis homology_basis(const EnergyCurve& curve) {
  HomologyBasis basis;
  const auto& b = curve.branch_points;
  const int g = curve.genus;
  basis.id = "adjacent-pairs/d" + std::to_string(b.size());
  if (g == 0) return basis;

  for (int k = 0; k < 2 * g; ++k) {
    const std::size_t hi = b.size() - 1 - std::size_t(k);
    const std::size_t lo = hi - 1;
    GeneratorContour gen;
    gen.cycle.coords.assign(std::size_t(2 * g), 0);
    gen.cycle.coords[std::size_t(k)] = 1;
    gen.cycle.basis_id = basis.id;
    gen.focus_a = b[lo];
    gen.focus_b = b[hi];

    const Cx center = 0.5 * (gen.focus_a + gen.focus_b);
    const Cx half = 0.5 * (gen.focus_b - gen.focus_a);
    double rho = kRhoDefault;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (j == lo || j == hi) continue;
      const double rw = ellipse_coordinate(b[j], center, half).real();
      rho = std::min(rho, 0.5 * rw);
    }
    if (rho < kRhoMin)
      throw NumericalError("contour_degeneracy",
                           "a branch point lies on the segment between the encircled pair");
    gen.rho = rho;
    for (int s = 0; s < 64; ++s) gen.samples.push_back(gen.point(2.0 * std::numbers::pi * s / 64));

    // Orientation: positive real action, else positive imaginary action.
    const ContourSums probe = integrate_contour(curve, gen, 256);
    const double scale = std::abs(probe.action);
    const bool real_dominant = std::abs(probe.action.real()) > 1e-6 * scale;
    if ((real_dominant && probe.action.real() < 0) || (!real_dominant && probe.action.imag() < 0))
      gen.sheet = -1;
    basis.generators.push_back(std::move(gen));
  }
  return basis;
}

PeriodData generator_period(const EnergyCurve& curve, const GeneratorContour& gen) {
  ContourSums prev = integrate_contour(curve, gen, kMinNodes);
  for (int n = 2 * kMinNodes; n <= kMaxNodes; n *= 2) {
    ContourSums cur = integrate_contour(curve, gen, n);
    const double da = std::abs(cur.action - prev.action);
    const double dt = std::abs(cur.period - prev.period);
    if (da <= kContourRelTol * (std::abs(cur.action) + 1e-300) + 1e-15 &&
        dt <= kContourRelTol * (std::abs(cur.period) + 1e-300) + 1e-15)
      return {gen.cycle, cur.action, cur.period};
    prev = cur;
  }
  throw NumericalError("contour_degeneracy", "contour quadrature did not converge (branch point too close)");
}

std::vector<PeriodData> period_lattice(const EnergyCurve& curve, const HomologyBasis& basis) {
  std::vector<PeriodData> out;
  for (const auto& g : basis.generators) out.push_back(generator_period(curve, g));
  return out;
}

std::vector<PeriodData> period_lattice(const EnergyCurve& curve) {
  return period_lattice(curve, homology_basis(curve));
}

PeriodData cycle_period(const EnergyCurve& curve, const HomologyBasis& basis, const Cycle& cycle) {
  if (cycle.coords.size() != basis.generators.size())
    throw ValidationError("cycle has " + std::to_string(cycle.coords.size()) +
                          " coordinates, basis has " + std::to_string(basis.generators.size()));
  if (cycle.trivial()) return zero_period(cycle);
  PeriodData out{cycle, 0.0, 0.0};
  for (std::size_t i = 0; i < cycle.coords.size(); ++i) {
    if (cycle.coords[i] == 0) continue;
    // The contour is traversed |n| times; every traversal is integrated
    // on its own so the sum is a genuine contour integral.
    const PeriodData one = generator_period(curve, basis.generators[i]);
    const int n = cycle.coords[i];
    for (int t = 0; t < std::abs(n); ++t) {
      out.action += (n > 0 ? 1.0 : -1.0) * one.action;
      out.time_period += (n > 0 ? 1.0 : -1.0) * one.time_period;
    }
  }
  return out;
}

PeriodData cycle_period(const EnergyCurve& curve, const Cycle& cycle) {
  return cycle_period(curve, homology_basis(curve), cycle);
}

std::pair<Cycle, int> primitive_decomposition(const Cycle& cycle) {
  if (cycle.trivial()) throw ValidationError("primitive decomposition of the trivial cycle");
  int r = 0;
  for (int c : cycle.coords) r = std::gcd(r, std::abs(c));
  Cycle prim = cycle;
  for (int& c : prim.coords) c /= r;
  return {prim, r};
}

std::vector<RealOrbit> real_orbits(const EnergyCurve& curve) {
  if (std::abs(curve.energy.imag()) > 0.0) return {};
  const double E = curve.energy.real();
  std::vector<double> real_roots;
  std::vector<Cx> others;
  for (Cx b : curve.branch_points) {
    if (std::abs(b.imag()) < 1e-9 * (1.0 + std::abs(b))) real_roots.push_back(b.real());
  }
  std::sort(real_roots.begin(), real_roots.end());

  std::vector<RealOrbit> out;
  const double lead = curve.potential.leading();
  for (std::size_t i = 0; i + 1 < real_roots.size(); ++i) {
    const double a = real_roots[i], b = real_roots[i + 1];
    const double mid = 0.5 * (a + b), h = 0.5 * (b - a);
    if (E - curve.potential(mid) <= 0.0) continue;

    // E - V = lead (q - a)(b - q) G(q); with q = mid + h sin(t) the square
    // root singularities at the turning points cancel against dq.
    std::vector<Cx> rest;
    bool skipped_a = false, skipped_b = false;
    for (Cx w : curve.branch_points) {
      if (!skipped_a && std::abs(w - a) < 1e-9 * (1.0 + std::abs(a))) { skipped_a = true; continue; }
      if (!skipped_b && std::abs(w - b) < 1e-9 * (1.0 + std::abs(b))) { skipped_b = true; continue; }
      rest.push_back(w);
    }
    auto lead_g = [&](double t) {
      const double q = mid + h * std::sin(t);
      Cx g = lead;
      for (Cx w : rest) g *= (q - w);
      return g.real();
    };
    const double hp = 0.5 * std::numbers::pi;
    RealOrbit orb;
    orb.left = a;
    orb.right = b;
    orb.action = 2.0 * quad::integrate(
        [&](double t) { const double c = h * std::cos(t); return c * c * std::sqrt(lead_g(t)); },
        -hp, hp, 1e-13);
    orb.time_period = quad::integrate([&](double t) { return 1.0 / std::sqrt(lead_g(t)); }, -hp, hp, 1e-13);
    out.push_back(orb);
  }
  return out;
}

RealOrbitClass real_orbit_cycle(const EnergyCurve& curve) {
  const auto orbits = real_orbits(curve);
  if (orbits.empty())
    throw NumericalError("no_real_orbit", "no classically allowed real motion at this energy");
  RealOrbitClass out;
  out.orbit = orbits.back();
  const HomologyBasis basis = homology_basis(curve);
  out.cycle.basis_id = basis.id;
  if (basis.generators.empty()) {
    out.lattice_value = {out.cycle, out.orbit.action, out.orbit.time_period};
    return out;
  }

  const auto lattice = period_lattice(curve, basis);
  const int n = int(lattice.size());
  Eigen::MatrixXd A(4, n);
  for (int j = 0; j < n; ++j) {
    A(0, j) = lattice[j].action.real();
    A(1, j) = lattice[j].action.imag();
    A(2, j) = lattice[j].time_period.real();
    A(3, j) = lattice[j].time_period.imag();
  }
  Eigen::Vector4d rhs(out.orbit.action, 0.0, out.orbit.time_period, 0.0);
  const Eigen::VectorXd x = A.completeOrthogonalDecomposition().solve(rhs);
  out.cycle.coords.resize(std::size_t(n));
  for (int j = 0; j < n; ++j) out.cycle.coords[std::size_t(j)] = int(std::lround(x[j]));

  out.lattice_value = cycle_period(curve, basis, out.cycle);
  const double scale = std::abs(out.orbit.action) + std::abs(out.orbit.time_period);
  out.match_residual = (std::abs(out.lattice_value.action - out.orbit.action) +
                        std::abs(out.lattice_value.time_period - out.orbit.time_period)) / scale;
  if (out.match_residual > 1e-6)
    throw NumericalError("basis_mismatch", "real orbit is not an integer combination of the generators");
  return out;
}

}  // namespace cpo

/*
 * periods.hpp: period lattice of the energy curve p^2 = E - V(q).
 *
 * Homology generators are closed contours around pairs of adjacent branch
 * points (sorted by real part, then imaginary part). For 2g + 2 branch
 * points b_0..b_{2g+1} the generators are, from the right:
 *
 *   omega_1 = pair (b_{2g}, b_{2g+1}),  omega_2 = pair (b_{2g-1}, b_{2g}),
 *   ...,                                omega_{2g} = pair (b_1, b_2).
 *
 * For the quartic double well this puts omega_1 around the right-well
 * turning points and omega_2 around the barrier pair. Each contour is a
 * confocal ellipse with foci at the pair; p = sqrt(E - V) is continued
 * along it by sign continuity. Orientation: the sheet is chosen so that the
 * action has positive real part, or positive imaginary part when the action
 * is purely imaginary.
 *
 *   action      S = oint p dq
 *   time period T = oint dq / (2p)       (dS/dE = T)
 */
#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "cpo/model.hpp"

namespace cpo {

struct Cycle {
  std::vector<int> coords;
  std::string basis_id;

  bool trivial() const;
  bool primitive() const;
  bool operator==(const Cycle&) const = default;
};

struct PeriodData {
  Cycle cycle;
  Cx action;
  Cx time_period;
};

// A generator realized as an explicit contour on the curve.
struct GeneratorContour {
  Cycle cycle;             // unit vector in the basis
  Cx focus_a, focus_b;     // the encircled branch-point pair
  double rho = 0.0;        // confocal ellipse parameter: z = c + h u cosh(rho + i theta)
  int sheet = 1;           // +1/-1 applied to the continued sqrt at theta = 0
  std::vector<Cx> samples; // coarse polyline of the contour (64 points)

  Cx point(double theta) const;
  Cx tangent(double theta) const;  // dz/dtheta
};

struct HomologyBasis {
  std::string id;
  std::vector<GeneratorContour> generators;
};

// 2g generators; empty for genus 0.
HomologyBasis homology_basis(const EnergyCurve& curve);

// Action and time period of a single generator, adaptive trapezoid rule.
PeriodData generator_period(const EnergyCurve& curve, const GeneratorContour& gen);

PeriodData cycle_period(const EnergyCurve& curve, const HomologyBasis& basis, const Cycle& cycle);
PeriodData cycle_period(const EnergyCurve& curve, const Cycle& cycle);

std::vector<PeriodData> period_lattice(const EnergyCurve& curve);
std::vector<PeriodData> period_lattice(const EnergyCurve& curve, const HomologyBasis& basis);

// cycle = r * primitive with r = gcd of |coords|.
std::pair<Cycle, int> primitive_decomposition(const Cycle& cycle);

// A classically allowed real oscillation between simple real turning points.
struct RealOrbit {
  double left = 0.0, right = 0.0;  // turning points
  double action = 0.0;             // 2 int sqrt(E - V) dq > 0
  double time_period = 0.0;        // int dq / sqrt(E - V) > 0
};

// All real librations at real energy E, ordered left to right.
std::vector<RealOrbit> real_orbits(const EnergyCurve& curve);

struct RealOrbitClass {
  Cycle cycle;          // empty coords for genus 0 (direct contour)
  RealOrbit orbit;      // the rightmost real libration
  PeriodData lattice_value;  // periods of `cycle` evaluated on the lattice
  double match_residual = 0.0;
};

// Identifies the homology class of the rightmost real libration by matching
// (S, T) against integer combinations of the generator periods.
RealOrbitClass real_orbit_cycle(const EnergyCurve& curve);

}  // namespace cpo

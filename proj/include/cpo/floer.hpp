/*
 * floer.hpp: Fourier-discretized loop space of the complexified phase space.
 *
 * A loop is q(eta) = sum_k q_k e^{2 pi i k eta}, p likewise, k = -N..N, with a
 * complex period T. The reparameterized reduced action is
 *
 *   S[q, p, T] = oint p dq + T int_0^1 (E - H(q, p)) d eta,   H = p^2 + V(q).
 *
 * Its critical points are closed orbits: q' = 2 T p, p' = -T V'(q), mean H = E.
 * The loop-space gradient flow of Re(i S) in the flat L^2 metric is
 *
 *   dz/dtau = i conj(dS/dz),   dT/dtau = i conj(int (E - H) d eta)   (down)
 *
 * with dS/dq = -p' - T V'(q) and dS/dp = q' - 2 T p. Nonlinear terms are
 * exact products of the truncated Fourier series (no aliasing).
 */
#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "cpo/model.hpp"
#include "cpo/periods.hpp"
#include "cpo/thimble.hpp"

namespace cpo {

struct LoopState {
  int n_modes = 0;          // N; arrays hold k = -N..N at index k + N
  std::vector<Cx> q, p;
  Cx period = 0.0;
  double energy = 0.0;

  static LoopState zeros(int n_modes, Cx period, double energy);
  Cx& qk(int k) { return q[std::size_t(k + n_modes)]; }
  Cx& pk(int k) { return p[std::size_t(k + n_modes)]; }
  Cx qk(int k) const { return q[std::size_t(k + n_modes)]; }
  Cx pk(int k) const { return p[std::size_t(k + n_modes)]; }

  // Zero-padded or truncated copy with a different mode count.
  LoopState resized(int n) const;
  // r-fold cover: mode k -> r k, T -> r T, N -> r N.
  LoopState dilated(int r) const;
  // Shift eta -> eta + shift.
  LoopState shifted(double shift) const;
  // Fraction of mode energy in |k| > 3N/4.
  double top_quartile_fraction() const;
  // Values of q and p on a uniform grid of m points.
  std::vector<Cx> q_values(int m) const;
  std::vector<Cx> p_values(int m) const;
};

// Reparameterized reduced action. Throws resolution error when the
// top-quartile mode fraction exceeds 1e-6.
Cx action(const Potential& V, const LoopState& s);

// L^2 norm of (q' - 2 T p, p' + T V'(q)) over the retained modes together
// with mean(H) - E.
double critical_residual(const Potential& V, const LoopState& s);

// Norm of the down-flow velocity (equivalently of the gradient of S).
double flow_speed(const Potential& V, const LoopState& s);

// Seeds.
LoopState circle_seed(double center, double q_amplitude, double p_amplitude, Cx period, double energy, int n_modes);
// Integrates Hamilton's equations along the complex time ray t = eta T from
// the turning point (q_turn, 0), eta in [0, 1], and Fourier-analyzes the result.
LoopState trajectory_seed(const Potential& V, double energy, Cx q_turn, Cx period, int n_modes);

struct RefineOptions {
  double tol = 1e-10;
  int max_iterations = 50;
  int max_modes = 256;
  double action_tol = 1e-9;  // mode doubling stops once the action settles
  bool identify_class = true;
};

struct RefinedOrbit {
  LoopState state;
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;
  Cx gauge_value = 0.0;  // q_1 - q_{-1}, the fixed time-translation gauge
  double transverse_modulus = 0.0;  // |q_1| + |q_{-1}|, reported parameter
  std::optional<Cycle> cycle;      // homology class matched against the period lattice
  double match_residual = 0.0;
  Cx action = 0.0;
};

// Newton (least squares) on the discretized critical-point equations plus
// the gauge q_1 - q_{-1} = const; the mode count is doubled until the action
// changes by less than action_tol.
RefinedOrbit refine_orbit(const Potential& V, const LoopState& seed, const RefineOptions& opt = {});

// Integer combination of period-lattice generators matching (S, T).
struct ClassMatch {
  Cycle cycle;
  PeriodData lattice_value;
  double residual = 0.0;
};
ClassMatch match_class(const EnergyCurve& curve, Cx action, Cx period);

struct FlowSample {
  double tau;
  double re_f;  // Re(i S) = -Im S, the Morse function
  double im_f;  // Im(i S) = Re S, conserved
};

struct FlowTrajectory {
  std::vector<std::pair<double, LoopState>> states;
  std::vector<FlowSample> morse_series;
};

FlowTrajectory integrate_flow(const Potential& V, const LoopState& start, double tau_span, FlowDirection dir,
                              double tol = 1e-10);

struct GaussianAmplitude {
  Cx amplitude;        // |T_p|/(2 pi) * ratio^{-1/2} * exp(-i pi r mu / 2), one-loop
  Cx det_ratio;        // det'(orbit) / det'(harmonic reference), r-fold
  Cx log_det_ratio;    // branch-tracked log of det_ratio (fixes the square root)
  int maslov = 0;      // turning points per primitive period
  double zero_mode = 0.0;       // |smallest eigenvalue| / scale of the removed mode
  double next_smallest = 0.0;   // |next eigenvalue| / scale (must be clearly nonzero)
};

// One-loop amplitude of the r-fold cover of a converged orbit. The r-fold
// second variation is block diagonal over Floquet residues mod r; with the
// momentum variation eliminated each block is a Hill-type matrix in q
// (bordered by the period variation for the untwisted block). Blocks are
// diagonalized and paired eigenvalue by eigenvalue with the harmonic
// reference orbit at the same E and N; the smallest eigenvalue of the
// untwisted block (the time-translation mode) is dropped on both sides.
GaussianAmplitude gaussian_amplitude(const Potential& V, const LoopState& orbit, int r);
// Amplitudes for r = 1..r_max, sharing the Floquet blocks.
std::vector<GaussianAmplitude> gaussian_amplitudes(const Potential& V, const LoopState& orbit, int r_max);

}  // namespace cpo

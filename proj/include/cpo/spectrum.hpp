/*
 * spectrum.hpp: exact quantum reference for H = -d^2/dq^2 + V(q).
 *
 * Levels come from a sinc discrete-variable representation on a uniform
 * grid, refined until successive level sets agree to the requested
 * tolerance. The box is sized from the WKB decay of the highest level.
 */
#pragma once

#include <complex>
#include <span>
#include <vector>

#include "cpo/model.hpp"

namespace cpo {

struct Spectrum {
  std::vector<double> eigenvalues;
  std::vector<double> error_estimates;  // per level
  Potential potential;
  double box_left = 0.0, box_right = 0.0;
  int grid_points = 0;                  // finest grid used
};

Spectrum eigenvalues(const Potential& potential, int count, double tol = 1e-9);

std::vector<double> smoothed_density(const Spectrum& spec, double sigma, std::span<const double> grid);

struct TraceValue {
  Cx value;
  double last_term_magnitude = 0.0;  // |exp(-i E_max t)|, a truncation indicator
};

// Sum_n exp(-i E_n t); Im t must be <= 0.
TraceValue trace_U(const Spectrum& spec, Cx t);

struct FourierCheck {
  std::vector<double> fourier;   // (1/2pi) int dt e^{iEt} e^{-sigma^2 t^2/2} Tr U(t)
  std::vector<double> direct;    // smoothed_density
  double max_relative_deviation = 0.0;  // relative to max |direct|
  double t_max = 0.0;
  bool converged = true;
};

FourierCheck fourier_density_check(const Spectrum& spec, double sigma, std::span<const double> grid);

// Gamma(E) = (1/2pi) sum over real librations of the time period.
double phase_space_volume(const Potential& potential, double E);

}  // namespace cpo

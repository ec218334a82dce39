#include "cpo/spectrum.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>

#include "cpo/errors.hpp"
#include "cpo/periods.hpp"
#include "cpo/quadrature.hpp"

namespace cpo {

namespace {

constexpr double kDecayExponent = 20.0;  // int sqrt(V - E) dq beyond the turning point
constexpr int kMaxGrid = 6000;

// Classical phase-space area / (2 pi) below E, by direct quadrature of the
// allowed region; used only to size the box.
double weyl_count(const Potential& V, double E, double lo, double hi) {
  const int n = 4000;
  const double h = (hi - lo) / n;
  double area = 0.0;
  for (int i = 0; i < n; ++i) {
    const double q = lo + (i + 0.5) * h;
    area += std::sqrt(std::max(0.0, E - V(q)));
  }
  return 2.0 * area * h / (2.0 * std::numbers::pi);
}

double outer_turning_point(const Potential& V, double E, double start, double dir) {
  double q = start;
  double step = 0.1;
  while (V(q) < E) q += dir * step, step *= 1.2;
  double a = q - dir * step / 1.2, b = q;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (a + b);
    (V(m) < E ? a : b) = m;
  }
  return 0.5 * (a + b);
}

double decay_edge(const Potential& V, double E, double turning, double dir) {
  double q = turning, acc = 0.0;
  const double dq = 1e-3 * (1.0 + std::abs(turning));
  while (acc < kDecayExponent) {
    q += dir * dq;
    acc += std::sqrt(std::max(0.0, V(q) - E)) * dq;
  }
  return q;
}

// Sinc-DVR (uniform grid, infinite-grid kinetic matrix restricted to the
// box) for -d^2/dq^2 + V. Converges exponentially once h resolves the
// shortest local wavelength.
std::vector<double> dvr_levels(const Potential& V, double left, double right, double h, int count) {
  const int m = int(std::floor((right - left) / h)) + 1;
  if (m > kMaxGrid) throw NumericalError("resolution", "eigenvalues did not converge within the grid budget");
  Eigen::MatrixXd H(m, m);
  const double h2 = h * h;
  for (int i = 0; i < m; ++i) {
    H(i, i) = std::numbers::pi * std::numbers::pi / (3.0 * h2) + V(left + i * h);
    for (int j = i + 1; j < m; ++j) {
      const double d = double(j - i);
      const double t = ((j - i) % 2 == 0 ? 2.0 : -2.0) / (d * d * h2);
      H(i, j) = H(j, i) = t;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(H, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("resolution", "symmetric eigensolver failed");
  return std::vector<double>(solver.eigenvalues().data(), solver.eigenvalues().data() + std::min(count, m));
}

}  // namespace

Spectrum eigenvalues(const Potential& potential, int count, double tol) {
  if (count < 0) throw ValidationError("eigenvalues: count must be nonnegative");
  if (!(tol > 0.0)) throw ValidationError("eigenvalues: tolerance must be positive");
  Spectrum spec{{}, {}, potential};
  if (count == 0) return spec;

  // Energy above the requested levels from the Weyl estimate.
  const double center = potential.argmin();
  double e_max = potential.min_value() + 1.0;
  for (;;) {
    const double l = outer_turning_point(potential, e_max, center, -1.0);
    const double r = outer_turning_point(potential, e_max, center, +1.0);
    if (weyl_count(potential, e_max, l, r) >= count + 2) break;
    e_max = potential.min_value() + 2.0 * (e_max - potential.min_value());
  }
  spec.box_left = decay_edge(potential, e_max, outer_turning_point(potential, e_max, center, -1.0), -1.0);
  spec.box_right = decay_edge(potential, e_max, outer_turning_point(potential, e_max, center, +1.0), +1.0);
  const double width = spec.box_right - spec.box_left;

  // Start at two points per shortest classical wavelength and refine by
  // 1.5x until successive level sets agree.
  const double kmax = std::sqrt(e_max - potential.min_value());
  double h = std::min(0.25, std::numbers::pi / (2.0 * kmax));
  std::vector<double> previous = dvr_levels(potential, spec.box_left, spec.box_right, h, count);
  for (;;) {
    h /= 1.5;
    std::vector<double> current = dvr_levels(potential, spec.box_left, spec.box_right, h, count);
    if (int(current.size()) < count) continue;
    std::vector<double> err(count);
    bool ok = int(previous.size()) == count;
    for (int n = 0; n < count && ok; ++n) {
      err[n] = std::abs(current[n] - previous[n]);
      ok = err[n] <= tol;
    }
    if (ok) {
      spec.eigenvalues = current;
      spec.error_estimates = err;
      spec.grid_points = int(std::floor(width / h)) + 1;
      break;
    }
    previous = std::move(current);
  }
  for (int n = 1; n < count; ++n)
    if (!(spec.eigenvalues[n] > spec.eigenvalues[n - 1]))
      throw NumericalError("resolution", "levels are not strictly increasing; tolerance too loose");
  return spec;
}

std::vector<double> smoothed_density(const Spectrum& spec, double sigma, std::span<const double> grid) {
  if (!(sigma > 0.0)) throw ValidationError("smoothed_density: sigma must be positive");
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (double En : spec.eigenvalues) {
      const double x = (grid[i] - En) / sigma;
      out[i] += norm * std::exp(-0.5 * x * x);
    }
  return out;
}

TraceValue trace_U(const Spectrum& spec, Cx t) {
  if (t.imag() > 0.0) throw NumericalError("domain", "trace_U: Im t > 0 makes the level sum grow");
  TraceValue tv{0.0, 0.0};
  for (double En : spec.eigenvalues) tv.value += std::exp(Cx(0.0, -En) * t);
  if (!spec.eigenvalues.empty()) tv.last_term_magnitude = std::exp(t.imag() * spec.eigenvalues.back());
  return tv;
}

FourierCheck fourier_density_check(const Spectrum& spec, double sigma, std::span<const double> grid) {
  FourierCheck fc;
  fc.direct = smoothed_density(spec, sigma, grid);
  fc.fourier.assign(grid.size(), 0.0);
  fc.t_max = 8.0 / sigma;
  if (spec.eigenvalues.empty()) return fc;

  // Gauss-Legendre panels; each panel spans at most ~2 radians of the fastest phase.
  double omega = 0.0;
  for (double E : grid) omega = std::max(omega, std::abs(E));
  for (double En : spec.eigenvalues) omega = std::max(omega, std::abs(En));
  omega *= 2.0;
  const int panels = std::max(64, int(std::ceil(2.0 * fc.t_max * omega / 2.0)));
  using GL = boost::math::quadrature::gauss<double, 20>;
  const auto& x = GL::abscissa();
  const auto& w = GL::weights();
  const double half = fc.t_max / panels;

  std::vector<double> nodes, weights;
  for (int p = 0; p < panels; ++p) {
    const double c = -fc.t_max + (2 * p + 1) * half;
    for (std::size_t j = 0; j < x.size(); ++j) {
      // gauss<> stores only nonnegative abscissae.
      nodes.push_back(c + half * x[j]);
      weights.push_back(half * w[j]);
      if (x[j] != 0.0) {
        nodes.push_back(c - half * x[j]);
        weights.push_back(half * w[j]);
      }
    }
  }
  std::vector<Cx> damped(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k)
    damped[k] = weights[k] * std::exp(-0.5 * sigma * sigma * nodes[k] * nodes[k]) * trace_U(spec, nodes[k]).value;

  double scale = 0.0;
  for (double d : fc.direct) scale = std::max(scale, std::abs(d));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Cx acc = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) acc += std::exp(Cx(0.0, grid[i] * nodes[k])) * damped[k];
    fc.fourier[i] = acc.real() / (2.0 * std::numbers::pi);
    if (std::abs(acc.imag()) / (2.0 * std::numbers::pi) > 1e-8 * (scale + 1.0)) fc.converged = false;
    if (scale > 0.0)
      fc.max_relative_deviation = std::max(fc.max_relative_deviation, std::abs(fc.fourier[i] - fc.direct[i]) / scale);
  }
  return fc;
}

double phase_space_volume(const Potential& potential, double E) {
  if (!(E > potential.min_value())) throw NumericalError("no_volume", "energy at or below the potential minimum");
  const auto c = curve(potential, E);
  double gamma = 0.0;
  for (const auto& orb : real_orbits(c)) gamma += orb.time_period;
  return gamma / (2.0 * std::numbers::pi);
}

}  // namespace cpo

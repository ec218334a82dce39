/*
 * thimble.hpp: Picard-Lefschetz decomposition of int_R exp(f(z)) dz.
 *
 * f is a polynomial, purely imaginary on the real axis. Re f is the Morse
 * function; its flat-metric gradient flow
 *
 *     dz/dtau = -conj(f'(z))   (down)      dz/dtau = +conj(f'(z))   (up)
 *
 * conserves Im f. The thimble J through a critical point z_a is the union
 * of the two descent curves leaving z_a along the Hessian descent direction
 * v (f''(z_a) v^2 < 0); the dual thimble K leaves along i v. With J oriented
 * along v and K along i v, the intersection number with the real line is
 * the signed crossing count of K, and
 *
 *     int_R e^f dz = sum_a n_a e^{f(z_a)} int_J e^{f - f(z_a)} dz.
 *
 * The concrete engine is one complex dimension.
 */
#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace cpo {

using Cx = std::complex<double>;

class ExponentFunction {
 public:
  // coeffs c_0..c_d of f(z) = sum c_k z^k. When `imaginary_on_real` is set,
  // |Re f(x)| must vanish (1e-12 relative) on sampled real x.
  explicit ExponentFunction(std::vector<Cx> coeffs, bool imaginary_on_real = true);

  int degree() const noexcept { return int(coeffs_.size()) - 1; }
  std::span<const Cx> coeffs() const noexcept { return coeffs_; }
  bool imaginary_on_real() const noexcept { return imaginary_on_real_; }

  Cx operator()(Cx z) const;
  Cx d1(Cx z) const;
  Cx d2(Cx z) const;

  // conj(f(conj z)): the exponent whose real-line integral is the conjugate.
  ExponentFunction conjugate() const;

 private:
  std::vector<Cx> coeffs_, d1_, d2_;
  bool imaginary_on_real_;
};

struct CriticalPoint {
  Cx location;
  Cx value;
  Cx hessian;
  int morse_index = 1;
};

// Roots of f'. Throws AmbiguousError("caustic") on a degenerate point.
std::vector<CriticalPoint> find_critical_points(const ExponentFunction& f);

enum class FlowDirection { down, up };

struct FlowPath {
  enum class Stop { tau_max, converged, escaped };
  std::vector<double> tau;
  std::vector<Cx> points;
  Stop stop = Stop::tau_max;
};

// Adaptive gradient flow in flow time. Stops at tau_max, on |f'| < 1e-10, or
// when |z| exceeds `escape_radius`. Step underflow throws flow_stall.
FlowPath flow(const ExponentFunction& f, Cx start, FlowDirection dir, double tau_max, double escape_radius);

// 10 * (max |critical point| + 1).
double escape_radius(const ExponentFunction& f);

struct Thimble {
  CriticalPoint critical;
  Cx direction;                  // unit descent direction v; J is oriented along v
  std::vector<Cx> samples;       // J ordered by signed arclength through z_a
  std::vector<Cx> dual_samples;  // K ordered by signed arclength (direction i v)
  int intersection_number = 0;
  std::string intersection_rule;  // "real-critical-point", "re-f-nonnegative", "crossing-count"
  int end_sectors[2] = {-1, -1};  // asymptotic descent sectors of the -v and +v ends
  bool on_stokes_line = false;    // J ends on another critical point (only allowed when n = 0)
};

// Builds J and K and decides the intersection number (orientation of J is
// flipped if needed so that the count is nonnegative).
Thimble build_thimble(const ExponentFunction& f, const CriticalPoint& crit);

int intersection_number(const ExponentFunction& f, const Thimble& thimble);

// e^{f(z_a)} int_J e^{Delta f} dz along the oriented thimble.
Cx thimble_integral(const ExponentFunction& f, const Thimble& thimble);

struct ThimbleTerm {
  Thimble thimble;
  Cx integral;
};

struct ThimbleSum {
  std::vector<ThimbleTerm> terms;
  Cx total;
};

ThimbleSum thimble_sum(const ExponentFunction& f);

struct OracleResult {
  Cx value;
  double error_estimate = 0.0;
  Cx damped[3];  // values at epsilon = 1e-2, 1e-3, 1e-4
};

// int_R e^{f(x)} e^{-eps x^2} dx for eps in {1e-2, 1e-3, 1e-4}, extrapolated
// to eps -> 0. Each damped integral is a Gauss-Legendre quadrature on a
// finite window plus integration-by-parts tails.
OracleResult oracle_integral(const ExponentFunction& f);

// Index k of the asymptotic descent direction (pi - arg c_d + 2 pi k) / d
// closest to arg z.
int descent_sector(const ExponentFunction& f, Cx z);

}  // namespace cpo

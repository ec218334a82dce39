/*
 * traceformula.hpp: semiclassical and quantum trace formulas in 1D.
 *
 * Semiclassical density (one class per real libration p, weight T_p/2pi):
 *
 *   d(E) = Gamma(E) + sum_p sum_{r>=1} 2 (T_p/2pi) cos(r (S_p - pi mu_p/2)) e^{-(r T_p sigma)^2/2}
 *
 * Quantum density with one-loop amplitudes A_{rp} and intersection numbers n:
 *
 *   d(E) = Gamma(E) + sum_classes sum_r 2 Re(n A_{rp} e^{i r S_p}) e^{-(r |T_p| sigma)^2/2}
 *
 * Complex actions carry their e^{-r Im S_p} weight through e^{i r S_p}.
 */
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpo/floer.hpp"
#include "cpo/model.hpp"
#include "cpo/periods.hpp"

namespace cpo {

enum class Provenance { semiclassical, one_loop_quantum };
const char* to_string(Provenance p);

struct TraceTerm {
  Cycle orbit_class;     // primitive class; empty coords for genus 0 or a libration label
  std::string label;     // human-readable orbit id
  int repetition = 1;
  Cx action = 0.0;       // S_p of the primitive orbit
  Cx time_period = 0.0;  // T_p of the primitive orbit
  Cx amplitude = 0.0;
  int maslov = 2;
  int intersection = 1;
  Provenance provenance = Provenance::semiclassical;
  double energy = 0.0;
  Cx det_ratio = 1.0;            // one-loop only: det' ratio against the harmonic reference
  Cx semiclassical_ratio = 0.0;  // one-loop only: (T_p/2pi) e^{-i pi r mu/2} / A_{rp}
};

struct MaslovResult {
  int index = 0;
  bool flagged = false;  // complex cycle, or no real turning point traversed
  std::string note;
};

MaslovResult maslov_index(const EnergyCurve& curve, const Cycle& cycle);

struct SkippedPoint {
  double energy;
  std::string reason;
};

struct DensityResult {
  std::vector<double> energies;  // grid points actually evaluated
  std::vector<double> density;
  std::vector<SkippedPoint> skipped;
  std::vector<std::string> notes;
};

// Semiclassical terms at a single energy (all real librations, r = 1..r_max).
std::vector<TraceTerm> semiclassical_terms(const Potential& V, double E, int r_max);

DensityResult semiclassical_density(const Potential& V, const std::vector<double>& grid, int r_max, double sigma);

// A class in the quantum sum. `real_librations` selects every real
// libration at E (one class per well); otherwise `cycle` names a primitive
// homology class. `intersection` overrides the default rule.
struct ClassSpec {
  bool real_librations = false;
  Cycle cycle;
  std::optional<int> intersection;

  static ClassSpec real() { return ClassSpec{true, {}, std::nullopt}; }
  static ClassSpec of(Cycle c, std::optional<int> n = std::nullopt) { return ClassSpec{false, std::move(c), n}; }
};

// Default rule: 1 for real actions, 0 for Im S < 0, 1 for Im S > 0 (all
// overridable). Requesting n != 0 for Im S < 0 throws ValidationError.
int intersection_rule(Cx action, std::optional<int> override_n);

// One-loop quantum terms at a single energy, amplitudes evaluated exactly.
std::vector<TraceTerm> quantum_terms(const Potential& V, double E, const std::vector<ClassSpec>& classes, int r_max,
                                     double sigma);

struct QuantumOptions {
  int amplitude_nodes = 9;  // energies per continuous run where det ratios are evaluated
  int n_modes = 32;
};

// The action and period are exact at every grid energy; the one-loop
// determinant ratio is evaluated at amplitude_nodes energies per run of
// grid points with the same orbit structure and interpolated linearly in
// log between them.
DensityResult quantum_density(const Potential& V, const std::vector<double>& grid,
                              const std::vector<ClassSpec>& classes, int r_max, double sigma,
                              const QuantumOptions& opt = {});

struct EbkLevel {
  int n;
  double energy;
};

struct EbkResult {
  std::vector<EbkLevel> levels;
  std::vector<std::string> notes;
};

// Solves S(E) = 2 pi (n + 1/2) for n = n_min..n_max, S the action of the
// rightmost real libration, by bisection.
EbkResult ebk_levels(const Potential& V, int n_min, int n_max);

struct TunnelingPoint {
  std::size_t member;
  double splitting;
  double mean_energy;
  double theta;     // Im S of the tunneling cycle at mean_energy
  double residual;  // ln(splitting) minus the fitted line (0 without a fit)
  bool above_barrier;
};

struct TunnelingReport {
  std::vector<TunnelingPoint> points;
  std::vector<std::pair<std::size_t, std::string>> skipped;
  std::optional<double> slope;  // d ln(splitting) / d(-theta)
  std::optional<double> intercept;
};

TunnelingReport tunneling_report(const std::vector<Potential>& family, int doublet_index);

// Integral of Gamma from min V to E (smooth level count): the phase-space
// area enclosed by the real energy curve over 2 pi.
double smooth_level_count(const Potential& V, double E);

}  // namespace cpo

/*
 * errors.hpp: exception hierarchy shared by all cpo modules.
 *
 * Every failure mode carries a stable code string so front ends can map it
 * to exit codes and machine-readable reports.
 */
#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpo {

class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Bad input: wrong degree, sign, empty lists, nonpositive tolerances.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error("validation", what) {}
};

// Two or more branch points collided (energy at a critical value of V).
class DegenerateEnergyError : public Error {
 public:
  DegenerateEnergyError(const std::string& what, std::vector<std::complex<double>> cluster)
      : Error("degenerate_energy", what), cluster_(std::move(cluster)) {}
  const std::vector<std::complex<double>>& cluster() const noexcept { return cluster_; }

 private:
  std::vector<std::complex<double>> cluster_;
};

// Generic numerical failure with a specific code (contour degeneracy,
// flow stall, no convergence, truncation, resolution, ...).
class NumericalError : public Error {
 public:
  NumericalError(std::string code, const std::string& what) : Error(std::move(code), what) {}
};

class NoConvergenceError : public NumericalError {
 public:
  NoConvergenceError(const std::string& what, std::vector<double> history)
      : NumericalError("no_convergence", what), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

// Results that exist but cannot be decided without guessing: degenerate
// critical points (caustics) and tangential thimble intersections.
class AmbiguousError : public Error {
 public:
  AmbiguousError(std::string code, const std::string& what) : Error(std::move(code), what) {}
};

}  // namespace cpo

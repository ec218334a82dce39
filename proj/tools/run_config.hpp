// Run configuration for the cpo command-line tool.
#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "cpo/traceformula.hpp"

namespace cpo::cli {

struct RunConfig {
  std::vector<double> potential;  // V(q) = sum c_k q^k
  double e_min = 0.0, e_max = 10.0;
  int e_count = 201;
  double sigma = 0.5;
  int r_max = 20;
  int n_modes = 32;
  std::vector<ClassSpec> classes{ClassSpec::real()};
  std::string output_dir = ".";
  int threads = 1;
  bool verbose = false;

  // [spectrum]
  int level_count = 30;
  double level_tol = 1e-9;

  // [trace]
  bool quantum = true;
  int amplitude_nodes = 9;
  int ebk_max = 10;
  std::optional<double> term_energy;  // energy at which trace_terms.json is evaluated

  // [thimble]
  std::vector<std::complex<double>> exponent;

  // [flow]
  double flow_energy = 0.0;
  std::vector<int> flow_cycle;  // empty: rightmost real libration
  double flow_tau = 1.0;
  bool flow_down = true;
  double flow_perturbation = 1e-2;

  std::vector<double> grid() const;
};

// Parses an INI file (sections, key = value). Unknown keys are rejected.
RunConfig load_config(const std::string& path);

// Validates ranges; throws ValidationError.
void validate(const RunConfig& cfg);

// "1 -2 0.5 1/3" -> numbers; fractions allowed.
std::vector<double> parse_numbers(const std::string& text);

// "real; 0 1 : 1; 1 0" -> class specs.
std::vector<ClassSpec> parse_classes(const std::string& text);

}  // namespace cpo::cli

// cpo: command-line front end (spectrum, periods, thimble, flow, trace, compare).
#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fmt/format.h>
#include <fmt/os.h>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <thread>

#include "cpo/errors.hpp"
#include "cpo/floer.hpp"
#include "cpo/model.hpp"
#include "cpo/periods.hpp"
#include "cpo/spectrum.hpp"
#include "cpo/thimble.hpp"
#include "cpo/traceformula.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using cpo::Cx;

namespace {

constexpr int kSchemaVersion = 1;
constexpr const char* kOutDirEnv = "CPO_OUT_DIR";

struct Context {
  cpo::cli::RunConfig cfg;
  fs::path out;
  json warnings = json::array();
  std::string stage = "cli";

  void warn(const std::string& code, const std::string& message, json context = json::object()) {
    warnings.push_back(json{{"code", code}, {"message", message}, {"context", std::move(context)}});
    if (cfg.verbose) std::cerr << "warning [" << code << "]: " << message << "\n";
  }
  void log(const std::string& msg) const {
    if (cfg.verbose) std::cerr << msg << "\n";
  }
};

json cx(Cx z) { return json::array({z.real(), z.imag()}); }

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw cpo::ValidationError("cannot write " + path.string());
  f << j.dump(2) << "\n";
}

std::string g17(double x) { return fmt::format("{:.17g}", x); }

void write_warnings(Context& ctx) {
  write_json(ctx.out / "warnings.json", ctx.warnings);
}

// Ordered parallel map over indices; results land in their own slots.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& f) {
  const std::size_t t = std::max<std::size_t>(1, std::min<std::size_t>(std::size_t(threads), n));
  if (t == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < t; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += t) f(i);
    });
}

cpo::Potential potential(Context& ctx) {
  if (ctx.cfg.potential.empty()) throw cpo::ValidationError("potential.coefficients is required");
  ctx.stage = "model";
  return cpo::build_potential(ctx.cfg.potential);
}

std::string coords_text(const std::vector<int>& c) {
  if (c.empty()) return "direct";
  std::string s;
  for (std::size_t i = 0; i < c.size(); ++i) s += (i ? " " : "") + std::to_string(c[i]);
  return s;
}

cpo::Spectrum reference_spectrum(Context& ctx, const cpo::Potential& V) {
  ctx.stage = "spectrum";
  const double top = ctx.cfg.e_max + 10.0 * ctx.cfg.sigma;
  const int count = int(std::ceil(cpo::smooth_level_count(V, top))) + 10;
  ctx.log(fmt::format("reference spectrum: {} levels", count));
  return cpo::eigenvalues(V, count, ctx.cfg.level_tol);
}

// --- spectrum ---------------------------------------------------------------

void cmd_spectrum(Context& ctx) {
  const cpo::Potential V = potential(ctx);
  ctx.stage = "spectrum";
  const cpo::Spectrum s = ctx.cfg.level_count > 0 ? cpo::eigenvalues(V, ctx.cfg.level_count, ctx.cfg.level_tol)
                                                   : cpo::Spectrum{{}, {}, V, 0.0, 0.0, 0};
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "spectrum";
  j["potential"] = V.coeffs();
  j["tolerance"] = ctx.cfg.level_tol;
  j["eigenvalues"] = s.eigenvalues;
  j["error_estimates"] = s.error_estimates;
  j["box"] = json::array({s.box_left, s.box_right});
  j["grid_points"] = s.grid_points;
  write_json(ctx.out / "spectrum.json", j);

  const auto grid = ctx.cfg.grid();
  const auto d = cpo::smoothed_density(s, ctx.cfg.sigma, grid);
  auto f = fmt::output_file((ctx.out / "density.csv").string());
  f.print("E,d_exact\n");
  for (std::size_t i = 0; i < grid.size(); ++i) f.print("{},{}\n", g17(grid[i]), g17(d[i]));
}

// --- periods ----------------------------------------------------------------

void cmd_periods(Context& ctx) {
  const cpo::Potential V = potential(ctx);
  ctx.stage = "periods";
  const auto grid = ctx.cfg.grid();
  struct Row {
    std::string cycle, kind;
    Cx S, T;
  };
  std::vector<std::vector<Row>> rows(grid.size());
  std::vector<std::optional<std::pair<std::string, std::string>>> failures(grid.size());
  parallel_for(grid.size(), ctx.cfg.threads, [&](std::size_t i) {
    try {
      const cpo::EnergyCurve c = cpo::curve(V, grid[i]);
      const cpo::HomologyBasis basis = cpo::homology_basis(c);
      for (const auto& pd : cpo::period_lattice(c, basis))
        rows[i].push_back({coords_text(pd.cycle.coords), "generator", pd.action, pd.time_period});
      if (!cpo::real_orbits(c).empty()) {
        const cpo::RealOrbitClass rc = cpo::real_orbit_cycle(c);
        rows[i].push_back({coords_text(rc.cycle.coords), "real_orbit", rc.orbit.action, rc.orbit.time_period});
      }
    } catch (const cpo::Error& e) {
      rows[i].clear();
      failures[i] = std::make_pair(e.code(), std::string(e.what()));
    }
  });
  auto f = fmt::output_file((ctx.out / "periods.csv").string());
  f.print("E,cycle,kind,re_S,im_S,re_T,im_T\n");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (failures[i]) {
      ctx.warn(failures[i]->first, failures[i]->second, json{{"E", grid[i]}});
      continue;
    }
    for (const Row& r : rows[i])
      f.print("{},{},{},{},{},{},{}\n", g17(grid[i]), r.cycle, r.kind, g17(r.S.real()), g17(r.S.imag()),
              g17(r.T.real()), g17(r.T.imag()));
  }
}

// --- thimble ----------------------------------------------------------------

void cmd_thimble(Context& ctx) {
  if (ctx.cfg.exponent.empty()) throw cpo::ValidationError("thimble.exponent_re / exponent_im are required");
  ctx.stage = "thimble";
  const cpo::ExponentFunction f(ctx.cfg.exponent);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "thimble";
  j["exponent"] = json::array();
  for (Cx c : f.coeffs()) j["exponent"].push_back(cx(c));
  try {
    const cpo::ThimbleSum sum = cpo::thimble_sum(f);
    const cpo::OracleResult oracle = cpo::oracle_integral(f);
    j["ambiguous"] = false;
    j["critical_points"] = json::array();
    j["n_alpha"] = json::array();
    for (const auto& t : sum.terms) {
      j["critical_points"].push_back(json{{"location", cx(t.thimble.critical.location)},
                                          {"value", cx(t.thimble.critical.value)},
                                          {"hessian", cx(t.thimble.critical.hessian)},
                                          {"intersection_number", t.thimble.intersection_number},
                                          {"intersection_rule", t.thimble.intersection_rule},
                                          {"on_stokes_line", t.thimble.on_stokes_line},
                                          {"integral", cx(t.integral)}});
      j["n_alpha"].push_back(t.thimble.intersection_number);
    }
    j["thimble_sum"] = cx(sum.total);
    j["oracle"] = json{{"value", cx(oracle.value)}, {"error_estimate", oracle.error_estimate}};
    j["deviation"] = std::abs(sum.total - oracle.value);
    write_json(ctx.out / "thimble_report.json", j);
  } catch (const cpo::AmbiguousError& e) {
    j["ambiguous"] = true;
    j["error"] = json{{"code", e.code()}, {"message", e.what()}};
    write_json(ctx.out / "thimble_report.json", j);
    throw;
  }
}

// --- flow -------------------------------------------------------------------

void cmd_flow(Context& ctx) {
  const cpo::Potential V = potential(ctx);
  ctx.stage = "floer";
  const double E = ctx.cfg.flow_energy;
  const cpo::EnergyCurve c = cpo::curve(V, E);
  Cx q_turn, T;
  if (ctx.cfg.flow_cycle.empty()) {
    const auto orbits = cpo::real_orbits(c);
    if (orbits.empty()) throw cpo::ValidationError("flow: no real libration at flow.energy");
    q_turn = orbits.back().right;
    T = orbits.back().time_period;
  } else {
    const cpo::HomologyBasis basis = cpo::homology_basis(c);
    if (ctx.cfg.flow_cycle.size() != basis.generators.size())
      throw cpo::ValidationError("flow.cycle dimension does not match the homology basis");
    int nonzero = 0;
    std::size_t which = 0;
    for (std::size_t i = 0; i < ctx.cfg.flow_cycle.size(); ++i)
      if (ctx.cfg.flow_cycle[i] != 0) ++nonzero, which = i;
    if (nonzero != 1 || std::abs(ctx.cfg.flow_cycle[which]) != 1)
      throw cpo::ValidationError("flow.cycle must be a single generator (+-1)");
    const auto& g = basis.generators[which];
    q_turn = ctx.cfg.flow_cycle[which] > 0 ? g.focus_b : g.focus_a;
    cpo::Cycle cyc{ctx.cfg.flow_cycle, basis.id};
    T = cpo::cycle_period(c, basis, cyc).time_period;
  }
  const cpo::LoopState seed = cpo::trajectory_seed(V, E, q_turn, T, ctx.cfg.n_modes / 2);
  const cpo::RefinedOrbit orbit = cpo::refine_orbit(V, seed);
  cpo::LoopState start = orbit.state;
  // time-reversal symmetric, non-gauge perturbation in mode 2
  start.qk(2) += ctx.cfg.flow_perturbation;
  start.qk(-2) += ctx.cfg.flow_perturbation;
  const auto traj = cpo::integrate_flow(V, start, ctx.cfg.flow_tau,
                                        ctx.cfg.flow_down ? cpo::FlowDirection::down : cpo::FlowDirection::up);
  double max_increase = 0.0, drift = 0.0;
  const auto& ms = traj.morse_series;
  for (std::size_t i = 1; i < ms.size(); ++i) {
    const double inc = ctx.cfg.flow_down ? ms[i].re_f - ms[i - 1].re_f : ms[i - 1].re_f - ms[i].re_f;
    max_increase = std::max(max_increase, inc);
    drift = std::max(drift, std::abs(ms[i].im_f - ms[0].im_f));
  }
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "flow";
  j["orbit"] = json{{"energy", E},
                    {"action", cx(orbit.action)},
                    {"period", cx(orbit.state.period)},
                    {"residual", orbit.residual},
                    {"modes", orbit.state.n_modes},
                    {"cycle", orbit.cycle ? json(orbit.cycle->coords) : json(nullptr)},
                    {"transverse_modulus", orbit.transverse_modulus}};
  j["direction"] = ctx.cfg.flow_down ? "down" : "up";
  j["tau"] = ctx.cfg.flow_tau;
  j["perturbation"] = ctx.cfg.flow_perturbation;
  j["steps"] = ms.size() - 1;
  j["re_f_start"] = ms.front().re_f;
  j["re_f_end"] = ms.back().re_f;
  j["im_f_drift"] = drift;
  j["max_wrong_way_step"] = max_increase;
  write_json(ctx.out / "flow_report.json", j);
  auto f = fmt::output_file((ctx.out / "flow.csv").string());
  f.print("tau,re_f,im_f\n");
  for (const auto& s : ms) f.print("{},{},{}\n", g17(s.tau), g17(s.re_f), g17(s.im_f));
}

// --- trace / compare --------------------------------------------------------

struct TraceData {
  std::vector<double> energies, semiclassical, quantum, exact;
  std::optional<cpo::Spectrum> spectrum;
};

TraceData compute_trace(Context& ctx, const cpo::Potential& V) {
  const auto grid = ctx.cfg.grid();
  ctx.stage = "traceformula";
  // semiclassical density in ordered chunks
  const std::size_t chunks = std::size_t(std::max(1, ctx.cfg.threads));
  std::vector<cpo::DensityResult> parts(chunks);
  parallel_for(chunks, ctx.cfg.threads, [&](std::size_t c) {
    const std::size_t lo = grid.size() * c / chunks, hi = grid.size() * (c + 1) / chunks;
    if (lo == hi) return;
    parts[c] = cpo::semiclassical_density(V, std::vector<double>(grid.begin() + long(lo), grid.begin() + long(hi)),
                                          ctx.cfg.r_max, ctx.cfg.sigma);
  });
  std::map<double, double> sc;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.energies.size(); ++i) sc[p.energies[i]] = p.density[i];
    for (const auto& s : p.skipped) ctx.warn("degenerate_energy", s.reason, json{{"E", s.energy}});
  }
  cpo::QuantumOptions qo;
  qo.amplitude_nodes = ctx.cfg.amplitude_nodes;
  qo.n_modes = ctx.cfg.n_modes;
  const std::vector<cpo::ClassSpec> classes = ctx.cfg.quantum ? ctx.cfg.classes : std::vector<cpo::ClassSpec>{};
  const cpo::DensityResult qd = cpo::quantum_density(V, grid, classes, ctx.cfg.r_max, ctx.cfg.sigma, qo);
  for (const auto& n : qd.notes) ctx.warn("note", n);
  std::map<double, double> qm;
  for (std::size_t i = 0; i < qd.energies.size(); ++i) qm[qd.energies[i]] = qd.density[i];

  TraceData out;
  out.spectrum = reference_spectrum(ctx, V);
  for (double E : grid)
    if (sc.count(E) && qm.count(E)) {
      out.energies.push_back(E);
      out.semiclassical.push_back(sc[E]);
      out.quantum.push_back(qm[E]);
    }
  out.exact = cpo::smoothed_density(*out.spectrum, ctx.cfg.sigma, out.energies);
  return out;
}

json term_json(const cpo::TraceTerm& t) {
  const bool one_loop = t.provenance == cpo::Provenance::one_loop_quantum;
  return json{{"provenance", cpo::to_string(t.provenance)},
              {"label", t.label},
              {"orbit_class", t.orbit_class.coords},
              {"repetition", t.repetition},
              {"energy", t.energy},
              {"action", cx(t.action)},
              {"time_period", cx(t.time_period)},
              {"amplitude", cx(t.amplitude)},
              {"maslov", t.maslov},
              {"intersection", t.intersection},
              {"weight", std::exp(-t.repetition * t.action.imag())},
              {"det_ratio", one_loop ? cx(t.det_ratio) : json(nullptr)},
              {"semiclassical_ratio", one_loop ? cx(t.semiclassical_ratio) : json(nullptr)}};
}

void cmd_trace(Context& ctx) {
  const cpo::Potential V = potential(ctx);
  const TraceData td = compute_trace(ctx, V);
  {
    auto f = fmt::output_file((ctx.out / "trace_density.csv").string());
    f.print("E,d_semiclassical,d_quantum,d_exact\n");
    for (std::size_t i = 0; i < td.energies.size(); ++i)
      f.print("{},{},{},{}\n", g17(td.energies[i]), g17(td.semiclassical[i]), g17(td.quantum[i]), g17(td.exact[i]));
  }

  ctx.stage = "traceformula";
  const double e_terms = ctx.cfg.term_energy.value_or(0.5 * (ctx.cfg.e_min + ctx.cfg.e_max));
  json terms = json::array();
  try {
    for (const auto& t : cpo::semiclassical_terms(V, e_terms, ctx.cfg.r_max)) terms.push_back(term_json(t));
    if (ctx.cfg.quantum)
      for (const auto& t : cpo::quantum_terms(V, e_terms, ctx.cfg.classes, ctx.cfg.r_max, ctx.cfg.sigma))
        terms.push_back(term_json(t));
  } catch (const cpo::NumericalError& e) {
    ctx.warn(e.code(), std::string("trace terms: ") + e.what(), json{{"E", e_terms}});
  }
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "trace";
  j["energy"] = e_terms;
  j["sigma"] = ctx.cfg.sigma;
  j["r_max"] = ctx.cfg.r_max;
  j["quantum_amplitudes"] = "one-loop approximation";
  j["terms"] = terms;
  write_json(ctx.out / "trace_terms.json", j);

  json ebk;
  ebk["schema_version"] = kSchemaVersion;
  ebk["command"] = "trace";
  ebk["levels"] = json::array();
  if (ctx.cfg.ebk_max >= 0) {
    const cpo::EbkResult er = cpo::ebk_levels(V, 0, ctx.cfg.ebk_max);
    for (const auto& n : er.notes) ctx.warn("ebk", n);
    for (const auto& l : er.levels) ebk["levels"].push_back(json{{"n", l.n}, {"energy", l.energy}});
  }
  write_json(ctx.out / "ebk.json", ebk);
}

void cmd_compare(Context& ctx) {
  const cpo::Potential V = potential(ctx);
  const TraceData td = compute_trace(ctx, V);
  double max_exact = 0.0, dev_sc = 0.0, dev_q = 0.0;
  for (std::size_t i = 0; i < td.energies.size(); ++i) {
    max_exact = std::max(max_exact, std::abs(td.exact[i]));
    dev_sc = std::max(dev_sc, std::abs(td.semiclassical[i] - td.exact[i]));
    dev_q = std::max(dev_q, std::abs(td.quantum[i] - td.exact[i]));
  }
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "compare";
  j["density"] = json{{"points", td.energies.size()},
                      {"max_exact", max_exact},
                      {"max_abs_deviation_semiclassical", dev_sc},
                      {"max_abs_deviation_quantum", dev_q},
                      {"relative_deviation_semiclassical", max_exact > 0 ? dev_sc / max_exact : 0.0},
                      {"relative_deviation_quantum", max_exact > 0 ? dev_q / max_exact : 0.0}};
  j["ebk"] = json::array();
  if (ctx.cfg.ebk_max >= 0) {
    const cpo::EbkResult er = cpo::ebk_levels(V, 0, ctx.cfg.ebk_max);
    for (const auto& n : er.notes) ctx.warn("ebk", n);
    const auto& ev = td.spectrum->eigenvalues;
    for (const auto& l : er.levels) {
      json row{{"n", l.n}, {"ebk", l.energy}};
      // per-well levels of a double well sit between doublet members, so
      // compare with the nearest exact level rather than the one at index n
      if (!ev.empty()) {
        const auto it = std::min_element(ev.begin(), ev.end(),
                                         [&](double a, double b) { return std::abs(a - l.energy) < std::abs(b - l.energy); });
        row["exact_index"] = it - ev.begin();
        row["exact"] = *it;
        row["relative_error"] = (l.energy - *it) / std::abs(*it);
      }
      j["ebk"].push_back(row);
    }
  }
  write_json(ctx.out / "compare.json", j);
}

int exit_code(const cpo::Error& e) {
  if (dynamic_cast<const cpo::ValidationError*>(&e)) return 1;
  if (dynamic_cast<const cpo::AmbiguousError*>(&e)) return 3;
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cpo: complex periodic orbits, thimbles and trace formulas for 1D polynomial potentials"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  int threads = 0;
  bool verbose = false;
  app.add_option("--config", config_path, "INI run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, std::string("output directory (overrides ") + kOutDirEnv + " and the config)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--verbose", verbose, "progress and warnings on standard error");
  app.fallthrough();

  using Command = void (*)(Context&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"spectrum", "exact eigenvalues and smoothed density", cmd_spectrum},
      {"periods", "period lattice over the energy grid", cmd_periods},
      {"thimble", "Picard-Lefschetz decomposition of an oscillatory integral", cmd_thimble},
      {"flow", "loop-space gradient flow from a perturbed orbit", cmd_flow},
      {"trace", "semiclassical and quantum trace densities, EBK levels", cmd_trace},
      {"compare", "trace densities and EBK levels against the exact spectrum", cmd_compare}};
  Command selected = nullptr;
  for (const auto& [name, help, fn] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->callback([&selected, fn = fn] { selected = fn; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  Context ctx;
  try {
    if (!config_path.empty()) ctx.cfg = cpo::cli::load_config(config_path);
    if (const char* env = std::getenv(kOutDirEnv); env && *env) ctx.cfg.output_dir = env;
    if (!out_dir.empty()) ctx.cfg.output_dir = out_dir;
    if (threads > 0) ctx.cfg.threads = threads;
    if (verbose) ctx.cfg.verbose = true;
    cpo::cli::validate(ctx.cfg);
    ctx.out = ctx.cfg.output_dir;
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (ec || !fs::is_directory(ctx.out)) throw cpo::ValidationError("output directory is not writable: " + ctx.out.string());
    selected(ctx);
    write_warnings(ctx);
    return 0;
  } catch (const cpo::Error& e) {
    std::cerr << "cpo: " << ctx.stage << ": " << e.code() << ": " << e.what() << "\n";
    if (!ctx.out.empty()) {
      ctx.warnings.push_back(json{{"code", e.code()}, {"message", e.what()}, {"context", json{{"module", ctx.stage}}}});
      try {
        write_warnings(ctx);
      } catch (...) {
      }
    }
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "cpo: " << ctx.stage << ": " << e.what() << "\n";
    return 2;
  }
}

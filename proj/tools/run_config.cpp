#include "run_config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <set>
#include <sstream>

#include "cpo/errors.hpp"

namespace cpo::cli {

namespace pt = boost::property_tree;

std::vector<double> RunConfig::grid() const {
  std::vector<double> g(static_cast<std::size_t>(e_count));
  for (int i = 0; i < e_count; ++i) g[std::size_t(i)] = e_min + (e_max - e_min) * i / (e_count - 1);
  return g;
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    try {
      const auto slash = tok.find('/');
      std::size_t used = 0;
      if (slash == std::string::npos) {
        out.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } else {
        const std::string a = tok.substr(0, slash), b = tok.substr(slash + 1);
        std::size_t ua = 0, ub = 0;
        const double num = std::stod(a, &ua), den = std::stod(b, &ub);
        if (ua != a.size() || ub != b.size() || den == 0.0) throw std::invalid_argument(tok);
        out.push_back(num / den);
      }
    } catch (const std::logic_error&) {
      throw ValidationError("not a number: '" + tok + "'");
    }
  }
  return out;
}

std::vector<ClassSpec> parse_classes(const std::string& text) {
  std::vector<ClassSpec> out;
  std::vector<std::string> items;
  boost::split(items, text, boost::is_any_of(";"));
  for (std::string item : items) {
    boost::trim(item);
    if (item.empty()) continue;
    std::optional<int> n;
    if (const auto colon = item.find(':'); colon != std::string::npos) {
      const auto v = parse_numbers(item.substr(colon + 1));
      if (v.size() != 1 || v[0] != std::round(v[0])) throw ValidationError("bad intersection override in '" + item + "'");
      n = int(v[0]);
      item = boost::trim_copy(item.substr(0, colon));
    }
    if (item == "real") {
      ClassSpec s = ClassSpec::real();
      s.intersection = n;
      out.push_back(s);
      continue;
    }
    Cycle c;
    for (double x : parse_numbers(item)) {
      if (x != std::round(x)) throw ValidationError("cycle coordinates must be integers: '" + item + "'");
      c.coords.push_back(int(x));
    }
    out.push_back(ClassSpec::of(c, n));
  }
  return out;
}

RunConfig load_config(const std::string& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError("cannot read config: " + std::string(e.what()));
  }
  static const std::set<std::string> known = {
      "potential.coefficients", "grid.e_min", "grid.e_max", "grid.count", "trace.sigma", "trace.r_max",
      "trace.modes", "trace.classes", "trace.quantum", "trace.amplitude_nodes", "trace.ebk_max",
      "trace.term_energy", "spectrum.count", "spectrum.tol", "output.dir", "run.threads", "run.verbose",
      "thimble.exponent_re", "thimble.exponent_im", "flow.energy", "flow.cycle", "flow.tau", "flow.direction",
      "flow.perturbation"};
  for (const auto& [section, body] : tree) {
    for (const auto& [key, value] : body) {
      (void)value;
      if (!known.count(section + "." + key)) throw ValidationError("unknown config key " + section + "." + key);
    }
  }

  RunConfig cfg;
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(key, '.'))) return boost::trim_copy(*v);
    return std::nullopt;
  };
  auto number = [&](const std::string& key, auto& target) {
    if (auto v = get(key)) {
      const auto xs = parse_numbers(*v);
      if (xs.size() != 1) throw ValidationError(key + " expects a single number");
      using T = std::decay_t<decltype(target)>;
      if constexpr (std::is_integral_v<T>) {
        if (xs[0] != std::round(xs[0])) throw ValidationError(key + " expects an integer");
        target = T(xs[0]);
      } else {
        target = xs[0];
      }
    }
  };
  auto boolean = [&](const std::string& key, bool& target) {
    if (auto v = get(key)) {
      if (*v == "true" || *v == "1") target = true;
      else if (*v == "false" || *v == "0") target = false;
      else throw ValidationError(key + " expects true or false");
    }
  };

  if (auto v = get("potential.coefficients")) cfg.potential = parse_numbers(*v);
  number("grid.e_min", cfg.e_min);
  number("grid.e_max", cfg.e_max);
  number("grid.count", cfg.e_count);
  number("trace.sigma", cfg.sigma);
  number("trace.r_max", cfg.r_max);
  number("trace.modes", cfg.n_modes);
  if (auto v = get("trace.classes")) cfg.classes = parse_classes(*v);
  boolean("trace.quantum", cfg.quantum);
  number("trace.amplitude_nodes", cfg.amplitude_nodes);
  number("trace.ebk_max", cfg.ebk_max);
  if (get("trace.term_energy")) {
    double e = 0;
    number("trace.term_energy", e);
    cfg.term_energy = e;
  }
  number("spectrum.count", cfg.level_count);
  number("spectrum.tol", cfg.level_tol);
  if (auto v = get("output.dir")) cfg.output_dir = *v;
  number("run.threads", cfg.threads);
  boolean("run.verbose", cfg.verbose);

  const auto re = get("thimble.exponent_re") ? parse_numbers(*get("thimble.exponent_re")) : std::vector<double>{};
  const auto im = get("thimble.exponent_im") ? parse_numbers(*get("thimble.exponent_im")) : std::vector<double>{};
  cfg.exponent.assign(std::max(re.size(), im.size()), 0.0);
  for (std::size_t k = 0; k < re.size(); ++k) cfg.exponent[k] += re[k];
  for (std::size_t k = 0; k < im.size(); ++k) cfg.exponent[k] += std::complex<double>(0.0, im[k]);

  number("flow.energy", cfg.flow_energy);
  if (auto v = get("flow.cycle"))
    for (double x : parse_numbers(*v)) {
      if (x != std::round(x)) throw ValidationError("flow.cycle must be integers");
      cfg.flow_cycle.push_back(int(x));
    }
  number("flow.tau", cfg.flow_tau);
  if (auto v = get("flow.direction")) {
    if (*v != "down" && *v != "up") throw ValidationError("flow.direction must be down or up");
    cfg.flow_down = *v == "down";
  }
  number("flow.perturbation", cfg.flow_perturbation);
  return cfg;
}

void validate(const RunConfig& cfg) {
  if (cfg.e_count < 2) throw ValidationError("grid.count must be at least 2");
  if (!(cfg.e_max > cfg.e_min)) throw ValidationError("grid.e_max must exceed grid.e_min");
  if (!(cfg.sigma > 0)) throw ValidationError("trace.sigma must be positive");
  if (cfg.r_max < 0) throw ValidationError("trace.r_max must be nonnegative");
  if (cfg.n_modes < 4) throw ValidationError("trace.modes must be at least 4");
  if (cfg.amplitude_nodes < 1) throw ValidationError("trace.amplitude_nodes must be positive");
  if (cfg.ebk_max < -1) throw ValidationError("trace.ebk_max must be >= -1");
  if (cfg.level_count < 0) throw ValidationError("spectrum.count must be nonnegative");
  if (!(cfg.level_tol > 0)) throw ValidationError("spectrum.tol must be positive");
  if (cfg.threads < 1) throw ValidationError("threads must be positive");
  if (!(cfg.flow_tau > 0)) throw ValidationError("flow.tau must be positive");
  if (cfg.flow_perturbation < 0) throw ValidationError("flow.perturbation must be nonnegative");
}

}  // namespace cpo::cli

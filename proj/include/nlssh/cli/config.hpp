#pragma once

// Run configuration: a YAML document with sections lattice / integrator /
// experiment / output plus a top-level seed. Parsing is strict: unknown keys,
// wrong types and out-of-range values are rejected with file:line diagnostics.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "../ensemble.hpp"
#include "../lattice.hpp"
#include "../simulation.hpp"

namespace nlssh::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Mode { evolve, spectrum, sweep, disorder };

constexpr std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::evolve: return "evolve";
    case Mode::spectrum: return "spectrum";
    case Mode::sweep: return "sweep";
    case Mode::disorder: return "disorder";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
  for (auto m : {Mode::evolve, Mode::spectrum, Mode::sweep, Mode::disorder})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

struct ExperimentConfig {
  Mode mode = Mode::evolve;
  int injection_site = -1;
  double power_w = 30.0;
  std::vector<double> powers_w;
  std::vector<Observable> observables{Observable::topo_weight, Observable::gap_top};
  std::vector<double> etas{0.1, 0.2, 0.3, 0.4, 0.5};
  int n_realizations = 20;
  double disorder_eta = 0.0;
  bool per_species_disorder = false;
  ZeroModeSource zero_modes = ZeroModeSource::instantaneous;
  WeightDefinition weight = WeightDefinition::zero_pair;
  double isolation_factor = kDefaultIsolationFactor;
  Species spectrum_species = Species::pump;
  std::vector<int> spectrum_steps;  // in addition to the first and last step
  bool dump_biphoton_matrix = false;
};

struct RunConfig {
  LatticeConfig lattice;
  IntegratorSpec integrator;
  ExperimentConfig experiment;
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  RunSettings run_settings() const {
    RunSettings s;
    s.integrator = integrator;
    s.injection_site = experiment.injection_site;
    s.power = experiment.power_w;
    s.zero_modes = experiment.zero_modes;
    s.weight = experiment.weight;
    s.isolation_factor = experiment.isolation_factor;
    return s;
  }
};

/// A `--set key.path=value` override; value is parsed as a YAML scalar or flow node.
struct Override {
  std::string path;
  std::string value;
};

inline Override parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set " + text + ": expected KEY=VALUE");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

namespace detail {

class Parser {
 public:
  Parser(std::string source, std::set<std::string> overridden)
      : source_(std::move(source)), overridden_(std::move(overridden)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& key,
                         const std::string& what) const {
    std::string where;
    if (overridden_.count(key))
      where = "--set " + key;
    else if (node.IsDefined() && node.Mark().line >= 0)
      where = source_ + ":" + std::to_string(node.Mark().line + 1) + ":" +
              std::to_string(node.Mark().column + 1);
    else
      where = source_;
    throw ConfigError(where + ": " + key + ": " + what);
  }

  void require_map(const YAML::Node& node, const std::string& key) const {
    if (!node.IsMap()) fail(node, key, "expected a mapping");
  }

  /// Rejects keys of `node` not listed in `allowed`.
  void check_keys(const YAML::Node& node, const std::string& prefix,
                  std::initializer_list<std::string_view> allowed) const {
    for (const auto& kv : node) {
      const auto k = kv.first.as<std::string>();
      bool ok = false;
      for (auto a : allowed) ok = ok || a == k;
      if (!ok) {
        std::string list;
        for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
        fail(kv.first, prefix.empty() ? k : prefix + "." + k, "unknown key (accepted: " + list + ")");
      }
    }
  }

  template <class T>
  T scalar(const YAML::Node& node, const std::string& key, const char* type) const {
    if (!node.IsScalar()) fail(node, key, std::string("expected ") + type);
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, key, std::string("expected ") + type + ", got '" + node.Scalar() + "'");
    }
  }

  double real(const YAML::Node& n, const std::string& key) const {
    const double v = scalar<double>(n, key, "a number");
    if (!std::isfinite(v)) fail(n, key, "must be finite");
    return v;
  }

  double real_in(const YAML::Node& n, const std::string& key, double lo, double hi,
                 bool lo_open, const std::string& range) const {
    const double v = real(n, key);
    if ((lo_open ? !(v > lo) : !(v >= lo)) || !(v <= hi)) fail(n, key, "must be " + range);
    return v;
  }

  int integer(const YAML::Node& n, const std::string& key) const {
    return scalar<int>(n, key, "an integer");
  }

  bool boolean(const YAML::Node& n, const std::string& key) const {
    return scalar<bool>(n, key, "true or false");
  }

  std::string text(const YAML::Node& n, const std::string& key) const {
    return scalar<std::string>(n, key, "a string");
  }

  template <class T, class F>
  std::vector<T> list(const YAML::Node& n, const std::string& key, F&& item) const {
    if (!n.IsSequence()) fail(n, key, "expected a list");
    std::vector<T> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(item(n[i], key + "[" + std::to_string(i) + "]"));
    return out;
  }

  std::vector<double> power_list(const YAML::Node& n, const std::string& key) const {
    auto v = list<double>(n, key, [&](const YAML::Node& x, const std::string& k) {
      return real_in(x, k, 0.0, INFINITY, false, ">= 0 W");
    });
    if (v.empty()) fail(n, key, "must list at least one power (accepted: non-empty, strictly increasing, >= 0 W)");
    for (std::size_t i = 1; i < v.size(); ++i)
      if (!(v[i] > v[i - 1])) fail(n, key, "must be strictly increasing");
    return v;
  }

  std::vector<double> power_grid(const YAML::Node& n, const std::string& key) const {
    require_map(n, key);
    check_keys(n, key, {"start", "stop", "step"});
    for (auto k : {"start", "stop", "step"})
      if (!n[k]) fail(n, key, std::string("missing key '") + k + "'");
    const double start = real_in(n["start"], key + ".start", 0.0, INFINITY, false, ">= 0 W");
    const double stop = real_in(n["stop"], key + ".stop", start, INFINITY, false, ">= start");
    const double step = real_in(n["step"], key + ".step", 0.0, INFINITY, true, "> 0 W");
    std::vector<double> v;
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= count; ++i) v.push_back(start + static_cast<double>(i) * step);
    return v;
  }

 private:
  std::string source_;
  std::set<std::string> overridden_;
};

inline void parse_species_block(const Parser& p, const YAML::Node& n, const std::string& key,
                                SpeciesCouplings& c) {
  p.require_map(n, key);
  p.check_keys(n, key, {"v_long", "v_short", "nu"});
  if (n["v_long"]) c.v_long = p.real_in(n["v_long"], key + ".v_long", 0.0, INFINITY, true, "> 0 1/m");
  if (n["v_short"]) c.v_short = p.real_in(n["v_short"], key + ".v_short", 0.0, INFINITY, true, "> 0 1/m");
  if (n["nu"]) c.nu = p.real_in(n["nu"], key + ".nu", 0.0, INFINITY, false, ">= 0 1/(W m)");
  if (!(c.v_long < c.v_short)) p.fail(n, key, "v_long must be < v_short");
}

inline LatticeConfig parse_lattice(const Parser& p, const YAML::Node& n) {
  LatticeConfig c;
  if (!n) return c;
  p.require_map(n, "lattice");
  p.check_keys(n, "lattice", {"n_sites", "defect_kind", "boundary", "nonlinear_bonds", "gamma", "nu",
                              "pump", "signal", "idler"});
  if (n["n_sites"]) {
    c.n_sites = p.integer(n["n_sites"], "lattice.n_sites");
    if (c.n_sites < 7 || c.n_sites % 2 == 0)
      p.fail(n["n_sites"], "lattice.n_sites", "must be an odd integer >= 7");
  }
  if (n["defect_kind"]) {
    const auto s = p.text(n["defect_kind"], "lattice.defect_kind");
    if (s == "long_long") c.defect_kind = DefectKind::long_long;
    else if (s == "short_short") c.defect_kind = DefectKind::short_short;
    else p.fail(n["defect_kind"], "lattice.defect_kind", "must be long_long or short_short");
  }
  if (n["boundary"]) {
    const auto s = p.text(n["boundary"], "lattice.boundary");
    if (s == "periodic") c.boundary = Boundary::periodic;
    else if (s == "open") c.boundary = Boundary::open;
    else p.fail(n["boundary"], "lattice.boundary", "must be periodic or open");
  }
  if (n["gamma"]) c.gamma = p.real_in(n["gamma"], "lattice.gamma", 0.0, INFINITY, false, ">= 0 1/(W m)");
  if (n["nu"]) {
    const double nu = p.real_in(n["nu"], "lattice.nu", 0.0, INFINITY, false, ">= 0 1/(W m)");
    for (auto& s : c.species) s.nu = nu;
  }
  for (auto sp : kAllSpecies) {
    const std::string name(to_string(sp));
    if (n[name]) parse_species_block(p, n[name], "lattice." + name, c.of(sp));
  }
  if (n["nonlinear_bonds"]) {
    c.nonlinear_bonds = p.list<int>(n["nonlinear_bonds"], "lattice.nonlinear_bonds",
                                    [&](const YAML::Node& x, const std::string& k) { return p.integer(x, k); });
    for (int b : c.nonlinear_bonds)
      if (b < c.first_bond() || b > c.last_bond())
        p.fail(n["nonlinear_bonds"], "lattice.nonlinear_bonds",
               "bond " + std::to_string(b) + " outside [" + std::to_string(c.first_bond()) + ", " +
                   std::to_string(c.last_bond()) + "]");
  }
  return c;
}

inline IntegratorSpec parse_integrator(const Parser& p, const YAML::Node& n) {
  IntegratorSpec s;
  if (!n) return s;
  p.require_map(n, "integrator");
  p.check_keys(n, "integrator", {"method", "dz_m", "n_steps", "substeps"});
  if (n["method"] && p.text(n["method"], "integrator.method") != "rk4_fixed")
    p.fail(n["method"], "integrator.method", "must be rk4_fixed");
  if (n["dz_m"]) s.dz = p.real_in(n["dz_m"], "integrator.dz_m", 0.0, INFINITY, true, "> 0 m");
  if (n["n_steps"]) {
    s.n_steps = p.integer(n["n_steps"], "integrator.n_steps");
    if (s.n_steps < 0) p.fail(n["n_steps"], "integrator.n_steps", "must be >= 0");
  }
  if (n["substeps"]) {
    s.substeps = p.integer(n["substeps"], "integrator.substeps");
    if (s.substeps < 1) p.fail(n["substeps"], "integrator.substeps", "must be >= 1");
  }
  return s;
}

inline ExperimentConfig parse_experiment(const Parser& p, const YAML::Node& n,
                                         std::optional<Mode> forced, const LatticeConfig& lat) {
  ExperimentConfig e;
  if (!n) p.fail(n, "experiment", "section is required");
  p.require_map(n, "experiment");
  if (n["mode"]) {
    const auto s = p.text(n["mode"], "experiment.mode");
    const auto m = parse_mode(s);
    if (!m) p.fail(n["mode"], "experiment.mode", "must be one of evolve, spectrum, sweep, disorder");
    if (forced && *m != *forced)
      p.fail(n["mode"], "experiment.mode",
             "is '" + s + "' but the subcommand is '" + std::string(to_string(*forced)) + "'");
    e.mode = *m;
  } else if (forced) {
    e.mode = *forced;
  } else {
    p.fail(n, "experiment.mode", "is required (accepted: evolve, spectrum, sweep, disorder)");
  }

  switch (e.mode) {
    case Mode::evolve:
      p.check_keys(n, "experiment", {"mode", "injection_site", "zero_modes", "weight", "isolation_factor",
                                     "power_w", "disorder_eta", "per_species_disorder",
                                     "dump_biphoton_matrix"});
      break;
    case Mode::spectrum:
      p.check_keys(n, "experiment", {"mode", "injection_site", "isolation_factor", "power_w",
                                     "disorder_eta", "per_species_disorder", "species", "steps"});
      break;
    case Mode::sweep:
      p.check_keys(n, "experiment", {"mode", "injection_site", "zero_modes", "weight", "isolation_factor",
                                     "powers_w", "power_grid", "observables"});
      break;
    case Mode::disorder:
      p.check_keys(n, "experiment", {"mode", "injection_site", "zero_modes", "weight", "isolation_factor",
                                     "powers_w", "power_grid", "etas", "n_realizations",
                                     "per_species_disorder"});
      break;
  }

  if (n["injection_site"]) {
    e.injection_site = p.integer(n["injection_site"], "experiment.injection_site");
    const int h = lat.half_width();
    if (e.injection_site < -h || e.injection_site > h)
      p.fail(n["injection_site"], "experiment.injection_site",
             "must lie in [" + std::to_string(-h) + ", " + std::to_string(h) + "]");
  }
  if (n["zero_modes"]) {
    const auto s = p.text(n["zero_modes"], "experiment.zero_modes");
    if (s == "instantaneous") e.zero_modes = ZeroModeSource::instantaneous;
    else if (s == "linear") e.zero_modes = ZeroModeSource::linear;
    else p.fail(n["zero_modes"], "experiment.zero_modes", "must be instantaneous or linear");
  }
  if (n["weight"]) {
    const auto s = p.text(n["weight"], "experiment.weight");
    if (s == "zero_pair") e.weight = WeightDefinition::zero_pair;
    else if (s == "extended") e.weight = WeightDefinition::extended;
    else p.fail(n["weight"], "experiment.weight", "must be zero_pair or extended");
  }
  if (n["isolation_factor"])
    e.isolation_factor = p.real_in(n["isolation_factor"], "experiment.isolation_factor", 1.0, INFINITY,
                                   true, "> 1");
  if (n["power_w"]) e.power_w = p.real_in(n["power_w"], "experiment.power_w", 0.0, INFINITY, false, ">= 0 W");
  if (n["disorder_eta"])
    e.disorder_eta = p.real_in(n["disorder_eta"], "experiment.disorder_eta", 0.0, 1.0, false, "in [0, 1]");
  if (n["per_species_disorder"])
    e.per_species_disorder = p.boolean(n["per_species_disorder"], "experiment.per_species_disorder");
  if (n["dump_biphoton_matrix"])
    e.dump_biphoton_matrix = p.boolean(n["dump_biphoton_matrix"], "experiment.dump_biphoton_matrix");
  if (n["species"]) {
    const auto sp = parse_species(p.text(n["species"], "experiment.species"));
    if (!sp) p.fail(n["species"], "experiment.species", "must be pump, signal or idler");
    e.spectrum_species = *sp;
  }

  if (e.mode == Mode::sweep || e.mode == Mode::disorder) {
    if (n["powers_w"] && n["power_grid"])
      p.fail(n["power_grid"], "experiment.power_grid", "conflicts with experiment.powers_w; give one");
    if (n["powers_w"]) e.powers_w = p.power_list(n["powers_w"], "experiment.powers_w");
    else if (n["power_grid"]) e.powers_w = p.power_grid(n["power_grid"], "experiment.power_grid");
    else if (e.mode == Mode::disorder) e.powers_w = {5.0, 15.0, 30.0, 50.0};
    else p.fail(n, "experiment.powers_w", "sweep needs experiment.powers_w or experiment.power_grid");
  }
  if (n["observables"]) {
    e.observables = p.list<Observable>(n["observables"], "experiment.observables",
                                       [&](const YAML::Node& x, const std::string& k) {
                                         const auto o = parse_observable(p.text(x, k));
                                         if (!o)
                                           p.fail(x, k,
                                                  "must be one of topo_weight, gap_top, pump_intensity, "
                                                  "biphoton_population");
                                         return *o;
                                       });
    if (e.observables.empty()) p.fail(n["observables"], "experiment.observables", "must not be empty");
  }
  if (n["etas"]) {
    e.etas = p.list<double>(n["etas"], "experiment.etas", [&](const YAML::Node& x, const std::string& k) {
      return p.real_in(x, k, 0.0, 1.0, false, "in [0, 1]");
    });
    if (e.etas.empty()) p.fail(n["etas"], "experiment.etas", "must list at least one eta in [0, 1]");
  }
  if (n["n_realizations"]) {
    e.n_realizations = p.integer(n["n_realizations"], "experiment.n_realizations");
    if (e.n_realizations < 1) p.fail(n["n_realizations"], "experiment.n_realizations", "must be >= 1");
  }
  if (n["steps"]) {
    e.spectrum_steps = p.list<int>(n["steps"], "experiment.steps", [&](const YAML::Node& x, const std::string& k) {
      return p.integer(x, k);
    });
  }
  return e;
}


/// Applies dotted-path overrides in place.
inline void apply_overrides(YAML::Node root, const std::vector<Override>& overrides) {
  for (const auto& o : overrides) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t dot; (dot = o.path.find('.', start)) != std::string::npos; start = dot + 1)
      parts.push_back(o.path.substr(start, dot - start));
    parts.push_back(o.path.substr(start));
    YAML::Node value;
    try {
      value = YAML::Load(o.value);
    } catch (const YAML::Exception& e) {
      throw ConfigError("--set " + o.path + ": cannot parse value '" + o.value + "'");
    }
    // YAML::Node assignment rebinds references, so walk with fresh handles
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      YAML::Node next = chain.back()[parts[i]];
      if (next.IsDefined() && !next.IsMap())
        throw ConfigError("--set " + o.path + ": '" + parts[i] + "' is not a section");
      chain.push_back(next);
    }
    chain.back()[parts.back()] = value;
  }
}

}  // namespace detail

/// Parses an already-loaded document. `forced` is the subcommand's mode.
inline RunConfig parse_config(YAML::Node root, const std::string& source,
                              const std::vector<Override>& overrides = {},
                              std::optional<Mode> forced = std::nullopt) {
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  std::set<std::string> overridden;
  for (const auto& o : overrides) overridden.insert(o.path);
  detail::apply_overrides(root, overrides);
  detail::Parser p(source, overridden);
  p.require_map(root, "<root>");
  p.check_keys(root, "", {"lattice", "integrator", "experiment", "output", "seed"});

  RunConfig c;
  c.lattice = detail::parse_lattice(p, root["lattice"]);
  c.integrator = detail::parse_integrator(p, root["integrator"]);
  c.experiment = detail::parse_experiment(p, root["experiment"], forced, c.lattice);
  if (root["output"]) {
    p.require_map(root["output"], "output");
    p.check_keys(root["output"], "output", {"dir"});
    if (root["output"]["dir"]) c.output_dir = p.text(root["output"]["dir"], "output.dir");
  }
  if (root["seed"]) c.seed = p.scalar<std::uint64_t>(root["seed"], "seed", "an unsigned 64-bit integer");

  if (c.experiment.mode == Mode::spectrum)
    for (int s : c.experiment.spectrum_steps)
      if (s < 0 || s > c.integrator.n_steps)
        p.fail(root["experiment"]["steps"], "experiment.steps",
               "step " + std::to_string(s) + " outside [0, integrator.n_steps]");
  try {
    c.lattice.validate();
    c.integrator.validate();
  } catch (const std::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

inline RunConfig load_config(const std::string& path, const std::vector<Override>& overrides = {},
                             std::optional<Mode> forced = std::nullopt) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError(path + ": cannot open file");
  } catch (const YAML::ParserException& e) {
    throw ConfigError(path + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                      ": " + e.msg);
  }
  return parse_config(root, path, overrides, forced);
}

inline RunConfig load_config_string(const std::string& text, const std::string& source = "<string>",
                                    const std::vector<Override>& overrides = {},
                                    std::optional<Mode> forced = std::nullopt) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  return parse_config(root, source, overrides, forced);
}

}  // namespace nlssh::cli

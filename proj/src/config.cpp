#include "tfprop/config.hpp"

#include "tfprop/expression.hpp"
#include "tfprop/record_io.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <limits>
#include <set>

namespace tfprop {

namespace {

const std::set<std::string> kKinds{"flow", "phase", "propagate", "matrix", "decay-fit", "modnorm", "singularity",
                                   "acceptance"};

void only_keys(const YAML::Node& n, const std::string& where, const std::set<std::string>& allowed) {
  if (!n.IsMap()) throw ConfigError(fmt::format("'{}' must be a mapping", where));
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(fmt::format("unknown key '{}' in '{}'", key, where));
  }
}

// Numbers may be written as arithmetic in pi ("pi/4") and as inf.
double number(const YAML::Node& n, const std::string& where) {
  if (!n.IsScalar()) throw ConfigError(fmt::format("'{}' must be a number", where));
  const auto s = n.Scalar();
  if (s == "inf" || s == ".inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf" || s == "-.inf") return -std::numeric_limits<double>::infinity();
  try {
    return Expression::parse(s, {})(VectorXd());
  } catch (const Error&) {
    throw ConfigError(fmt::format("'{}': cannot read '{}' as a number", where, s));
  }
}

template <typename T>
T integer(const YAML::Node& n, const std::string& where) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(fmt::format("'{}' must be an integer", where));
  }
}

std::string text(const YAML::Node& n, const std::string& where) {
  if (!n.IsScalar()) throw ConfigError(fmt::format("'{}' must be a string", where));
  return n.Scalar();
}

std::vector<double> numbers(const YAML::Node& n, const std::string& where) {
  if (n.IsScalar()) return {number(n, where)};
  if (!n.IsSequence()) throw ConfigError(fmt::format("'{}' must be a list of numbers", where));
  std::vector<double> v;
  for (size_t i = 0; i < n.size(); ++i) v.push_back(number(n[i], fmt::format("{}[{}]", where, i)));
  return v;
}

void read_axis(const YAML::Node& n, const std::string& where, double& lo, double& hi, double& step) {
  const auto v = numbers(n, where);
  if (v.size() != 3) throw ConfigError(fmt::format("'{}' must be [lo, hi, step]", where));
  lo = v[0];
  hi = v[1];
  step = v[2];
}

LatticeSpec read_lattice(const YAML::Node& n, const std::string& where, LatticeSpec l) {
  only_keys(n, where, {"x", "eta"});
  if (n["x"]) read_axis(n["x"], where + ".x", l.x_lo, l.x_hi, l.x_step);
  if (n["eta"]) read_axis(n["eta"], where + ".eta", l.eta_lo, l.eta_hi, l.eta_step);
  return l;
}

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

void emit_numbers(YAML::Emitter& e, const std::vector<double>& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (double x : v) e << num(x);
  e << YAML::EndSeq;
}

void emit_lattice(YAML::Emitter& e, const LatticeSpec& l) {
  e << YAML::BeginMap;
  e << YAML::Key << "x";
  emit_numbers(e, {l.x_lo, l.x_hi, l.x_step});
  e << YAML::Key << "eta";
  emit_numbers(e, {l.eta_lo, l.eta_hi, l.eta_step});
  e << YAML::EndMap;
}

void check_lattice(const LatticeSpec& l, const std::string& where) {
  if (!(l.x_step > 0) || !(l.eta_step > 0)) throw ConfigError(fmt::format("{}: lattice steps must be positive", where));
  if (!(l.x_hi >= l.x_lo) || !(l.eta_hi >= l.eta_lo)) throw ConfigError(fmt::format("{}: empty lattice box", where));
}

}  // namespace

ExperimentConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("config is not valid YAML: {}", e.what()));
  }
  ExperimentConfig c;
  if (!root || root.IsNull()) throw ConfigError("config is empty");
  only_keys(root, "config",
            {"kind", "d", "hamiltonian", "window", "grid", "lattice", "t", "method", "route", "dt", "segment",
             "tolerances", "output", "workers", "seed", "flow", "propagate", "matrix", "fit", "modnorm",
             "singularity", "acceptance"});
  if (!root["kind"]) throw ConfigError("config needs 'kind'");
  c.kind = text(root["kind"], "kind");
  if (root["d"]) c.d = integer<int>(root["d"], "d");
  if (const auto h = root["hamiltonian"]) {
    if (h.IsScalar()) {
      c.hamiltonian.name = h.Scalar();
    } else {
      only_keys(h, "hamiltonian", {"name", "param", "potential", "expression"});
      if (h["name"]) c.hamiltonian.name = text(h["name"], "hamiltonian.name");
      if (h["param"]) c.hamiltonian.param = number(h["param"], "hamiltonian.param");
      if (h["potential"]) c.hamiltonian.potential = text(h["potential"], "hamiltonian.potential");
      if (h["expression"]) c.hamiltonian.expression = text(h["expression"], "hamiltonian.expression");
    }
  }
  if (root["window"]) c.window = text(root["window"], "window");
  if (const auto g = root["grid"]) {
    only_keys(g, "grid", {"n", "dx"});
    if (g["n"]) c.grid.n = integer<Index>(g["n"], "grid.n");
    if (g["dx"]) c.grid.dx = number(g["dx"], "grid.dx");
  }
  if (const auto l = root["lattice"]) {
    only_keys(l, "lattice", {"w", "z", "before", "after"});
    if (l["w"]) c.w_lattice = read_lattice(l["w"], "lattice.w", c.w_lattice);
    if (l["z"]) c.z_lattice = read_lattice(l["z"], "lattice.z", c.z_lattice);
    if (l["before"]) c.before_lattice = read_lattice(l["before"], "lattice.before", c.before_lattice);
    if (l["after"]) c.after_lattice = read_lattice(l["after"], "lattice.after", c.after_lattice);
  }
  if (root["t"]) c.t = numbers(root["t"], "t");
  if (root["method"]) c.method = text(root["method"], "method");
  if (root["route"]) c.route = text(root["route"], "route");
  if (root["dt"]) c.dt = number(root["dt"], "dt");
  if (root["segment"]) c.segment = number(root["segment"], "segment");
  if (const auto tol = root["tolerances"]) {
    if (!tol.IsMap()) throw ConfigError("'tolerances' must be a mapping");
    for (const auto& kv : tol) {
      const auto key = kv.first.as<std::string>();
      c.tolerances[key] = number(kv.second, "tolerances." + key);
    }
  }
  if (root["output"]) c.output = text(root["output"], "output");
  if (root["workers"]) c.workers = integer<std::size_t>(root["workers"], "workers");
  if (root["seed"]) c.seed = integer<std::uint64_t>(root["seed"], "seed");

  if (const auto f = root["flow"]) {
    only_keys(f, "flow", {"points", "points_file"});
    if (const auto pts = f["points"]) {
      if (!pts.IsSequence()) throw ConfigError("'flow.points' must be a list of points");
      for (size_t i = 0; i < pts.size(); ++i) c.points.push_back(numbers(pts[i], fmt::format("flow.points[{}]", i)));
    }
    if (f["points_file"]) c.points_file = text(f["points_file"], "flow.points_file");
  }
  if (const auto p = root["propagate"]) {
    only_keys(p, "propagate", {"signal", "output_signal"});
    if (const auto s = p["signal"]) {
      only_keys(s, "propagate.signal", {"kind", "shift", "kick", "beta", "half_width", "plateau", "file"});
      if (s["kind"]) c.signal.kind = text(s["kind"], "propagate.signal.kind");
      if (s["shift"]) c.signal.shift = number(s["shift"], "propagate.signal.shift");
      if (s["kick"]) c.signal.kick = number(s["kick"], "propagate.signal.kick");
      if (s["beta"]) c.signal.beta = number(s["beta"], "propagate.signal.beta");
      if (s["half_width"]) c.signal.half_width = number(s["half_width"], "propagate.signal.half_width");
      if (s["plateau"]) c.signal.plateau = number(s["plateau"], "propagate.signal.plateau");
      if (s["file"]) c.signal.file = text(s["file"], "propagate.signal.file");
    }
    if (p["output_signal"]) c.output_signal = text(p["output_signal"], "propagate.output_signal");
  }
  if (const auto m = root["matrix"]) {
    only_keys(m, "matrix", {"operator", "file"});
    if (m["operator"]) c.operator_symbol = text(m["operator"], "matrix.operator");
    if (m["file"]) c.matrix_file = text(m["file"], "matrix.file");
  }
  if (const auto f = root["fit"]) {
    only_keys(f, "fit", {"map", "r_min", "r_max", "annuli", "noise_floor", "offdiag_radius"});
    if (f["map"]) c.fit_map = text(f["map"], "fit.map");
    if (f["r_min"]) c.fit.r_min = number(f["r_min"], "fit.r_min");
    if (f["r_max"]) c.fit.r_max = number(f["r_max"], "fit.r_max");
    if (f["annuli"]) c.fit.annuli = integer<int>(f["annuli"], "fit.annuli");
    if (f["noise_floor"]) c.fit.noise_floor = number(f["noise_floor"], "fit.noise_floor");
    if (f["offdiag_radius"]) c.fit.offdiag_radius = number(f["offdiag_radius"], "fit.offdiag_radius");
  }
  if (const auto m = root["modnorm"]) {
    only_keys(m, "modnorm", {"p", "r", "R", "oversampling", "tail_band", "tail_limit"});
    if (m["p"]) c.p = numbers(m["p"], "modnorm.p");
    if (m["r"]) c.r = numbers(m["r"], "modnorm.r");
    if (m["R"]) c.norm.R = number(m["R"], "modnorm.R");
    if (m["oversampling"]) c.norm.oversampling = number(m["oversampling"], "modnorm.oversampling");
    if (m["tail_band"]) c.norm.tail_band = number(m["tail_band"], "modnorm.tail_band");
    if (m["tail_limit"]) c.norm.tail_limit = number(m["tail_limit"], "modnorm.tail_limit");
  }
  if (const auto s = root["singularity"]) {
    only_keys(s, "singularity", {"regions", "deltas", "p", "r", "propagate"});
    if (const auto rg = s["regions"]) {
      if (rg.IsScalar()) {
        c.regions = {rg.Scalar()};
      } else {
        if (!rg.IsSequence()) throw ConfigError("'singularity.regions' must be a list of region strings");
        for (size_t i = 0; i < rg.size(); ++i) c.regions.push_back(text(rg[i], "singularity.regions"));
      }
    }
    if (s["deltas"]) c.deltas = numbers(s["deltas"], "singularity.deltas");
    if (s["p"]) c.reg_p = number(s["p"], "singularity.p");
    if (s["r"]) c.reg_r = number(s["r"], "singularity.r");
    if (s["propagate"]) {
      try {
        c.propagate_regions = s["propagate"].as<bool>();
      } catch (const YAML::Exception&) {
        throw ConfigError("'singularity.propagate' must be true or false");
      }
    }
  }
  if (const auto a = root["acceptance"]) {
    only_keys(a, "acceptance", {"criteria"});
    if (const auto cr = a["criteria"]) {
      if (!cr.IsSequence()) throw ConfigError("'acceptance.criteria' must be a list of numbers");
      for (size_t i = 0; i < cr.size(); ++i) c.criteria.push_back(integer<int>(cr[i], "acceptance.criteria"));
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string body;
  try {
    body = read_file(path);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(body);
}

std::string dump_config(const ExperimentConfig& c) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << c.kind;
  e << YAML::Key << "d" << YAML::Value << c.d;
  e << YAML::Key << "hamiltonian" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << c.hamiltonian.name;
  e << YAML::Key << "param" << YAML::Value << num(c.hamiltonian.param);
  e << YAML::Key << "potential" << YAML::Value << YAML::DoubleQuoted << c.hamiltonian.potential;
  e << YAML::Key << "expression" << YAML::Value << YAML::DoubleQuoted << c.hamiltonian.expression;
  e << YAML::EndMap;
  e << YAML::Key << "window" << YAML::Value << c.window;
  e << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "n" << YAML::Value << c.grid.n;
  e << YAML::Key << "dx" << YAML::Value << num(c.grid.dx);
  e << YAML::EndMap;
  e << YAML::Key << "lattice" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "w" << YAML::Value;
  emit_lattice(e, c.w_lattice);
  e << YAML::Key << "z" << YAML::Value;
  emit_lattice(e, c.z_lattice);
  e << YAML::Key << "before" << YAML::Value;
  emit_lattice(e, c.before_lattice);
  e << YAML::Key << "after" << YAML::Value;
  emit_lattice(e, c.after_lattice);
  e << YAML::EndMap;
  e << YAML::Key << "t" << YAML::Value;
  emit_numbers(e, c.t);
  e << YAML::Key << "method" << YAML::Value << c.method;
  e << YAML::Key << "route" << YAML::Value << c.route;
  e << YAML::Key << "dt" << YAML::Value << num(c.dt);
  e << YAML::Key << "segment" << YAML::Value << num(c.segment);
  e << YAML::Key << "tolerances" << YAML::Value << YAML::BeginMap;
  for (const auto& [k, v] : c.tolerances) e << YAML::Key << k << YAML::Value << num(v);
  e << YAML::EndMap;
  e << YAML::Key << "output" << YAML::Value << YAML::DoubleQuoted << c.output;
  e << YAML::Key << "workers" << YAML::Value << c.workers;
  e << YAML::Key << "seed" << YAML::Value << c.seed;

  e << YAML::Key << "flow" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "points" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : c.points) emit_numbers(e, p);
  e << YAML::EndSeq;
  e << YAML::Key << "points_file" << YAML::Value << YAML::DoubleQuoted << c.points_file;
  e << YAML::EndMap;

  e << YAML::Key << "propagate" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "signal" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << c.signal.kind;
  e << YAML::Key << "shift" << YAML::Value << num(c.signal.shift);
  e << YAML::Key << "kick" << YAML::Value << num(c.signal.kick);
  e << YAML::Key << "beta" << YAML::Value << num(c.signal.beta);
  e << YAML::Key << "half_width" << YAML::Value << num(c.signal.half_width);
  e << YAML::Key << "plateau" << YAML::Value << num(c.signal.plateau);
  e << YAML::Key << "file" << YAML::Value << YAML::DoubleQuoted << c.signal.file;
  e << YAML::EndMap;
  e << YAML::Key << "output_signal" << YAML::Value << YAML::DoubleQuoted << c.output_signal;
  e << YAML::EndMap;

  e << YAML::Key << "matrix" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "operator" << YAML::Value << YAML::DoubleQuoted << c.operator_symbol;
  e << YAML::Key << "file" << YAML::Value << YAML::DoubleQuoted << c.matrix_file;
  e << YAML::EndMap;

  e << YAML::Key << "fit" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "map" << YAML::Value << c.fit_map;
  e << YAML::Key << "r_min" << YAML::Value << num(c.fit.r_min);
  e << YAML::Key << "r_max" << YAML::Value << num(c.fit.r_max);
  e << YAML::Key << "annuli" << YAML::Value << c.fit.annuli;
  e << YAML::Key << "noise_floor" << YAML::Value << num(c.fit.noise_floor);
  e << YAML::Key << "offdiag_radius" << YAML::Value << num(c.fit.offdiag_radius);
  e << YAML::EndMap;

  e << YAML::Key << "modnorm" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "p" << YAML::Value;
  emit_numbers(e, c.p);
  e << YAML::Key << "r" << YAML::Value;
  emit_numbers(e, c.r);
  e << YAML::Key << "R" << YAML::Value << num(c.norm.R);
  e << YAML::Key << "oversampling" << YAML::Value << num(c.norm.oversampling);
  e << YAML::Key << "tail_band" << YAML::Value << num(c.norm.tail_band);
  e << YAML::Key << "tail_limit" << YAML::Value << num(c.norm.tail_limit);
  e << YAML::EndMap;

  e << YAML::Key << "singularity" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "regions" << YAML::Value << YAML::BeginSeq;
  for (const auto& r : c.regions) e << YAML::DoubleQuoted << r;
  e << YAML::EndSeq;
  e << YAML::Key << "deltas" << YAML::Value;
  emit_numbers(e, c.deltas);
  e << YAML::Key << "p" << YAML::Value << num(c.reg_p);
  e << YAML::Key << "r" << YAML::Value << num(c.reg_r);
  e << YAML::Key << "propagate" << YAML::Value << c.propagate_regions;
  e << YAML::EndMap;

  e << YAML::Key << "acceptance" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "criteria" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (int k : c.criteria) e << k;
  e << YAML::EndSeq;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

void validate(const ExperimentConfig& c) {
  if (!kKinds.count(c.kind)) throw ConfigError(fmt::format("unknown experiment kind '{}'", c.kind));
  if (c.d < 1 || c.d > 2) throw ConfigError(fmt::format("d = {} is not supported (1 or 2)", c.d));
  try {
    make_symbol(c.hamiltonian, c.d);
    parse_method(c.method);
    parse_route(c.route);
    SpatialGrid::centered(c.d, c.grid.n, c.grid.dx);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (c.window != "gaussian" && c.window != "oscillator_ground" && c.window.rfind("hermite", 0) != 0) {
    throw ConfigError(fmt::format("unknown window '{}'", c.window));
  }
  for (double t : c.t) {
    if (!std::isfinite(t)) throw ConfigError("t values must be finite");
  }
  if (c.t.empty() && c.kind != "acceptance") throw ConfigError("'t' must list at least one time");
  if (!(c.dt > 0) || !(c.segment > 0)) throw ConfigError("dt and segment must be positive");
  for (const auto& [k, v] : c.tolerances) {
    if (!(v > 0)) throw ConfigError(fmt::format("tolerance '{}' must be positive", k));
  }
  if (c.output.empty()) throw ConfigError("'output' must be a directory name");
  for (const auto& p : c.points) {
    if (p.size() != static_cast<size_t>(2 * c.d)) {
      throw ConfigError(fmt::format("flow.points entries need {} coordinates", 2 * c.d));
    }
  }
  for (const auto* l : {&c.w_lattice, &c.z_lattice, &c.before_lattice, &c.after_lattice}) check_lattice(*l, "lattice");
  const std::set<std::string> signals{"gaussian", "ground_state", "chirp", "file"};
  if (!signals.count(c.signal.kind)) throw ConfigError(fmt::format("unknown signal kind '{}'", c.signal.kind));
  if (c.signal.kind == "file" && c.signal.file.empty()) throw ConfigError("signal kind 'file' needs 'file'");
  if (c.fit_map != "flow" && c.fit_map != "identity") throw ConfigError("fit.map must be 'flow' or 'identity'");
  if (!(c.fit.r_min >= 1.0) || !(c.fit.r_max > c.fit.r_min)) throw ConfigError("fit needs 1 <= r_min < r_max");
  if (c.fit.annuli < 5) throw ConfigError("fit.annuli must be >= 5");
  if (!(c.fit.noise_floor > 0)) throw ConfigError("fit.noise_floor must be positive");
  for (double p : c.p) {
    if (!(p >= 1.0)) throw ConfigError(fmt::format("modnorm exponent {} is below 1", p));
  }
  if (!(c.norm.R > 0) || !(c.norm.oversampling >= 2.0)) throw ConfigError("modnorm needs R > 0 and oversampling >= 2");
  if (!(c.reg_p >= 1.0)) throw ConfigError("singularity.p must be >= 1");
  for (double delta : c.deltas) {
    try {
      check_delta(delta);
    } catch (const DomainError& e) {
      throw ConfigError(fmt::format("singularity.deltas: {}", e.what()));
    }
  }
  for (const auto& r : c.regions) {
    try {
      parse_region(r, c.d);
    } catch (const Error& e) {
      throw ConfigError(fmt::format("singularity.regions: {}", e.what()));
    }
  }
  if (c.kind == "singularity" && c.regions.empty()) throw ConfigError("singularity needs at least one region");
  for (int k : c.criteria) {
    if (k < 1 || k > 13) throw ConfigError(fmt::format("acceptance criterion {} is not in 1..13", k));
  }
  if (c.workers > 256) throw ConfigError("workers must be at most 256");
}

double tolerance(const ExperimentConfig& c, const std::string& key, double fallback) {
  const auto it = c.tolerances.find(key);
  return it == c.tolerances.end() ? fallback : it->second;
}

HamiltonianSymbol make_symbol(const HamiltonianSpec& h, int d) {
  if (h.name == "expression") {
    if (h.expression.empty()) throw ConfigError("hamiltonian 'expression' needs an expression string");
    return symbol_from_expression(h.expression, d);
  }
  return make_builtin(h.name, d, h.param, h.potential);
}

SpectralRoute parse_route(const std::string& s) {
  if (s == "automatic") return SpectralRoute::automatic;
  if (s == "hermite") return SpectralRoute::hermite;
  if (s == "factorized") return SpectralRoute::factorized;
  throw ConfigError(fmt::format("unknown spectral route '{}'", s));
}

std::string route_name(SpectralRoute r) {
  switch (r) {
    case SpectralRoute::automatic: return "automatic";
    case SpectralRoute::hermite: return "hermite";
    case SpectralRoute::factorized: return "factorized";
  }
  return "automatic";
}

}  // namespace tfprop

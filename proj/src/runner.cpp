#include "tfprop/runner.hpp"

#include "tfprop/record_io.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace tfprop {

using json = nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

void ArtifactSet::add(std::string name, std::string bytes) {
  for (auto& f : files_) {
    if (f.name == name) {
      f.bytes = std::move(bytes);
      return;
    }
  }
  files_.push_back({std::move(name), std::move(bytes)});
}

const Artifact* ArtifactSet::find(const std::string& name) const {
  for (const auto& f : files_) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::string ArtifactSet::manifest() const {
  std::vector<const Artifact*> sorted;
  for (const auto& f : files_) sorted.push_back(&f);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->name < b->name; });
  json files = json::array();
  for (const auto* f : sorted) files.push_back({{"name", f->name}, {"bytes", f->bytes.size()}, {"sha256", sha256_hex(f->bytes)}});
  return json{{"files", files}}.dump(1) + "\n";
}

void ArtifactSet::write(const std::filesystem::path& dir) const {
  for (const auto& f : files_) write_file_atomic(dir / f.name, f.bytes);
  write_file_atomic(dir / "manifest.json", manifest());
}

std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.10g}", v);
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string s;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
    if (quote) {
      s += '"';
      for (char c : cells[i]) {
        if (c == '"') s += '"';
        s += c;
      }
      s += '"';
    } else {
      s += cells[i];
    }
  }
  return s + "\n";
}

namespace {

// JSON numbers cannot be infinite; exponents use the string "inf".
json jnum(double v) {
  if (std::isfinite(v)) return v;
  return fmt_num(v);
}

SpatialGrid make_grid(const ExperimentConfig& c) { return SpatialGrid::centered(c.d, c.grid.n, c.grid.dx); }

SampledSignal make_signal(const ExperimentConfig& c, const SpatialGrid& grid) {
  const auto& s = c.signal;
  if (s.kind == "file") {
    auto f = decode_signal_record(read_file(s.file));
    if (!(f.grid == grid)) throw ConfigError("signal file grid differs from the configured grid");
    return f;
  }
  if (s.kind == "chirp") {
    if (c.d != 1) throw ConfigError("chirp signal is one-dimensional");
    return chirp_bump(grid, s.beta, s.half_width, s.plateau);
  }
  if (s.kind == "ground_state") {
    return SampledSignal::from_function(grid, [&](const VectorXd& x) {
      VectorXd y = x;
      y(0) -= s.shift;
      return std::polar(std::pow(kPi, -0.25 * static_cast<double>(x.size())) * std::exp(-0.5 * y.squaredNorm()),
                        s.kick * x(0));
    });
  }
  return gaussian_window(grid).samples;
}

std::vector<std::vector<double>> read_points_csv(const std::string& path, int d) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::vector<double>> pts;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(fmt::format("points file '{}': cannot read '{}'", path, cell));
      }
    }
    if (row.size() != static_cast<size_t>(2 * d)) {
      throw ConfigError(fmt::format("points file '{}': rows need {} columns", path, 2 * d));
    }
    pts.push_back(std::move(row));
  }
  return pts;
}

std::vector<VectorXd> config_points(const ExperimentConfig& c) {
  auto raw = c.points;
  if (!c.points_file.empty()) {
    auto more = read_points_csv(c.points_file, c.d);
    raw.insert(raw.end(), more.begin(), more.end());
  }
  if (raw.empty()) throw ConfigError("no points given (flow.points or flow.points_file)");
  std::vector<VectorXd> pts;
  for (const auto& p : raw) pts.push_back(Eigen::Map<const VectorXd>(p.data(), static_cast<Index>(p.size())));
  return pts;
}

std::vector<std::string> coord_names(const char* a, const char* b, int d) {
  std::vector<std::string> out;
  for (const char* base : {a, b}) {
    for (int k = 0; k < d; ++k) out.push_back(d == 1 ? std::string(base) : fmt::format("{}{}", base, k + 1));
  }
  return out;
}

struct Context {
  const ExperimentConfig& c;
  ArtifactSet& out;
  RunResult& result;
  void check(std::string name, bool pass, std::string detail) {
    result.checks.push_back({static_cast<int>(result.checks.size()) + 1, std::move(name), pass, std::move(detail)});
  }
};

FlowOptions flow_options(const ExperimentConfig& c) {
  FlowOptions o;
  o.step = tolerance(c, "flow_step", 1e-3);
  o.segment = c.segment;
  o.estimate_error = false;
  return o;
}

void run_flow(Context& ctx) {
  const auto& c = ctx.c;
  const auto a = make_symbol(c.hamiltonian, c.d);
  const auto pts = config_points(c);
  const double tol = tolerance(c, "symplectic", 1e-6);
  auto header = std::vector<std::string>{"t"};
  for (auto& s : coord_names("y", "eta", c.d)) header.push_back(s);
  for (auto& s : coord_names("x", "xi", c.d)) header.push_back(s);
  header.push_back("detJ");
  header.push_back("sympl_defect");
  std::string csv = csv_line(header);
  double worst = 0.0;
  for (double t : c.t) {
    for (const auto& w : pts) {
      const auto r = integrate_flow(a, t, PhasePoint(w), flow_options(c));
      std::vector<std::string> row{fmt_num(t)};
      for (Index k = 0; k < w.size(); ++k) row.push_back(fmt_num(w(k)));
      for (Index k = 0; k < w.size(); ++k) row.push_back(fmt_num(r.output.stacked()(k)));
      row.push_back(fmt_num(r.jacobian.determinant()));
      row.push_back(fmt_num(r.symplectic_defect));
      csv += csv_line(row);
      worst = std::max(worst, r.symplectic_defect);
    }
  }
  ctx.out.add("flow.csv", csv);
  ctx.check("symplectic_defect", worst < tol, fmt::format("max defect {} (limit {})", fmt_num(worst), fmt_num(tol)));
}

void run_phase(Context& ctx) {
  const auto& c = ctx.c;
  const auto a = make_symbol(c.hamiltonian, c.d);
  const auto pts = config_points(c);
  const double tol = tolerance(c, "eikonal", 1e-5);
  auto header = std::vector<std::string>{"t"};
  for (auto& s : coord_names("x", "eta", c.d)) header.push_back(s);
  for (const char* s : {"Phi", "residual", "detmix"}) header.push_back(s);
  std::string csv = csv_line(header);
  double worst = 0.0;
  bool built = true;
  std::string failure;
  for (double t : c.t) {
    PhaseFunction phi;
    try {
      phi = build_phase(a, t);
    } catch (const CausticError& e) {
      built = false;
      failure = fmt::format("t = {}: {}", fmt_num(t), e.what());
      continue;
    }
    for (const auto& z : pts) {
      const VectorXd x = z.head(c.d), eta = z.tail(c.d);
      const double res = eikonal_residual(phi, a, {z});
      const double h = 1e-4;
      MatrixXd mixed(c.d, c.d);
      for (int k = 0; k < c.d; ++k) {
        VectorXd ep = eta, em = eta;
        ep(k) += h;
        em(k) -= h;
        mixed.col(k) = (phi.sample(x, ep).grad_x - phi.sample(x, em).grad_x) / (2 * h);
      }
      std::vector<std::string> row{fmt_num(t)};
      for (Index k = 0; k < z.size(); ++k) row.push_back(fmt_num(z(k)));
      row.push_back(fmt_num(phi(x, eta)));
      row.push_back(fmt_num(res));
      row.push_back(fmt_num(mixed.determinant()));
      csv += csv_line(row);
      worst = std::max(worst, res);
    }
  }
  ctx.out.add("phase.csv", csv);
  ctx.check("phase_built", built, built ? "all times inside the tame horizon" : failure);
  ctx.check("eikonal_residual", worst < tol, fmt::format("max residual {} (limit {})", fmt_num(worst), fmt_num(tol)));
}

PropagatorPlan plan_for(const ExperimentConfig& c, const HamiltonianSymbol& a, double t) {
  auto plan = make_plan(a, t, parse_method(c.method), c.segment, c.dt);
  plan.route = parse_route(c.route);
  return plan;
}

void run_propagate(Context& ctx) {
  const auto& c = ctx.c;
  const auto a = make_symbol(c.hamiltonian, c.d);
  const auto grid = make_grid(c);
  const auto u0 = make_signal(c, grid);
  const double tol = tolerance(c, "unitarity", 1e-6);
  std::string csv = csv_line({"t", "method", "file", "norm_in", "norm_out", "norm_defect", "warnings"});
  double worst = 0.0;
  for (size_t i = 0; i < c.t.size(); ++i) {
    Diagnostics diag;
    const auto u = propagate_long_time(plan_for(c, a, c.t[i]), u0, &diag);
    std::string name = c.t.size() == 1 ? c.output_signal : fmt::format("t{}_{}", i, c.output_signal);
    ctx.out.add(name, encode_signal_record(u));
    const double defect = std::abs(u.l2_norm() - u0.l2_norm());
    worst = std::max(worst, defect);
    std::string warn;
    for (const auto& w : diag.warnings) warn += (warn.empty() ? "" : "; ") + w;
    csv += csv_line({fmt_num(c.t[i]), c.method, name, fmt_num(u0.l2_norm()), fmt_num(u.l2_norm()), fmt_num(defect), warn});
    for (const auto& w : diag.warnings) ctx.result.messages.push_back(fmt::format("t = {}: {}", fmt_num(c.t[i]), w));
  }
  ctx.out.add("propagate.csv", csv);
  if (parse_method(c.method) != Method::fio_type1) {
    ctx.check("unitarity", worst < tol, fmt::format("max norm defect {} (limit {})", fmt_num(worst), fmt_num(tol)));
  }
}

SignalOperator operator_for(const ExperimentConfig& c, const HamiltonianSymbol& a, double t) {
  if (!c.operator_symbol.empty()) return pseudodifferential_operator(c.operator_symbol, c.d);
  return propagator_operator(plan_for(c, a, t));
}

GaborMatrixSample matrix_for(const ExperimentConfig& c, const HamiltonianSymbol& a, double t) {
  const auto grid = make_grid(c);
  const auto g = window_from_id(grid, c.window);
  return compute_gabor_matrix(operator_for(c, a, t), g, c.w_lattice.make(c.d), c.z_lattice.make(c.d), t, c.workers);
}

void run_matrix(Context& ctx) {
  const auto& c = ctx.c;
  const auto a = make_symbol(c.hamiltonian, c.d);
  std::string jl;
  for (size_t i = 0; i < c.t.size(); ++i) {
    const auto k = matrix_for(c, a, c.t[i]);
    const auto name = fmt::format("matrix_t{}.bin", i);
    ctx.out.add(name, encode_matrix_record(k));
    jl += json{{"t", c.t[i]},
               {"file", name},
               {"descriptor", k.descriptor},
               {"window", k.window_id},
               {"rows", k.values.rows()},
               {"cols", k.values.cols()},
               {"max_abs", k.values.cwiseAbs().maxCoeff()}}
              .dump() +
          "\n";
  }
  ctx.out.add("matrix.jsonl", jl);
}

FlowMap fit_map_for(const ExperimentConfig& c, const HamiltonianSymbol& a, double t) {
  if (c.fit_map == "identity" || !c.operator_symbol.empty()) return identity_map();
  return make_composed_flow_map(a, t, c.segment, flow_options(c));
}

json fit_json(double t, const DecayFit& f) {
  return json{{"t", t},
              {"s_fit", f.s_fit},
              {"C", f.C},
              {"residual", f.residual},
              {"map", f.map_used},
              {"annuli_used", f.annuli_used},
              {"offdiag_mass", f.offdiag_mass},
              {"column_growth", f.column_growth},
              {"growth_flag", f.growth_flag}};
}

std::string envelope_rows(double t, const DecayFit& f) {
  std::string s;
  for (const auto& e : f.envelope) s += csv_line({fmt_num(t), f.map_used, fmt_num(e.r), fmt_num(e.envelope), fmt_num(e.fit)});
  return s;
}

void run_decay_fit(Context& ctx) {
  const auto& c = ctx.c;
  const auto a = make_symbol(c.hamiltonian, c.d);
  std::vector<GaborMatrixSample> mats;
  if (!c.matrix_file.empty()) {
    mats.push_back(decode_matrix_record(read_file(c.matrix_file)));
  } else {
    for (double t : c.t) mats.push_back(matrix_for(c, a, t));
  }
  std::string jl, env = csv_line({"t", "map", "r", "envelope", "fit_value"});
  for (const auto& k : mats) {
    const std::string map_name = (c.fit_map == "identity" || !c.operator_symbol.empty()) ? "identity" : "flow";
    try {
      const auto f = fit_decay(k, fit_map_for(c, a, k.t), map_name, c.fit);
      jl += fit_json(k.t, f).dump() + "\n";
      env += envelope_rows(k.t, f);
      ctx.check(fmt::format("fit_t={}", fmt_num(k.t)), f.residual < tolerance(c, "fit_residual", 0.5),
                fmt::format("s_fit {} residual {}", fmt_num(f.s_fit), fmt_num(f.residual)));
    } catch (const UnderdeterminedFit& e) {
      ctx.check(fmt::format("fit_t={}", fmt_num(k.t)), false, e.what());
    }
  }
  ctx.out.add("decay_fit.jsonl", jl);
  ctx.out.add("decay_envelope.csv", env);
}

void run_modnorm(Context& ctx) {
  const auto& c = ctx.c;
  const auto a = make_symbol(c.hamiltonian, c.d);
  const auto grid = make_grid(c);
  const auto g = window_from_id(grid, c.window);
  const auto battery = default_battery(grid);
  BoundednessOptions o;
  o.method = parse_method(c.method);
  o.route = parse_route(c.route);
  o.segment = c.segment;
  o.dt = c.dt;
  o.norm = c.norm;
  o.workers = c.workers;
  std::string csv = csv_line({"t", "signal_id", "p", "q", "r", "norm_in", "norm_out", "ratio"});
  bool finite = true;
  for (double p : c.p) {
    for (double r : c.r) {
      const auto rep = boundedness_report(a, c.t, p, r, battery, g, o);
      for (const auto& row : rep.rows) {
        csv += csv_line({fmt_num(row.t), row.signal_id, exponent_name(row.p), exponent_name(row.q), fmt_num(row.r),
                         fmt_num(row.norm_in), fmt_num(row.norm_out), fmt_num(row.ratio)});
        finite = finite && std::isfinite(row.ratio);
      }
      for (const auto& w : rep.warnings) {
        ctx.result.messages.push_back(fmt::format("p = {}, r = {}: {}", exponent_name(p), fmt_num(r), w));
      }
    }
  }
  ctx.out.add("modnorm.csv", csv);
  ctx.check("ratios_finite", finite, finite ? "all ratios finite" : "a norm ratio is not finite");
}

json score_json(const std::string& stage, double t, const RegularityScore& s) {
  json scores = json::array();
  for (double v : s.scores) scores.push_back(v);
  return json{{"stage", stage},  {"t", t},         {"region", s.region},   {"delta", s.delta},
              {"p", jnum(s.p)},  {"r", s.r},       {"j0", s.j0},           {"j_max", s.j_max},
              {"j_truncation", s.j_truncation},   {"scores", scores},     {"slope", s.slope},
              {"verdict", verdict_name(s.verdict)}, {"note", s.note}};
}

void run_singularity(Context& ctx) {
  const auto& c = ctx.c;
  const auto grid = make_grid(c);
  const auto g = window_from_id(grid, c.window);
  const auto f = make_signal(c, grid);
  RegularityOptions ro;
  ro.p = c.reg_p;
  ro.r = c.reg_r;
  const auto before = c.before_lattice.make(c.d);
  const auto V = stft(f, g, before);
  std::string jl;
  for (const auto& text : c.regions) {
    const auto gamma = parse_region(text, c.d);
    jl += score_json("initial", 0.0, best_over_deltas(V, gamma, c.deltas, ro)).dump() + "\n";
  }
  if (c.propagate_regions) {
    const auto a = make_symbol(c.hamiltonian, c.d);
    PropagationOptions po;
    po.reg = ro;
    po.deltas = c.deltas;
    po.method = parse_method(c.method);
    po.route = parse_route(c.route);
    po.segment = c.segment;
    po.dt = c.dt;
    if (c.signal.kind == "chirp") po.support = chirp_support(c.signal.beta, c.signal.half_width);
    for (double t : c.t) {
      for (const auto& text : c.regions) {
        const auto rep = propagation_check(f, a, t, parse_region(text, c.d), g, before, c.after_lattice.make(c.d), po);
        jl += score_json("before", t, rep.before).dump() + "\n";
        jl += score_json("after", t, rep.after).dump() + "\n";
        jl += score_json("reversed", t, rep.reversed).dump() + "\n";
        ctx.check(fmt::format("forward t={} {}", fmt_num(t), text), rep.forward_ok,
                  fmt::format("{} -> {}", verdict_name(rep.before.verdict), verdict_name(rep.after.verdict)));
        ctx.check(fmt::format("reversal t={} {}", fmt_num(t), text), rep.reversal_ok,
                  fmt::format("{} -> {}", verdict_name(rep.before.verdict), verdict_name(rep.reversed.verdict)));
      }
    }
  }
  ctx.out.add("singularity.jsonl", jl);
}

void run_acceptance_kind(Context& ctx) {
  auto checks = run_acceptance(ctx.c, ctx.c.criteria, ctx.out);
  for (auto& ch : checks) ctx.result.checks.push_back(std::move(ch));
}

std::vector<json> read_jsonl(const std::string& bytes) {
  std::vector<json> out;
  std::istringstream in(bytes);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError(fmt::format("bad JSON record: {}", e.what()));
    }
  }
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::string& bytes, const std::vector<std::string>& want) {
  std::istringstream in(bytes);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  std::vector<size_t> cols;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (header) {
      for (const auto& w : want) {
        const auto it = std::find(cells.begin(), cells.end(), w);
        if (it == cells.end()) throw FormatError(fmt::format("table lacks column '{}'", w));
        cols.push_back(static_cast<size_t>(it - cells.begin()));
      }
      header = false;
      continue;
    }
    std::vector<std::string> row;
    for (size_t k : cols) {
      if (k >= cells.size()) throw FormatError("short table row");
      row.push_back(cells[k]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::vector<Artifact> plot_tables(const std::vector<Artifact>& results) {
  std::string decay, mod, sing;
  for (const auto& f : results) {
    const auto base = std::filesystem::path(f.name).filename().string();
    if (base == "decay_envelope.csv" || ends_with(base, "_envelope.csv")) {
      for (const auto& r : read_csv(f.bytes, {"t", "map", "r", "envelope", "fit_value"})) {
        decay += csv_line({f.name, r[0], r[1], r[2], r[3], r[4]});
      }
    } else if (base == "modnorm.csv" || ends_with(base, "_modnorm.csv")) {
      // Maximum over battery signals for each (t, p, r).
      std::map<std::tuple<double, std::string, double>, double> best;
      std::map<std::tuple<double, std::string, double>, std::tuple<std::string, std::string, std::string>> label;
      for (const auto& r : read_csv(f.bytes, {"t", "p", "r", "ratio"})) {
        const auto key = std::make_tuple(std::stod(r[0]), r[1], std::stod(r[2]));
        const double v = std::stod(r[3]);
        if (!best.count(key) || v > best[key]) best[key] = v;
        label[key] = {r[0], r[1], r[2]};
      }
      for (const auto& [key, v] : best) {
        const auto& [t, p, r] = label[key];
        mod += csv_line({f.name, t, p, r, fmt_num(v)});
      }
    } else if (base == "singularity.jsonl" || ends_with(base, "_singularity.jsonl")) {
      for (const auto& rec : read_jsonl(f.bytes)) {
        if (!rec.contains("scores") || !rec.contains("region") || !rec.contains("j0")) {
          throw FormatError(fmt::format("'{}' is not a singularity report", f.name));
        }
        const int j0 = rec["j0"].get<int>();
        const auto stage = rec.value("stage", std::string("initial"));
        const double t = rec.value("t", 0.0);
        const double delta = rec.value("delta", 0.0);
        for (size_t j = 0; j < rec["scores"].size(); ++j) {
          sing += csv_line({f.name, stage, fmt_num(t), rec["region"].get<std::string>(), fmt_num(delta),
                            std::to_string(j0 + static_cast<int>(j)), fmt_num(rec["scores"][j].get<double>())});
        }
      }
    }
  }
  std::vector<Artifact> out;
  if (!decay.empty()) out.push_back({"plot_decay.csv", csv_line({"source", "t", "map", "r", "envelope", "fit_value"}) + decay});
  if (!mod.empty()) out.push_back({"plot_modnorm.csv", csv_line({"source", "t", "p", "r", "ratio"}) + mod});
  if (!sing.empty()) {
    out.push_back({"plot_singularity.csv", csv_line({"source", "stage", "t", "region", "delta", "j", "S_j"}) + sing});
  }
  return out;
}

std::vector<std::string> emit_plot_data(const std::filesystem::path& dir) {
  const auto manifest = json::parse(read_file(dir / "manifest.json"));
  if (!manifest.contains("files")) throw FormatError("manifest.json lacks 'files'");
  std::vector<Artifact> results;
  for (const auto& f : manifest["files"]) {
    const auto name = f["name"].get<std::string>();
    const auto bytes = read_file(dir / name);
    if (sha256_hex(bytes) != f["sha256"].get<std::string>()) {
      throw FormatError(fmt::format("'{}' does not match its manifest hash", name));
    }
    results.push_back({name, bytes});
  }
  std::vector<std::string> names;
  for (const auto& t : plot_tables(results)) {
    write_file_atomic(dir / t.name, t.bytes);
    names.push_back(t.name);
  }
  return names;
}

RunResult run(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  validate(config);
  RunResult result;
  result.dir = out_dir;
  ArtifactSet out;
  out.add("config.yaml", dump_config(config));
  Context ctx{config, out, result};
  const auto& k = config.kind;
  if (k == "flow") run_flow(ctx);
  else if (k == "phase") run_phase(ctx);
  else if (k == "propagate") run_propagate(ctx);
  else if (k == "matrix") run_matrix(ctx);
  else if (k == "decay-fit") run_decay_fit(ctx);
  else if (k == "modnorm") run_modnorm(ctx);
  else if (k == "singularity") run_singularity(ctx);
  else run_acceptance_kind(ctx);

  for (auto& t : plot_tables(out.files())) out.add(std::move(t.name), std::move(t.bytes));
  std::string checks = csv_line({"id", "name", "pass", "detail"});
  for (const auto& ch : result.checks) {
    checks += csv_line({std::to_string(ch.id), ch.name, ch.pass ? "pass" : "fail", ch.detail});
    if (!ch.pass) result.status = 1;
  }
  out.add("checks.csv", checks);
  out.write(out_dir);
  result.manifest_hash = out.manifest_hash();
  return result;
}

}  // namespace tfprop

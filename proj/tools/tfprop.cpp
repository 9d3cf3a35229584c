#include "tfprop/record_io.hpp"
#include "tfprop/runner.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <optional>

using namespace tfprop;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
};

// Flags that override individual config fields.
struct Overrides {
  std::string hamiltonian;
  std::vector<double> t;
  std::string points;
  std::string method;
  std::optional<double> dt;
  std::string input;
  std::string output_signal;
  std::vector<std::string> regions;
  std::string matrix;
  std::vector<int> criteria;
};

ExperimentConfig assemble(const std::string& kind, const Common& cm, const Overrides& ov) {
  ExperimentConfig c;
  if (!cm.config.empty()) {
    c = load_config(cm.config);
    if (c.kind != kind) throw ConfigError(fmt::format("config kind '{}' does not match subcommand '{}'", c.kind, kind));
  } else {
    c.kind = kind;
  }
  if (!ov.hamiltonian.empty()) c.hamiltonian.name = ov.hamiltonian;
  if (!ov.t.empty()) c.t = ov.t;
  if (!ov.points.empty()) c.points_file = ov.points;
  if (!ov.method.empty()) c.method = ov.method;
  if (ov.dt) c.dt = *ov.dt;
  if (!ov.input.empty()) {
    c.signal.kind = "file";
    c.signal.file = ov.input;
  }
  if (!ov.output_signal.empty()) c.output_signal = ov.output_signal;
  if (!ov.regions.empty()) c.regions = ov.regions;
  if (!ov.matrix.empty()) c.matrix_file = ov.matrix;
  if (!ov.criteria.empty()) c.criteria = ov.criteria;
  if (cm.workers) c.workers = *cm.workers;
  if (cm.seed) c.seed = *cm.seed;
  return c;
}

std::filesystem::path output_dir(const ExperimentConfig& c, const Common& cm) {
  if (!cm.out.empty()) return cm.out;
  if (const char* env = std::getenv("TFPROP_OUT"); env && *env) return env;
  return c.output;
}

int execute(const std::string& kind, const Common& cm, const Overrides& ov) {
  const auto c = assemble(kind, cm, ov);
  const auto dir = output_dir(c, cm);
  const auto res = run(c, dir);
  for (const auto& m : res.messages) fmt::print(stderr, "warning: {}\n", m);
  for (const auto& ch : res.checks) {
    if (kind == "acceptance") {
      fmt::print("criterion {:2d} [{}]: {} - {}\n", ch.id, ch.name, ch.pass ? "PASS" : "FAIL", ch.detail);
    } else {
      fmt::print("check {}: {} - {}\n", ch.name, ch.pass ? "pass" : "fail", ch.detail);
    }
  }
  fmt::print("manifest {} {}\n", (dir / "manifest.json").string(), res.manifest_hash);
  if (res.status != 0) {
    for (const auto& ch : res.checks) {
      if (!ch.pass) fmt::print(stderr, "error: check '{}' failed: {}\n", ch.name, ch.detail);
    }
  }
  return res.status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-frequency analysis of Schrodinger propagators"};
  app.require_subcommand(1);
  Common cm;
  Overrides ov;
  std::string plot_dir;

  auto common = [&](CLI::App* s) {
    s->add_option("--config", cm.config, "experiment config (YAML)");
    s->add_option("--out", cm.out, "output directory (overrides config and TFPROP_OUT)");
    s->add_option("--workers", cm.workers, "worker threads")->check(CLI::Range(1, 256));
    s->add_option("--seed", cm.seed, "seed for randomized probe sets");
  };
  const std::vector<std::pair<std::string, std::string>> kinds{
      {"flow", "Hamiltonian flow of points"},
      {"phase", "eikonal phase, residual and mixed-Hessian determinant"},
      {"propagate", "propagate a signal"},
      {"matrix", "Gabor matrix of the propagator or a pseudodifferential operator"},
      {"decay-fit", "off-diagonal decay fit of a Gabor matrix"},
      {"modnorm", "modulation-space norm ratios"},
      {"singularity", "Gabor singularity scores of a signal"},
      {"acceptance", "acceptance criteria"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : kinds) {
    auto* s = app.add_subcommand(name, help);
    common(s);
    subs[name] = s;
  }
  for (const char* n : {"flow", "phase", "propagate", "matrix", "decay-fit", "modnorm", "singularity"}) {
    subs[n]->add_option("--hamiltonian", ov.hamiltonian, "builtin Hamiltonian name");
    subs[n]->add_option("--t", ov.t, "times");
  }
  subs["flow"]->add_option("--points", ov.points, "CSV of initial points y.., eta..");
  subs["phase"]->add_option("--points", ov.points, "CSV of points x.., eta..");
  for (const char* n : {"propagate", "matrix", "decay-fit", "modnorm", "singularity"}) {
    subs[n]->add_option("--method", ov.method, "spectral, split_step or fio_type1");
    subs[n]->add_option("--dt", ov.dt, "split-step time step");
  }
  subs["propagate"]->add_option("--input", ov.input, "input signal record");
  subs["propagate"]->add_option("--output", ov.output_signal, "output signal record name");
  subs["decay-fit"]->add_option("--matrix", ov.matrix, "matrix record to fit");
  subs["singularity"]->add_option("--region", ov.regions, "region DSL string");
  subs["acceptance"]->add_option("--criteria", ov.criteria, "criterion numbers");
  auto* plot = app.add_subcommand("plot", "write long-format plot tables for a run directory");
  plot->add_option("dir", plot_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (plot->parsed()) {
      for (const auto& n : emit_plot_data(plot_dir)) fmt::print("{}\n", n);
      return 0;
    }
    for (const auto& [name, s] : subs) {
      if (s->parsed()) return execute(name, cm, ov);
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return 2;
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 2;
}

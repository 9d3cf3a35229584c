#include "tfprop/runner.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace tfprop {

namespace {

// Pinned acceptance limits.
constexpr double kFlowError = 1e-8;
constexpr double kSymplectic = 1e-6;
constexpr double kGroupLaw = 1e-7;
constexpr double kReconstruct = 1e-6;
constexpr double kWindowChange = 1e-6;
constexpr double kClosedForm = 1e-6;
constexpr double kRouteAgreement = 1e-6;
constexpr double kOrderTol = 0.1;
constexpr double kDecayExponent = 6.0;
constexpr double kFitResidual = 0.5;
constexpr double kControlFactor = 2.0;
constexpr double kControlMass = 1e3;
constexpr double kEnvelope = 1e-6;
constexpr double kLongTimeExponent = 5.0;
constexpr double kRevival = 1e-6;
constexpr double kRatioAtZero = 1e-10;
constexpr double kRatioJump = 0.25;
constexpr double kEikonal = 1e-5;
constexpr double kPhaseFlow = 1e-6;
constexpr double kCausticWindow = 0.1;

using Table = std::vector<std::vector<std::string>>;

std::string table_csv(const std::vector<std::string>& header, const Table& rows) {
  std::string s = csv_line(header);
  for (const auto& r : rows) s += csv_line(r);
  return s;
}

std::string yes(bool b) { return b ? "yes" : "no"; }

SampledSignal ground_state(const SpatialGrid& grid, double shift) {
  return SampledSignal::from_function(grid, [shift](const VectorXd& x) {
    return Complex(std::pow(kPi, -0.25) * std::exp(-0.5 * (x(0) - shift) * (x(0) - shift)));
  });
}

double rel(const SampledSignal& a, const SampledSignal& b) { return l2_distance(a, b) / b.l2_norm(); }

std::vector<VectorXd> disc_probes(double radius, double step) {
  std::vector<VectorXd> out;
  for (const auto& p : box_probes(1, radius, step)) {
    if (p.norm() <= radius + 1e-12) out.push_back(p);
  }
  return out;
}

struct Criterion {
  int id;
  std::string name;
  std::function<CheckResult(const ExperimentConfig&, ArtifactSet&)> run;
};

CheckResult flow_exactness(const ExperimentConfig& c, ArtifactSet& out) {
  FlowOptions o;
  o.step = 1e-3;
  o.estimate_error = false;
  const auto probes = disc_probes(10.0, 2.5);
  const std::vector<double> times{-kPi, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, kPi};
  Table rows;
  double err = 0.0, defect = 0.0;
  for (const std::string name : {"free_particle", "harmonic", "anharmonic"}) {
    const auto a = make_builtin(name, 1, name == "anharmonic" ? 0.5 : 0.0);
    for (double t : times) {
      double e_t = 0.0, d_t = 0.0;
      const bool exact = a.quadratic.has_value();
      const auto lf = exact ? flow_quadratic_exact(a, t) : LinearFlow{};
      for (const auto& w : probes) {
        const auto r = integrate_flow(a, t, PhasePoint(w), o);
        if (exact) e_t = std::max(e_t, (r.output.stacked() - lf(w)).norm());
        d_t = std::max(d_t, r.symplectic_defect);
      }
      err = std::max(err, e_t);
      defect = std::max(defect, d_t);
      rows.push_back({a.name, fmt_num(t), exact ? fmt_num(e_t) : "", fmt_num(d_t)});
    }
  }
  (void)c;
  out.add("acceptance/c01_flow.csv", table_csv({"hamiltonian", "t", "max_error", "max_symplectic_defect"}, rows));
  return {1, "flow exactness", err < kFlowError && defect < kSymplectic,
          fmt::format("max error {} (< {}), max symplectic defect {} (< {})", fmt_num(err), fmt_num(kFlowError),
                      fmt_num(defect), fmt_num(kSymplectic))};
}

CheckResult group_law(const ExperimentConfig&, ArtifactSet& out) {
  const auto probes = box_probes(1, 5.0, 1.0);
  Table rows;
  double worst = 0.0;
  for (const std::string name : {"free_particle", "harmonic", "anharmonic"}) {
    const auto a = make_builtin(name, 1, name == "anharmonic" ? 0.5 : 0.0);
    for (double t1 : {0.3, -0.3, 0.7}) {
      for (double t2 : {0.3, -0.3, 0.7}) {
        const double d = group_compose(a, t1, t2, probes);
        worst = std::max(worst, d);
        rows.push_back({a.name, fmt_num(t1), fmt_num(t2), fmt_num(d)});
      }
    }
  }
  out.add("acceptance/c02_group_law.csv", table_csv({"hamiltonian", "t1", "t2", "defect"}, rows));
  return {2, "group law", worst < kGroupLaw,
          fmt::format("max composition defect {} (< {})", fmt_num(worst), fmt_num(kGroupLaw))};
}

CheckResult stft_inversion(const ExperimentConfig&, ArtifactSet& out) {
  const auto grid = SpatialGrid::centered(1, 2048, 1.0 / 64.0);
  const auto g0 = gaussian_window(grid);
  const auto g1 = hermite_window(grid, 1);
  auto battery = default_battery(grid);
  auto chirp = SampledSignal::from_function(grid, [](const VectorXd& t) {
    return std::polar(std::exp(-kPi * t(0) * t(0) / 16.0), kTwoPi * t(0) * t(0));
  });
  chirp.values /= chirp.l2_norm();
  battery.push_back({"wide_chirp", chirp});
  Table rows;
  double worst_rec = 0.0, worst_wc = -std::numeric_limits<double>::infinity();
  for (const auto& s : battery) {
    const double r = reconstruct(s.f, g0, 4.0);
    const double w = window_change_violation(s.f, g0, g1, g1, covering_lattice(s.f, g0, 4.0));
    worst_rec = std::max(worst_rec, r);
    worst_wc = std::max(worst_wc, w);
    rows.push_back({s.id, fmt_num(r), fmt_num(w)});
  }
  out.add("acceptance/c03_stft_inversion.csv", table_csv({"signal", "reconstruction", "window_change_violation"}, rows));
  return {3, "STFT inversion", worst_rec < kReconstruct && worst_wc < kWindowChange,
          fmt::format("{} signals, max residual {} (< {}), max domination violation {} (< {})", battery.size(),
                      fmt_num(worst_rec), fmt_num(kReconstruct), fmt_num(worst_wc), fmt_num(kWindowChange))};
}

CheckResult closed_form_stft(const ExperimentConfig&, ArtifactSet& out) {
  const auto grid = SpatialGrid::centered(1, 1024, 1.0 / 32.0);
  const auto g = gaussian_window(grid);
  const auto lat = PhaseLattice::centered(1, 6.0, 0.25);
  const auto V = stft(g.samples, g, lat);
  double worst = 0.0;
  Index n = 0;
  for (Index i = 0; i < lat.x_count(); ++i) {
    for (Index j = 0; j < lat.eta_count(); ++j) {
      const double x = lat.x_point(i)(0), e = lat.eta_point(j)(0);
      if (x * x + e * e > 36.0 + 1e-9) continue;
      worst = std::max(worst, std::abs(std::abs(V.values(i, j)) - std::exp(-kPi * (x * x + e * e) / 2.0)));
      ++n;
    }
  }
  out.add("acceptance/c04_closed_form.csv",
          table_csv({"points", "max_abs_error"}, {{std::to_string(n), fmt_num(worst)}}));
  return {4, "closed-form STFT", worst < kClosedForm,
          fmt::format("{} lattice points, max error {} (< {})", n, fmt_num(worst), fmt_num(kClosedForm))};
}

CheckResult route_agreement(const ExperimentConfig&, ArtifactSet& out) {
  const auto grid = SpatialGrid::centered(1, 1024, 1.0 / 32.0);
  const auto harm = make_builtin("harmonic");
  const auto u0 = ground_state(grid, 1.5);
  Table rows;
  double worst = 0.0, unit = 0.0;
  for (double t : {0.25, 0.5, 1.0}) {
    const auto us = propagate_spectral(harm, t, u0);
    const auto uf = propagate_split_step(harm, t, u0, 1e-3);
    const double d = rel(uf, us);
    worst = std::max(worst, d);
    unit = std::max({unit, std::abs(us.l2_norm() - u0.l2_norm()), std::abs(uf.l2_norm() - u0.l2_norm())});
    rows.push_back({"relative_l2_difference", fmt_num(t), fmt_num(d)});
    rows.push_back({"max_abs_difference", fmt_num(t), fmt_num((uf.values - us.values).cwiseAbs().maxCoeff())});
  }
  const auto an = make_builtin("anharmonic", 1, 0.5);
  const auto u1 = propagate_split_step(an, 0.5, u0, 0.02);
  const auto u2 = propagate_split_step(an, 0.5, u0, 0.01);
  const auto u3 = propagate_split_step(an, 0.5, u0, 0.005);
  const double order = std::log2(l2_distance(u1, u2) / l2_distance(u2, u3));
  rows.push_back({"self_convergence_order", "0.5", fmt_num(order)});
  rows.push_back({"unitarity_defect", "", fmt_num(unit)});
  out.add("acceptance/c05_propagator.csv", table_csv({"quantity", "t", "value"}, rows));
  const bool pass = worst < kRouteAgreement && std::abs(order - 2.0) <= kOrderTol && unit < kRouteAgreement;
  return {5, "propagator routes", pass,
          fmt::format("spectral vs split-step {} (< {}), split-step order {} (2 +- {}), norm defect {}", fmt_num(worst),
                      fmt_num(kRouteAgreement), fmt_num(order), fmt_num(kOrderTol), fmt_num(unit))};
}

PropagatorPlan plan_for(const HamiltonianSymbol& a, double t, double segment, double dt) {
  const bool quad = as_isotropic_oscillator(a).has_value();
  auto plan = make_plan(a, t, quad ? Method::spectral : Method::split_step, segment, dt);
  plan.route = SpectralRoute::factorized;
  return plan;
}

struct MatrixSetup {
  SpatialGrid grid = SpatialGrid::centered(1, 4096, 1.0 / 32.0);
  PhaseLattice w = PhaseLattice::centered(1, 4.0, 0.5);
  PhaseLattice z = PhaseLattice::centered(1, 12.0, 0.5);
};

CheckResult theorem_decay(const ExperimentConfig& c, ArtifactSet& out) {
  const MatrixSetup m;
  const auto g = gaussian_window(m.grid);
  const double dt = tolerance(c, "matrix_dt", 2e-3);
  FlowOptions fo;
  fo.estimate_error = false;
  Table rows;
  std::string env = csv_line({"t", "map", "r", "envelope", "fit_value"});
  bool pass = true;
  double s_min = std::numeric_limits<double>::infinity();
  int controls = 0, controls_ok = 0;
  for (const std::string name : {"free_particle", "harmonic", "anharmonic"}) {
    const auto a = make_builtin(name, 1, name == "anharmonic" ? 0.5 : 0.0);
    for (double t : {0.1, 0.5, 1.0, kPi / 4}) {
      const auto k = compute_gabor_matrix(propagator_operator(plan_for(a, t, 0.1, dt)), g, m.w, m.z, t, c.workers);
      const auto flow = fit_decay(k, make_composed_flow_map(a, t, 0.1, fo), "flow");
      const auto ident = fit_decay(k, identity_map(), "identity");
      const bool fit_ok = flow.s_fit >= kDecayExponent && flow.residual < kFitResidual;
      bool control_ok = true;
      if (t >= 0.5) {
        ++controls;
        control_ok = ident.s_fit * kControlFactor <= flow.s_fit && ident.offdiag_mass >= kControlMass * flow.offdiag_mass;
        controls_ok += control_ok;
      }
      pass = pass && fit_ok && control_ok;
      s_min = std::min(s_min, flow.s_fit);
      rows.push_back({a.name, fmt_num(t), fmt_num(flow.s_fit), fmt_num(flow.C), fmt_num(flow.residual),
                      fmt_num(flow.offdiag_mass), fmt_num(ident.s_fit), fmt_num(ident.offdiag_mass), yes(fit_ok),
                      t >= 0.5 ? yes(control_ok) : ""});
      for (const auto& e : flow.envelope) env += csv_line({fmt_num(t), a.name + ":flow", fmt_num(e.r), fmt_num(e.envelope), fmt_num(e.fit)});
      for (const auto& e : ident.envelope) env += csv_line({fmt_num(t), a.name + ":identity", fmt_num(e.r), fmt_num(e.envelope), fmt_num(e.fit)});
    }
  }
  out.add("acceptance/c06_decay.csv",
          table_csv({"hamiltonian", "t", "s_fit", "C", "residual", "offdiag_mass", "s_identity", "offdiag_identity",
                     "fit_ok", "control_ok"},
                    rows));
  out.add("acceptance/c06_envelope.csv", env);
  return {6, "propagator decay along the flow", pass,
          fmt::format("min s_fit {} (>= {}), negative controls {}/{} separated", fmt_num(s_min), fmt_num(kDecayExponent),
                      controls_ok, controls)};
}

CheckResult almost_diagonal(const ExperimentConfig& c, ArtifactSet& out) {
  const auto grid = SpatialGrid::centered(1, 1024, 1.0 / 32.0);
  const auto g = gaussian_window(grid);
  const auto w = PhaseLattice::centered(1, 4.0, 0.5);
  const auto z = PhaseLattice::centered(1, 12.0, 0.5);
  GaborMatrixSample k1;
  almost_diag_check("1", g, w, z, {}, c.workers, &k1);
  double env_err = 0.0;
  for (Index i = 0; i < w.size(); ++i) {
    for (Index j = 0; j < z.size(); ++j) {
      const double r2 = (z.point(j) - w.point(i)).squaredNorm();
      env_err = std::max(env_err, std::abs(std::abs(k1.values(i, j)) - std::exp(-kPi * r2 / 2.0)));
    }
  }
  const auto smooth = almost_diag_check("sin(x)*cos(eta)", g, w, z, {}, c.workers);
  const auto grow = almost_diag_check("x", g, w, z, {}, c.workers);
  Table rows{{"1", fmt_num(env_err), "", ""},
             {"sin(x)*cos(eta)", "", fmt_num(smooth.s_fit), yes(smooth.growth_flag)},
             {"x", "", fmt_num(grow.s_fit), yes(grow.growth_flag)}};
  out.add("acceptance/c07_almost_diag.csv", table_csv({"symbol", "envelope_error", "s_fit", "growth_flag"}, rows));
  const bool pass = env_err < kEnvelope && smooth.s_fit >= kDecayExponent && !smooth.growth_flag && grow.growth_flag;
  return {7, "almost-diagonalization", pass,
          fmt::format("identity envelope error {} (< {}), smooth symbol s_fit {} (>= {}), unbounded symbol flagged {}",
                      fmt_num(env_err), fmt_num(kEnvelope), fmt_num(smooth.s_fit), fmt_num(kDecayExponent),
                      yes(grow.growth_flag))};
}

CheckResult long_time(const ExperimentConfig& c, ArtifactSet& out) {
  const MatrixSetup m;
  const auto g = gaussian_window(m.grid);
  const auto harm = make_builtin("harmonic");
  const double t = 2.5;
  FlowOptions fo;
  fo.estimate_error = false;
  auto plan = make_plan(harm, t, Method::spectral, 0.1);
  plan.route = SpectralRoute::factorized;
  const auto k = compute_gabor_matrix(propagator_operator(plan), g, m.w, m.z, t, c.workers);
  const auto fit = fit_decay(k, make_composed_flow_map(harm, t, 0.1, fo), "flow");

  const auto grid = SpatialGrid::centered(1, 1024, 1.0 / 32.0);
  const auto u0 = ground_state(grid, 1.5);
  auto rplan = make_plan(harm, kPi, Method::spectral, 0.1);
  rplan.route = SpectralRoute::factorized;
  const auto u = propagate_long_time(rplan, u0);
  const double revival = (u.values.cwiseAbs() - u0.values.cwiseAbs()).cwiseAbs().maxCoeff();

  std::string env = csv_line({"t", "map", "r", "envelope", "fit_value"});
  for (const auto& e : fit.envelope) env += csv_line({fmt_num(t), "flow", fmt_num(e.r), fmt_num(e.envelope), fmt_num(e.fit)});
  out.add("acceptance/c08_long_time.csv",
          table_csv({"quantity", "value"}, {{"segments", std::to_string(plan.segments.size())},
                                            {"s_fit", fmt_num(fit.s_fit)},
                                            {"residual", fmt_num(fit.residual)},
                                            {"revival_error", fmt_num(revival)}}));
  out.add("acceptance/c08_envelope.csv", env);
  return {8, "long-time composition", fit.s_fit >= kLongTimeExponent && revival < kRevival,
          fmt::format("s_fit {} (>= {}) from {} segments, revival error {} (< {})", fmt_num(fit.s_fit),
                      fmt_num(kLongTimeExponent), plan.segments.size(), fmt_num(revival), fmt_num(kRevival))};
}

CheckResult boundedness(const ExperimentConfig& c, ArtifactSet& out) {
  const auto grid = SpatialGrid::centered(1, 1024, 1.0 / 32.0);
  const auto g = gaussian_window(grid);
  const auto battery = default_battery(grid);
  const auto harm = make_builtin("harmonic");
  BoundednessOptions o;
  o.route = SpectralRoute::factorized;
  o.workers = c.workers;
  const std::vector<double> ts{0.0, 0.25, 0.5, 1.0};
  std::string csv = csv_line({"t", "signal_id", "p", "q", "r", "norm_in", "norm_out", "ratio"});
  Table summary;
  double worst_jump = 0.0, worst_zero = 0.0;
  bool finite = true;
  for (double p : {1.0, 2.0, std::numeric_limits<double>::infinity()}) {
    for (double r : {-2.0, 0.0, 2.0}) {
      const auto rep = boundedness_report(harm, ts, p, r, battery, g, o);
      for (const auto& row : rep.rows) {
        csv += csv_line({fmt_num(row.t), row.signal_id, exponent_name(row.p), exponent_name(row.q), fmt_num(row.r),
                         fmt_num(row.norm_in), fmt_num(row.norm_out), fmt_num(row.ratio)});
        finite = finite && std::isfinite(row.ratio);
        if (row.t == 0.0) worst_zero = std::max(worst_zero, std::abs(row.ratio - 1.0));
      }
      worst_jump = std::max(worst_jump, rep.max_jump);
      std::vector<std::string> line{exponent_name(p), fmt_num(r)};
      for (double v : rep.max_ratio) line.push_back(fmt_num(v));
      line.push_back(fmt_num(rep.max_jump));
      summary.push_back(line);
    }
  }
  out.add("acceptance/c09_modnorm.csv", csv);
  out.add("acceptance/c09_summary.csv",
          table_csv({"p", "r", "max_ratio_t0", "max_ratio_t0.25", "max_ratio_t0.5", "max_ratio_t1", "max_jump"}, summary));
  const bool pass = finite && worst_zero <= kRatioAtZero && worst_jump <= kRatioJump;
  return {9, "modulation-space boundedness", pass,
          fmt::format("ratios finite {}, |ratio(0) - 1| {} (<= {}), max jump {} (<= {})", yes(finite),
                      fmt_num(worst_zero), fmt_num(kRatioAtZero), fmt_num(worst_jump), fmt_num(kRatioJump))};
}

CheckResult eikonal(const ExperimentConfig&, ArtifactSet& out) {
  PhaseProbes probes = box_probes(1, 3.0, 1.0);
  Table rows;
  double worst_e = 0.0, worst_f = 0.0;
  for (const std::string name : {"free_particle", "harmonic"}) {
    const auto a = make_builtin(name);
    const double T = detect_tame_horizon(a);
    for (double t : {T / 4, T / 2, T}) {
      const auto phi = build_phase(a, t);
      const double e = eikonal_residual(phi, a, probes);
      const double f = phase_flow_residual(phi, a, probes);
      worst_e = std::max(worst_e, e);
      worst_f = std::max(worst_f, f);
      rows.push_back({a.name, fmt_num(T), fmt_num(t), fmt_num(e), fmt_num(f)});
    }
  }
  const auto harm = make_builtin("harmonic");
  const double tc = find_caustic_time(harm);
  const auto rep = tame_check(build_phase(harm, tc - 1e-3));
  const bool trigger = std::abs(tc - kPi / 4) < kCausticWindow && rep.detcond_lower < 0.1 + 1e-2;
  out.add("acceptance/c10_eikonal.csv", table_csv({"hamiltonian", "horizon", "t", "eikonal_residual", "phase_flow_residual"}, rows));
  out.add("acceptance/c10_caustic.csv",
          table_csv({"t_caustic", "detcond_lower", "c_lower"}, {{fmt_num(tc), fmt_num(rep.detcond_lower), fmt_num(rep.c_lower)}}));
  return {10, "eikonal and caustic", worst_e < kEikonal && worst_f < kPhaseFlow && trigger,
          fmt::format("eikonal residual {} (< {}), phase-flow residual {} (< {}), harmonic caustic at t = {} (pi/4 +- {})",
                      fmt_num(worst_e), fmt_num(kEikonal), fmt_num(worst_f), fmt_num(kPhaseFlow), fmt_num(tc),
                      fmt_num(kCausticWindow))};
}

CheckResult neighbourhoods(const ExperimentConfig& c, ArtifactSet& out) {
  struct MapCase {
    std::string name;
    PhaseMap chi;
    LipschitzEstimate lip;
  };
  ProbeRegion probe;
  probe.radius = 4.0;
  probe.step = 0.5;
  probe.seed = c.seed;
  std::vector<MapCase> maps;
  maps.push_back({"identity", PhaseMap::identity(1), LipschitzEstimate{}});
  const auto free = make_builtin("free_particle");
  const auto harm = make_builtin("harmonic");
  maps.push_back({"free_particle t=0.5", PhaseMap::flow(free, 0.5), lipschitz_estimate(free, 0.5, probe)});
  maps.push_back({"harmonic t=0.3", PhaseMap::flow(harm, 0.3), lipschitz_estimate(harm, 0.3, probe)});
  const std::vector<std::string> regions{"ray(dir=(1,0))", "cone(dir=(1,2),angle=0.2)", "curve(phi=x^2/8,x=(-16,16))"};
  Table rows;
  int ok = 0, total = 0;
  for (const auto& text : regions) {
    const auto gamma = parse_region(text);
    for (const auto& m : maps) {
      for (double delta : {0.1, 0.3}) {
        ++total;
        try {
          const auto rep = delta_star(gamma, m.chi, m.lip, delta);
          ++ok;
          rows.push_back({text, m.name, fmt_num(delta), fmt_num(rep.delta_star), std::to_string(rep.halvings),
                          std::to_string(rep.points_checked), "pass", ""});
        } catch (const GeometryError& e) {
          rows.push_back({text, m.name, fmt_num(delta), "", "", "", "fail", e.what()});
        }
      }
    }
  }
  out.add("acceptance/c11_neighbourhoods.csv",
          table_csv({"region", "map", "delta", "delta_star", "halvings", "points", "inclusions", "counterexample"}, rows));
  return {11, "neighbourhood inclusions", ok == total, fmt::format("{}/{} region-map-delta cases verified", ok, total)};
}

CheckResult propagation(const ExperimentConfig& c, ArtifactSet& out) {
  (void)c;
  const auto grid = SpatialGrid::centered(1, 16384, 1.0 / 64.0);
  const auto u0 = chirp_bump(grid);
  const auto free = make_builtin("free_particle");
  const auto before = PhaseLattice::box(1, -28, 28, 0.25, -28, 28, 0.25);
  const auto after = PhaseLattice::box(1, -120, 120, 0.25, -28, 28, 0.25);
  PropagationOptions o;
  o.support = chirp_support();
  const auto cone = parse_region("cone(dir=(1,2),angle=0.2)");
  const auto outside = Region::complement(cone);
  struct Want {
    const Region* region;
    Verdict verdict;
  };
  const std::vector<Want> wants{{&outside, Verdict::regular}, {&cone, Verdict::singular}};
  Table rows;
  std::string jl;
  bool pass = true;
  int matched = 0, total = 0;
  std::vector<std::string> signature[2];
  int wi = 0;
  for (const std::string wid : {"gaussian", "hermite1"}) {
    const auto g = window_from_id(grid, wid);
    for (double t : {0.25, 0.5}) {
      for (const auto& w : wants) {
        const auto rep = propagation_check(u0, free, t, *w.region, g, before, after, o);
        const bool ok = rep.before.verdict == w.verdict && rep.after.verdict == w.verdict && rep.reversal_ok;
        ++total;
        matched += ok;
        pass = pass && ok;
        signature[wi].push_back(verdict_name(rep.before.verdict) + verdict_name(rep.after.verdict) +
                                verdict_name(rep.reversed.verdict));
        rows.push_back({wid, fmt_num(t), w.region->descriptor(), verdict_name(w.verdict), verdict_name(rep.before.verdict),
                        verdict_name(rep.after.verdict), verdict_name(rep.reversed.verdict), fmt_num(rep.before.slope),
                        fmt_num(rep.after.slope), fmt_num(rep.after.delta), yes(ok)});
        for (const auto* s : {&rep.before, &rep.after, &rep.reversed}) {
          std::string scores;
          for (double v : s->scores) scores += (scores.empty() ? "" : " ") + fmt_num(v);
          jl += csv_line({wid, fmt_num(t), s == &rep.before ? "before" : s == &rep.after ? "after" : "reversed",
                          s->region, fmt_num(s->delta), std::to_string(s->j0), std::to_string(s->j_max), scores});
        }
      }
    }
    ++wi;
  }
  const bool window_independent = signature[0] == signature[1];
  out.add("acceptance/c12_propagation.csv",
          table_csv({"window", "t", "region", "expected", "before", "after", "reversed", "slope_before", "slope_after",
                     "delta_after", "ok"},
                    rows));
  out.add("acceptance/c12_scores.csv", csv_line({"window", "t", "stage", "region", "delta", "j0", "j_max", "scores"}) + jl);
  return {12, "singularity propagation", pass && window_independent,
          fmt::format("{}/{} (window, t, region) cases as expected, window-independent verdicts {}", matched, total,
                      yes(window_independent))};
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "flow exactness", flow_exactness},
      {2, "group law", group_law},
      {3, "STFT inversion", stft_inversion},
      {4, "closed-form STFT", closed_form_stft},
      {5, "propagator routes", route_agreement},
      {6, "propagator decay along the flow", theorem_decay},
      {7, "almost-diagonalization", almost_diagonal},
      {8, "long-time composition", long_time},
      {9, "modulation-space boundedness", boundedness},
      {10, "eikonal and caustic", eikonal},
      {11, "neighbourhood inclusions", neighbourhoods},
      {12, "singularity propagation", propagation},
  };
  return all;
}

CheckResult guarded(const Criterion& cr, const ExperimentConfig& c, ArtifactSet& out) {
  try {
    return cr.run(c, out);
  } catch (const Error& e) {
    return {cr.id, cr.name, false, fmt::format("error: {}", e.what())};
  }
}

std::vector<CheckResult> run_set(const ExperimentConfig& c, const std::vector<int>& ids, ArtifactSet& out) {
  std::vector<CheckResult> res;
  for (const auto& cr : criteria()) {
    if (std::find(ids.begin(), ids.end(), cr.id) == ids.end()) continue;
    fmt::print(stderr, "[acceptance] criterion {}: {}\n", cr.id, cr.name);
    res.push_back(guarded(cr, c, out));
  }
  return res;
}

}  // namespace

std::vector<CheckResult> run_acceptance(const ExperimentConfig& c, const std::vector<int>& ids_in, ArtifactSet& out) {
  std::vector<int> ids = ids_in;
  if (ids.empty()) {
    for (int k = 1; k <= 13; ++k) ids.push_back(k);
  }
  std::vector<int> numeric;
  for (int k : ids) {
    if (k != 13) numeric.push_back(k);
  }
  ArtifactSet first;
  auto results = run_set(c, numeric, first);
  for (const auto& f : first.files()) out.add(f.name, f.bytes);

  if (std::find(ids.begin(), ids.end(), 13) != ids.end()) {
    fmt::print(stderr, "[acceptance] criterion 13: repeating criteria for determinism\n");
    ArtifactSet second;
    run_set(c, numeric, second);
    const auto h1 = first.manifest_hash(), h2 = second.manifest_hash();
    out.add("acceptance/c13_determinism.csv", table_csv({"run", "manifest_sha256"}, {{"1", h1}, {"2", h2}}));
    results.push_back({13, "determinism", h1 == h2,
                       fmt::format("manifest hashes {} and {} ({} files)", h1.substr(0, 16), h2.substr(0, 16),
                                   first.files().size())});
  }
  std::string summary = csv_line({"criterion", "name", "pass", "detail"});
  for (const auto& r : results) summary += csv_line({std::to_string(r.id), r.name, r.pass ? "pass" : "fail", r.detail});
  out.add("acceptance/summary.csv", summary);
  return results;
}

}  // namespace tfprop

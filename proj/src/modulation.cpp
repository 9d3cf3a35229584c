#include "tfprop/modulation.hpp"

#include "tfprop/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace tfprop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_exponent(double p) {
  if (!(p >= 1.0)) throw DomainError(fmt::format("Lebesgue exponent {} is not in [1, inf]", p));
}

// Accumulates a p-norm (p possibly infinite) of weighted samples.
struct NormAccumulator {
  double p;
  double acc = 0.0;
  void add(double v) {
    if (std::isinf(p)) {
      acc = std::max(acc, v);
    } else {
      acc += std::pow(v, p);
    }
  }
  double value(double cell) const { return std::isinf(p) ? acc : std::pow(acc * cell, 1.0 / p); }
};

double mixed_norm(const StftArray& V, double p, double q, double r, double r_lo, double r_hi) {
  const auto& lat = V.lattice;
  const int d = lat.dim();
  double dx = 1.0, deta = 1.0;
  for (const auto& a : lat.x_axes()) dx *= a.step;
  for (const auto& a : lat.eta_axes()) deta *= a.step;
  NormAccumulator outer{q};
  VectorXd z(2 * d);
  for (Index j = 0; j < lat.eta_count(); ++j) {
    z.tail(d) = lat.eta_point(j);
    NormAccumulator inner{p};
    for (Index i = 0; i < lat.x_count(); ++i) {
      z.head(d) = lat.x_point(i);
      const double rho = z.norm();
      if (rho > r_hi || rho < r_lo) continue;
      inner.add(std::abs(V.values(i, j)) * std::pow(japanese_bracket(z), r));
    }
    outer.add(inner.value(dx));
  }
  return outer.value(deta);
}

}  // namespace

double parse_exponent(const std::string& s) {
  if (s == "inf" || s == "infinity" || s == "Inf") return kInf;
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw DomainError(fmt::format("cannot parse exponent '{}'", s));
  }
  if (pos != s.size()) throw DomainError(fmt::format("cannot parse exponent '{}'", s));
  check_exponent(v);
  return v;
}

std::string exponent_name(double p) { return std::isinf(p) ? "inf" : fmt::format("{}", p); }

ModNorm mod_norm(const StftArray& V, double p, double q, double r, const ModNormOptions& opts) {
  check_exponent(p);
  check_exponent(q);
  const auto& lat = V.lattice;
  for (const auto* axes : {&lat.x_axes(), &lat.eta_axes()}) {
    for (const auto& a : *axes) {
      if (a.start > -opts.R + 1e-9 || a.last() < opts.R - 1e-9) {
        throw DomainError(fmt::format("STFT lattice does not cover the ball of radius {}", opts.R));
      }
    }
  }
  ModNorm m;
  m.p = p;
  m.q = q;
  m.r = r;
  m.R = opts.R;
  m.lattice = fmt::format("ball R={} step={} d={}", opts.R, lat.x_axes()[0].step, lat.dim());
  m.value = mixed_norm(V, p, q, r, 0.0, opts.R);
  const double tail = mixed_norm(V, p, q, r, opts.R - opts.tail_band, opts.R);
  m.tail_fraction = m.value > 0.0 ? tail / m.value : 0.0;
  if (m.tail_fraction > opts.tail_limit) {
    m.warnings.push_back(fmt::format("truncation: shell [{}, {}] carries {:.3g} of the norm", opts.R - opts.tail_band,
                                     opts.R, m.tail_fraction));
  }
  return m;
}

ModNorm mod_norm(const SampledSignal& f, const Window& g, double p, double q, double r, const ModNormOptions& opts) {
  if (opts.oversampling < 2.0) throw DomainError("modulation norm needs oversampling >= 2");
  const double h = 1.0 / opts.oversampling;
  const double edge = h * std::ceil(opts.R / h - 1e-9);
  const auto lattice = PhaseLattice::box(f.grid.dim(), -edge, edge, h, -edge, edge, h);
  return mod_norm(stft(f, g, lattice), p, q, r, opts);
}

std::vector<BatterySignal> default_battery(const SpatialGrid& grid) {
  const double d = grid.dim();
  const double c = std::pow(2.0, d / 4.0);
  std::vector<BatterySignal> out;
  auto add = [&](std::string id, std::function<Complex(const VectorXd&)> fn) {
    SampledSignal s = SampledSignal::from_function(grid, fn);
    s.values /= s.l2_norm();
    out.push_back({std::move(id), std::move(s)});
  };
  add("gaussian", [c](const VectorXd& x) { return Complex(c * std::exp(-kPi * x.squaredNorm())); });
  add("shifted", [c](const VectorXd& x) {
    VectorXd y = x;
    y(0) -= 2.0;
    return std::polar(c * std::exp(-kPi * y.squaredNorm()), kTwoPi * x(0));
  });
  add("hermite2", [](const VectorXd& x) {
    const double u = std::sqrt(kTwoPi) * x(0);
    return Complex((u * u - 1.0) * std::exp(-kPi * x.squaredNorm()));
  });
  add("squeezed", [](const VectorXd& x) { return Complex(std::exp(-4.0 * kPi * x.squaredNorm())); });
  add("chirped", [c](const VectorXd& x) { return std::polar(c * std::exp(-kPi * x.squaredNorm()), kPi * x.squaredNorm()); });
  return out;
}

BoundednessReport boundedness_report(const HamiltonianSymbol& a, const std::vector<double>& t_list, double p, double r,
                                     const std::vector<BatterySignal>& battery, const Window& g,
                                     const BoundednessOptions& opts) {
  BoundednessReport rep;
  rep.t = t_list;
  std::sort(rep.t.begin(), rep.t.end());
  rep.t.erase(std::unique(rep.t.begin(), rep.t.end()), rep.t.end());
  const std::size_t ns = battery.size(), nt = rep.t.size();

  std::vector<double> norm_in(ns);
  parallel_for(ns, opts.workers, [&](std::size_t i) { norm_in[i] = mod_norm(battery[i].f, g, p, p, r, opts.norm).value; });

  rep.rows.resize(nt * ns);
  std::vector<std::vector<std::string>> warnings(nt * ns);
  parallel_for(nt * ns, opts.workers, [&](std::size_t k) {
    const std::size_t it = k / ns, is = k % ns;
    const double t = rep.t[it];
    auto plan = make_plan(a, t, opts.method, opts.segment, opts.dt);
    plan.route = opts.route;
    Diagnostics diag;
    const auto u = propagate_long_time(plan, battery[is].f, &diag);
    const auto m = mod_norm(u, g, p, p, r, opts.norm);
    auto& row = rep.rows[k];
    row = {t, battery[is].id, p, p, r, norm_in[is], m.value, m.value / norm_in[is]};
    for (const auto& w : diag.warnings) warnings[k].push_back(fmt::format("t={} {}: {}", t, battery[is].id, w));
    for (const auto& w : m.warnings) warnings[k].push_back(fmt::format("t={} {}: {}", t, battery[is].id, w));
  });
  for (auto& w : warnings) rep.warnings.insert(rep.warnings.end(), w.begin(), w.end());

  rep.max_ratio.assign(nt, 0.0);
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    const auto& row = rep.rows[k];
    if (!std::isfinite(row.ratio)) rep.warnings.push_back(fmt::format("t={} {}: non-finite ratio", row.t, row.signal_id));
    rep.max_ratio[k / ns] = std::max(rep.max_ratio[k / ns], row.ratio);
  }
  for (std::size_t i = 1; i < nt; ++i) {
    rep.max_jump = std::max(rep.max_jump, std::abs(rep.max_ratio[i] - rep.max_ratio[i - 1]) / rep.max_ratio[i - 1]);
  }
  return rep;
}

WeightEquivalence weight_composition_check(double r, const FlowMap& chi, const FlowMap& chi_inv,
                                           const LipschitzEstimate& lip, const std::vector<VectorXd>& probes) {
  if (probes.empty()) throw DomainError("weight check needs probes");
  const VectorXd zero = VectorXd::Zero(probes.front().size());
  const double K = std::sqrt(2.0) * std::max({1.0 + chi(zero).norm(), lip.L_forward, 1.0 + chi_inv(zero).norm(),
                                              lip.L_inverse});
  WeightEquivalence w;
  w.bound = std::pow(K, std::abs(r));
  const Weight plain{r, {}}, composed{r, chi};
  for (const auto& z : probes) {
    const double a = composed(z), b = plain(z);
    w.observed = std::max({w.observed, a / b, b / a});
  }
  w.holds = w.observed <= w.bound * (1.0 + 1e-12);
  return w;
}

}  // namespace tfprop

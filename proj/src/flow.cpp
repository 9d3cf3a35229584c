#include "tfprop/flow.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <cmath>
#include <random>

namespace tfprop {

namespace {

struct State {
  VectorXd z;
  MatrixXd J;
  double S = 0.0;  // action integral
};

MatrixXd field_jacobian(const HamiltonianSymbol& a, const VectorXd& z) {
  const Index d = z.size() / 2;
  const MatrixXd h = a.hessian(z);
  MatrixXd k(2 * d, 2 * d);
  k << -h.bottomRows(d), h.topRows(d);
  return k / kTwoPi;
}

State rk4_step(const HamiltonianSymbol& a, const State& s, double h) {
  auto deriv = [&](const State& u) {
    const Index d = u.z.size() / 2;
    const VectorXd g = a.grad(u.z);
    VectorXd f(2 * d);
    f << -g.tail(d), g.head(d);
    const double dS = (a.eval(u.z) - u.z.tail(d).dot(g.tail(d))) / kTwoPi;
    return State{f / kTwoPi, field_jacobian(a, u.z) * u.J, dS};
  };
  auto axpy = [](const State& u, double c, const State& k) { return State{u.z + c * k.z, u.J + c * k.J, u.S + c * k.S}; };
  const State k1 = deriv(s);
  const State k2 = deriv(axpy(s, 0.5 * h, k1));
  const State k3 = deriv(axpy(s, 0.5 * h, k2));
  const State k4 = deriv(axpy(s, h, k3));
  return {s.z + (h / 6.0) * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z),
          s.J + (h / 6.0) * (k1.J + 2.0 * k2.J + 2.0 * k3.J + k4.J), s.S + (h / 6.0) * (k1.S + 2.0 * k2.S + 2.0 * k3.S + k4.S)};
}

State run(const HamiltonianSymbol& a, double t, const VectorXd& w, Index n, const FlowOptions& opts) {
  State s{w, MatrixXd::Identity(w.size(), w.size()), 0.0};
  if (n == 0) return s;
  const double h = t / static_cast<double>(n);
  for (Index i = 0; i < n; ++i) {
    s = rk4_step(a, s, h);
    if (!s.z.allFinite() || s.z.norm() > opts.escape_radius) {
      throw FlowEscape(fmt::format("trajectory from ({}) left the safety box |z| <= {} at t = {}",
                                   fmt::join(w.data(), w.data() + w.size(), ", "),
                                   opts.escape_radius, static_cast<double>(i + 1) * h));
    }
  }
  return s;
}

}  // namespace

FlowResult integrate_flow(const HamiltonianSymbol& a, double t, const PhasePoint& w, const FlowOptions& opts) {
  if (!(opts.step > 0.0)) throw DomainError("flow step must be positive");
  if (w.dim() != a.d) throw DomainError("phase point dimension differs from the symbol's");
  const Index n = static_cast<Index>(std::ceil(std::abs(t) / opts.step - 1e-12));
  const State s = run(a, t, w.stacked(), n, opts);
  FlowResult r;
  r.t = t;
  r.input = w;
  r.output = PhasePoint(s.z);
  r.jacobian = s.J;
  r.action = s.S;
  r.steps = n;
  r.step = n ? std::abs(t) / static_cast<double>(n) : 0.0;
  if (opts.estimate_error && n > 0) {
    const State fine = run(a, t, w.stacked(), 2 * n, opts);
    r.error_estimate = (s.z - fine.z).norm() * 16.0 / 15.0;
  }
  r.symplectic_defect = symplectic_defect(s.J);
  return r;
}

LinearFlow flow_quadratic_exact(const HamiltonianSymbol& a, double t) {
  if (a.cls != SymbolClass::quadratic || !a.quadratic) {
    throw ClassMismatch(fmt::format("symbol '{}' is not quadratic", a.name));
  }
  const Index d = a.d;
  const auto& q = *a.quadratic;
  // z' = K z + k0 with K = P Q / 2pi, k0 = P b / 2pi, P = [[0, -I], [I, 0]].
  MatrixXd P = MatrixXd::Zero(2 * d, 2 * d);
  P.topRightCorner(d, d) = -MatrixXd::Identity(d, d);
  P.bottomLeftCorner(d, d) = MatrixXd::Identity(d, d);
  MatrixXd aug = MatrixXd::Zero(2 * d + 1, 2 * d + 1);
  aug.topLeftCorner(2 * d, 2 * d) = P * q.Q / kTwoPi;
  aug.topRightCorner(2 * d, 1) = P * q.b / kTwoPi;
  const MatrixXd e = (t * aug).exp();
  return {e.topLeftCorner(2 * d, 2 * d), e.topRightCorner(2 * d, 1)};
}

FlowMap make_flow_map(const HamiltonianSymbol& a, double t, const FlowOptions& opts) {
  if (a.cls == SymbolClass::quadratic) {
    const LinearFlow m = flow_quadratic_exact(a, t);
    return [m](const VectorXd& z) { return m(z); };
  }
  FlowOptions o = opts;
  o.estimate_error = false;
  return [a, t, o](const VectorXd& z) { return integrate_flow(a, t, PhasePoint(z), o).output.stacked(); };
}

FlowMap make_composed_flow_map(const HamiltonianSymbol& a, double t, double segment, const FlowOptions& opts) {
  if (!(segment > 0.0)) throw DomainError("segment length must be positive");
  const auto h = static_cast<Index>(std::floor(std::abs(t) / segment + 1e-9));
  const double sgn = t < 0 ? -1.0 : 1.0;
  const double rest = t - sgn * static_cast<double>(h) * segment;
  const FlowMap piece = make_flow_map(a, sgn * segment, opts);
  const FlowMap tail = make_flow_map(a, rest, opts);
  return [piece, tail, h](const VectorXd& z) {
    VectorXd u = z;
    for (Index i = 0; i < h; ++i) u = piece(u);
    return tail(u);
  };
}

double group_compose(const HamiltonianSymbol& a, double t1, double t2, const std::vector<VectorXd>& probes,
                     const FlowOptions& opts, bool exact) {
  FlowOptions o = opts;
  o.estimate_error = false;
  double worst = 0.0;
  if (exact) {
    const auto m1 = flow_quadratic_exact(a, t1), m2 = flow_quadratic_exact(a, t2), m12 = flow_quadratic_exact(a, t1 + t2);
    for (const auto& w : probes) worst = std::max(worst, (m1(m2(w)) - m12(w)).norm());
    return worst;
  }
  for (const auto& w : probes) {
    const auto inner = integrate_flow(a, t2, PhasePoint(w), o).output;
    const auto lhs = integrate_flow(a, t1, inner, o).output.stacked();
    const auto rhs = integrate_flow(a, t1 + t2, PhasePoint(w), o).output.stacked();
    worst = std::max(worst, (lhs - rhs).norm());
  }
  return worst;
}

std::vector<VectorXd> box_probes(int d, double radius, double step) {
  const int dims = 2 * d;
  const auto n = static_cast<Index>(std::floor(2.0 * radius / step + 1e-9)) + 1;
  Index total = 1;
  for (int i = 0; i < dims; ++i) total *= n;
  std::vector<VectorXd> out;
  out.reserve(static_cast<size_t>(total));
  for (Index flat = 0; flat < total; ++flat) {
    VectorXd z(dims);
    Index rem = flat;
    for (int i = dims - 1; i >= 0; --i) {
      z(i) = -radius + static_cast<double>(rem % n) * step;
      rem /= n;
    }
    out.push_back(std::move(z));
  }
  return out;
}

LipschitzEstimate lipschitz_estimate(const HamiltonianSymbol& a, double t, const ProbeRegion& region,
                                     const FlowOptions& opts) {
  LipschitzEstimate est{t, 1.0, 1.0, region};
  if (t == 0.0) return est;
  FlowOptions o = opts;
  o.estimate_error = false;
  const auto probes = box_probes(a.d, region.radius, region.step);
  auto one_side = [&](double tt) {
    std::vector<VectorXd> images;
    images.reserve(probes.size());
    double L = 0.0;
    for (const auto& w : probes) {
      const auto r = integrate_flow(a, tt, PhasePoint(w), o);
      images.push_back(r.output.stacked());
      Eigen::JacobiSVD<MatrixXd> svd(r.jacobian);
      L = std::max(L, svd.singularValues()(0));
    }
    std::mt19937_64 rng(region.seed);
    std::uniform_int_distribution<size_t> pick(0, probes.size() - 1);
    for (int k = 0; k < region.random_pairs; ++k) {
      const size_t i = pick(rng), j = pick(rng);
      const double den = (probes[i] - probes[j]).norm();
      if (den > 0.0) L = std::max(L, (images[i] - images[j]).norm() / den);
    }
    return L;
  };
  est.L_forward = one_side(t);
  est.L_inverse = one_side(-t);
  return est;
}

}  // namespace tfprop

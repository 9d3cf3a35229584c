#include "tfprop/eikonal.hpp"

#include <fmt/format.h>

#include <cmath>

namespace tfprop {

namespace {

PhaseFunction closed_form_phase(const HamiltonianSymbol& a, double t, const EikonalOptions& opts) {
  const int d = a.d;
  const LinearFlow m = flow_quadratic_exact(a, t);
  const MatrixXd A = m.M.topLeftCorner(d, d), B = m.M.topRightCorner(d, d);
  const MatrixXd C = m.M.bottomLeftCorner(d, d);
  const VectorXd mx = m.offset.head(d), mxi = m.offset.tail(d);
  const double detA = A.determinant();
  if (std::abs(detA) < opts.caustic_delta) {
    throw CausticError(fmt::format("det dx/dy = {:.3g} at t = {}: beyond the tame horizon", detA, t));
  }
  const MatrixXd Ai = A.inverse();
  const MatrixXd CAi = C * Ai, AiB = Ai * B, AiT = Ai.transpose();

  auto base = [=](const VectorXd& x, const VectorXd& eta) {
    const VectorXd u = x - mx;
    return 0.5 * u.dot(CAi * u) + u.dot(AiT * eta) - 0.5 * eta.dot(AiB * eta) + mxi.dot(x);
  };
  // Additive constant from the action along the characteristic ending at (0, 0).
  double offset = 0.0;
  if (a.quadratic->b.cwiseAbs().maxCoeff() == 0.0) {
    offset = a.quadratic->c * t / kTwoPi;
  } else {
    const VectorXd y = -Ai * mx;
    const auto r = integrate_flow(a, t, PhasePoint(y, VectorXd::Zero(d)), opts.flow);
    offset = r.action - base(VectorXd::Zero(d), VectorXd::Zero(d));
  }

  PhaseFunction phi;
  phi.t = t;
  phi.d = d;
  phi.source = PhaseSource::closed_form_quadratic;
  phi.sample = [=](const VectorXd& x, const VectorXd& eta) {
    const VectorXd u = x - mx;
    return PhaseSample{base(x, eta) + offset, CAi * u + AiT * eta + mxi, Ai * u - AiB * eta, detA};
  };
  phi.at = [a, opts](double tt) { return build_phase(a, tt, opts); };
  return phi;
}

PhaseFunction characteristic_phase(const HamiltonianSymbol& a, double t, const EikonalOptions& opts) {
  const int d = a.d;
  FlowOptions fo = opts.flow;
  fo.estimate_error = false;
  PhaseFunction phi;
  phi.t = t;
  phi.d = d;
  phi.source = PhaseSource::characteristics;
  phi.sample = [a, t, fo, opts, d](const VectorXd& x, const VectorXd& eta) {
    VectorXd y = x;
    auto shoot = [&](const VectorXd& yy) { return integrate_flow(a, t, PhasePoint(yy, eta), fo); };
    FlowResult r = shoot(y);
    VectorXd res = r.output.x() - x;
    const double tol = opts.newton_tol * std::max(1.0, x.norm());
    int it = 0;
    while (res.norm() > tol) {
      if (++it > opts.newton_max_iter) {
        throw CausticError(fmt::format("Newton inversion of the flow did not converge at t = {}", t));
      }
      const MatrixXd Jx = r.jacobian.topLeftCorner(d, d);
      const VectorXd stepv = Jx.fullPivLu().solve(res);
      double lambda = 1.0;
      for (int k = 0; k < 12; ++k) {
        const VectorXd trial = y - lambda * stepv;
        FlowResult rt = shoot(trial);
        const VectorXd rr = rt.output.x() - x;
        if (rr.norm() < res.norm() || k == 11) {
          y = trial;
          r = std::move(rt);
          res = rr;
          break;
        }
        lambda *= 0.5;
      }
    }
    const double det = r.jacobian.topLeftCorner(d, d).determinant();
    if (std::abs(det) < opts.caustic_delta) {
      throw CausticError(fmt::format("det dx/dy = {:.3g} at t = {}: beyond the tame horizon", det, t));
    }
    const VectorXd xi = r.output.eta();
    // First-order correction for the residual of the inversion.
    const double value = y.dot(eta) + r.action + xi.dot(x - r.output.x());
    return PhaseSample{value, xi, y, det};
  };
  phi.at = [a, opts](double tt) { return build_phase(a, tt, opts); };
  return phi;
}

}  // namespace

PhaseFunction build_phase(const HamiltonianSymbol& a, double t, const EikonalOptions& opts) {
  if (a.cls == SymbolClass::quadratic && !opts.force_characteristics) return closed_form_phase(a, t, opts);
  return characteristic_phase(a, t, opts);
}

PhaseFunction trivial_phase(int d) {
  return explicit_phase(
      d, 0.0, [](double, const VectorXd& x, const VectorXd& eta) { return x.dot(eta); },
      [](double, const VectorXd&, const VectorXd& eta) -> VectorXd { return eta; },
      [](double, const VectorXd& x, const VectorXd&) -> VectorXd { return x; });
}

PhaseFunction explicit_phase(int d, double t, std::function<double(double, const VectorXd&, const VectorXd&)> phi,
                             std::function<VectorXd(double, const VectorXd&, const VectorXd&)> grad_x,
                             std::function<VectorXd(double, const VectorXd&, const VectorXd&)> grad_eta) {
  PhaseFunction p;
  p.t = t;
  p.d = d;
  p.source = PhaseSource::explicit_formula;
  p.sample = [=](const VectorXd& x, const VectorXd& eta) {
    return PhaseSample{phi(t, x, eta), grad_x(t, x, eta), grad_eta(t, x, eta), std::nan("")};
  };
  p.at = [=](double tt) { return explicit_phase(d, tt, phi, grad_x, grad_eta); };
  return p;
}

double eikonal_residual(const PhaseFunction& phi, const HamiltonianSymbol& a, const PhaseProbes& probes, double dt) {
  const PhaseFunction plus = phi.at(phi.t + dt), minus = phi.at(phi.t - dt);
  const int d = phi.d;
  double worst = 0.0;
  for (const auto& p : probes) {
    const VectorXd x = p.head(d), eta = p.tail(d);
    const double dphi = (plus(x, eta) - minus(x, eta)) / (2.0 * dt);
    const PhaseSample s = phi.sample(x, eta);
    VectorXd z(2 * d);
    z << x, s.grad_x;
    worst = std::max(worst, std::abs(kTwoPi * dphi - a.eval(z)));
  }
  return worst;
}

double phase_flow_residual(const PhaseFunction& phi, const HamiltonianSymbol& a, const PhaseProbes& probes,
                           const FlowOptions& opts) {
  const int d = phi.d;
  const FlowMap chi = make_flow_map(a, phi.t, opts);
  double worst = 0.0;
  for (const auto& p : probes) {
    const VectorXd x = p.head(d), eta = p.tail(d);
    const PhaseSample s = phi.sample(x, eta);
    VectorXd lhs(2 * d), w(2 * d);
    lhs << x, s.grad_x;
    w << s.grad_eta, eta;
    worst = std::max(worst, (lhs - chi(w)).norm());
  }
  return worst;
}

TameReport tame_check(const PhaseFunction& phi, const TameRegion& region, double delta, double h) {
  TameReport rep;
  rep.region = region;
  const int d = phi.d;
  rep.c_lower = std::numeric_limits<double>::infinity();
  rep.detcond_lower = std::numeric_limits<double>::infinity();
  try {
    for (const auto& p : box_probes(d, region.radius, region.step)) {
      const VectorXd x = p.head(d), eta = p.tail(d);
      const PhaseSample s = phi.sample(x, eta);
      if (std::isfinite(s.det_dxdy)) rep.detcond_lower = std::min(rep.detcond_lower, std::abs(s.det_dxdy));
      MatrixXd xeta(d, d), xx(d, d), ee(d, d);
      for (int j = 0; j < d; ++j) {
        VectorXd ep = eta, em = eta, xp = x, xm = x;
        ep(j) += h;
        em(j) -= h;
        xp(j) += h;
        xm(j) -= h;
        const PhaseSample sep = phi.sample(x, ep), sem = phi.sample(x, em);
        const PhaseSample sxp = phi.sample(xp, eta), sxm = phi.sample(xm, eta);
        xeta.col(j) = (sep.grad_x - sem.grad_x) / (2 * h);
        ee.col(j) = (sep.grad_eta - sem.grad_eta) / (2 * h);
        xx.col(j) = (sxp.grad_x - sxm.grad_x) / (2 * h);
      }
      rep.c_lower = std::min(rep.c_lower, std::abs(xeta.determinant()));
      rep.sup_xeta = std::max(rep.sup_xeta, xeta.cwiseAbs().maxCoeff());
      rep.sup_xx = std::max(rep.sup_xx, xx.cwiseAbs().maxCoeff());
      rep.sup_etaeta = std::max(rep.sup_etaeta, ee.cwiseAbs().maxCoeff());
    }
  } catch (const CausticError&) {
    rep.caustic = true;
    rep.c_lower = 0.0;
    rep.detcond_lower = 0.0;
    rep.pass = false;
    return rep;
  }
  if (!std::isfinite(rep.detcond_lower)) rep.detcond_lower = rep.c_lower;
  rep.caustic = rep.detcond_lower < delta;
  rep.pass = !rep.caustic && rep.c_lower >= delta && std::isfinite(rep.sup_xx) && std::isfinite(rep.sup_etaeta);
  return rep;
}

namespace {

double detcond_at(const HamiltonianSymbol& a, double t, const std::vector<VectorXd>& probes, const FlowOptions& fo) {
  const int d = a.d;
  if (a.cls == SymbolClass::quadratic) {
    return std::abs(flow_quadratic_exact(a, t).M.topLeftCorner(d, d).determinant());
  }
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& w : probes) {
    const auto r = integrate_flow(a, t, PhasePoint(w), fo);
    lo = std::min(lo, std::abs(r.jacobian.topLeftCorner(d, d).determinant()));
  }
  return lo;
}

}  // namespace

double find_caustic_time(const HamiltonianSymbol& a, const TameRegion& region, double delta, double t_max,
                         const FlowOptions& opts) {
  FlowOptions fo = opts;
  fo.estimate_error = false;
  const auto probes = box_probes(a.d, region.radius, region.step);
  const double dt = 1.0 / 64.0;
  double lo = 0.0;
  for (double t = dt; t <= t_max + 1e-12; t += dt) {
    if (detcond_at(a, t, probes, fo) < delta) {
      double hi = t;
      while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        (detcond_at(a, mid, probes, fo) < delta ? hi : lo) = mid;
      }
      return hi;
    }
    lo = t;
  }
  return t_max;
}

double detect_tame_horizon(const HamiltonianSymbol& a, const TameRegion& region, double delta, double t_max,
                           const FlowOptions& opts) {
  const double tc = find_caustic_time(a, region, delta, t_max, opts);
  double t = 1.0;
  while (t > t_max) t *= 0.5;
  while (2.0 * t <= t_max && 2.0 * t < tc) t *= 2.0;
  while (t >= tc) t *= 0.5;
  return t;
}

}  // namespace tfprop

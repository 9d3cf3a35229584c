#include <doctest.h>

#include "tfprop/flow.hpp"

#include <cmath>
#include <random>

using namespace tfprop;

namespace {

VectorXd z1(double x, double xi) { return (VectorXd(2) << x, xi).finished(); }

VectorXd free_closed(double t, const VectorXd& w) { return z1(w(0) - 4 * kPi * t * w(1), w(1)); }
VectorXd harm_closed(double t, const VectorXd& w) {
  return z1(w(0) * std::cos(2 * t) - kTwoPi * w(1) * std::sin(2 * t),
            w(0) / kTwoPi * std::sin(2 * t) + w(1) * std::cos(2 * t));
}

}  // namespace

TEST_CASE("closed-form examples") {
  const auto free = make_builtin("free_particle");
  const auto r = integrate_flow(free, 0.5, PhasePoint(z1(0, 1)));
  CHECK(r.output.x()(0) == doctest::Approx(-2 * kPi).epsilon(1e-12));
  CHECK(r.output.eta()(0) == doctest::Approx(1.0));
  CHECK(r.output.x()(0) == doctest::Approx(-6.28319).epsilon(1e-6));

  const auto harm = make_builtin("harmonic");
  const auto h = integrate_flow(harm, kPi / 4, PhasePoint(z1(1, 0)));
  CHECK(std::abs(h.output.x()(0)) < 1e-10);
  CHECK(h.output.eta()(0) == doctest::Approx(0.15915).epsilon(1e-4));

  const auto zero = integrate_flow(make_builtin("anharmonic", 1, 0.5), 0.0, PhasePoint(z1(1, 2)));
  CHECK(zero.output.stacked() == z1(1, 2));
  CHECK(zero.jacobian == MatrixXd::Identity(2, 2));
}

TEST_CASE("exact quadratic maps") {
  const double t = 0.37;
  const auto F = flow_quadratic_exact(make_builtin("free_particle"), t);
  CHECK((F.M - (MatrixXd(2, 2) << 1, -4 * kPi * t, 0, 1).finished()).cwiseAbs().maxCoeff() < 1e-13);
  const auto H = flow_quadratic_exact(make_builtin("harmonic"), t);
  const MatrixXd want =
      (MatrixXd(2, 2) << std::cos(2 * t), -kTwoPi * std::sin(2 * t), std::sin(2 * t) / kTwoPi, std::cos(2 * t))
          .finished();
  CHECK((H.M - want).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((flow_quadratic_exact(make_builtin("harmonic"), 0.0).M - MatrixXd::Identity(2, 2)).norm() == 0.0);
  CHECK_THROWS_AS(flow_quadratic_exact(make_builtin("anharmonic", 1, 0.1), t), ClassMismatch);
}

TEST_CASE("RK4 against exact quadratic maps, with symplectic Jacobians") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-7, 7);
  const auto free = make_builtin("free_particle");
  const auto harm = make_builtin("harmonic");
  FlowOptions o;
  o.estimate_error = false;
  for (int k = 0; k < 12; ++k) {
    const VectorXd w = z1(u(rng), u(rng));
    const double t = std::uniform_real_distribution<double>(-kPi, kPi)(rng);
    const auto rf = integrate_flow(free, t, PhasePoint(w), o);
    const auto rh = integrate_flow(harm, t, PhasePoint(w), o);
    CHECK((rf.output.stacked() - free_closed(t, w)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((rh.output.stacked() - harm_closed(t, w)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(rf.symplectic_defect < 1e-6);
    CHECK(rh.symplectic_defect < 1e-6);
    CHECK(std::abs(rh.jacobian.determinant() - 1.0) < 1e-6);
  }
  const auto an = integrate_flow(make_builtin("anharmonic", 1, 0.5), 1.3, PhasePoint(z1(2, -1)));
  CHECK(an.symplectic_defect < 1e-6);
  CHECK(an.error_estimate < 1e-9);
}

TEST_CASE("Jacobian matches finite differences of the flow") {
  const auto a = make_builtin("anharmonic", 1, 0.5);
  FlowOptions o;
  o.estimate_error = false;
  const VectorXd w = z1(0.7, -0.4);
  const auto r = integrate_flow(a, 0.8, PhasePoint(w), o);
  for (Index j = 0; j < 2; ++j) {
    VectorXd p = w, m = w;
    p(j) += 1e-5;
    m(j) -= 1e-5;
    const VectorXd col = (integrate_flow(a, 0.8, PhasePoint(p), o).output.stacked() -
                          integrate_flow(a, 0.8, PhasePoint(m), o).output.stacked()) / 2e-5;
    CHECK((col - r.jacobian.col(j)).norm() < 1e-7);
  }
}

TEST_CASE("group law and time reversal") {
  const auto probes = box_probes(1, 5.0, 2.5);
  const auto an = make_builtin("anharmonic", 1, 0.5);
  CHECK(group_compose(an, 0.3, 0.3, probes) < 1e-7);
  CHECK(group_compose(an, 0.3, -0.3, probes) < 1e-7);
  CHECK(group_compose(make_builtin("harmonic"), 0.7, -0.3, probes, {}, true) < 1e-12);
  const auto fwd = integrate_flow(an, 0.9, PhasePoint(z1(1, 1)));
  const auto back = integrate_flow(an, -0.9, fwd.output);
  CHECK((back.output.stacked() - z1(1, 1)).norm() < 2 * std::max(1e-12, fwd.error_estimate) + 1e-12);
}

TEST_CASE("composed flow maps agree with direct maps") {
  const auto harm = make_builtin("harmonic");
  const auto direct = make_flow_map(harm, 2.5);
  const auto composed = make_composed_flow_map(harm, 2.5, 0.1);
  CHECK((direct(z1(1, 0.3)) - composed(z1(1, 0.3))).norm() < 1e-12);
  const auto an = make_builtin("anharmonic", 1, 0.5);
  CHECK((make_flow_map(an, -0.45)(z1(1, 0.3)) - make_composed_flow_map(an, -0.45, 0.1)(z1(1, 0.3))).norm() < 1e-9);
}

TEST_CASE("escape guard") {
  FlowOptions o;
  o.escape_radius = 50.0;
  CHECK_THROWS_AS(integrate_flow(make_builtin("free_particle"), 10.0, PhasePoint(z1(0, 1)), o), FlowEscape);
  o.step = 0.0;
  CHECK_THROWS_AS(integrate_flow(make_builtin("free_particle"), 1.0, PhasePoint(z1(0, 1)), o), DomainError);
}

TEST_CASE("Lipschitz estimates") {
  const double t = 0.1;
  const auto L = lipschitz_estimate(make_builtin("free_particle"), t);
  const double b = 4 * kPi * t;
  const double sv = (b + std::sqrt(b * b + 4)) / 2;  // largest singular value of [[1, -b], [0, 1]]
  CHECK(L.L_forward == doctest::Approx(sv).epsilon(1e-9));
  CHECK(L.L_forward == doctest::Approx(1.8093).epsilon(1e-4));
  CHECK(L.L_forward * L.L_inverse >= 1.0);
  const auto L0 = lipschitz_estimate(make_builtin("anharmonic", 1, 0.5), 0.0);
  CHECK(L0.L_forward == 1.0);
  CHECK(L0.L_inverse == 1.0);
  for (double tt : {0.2, 0.7, 1.5, 3.0}) {
    const auto Lh = lipschitz_estimate(make_builtin("harmonic"), tt, {3.0, 1.5});
    CHECK(Lh.L_forward <= std::max(kTwoPi, 1 / kTwoPi) * std::sqrt(2.0));
  }
}

TEST_CASE("d = 2 smoke") {
  const auto harm = make_builtin("harmonic", 2);
  VectorXd w(4);
  w << 1, -1, 0.2, 0.1;
  const auto r = integrate_flow(harm, 0.6, PhasePoint(w));
  const auto exact = flow_quadratic_exact(harm, 0.6);
  CHECK((r.output.stacked() - exact(w)).norm() < 1e-9);
  CHECK(r.symplectic_defect < 1e-6);
}

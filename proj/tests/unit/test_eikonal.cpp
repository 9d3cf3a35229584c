#include <doctest.h>

#include "tfprop/eikonal.hpp"

#include <cmath>

using namespace tfprop;

namespace {

VectorXd v1(double a) { return VectorXd::Constant(1, a); }

PhaseProbes probes1(double radius, double step) { return box_probes(1, radius, step); }

}  // namespace

TEST_CASE("free-particle phase is x eta + 2 pi t eta^2") {
  const auto a = make_builtin("free_particle");
  for (bool characteristics : {false, true}) {
    EikonalOptions o;
    o.force_characteristics = characteristics;
    const auto phi = build_phase(a, 0.3, o);
    for (const auto& p : probes1(3.0, 1.5)) {
      const double want = p(0) * p(1) + kTwoPi * 0.3 * p(1) * p(1);
      CHECK(phi(v1(p(0)), v1(p(1))) == doctest::Approx(want).epsilon(1e-10));
    }
    CHECK(eikonal_residual(phi, a, probes1(3.0, 1.0)) < 1e-6);
    CHECK(phase_flow_residual(phi, a, probes1(3.0, 1.0)) < 1e-6);
  }
}

TEST_CASE("t = 0 phase is x eta") {
  for (const auto& a : {make_builtin("harmonic"), make_builtin("anharmonic", 1, 0.5)}) {
    const auto phi = build_phase(a, 0.0);
    CHECK(phi(v1(1.5), v1(-2.0)) == doctest::Approx(-3.0).epsilon(1e-14));
    CHECK(tame_check(phi).c_lower == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("harmonic phase reproduces the closed-form flow") {
  const auto a = make_builtin("harmonic");
  const double t = 0.2;
  const auto phi = build_phase(a, t);
  CHECK(phi.source == PhaseSource::closed_form_quadratic);
  for (const auto& p : probes1(3.0, 1.0)) {
    const double x = p(0), eta = p(1);
    // y from the closed-form flow: x = y cos 2t - 2 pi eta sin 2t
    const double y = (x + kTwoPi * eta * std::sin(2 * t)) / std::cos(2 * t);
    CHECK(phi.sample(v1(x), v1(eta)).grad_eta(0) == doctest::Approx(y).epsilon(1e-7));
  }
  for (double tt : {0.1, 0.2, 0.3}) {
    CHECK(eikonal_residual(build_phase(a, tt), a, probes1(3.0, 1.0)) < 1e-5);
    CHECK(phase_flow_residual(build_phase(a, tt), a, probes1(3.0, 1.0)) < 1e-6);
  }
  // Characteristics agree with the closed form.
  EikonalOptions o;
  o.force_characteristics = true;
  const auto pc = build_phase(a, t, o);
  for (const auto& p : probes1(2.0, 1.0)) {
    CHECK(pc(v1(p(0)), v1(p(1))) == doctest::Approx(phi(v1(p(0)), v1(p(1)))).epsilon(1e-9));
  }
}

TEST_CASE("quadratic phases are quadratic polynomials") {
  const auto phi = build_phase(make_builtin("harmonic"), 0.25);
  const double h = 0.5;
  for (const auto& p : probes1(2.0, 1.0)) {
    for (int dir = 0; dir < 2; ++dir) {
      auto f = [&](double s) {
        VectorXd q = p;
        q(dir) += s;
        return phi(q.head(1), q.tail(1));
      };
      const double third = f(2 * h) - 3 * f(h) + 3 * f(0) - f(-h);
      CHECK(std::abs(third) < 1e-9);
    }
  }
}

TEST_CASE("negative control: unpropagated phase") {
  const auto a = make_builtin("harmonic");
  const auto phi = trivial_phase(1);
  const auto probes = probes1(2.0, 1.0);
  const double res = eikonal_residual(phi, a, probes);
  double pattern = 0.0;
  for (const auto& p : probes) pattern = std::max(pattern, std::abs(a.eval(p)));
  CHECK(res == doctest::Approx(pattern).epsilon(1e-9));
  CHECK(res > 1.0);
}

TEST_CASE("anharmonic phase by characteristics") {
  const auto a = make_builtin("anharmonic", 1, 0.5);
  const auto phi = build_phase(a, 0.2);
  CHECK(phi.source == PhaseSource::characteristics);
  CHECK(eikonal_residual(phi, a, probes1(2.0, 1.0)) < 1e-5);
  CHECK(phase_flow_residual(phi, a, probes1(2.0, 1.0)) < 1e-6);
  const auto rep = tame_check(phi, {2.0, 1.0});
  CHECK(rep.pass);
}

TEST_CASE("tame checks and caustics") {
  const auto free = make_builtin("free_particle");
  const auto rf = tame_check(build_phase(free, 0.7));
  CHECK(rf.c_lower == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(rf.pass);

  const auto harm = make_builtin("harmonic");
  for (double t : {0.1, 0.3, 0.6}) {
    const auto r = tame_check(build_phase(harm, t));
    CHECK(r.detcond_lower == doctest::Approx(std::abs(std::cos(2 * t))).epsilon(1e-12));
    CHECK(r.c_lower == doctest::Approx(1.0 / std::abs(std::cos(2 * t))).epsilon(1e-6));
  }
  CHECK_THROWS_AS(build_phase(harm, 0.76), CausticError);
  const double tc = find_caustic_time(harm);
  CHECK(tc == doctest::Approx(std::acos(0.1) / 2).epsilon(1e-5));
  CHECK(std::abs(tc - kPi / 4) < 0.1);
  CHECK(detect_tame_horizon(harm) == 0.5);
  CHECK(find_caustic_time(free) == 4.0);

  EikonalOptions o;
  o.force_characteristics = true;
  const auto late = build_phase(harm, 0.78, o);
  CHECK_THROWS_AS(late(v1(0.5), v1(0.5)), CausticError);
  const auto r = tame_check(late);
  CHECK(r.caustic);
  CHECK_FALSE(r.pass);
}

TEST_CASE("d = 2 smoke") {
  const auto a = make_builtin("harmonic", 2);
  const auto phi = build_phase(a, 0.2);
  const auto probes = box_probes(2, 1.0, 1.0);
  CHECK(eikonal_residual(phi, a, probes) < 1e-5);
  CHECK(phase_flow_residual(phi, a, probes) < 1e-6);
}

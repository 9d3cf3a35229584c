#include <doctest.h>

#include "tfprop/propagator.hpp"

#include <cmath>

using namespace tfprop;

namespace {

SpatialGrid grid1() { return SpatialGrid::centered(1, 512, 1.0 / 16.0); }

SampledSignal ground_state(const SpatialGrid& g, double shift = 0.0, double kick = 0.0) {
  return SampledSignal::from_function(g, [=](const VectorXd& x) {
    return std::polar(std::pow(kPi, -0.25) * std::exp(-0.5 * (x(0) - shift) * (x(0) - shift)), kick * x(0));
  });
}

SampledSignal unit_gaussian(const SpatialGrid& g) {
  return SampledSignal::from_function(g, [](const VectorXd& x) { return std::pow(2.0, 0.25) * std::exp(-kPi * x(0) * x(0)); });
}

double rel(const SampledSignal& a, const SampledSignal& b) { return l2_distance(a, b) / b.l2_norm(); }

}  // namespace

TEST_CASE("harmonic ground state only acquires a phase") {
  const auto g = grid1();
  const auto a = make_builtin("harmonic");
  const auto u0 = ground_state(g);
  for (double t : {0.3, 1.0, 2.5}) {
    Diagnostics diag;
    const auto u = propagate_spectral(a, t, u0, SpectralRoute::hermite, &diag);
    SampledSignal want = u0;
    want.values *= std::polar(1.0, t);
    CHECK(rel(u, want) < 1e-10);
    CHECK(diag.hermite_capture >= 1.0 - 1e-10);
    CHECK((u.values.cwiseAbs() - u0.values.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("free propagation") {
  const auto g = grid1();
  const auto a = make_builtin("free_particle");
  const auto u0 = unit_gaussian(g);
  CHECK(l2_distance(propagate_spectral(a, 0.0, u0), u0) == 0.0);
  for (double t : {0.1, 0.7, -1.2}) CHECK(std::abs(propagate_spectral(a, t, u0).l2_norm() - 1.0) < 1e-10);
  // Closed form: e^{itH} of the unit Gaussian has variance growing as 1 + (4 pi t)^2 in these units.
  const double t = 0.05;
  const auto u = propagate_spectral(a, t, u0);
  const Complex s = 1.0 - Complex(0.0, 4.0 * kPi * t);
  const auto want = SampledSignal::from_function(g, [&](const VectorXd& x) {
    return std::pow(2.0, 0.25) / std::sqrt(s) * std::exp(-kPi * x(0) * x(0) / s);
  });
  CHECK(rel(u, want) < 1e-10);
}

TEST_CASE("factorised and Hermite routes agree") {
  const auto g = grid1();
  const auto u0 = ground_state(g, 2.0, 1.5);
  const auto harm = make_builtin("harmonic");
  for (double t : {0.25, 0.5, 1.0, 2.5, -0.7}) {
    const auto h = propagate_spectral(harm, t, u0, SpectralRoute::hermite);
    const auto f = propagate_spectral(harm, t, u0, SpectralRoute::factorized);
    CHECK(rel(f, h) < 1e-8);
    CHECK(std::abs(f.l2_norm() / u0.l2_norm() - 1.0) < 1e-8);
  }
}

TEST_CASE("non-unit oscillator frequencies") {
  // a = 2 |2 pi xi|^2 + 0.5 |x|^2 + 0.3
  auto a = make_builtin("harmonic");
  a.quadratic->Q(0, 0) = 1.0;
  a.quadratic->Q(1, 1) = 2.0 * 8.0 * kPi * kPi;
  a.quadratic->c = 0.3;
  const auto osc = as_isotropic_oscillator(a);
  REQUIRE(osc);
  CHECK(osc->alpha == doctest::Approx(0.5));
  CHECK(osc->beta == doctest::Approx(2.0));
  const auto u0 = ground_state(grid1(), 1.0);
  const auto h = propagate_spectral(a, 0.8, u0, SpectralRoute::hermite);
  const auto f = propagate_spectral(a, 0.8, u0, SpectralRoute::factorized);
  CHECK(rel(f, h) < 1e-8);
}

TEST_CASE("split-step") {
  const auto g = grid1();
  SUBCASE("V = 0 reproduces the free multiplier") {
    const auto a = make_builtin("free_particle");
    const auto u0 = unit_gaussian(g);
    CHECK(rel(propagate_split_step(a, 0.3, u0, 1e-2), propagate_spectral(a, 0.3, u0)) < 1e-12);
  }
  SUBCASE("second order against the spectral oracle") {
    const auto a = make_builtin("harmonic");
    const auto u0 = ground_state(g, 1.0);
    const auto exact = propagate_spectral(a, 0.5, u0);
    const double e1 = rel(propagate_split_step(a, 0.5, u0, 0.01), exact);
    const double e2 = rel(propagate_split_step(a, 0.5, u0, 0.005), exact);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
  }
  SUBCASE("self-convergence on the anharmonic symbol") {
    const auto a = make_builtin("anharmonic", 1, 0.5);
    const auto u0 = ground_state(g, 1.0);
    const auto u1 = propagate_split_step(a, 0.5, u0, 0.02);
    const auto u2 = propagate_split_step(a, 0.5, u0, 0.01);
    const auto u3 = propagate_split_step(a, 0.5, u0, 0.005);
    const double order = std::log2(l2_distance(u1, u2) / l2_distance(u2, u3));
    CHECK(std::abs(order - 2.0) < 0.1);
  }
  SUBCASE("class check and warnings") {
    CHECK_THROWS_AS(propagate_split_step(symbol_from_expression("x*xi"), 0.1, unit_gaussian(g), 1e-3), ClassMismatch);
    Diagnostics diag;
    propagate_split_step(make_builtin("free_particle"), 0.1, unit_gaussian(g), 0.05, &diag);
    CHECK_FALSE(diag.warnings.empty());
  }
}

TEST_CASE("type-I FIO quadrature") {
  const auto g = SpatialGrid::centered(1, 256, 1.0 / 8.0);
  const auto f = unit_gaussian(g);
  CHECK(rel(apply_fio_type1(unit_amplitude(), trivial_phase(1), f), f) < 1e-8);

  const auto free = make_builtin("free_particle");
  const auto pf = build_phase(free, 0.3);
  CHECK(rel(apply_fio_type1(unit_amplitude(), pf, f), propagate_spectral(free, 0.3, f)) < 1e-6);

  const auto harm = make_builtin("harmonic");
  const auto ph = build_phase(harm, 0.2);
  const auto u0 = ground_state(g, 0.5);
  CHECK(rel(apply_fio_type1(leading_amplitude(ph), ph, u0), propagate_spectral(harm, 0.2, u0)) < 1e-2);
}

TEST_CASE("long-time composition") {
  const auto g = grid1();
  const auto harm = make_builtin("harmonic");
  const auto u0 = ground_state(g, 1.5, -2.0);
  const auto plan = make_plan(harm, kPi, Method::spectral, kPi / 10);
  CHECK(plan.segments.size() == 10);
  const auto u = propagate_long_time(plan, u0);
  SampledSignal minus = u0;
  minus.values *= -1.0;
  CHECK(rel(u, minus) < 1e-8);
  CHECK((u.values.cwiseAbs() - u0.values.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-6);

  const auto whole = propagate_long_time(make_plan(harm, 0.8, Method::spectral, 1.0), u0);
  const auto halves = propagate_long_time(make_plan(harm, 0.8, Method::spectral, 0.4), u0);
  CHECK(rel(whole, halves) < 1e-10);

  const auto an = make_builtin("anharmonic", 1, 0.5);
  const auto v = propagate_long_time(make_plan(an, 2.0, Method::split_step, 0.1, 1e-3), u0);
  CHECK(std::abs(v.l2_norm() - u0.l2_norm()) < 1e-6);

  const auto p = make_plan(harm, 0.35, Method::fio_type1, 0.1);
  CHECK(p.segments.size() == 4);
  CHECK(p.segments.back() == doctest::Approx(0.05));
}

TEST_CASE("group property and Schrodinger residual") {
  const auto g = SpatialGrid::centered(1, 128, 1.0 / 8.0);
  const auto harm = make_builtin("harmonic");
  const auto u0 = ground_state(g, 1.0);
  const auto a = propagate_spectral(harm, 0.3, propagate_spectral(harm, 0.4, u0));
  CHECK(rel(a, propagate_spectral(harm, 0.7, u0)) < 1e-10);

  auto evolve = [&](double s) { return propagate_spectral(harm, s, u0); };
  const double r1 = schrodinger_residual(harm, evolve, 0.5, 1e-2);
  const double r2 = schrodinger_residual(harm, evolve, 0.5, 5e-3);
  CHECK(r2 < r1);
  CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("truncation and class errors") {
  const auto g = SpatialGrid::centered(1, 64, 1.0 / 4.0);
  // A narrow spike needs more Hermite terms than the grid resolves.
  const auto spike = SampledSignal::from_function(g, [](const VectorXd& x) { return std::exp(-40.0 * x(0) * x(0)); });
  CHECK_THROWS_AS(propagate_spectral(make_builtin("harmonic"), 0.1, spike, SpectralRoute::hermite), TruncationError);
  CHECK_THROWS_AS(propagate_spectral(make_builtin("anharmonic", 1, 0.1), 0.1, spike), ClassMismatch);
  CHECK_THROWS_AS(parse_method("euler"), DomainError);
  CHECK(parse_method("split_step") == Method::split_step);
}

TEST_CASE("d = 2 smoke") {
  const auto g = SpatialGrid::centered(2, 64, 1.0 / 4.0);
  const auto harm = make_builtin("harmonic", 2);
  const auto u0 = SampledSignal::from_function(g, [](const VectorXd& x) {
    return std::polar(std::exp(-0.5 * ((x(0) - 1) * (x(0) - 1) + x(1) * x(1))) / std::sqrt(kPi), 0.5 * x(1));
  });
  const auto h = propagate_spectral(harm, 0.6, u0, SpectralRoute::hermite);
  const auto f = propagate_spectral(harm, 0.6, u0, SpectralRoute::factorized);
  CHECK(rel(f, h) < 1e-8);
  const auto s = propagate_split_step(harm, 0.6, u0, 1e-3);
  CHECK(rel(s, h) < 1e-5);
}

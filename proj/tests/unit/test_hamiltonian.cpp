#include <doctest.h>

#include "tfprop/hamiltonian.hpp"

#include <cmath>
#include <random>

using namespace tfprop;

namespace {

VectorXd z1(double x, double xi) { return (VectorXd(2) << x, xi).finished(); }

// Richardson-extrapolated central difference of eval along coordinate i.
double richardson(const HamiltonianSymbol& a, VectorXd z, Index i, double h) {
  auto cd = [&](double s) {
    VectorXd p = z, m = z;
    p(i) += s;
    m(i) -= s;
    return (a.eval(p) - a.eval(m)) / (2 * s);
  };
  return (4.0 * cd(h / 2) - cd(h)) / 3.0;
}

}  // namespace

TEST_CASE("expression grammar") {
  const auto vars = phase_space_variables(1);
  CHECK(Expression::parse("1 + 2 * 3", vars)(z1(0, 0)) == doctest::Approx(7.0));
  CHECK(Expression::parse("-x^2", vars)(z1(3, 0)) == doctest::Approx(-9.0));
  CHECK(Expression::parse("2^3^2", vars)(z1(0, 0)) == doctest::Approx(512.0));
  CHECK(Expression::parse("sin(x)*cos(eta)", vars)(z1(0.5, 0.25)) ==
        doctest::Approx(std::sin(0.5) * std::cos(0.25)));
  CHECK(Expression::parse("4*pi^2*xi**2", vars)(z1(0, 1)) == doctest::Approx(4 * kPi * kPi));
  CHECK(Expression::parse("x \xC2\xB7 xi", vars)(z1(2, 3)) == doctest::Approx(6.0));
  CHECK(Expression::parse("exp(-x/2)", vars)(z1(2, 0)) == doctest::Approx(std::exp(-1.0)));
  CHECK_THROWS_AS(Expression::parse("x +", vars), ParseError);
  CHECK_THROWS_AS(Expression::parse("y", vars), ParseError);
  CHECK_THROWS_AS(Expression::parse("sin x", vars), ParseError);
  CHECK_THROWS_AS(Expression::parse("(x", vars), ParseError);

  const auto e = Expression::parse("x^3 * sin(xi) + exp(x*xi) / (1 + x^2)", vars);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int k = 0; k < 50; ++k) {
    const VectorXd z = z1(u(rng), u(rng));
    for (Index i = 0; i < 2; ++i) {
      VectorXd p = z, m = z;
      p(i) += 1e-5;
      m(i) -= 1e-5;
      const double fd = (e(p) - e(m)) / 2e-5;
      CHECK(e.derivative(i)(z) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("builtin symbols") {
  const auto free = make_builtin("free_particle");
  CHECK(free(z1(0, 1)) == doctest::Approx(4 * kPi * kPi));
  CHECK(free(z1(0, 1)) == doctest::Approx(39.478).epsilon(1e-4));
  const auto harm = make_builtin("harmonic");
  CHECK(harm(z1(1, 0)) == doctest::Approx(1.0));
  const auto an0 = make_builtin("anharmonic", 1, 0.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int k = 0; k < 20; ++k) {
    const VectorXd z = z1(u(rng), u(rng));
    CHECK(an0(z) == doctest::Approx(harm(z)).epsilon(1e-15));
  }
  CHECK_THROWS_AS(make_builtin("anharmonic", 1, 1.5), DomainError);
  CHECK_THROWS_AS(make_builtin("nope"), DomainError);
  CHECK(free.cls == SymbolClass::quadratic);
  CHECK(an0.cls == SymbolClass::separable);
  CHECK_THROWS_AS(as_separable(symbol_from_expression("x*xi")), ClassMismatch);

  const auto osc = as_isotropic_oscillator(harm);
  REQUIRE(osc);
  CHECK(osc->alpha == doctest::Approx(1.0));
  CHECK(osc->beta == doctest::Approx(1.0));
  CHECK(as_isotropic_oscillator(free)->alpha == 0.0);
}

TEST_CASE("gradients match Richardson finite differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5, 5);
  for (const auto& a : {make_builtin("free_particle"), make_builtin("harmonic"), make_builtin("anharmonic", 1, 0.5),
                        make_builtin("kinetic_plus_potential", 1, 0.0, "x^2/2 + cos(x)"),
                        symbol_from_expression("xi^2 + sin(x)*xi")}) {
    for (int k = 0; k < 30; ++k) {
      const VectorXd z = z1(u(rng), u(rng));
      const VectorXd g = a.grad(z);
      for (Index i = 0; i < 2; ++i) {
        const double fd = richardson(a, z, i, 1e-4);
        CHECK(std::abs(g(i) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("quadratic gradients are affine") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int d : {1, 2}) {
    const auto a = make_builtin("harmonic", d);
    for (int k = 0; k < 20; ++k) {
      VectorXd p(2 * d), q(2 * d);
      for (Index i = 0; i < 2 * d; ++i) {
        p(i) = u(rng);
        q(i) = u(rng);
      }
      const VectorXd defect = a.grad(p + q) - a.grad(p) - a.grad(q) + a.grad(VectorXd::Zero(2 * d));
      CHECK(defect.cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("derivative bounds") {
  const BoundsRegion box{5.0, 0.5};
  const auto free = check_bounds(make_builtin("free_particle"), box);
  CHECK(free.sup.at(2) == doctest::Approx(8 * kPi * kPi).epsilon(1e-9));
  CHECK(free.sup.at(3) < 1e-6);
  CHECK(free.sup.at(4) < 1e-6);
  CHECK_FALSE(free.growth);

  const auto full = check_bounds(make_builtin("free_particle"));
  CHECK(full.sup.at(3) < 1e-6);
  CHECK(full.sup.at(4) < 1e-6);

  const auto a = make_builtin("harmonic");
  const MatrixXd H = a.hessian(z1(3, -2));
  CHECK(H(0, 0) == doctest::Approx(2.0));
  CHECK(H(1, 1) == doctest::Approx(8 * kPi * kPi));
  CHECK(H(0, 1) == 0.0);
  const auto hb = check_bounds(a, box);
  CHECK(hb.sup.at(2) == doctest::Approx(8 * kPi * kPi).epsilon(1e-9));
  CHECK(hb.sup.at(3) < 1e-6);

  const auto quartic = check_bounds(symbol_from_expression("x^4"));
  CHECK(quartic.growth);
  CHECK_THROWS_AS(make_builtin("kinetic_plus_potential", 1, 0.0, "x^4"), AssumptionViolation);

  const auto an = check_bounds(make_builtin("anharmonic", 1, 0.5), box);
  CHECK_FALSE(an.growth);
  CHECK(an.sup.at(3) == doctest::Approx(0.5).epsilon(0.02));

  // d = 2 uses a coarsened lattice but still reports exact quadratic bounds.
  const auto h2 = check_bounds(make_builtin("harmonic", 2), {4.0, 0.5});
  CHECK(h2.sup.at(2) == doctest::Approx(8 * kPi * kPi).epsilon(1e-9));
  CHECK_FALSE(h2.growth);
}

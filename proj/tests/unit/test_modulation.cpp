#include <doctest.h>

#include "tfprop/modulation.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace tfprop;

namespace {

SpatialGrid grid1() { return SpatialGrid::centered(1, 1024, 1.0 / 32.0); }
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("Gaussian norms") {
  const auto g = gaussian_window(grid1());
  CHECK(mod_norm(g.samples, g, 2, 2, 0).value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(mod_norm(g.samples, g, 1, 1, 0).value == doctest::Approx(2.0).epsilon(5e-5));
  CHECK(mod_norm(g.samples, g, kInf, kInf, 0).value == doctest::Approx(1.0).epsilon(1e-10));
  const auto m = mod_norm(g.samples, g, 2, 2, 0);
  CHECK(m.warnings.empty());
  CHECK(m.tail_fraction < 1e-12);
}

TEST_CASE("exponent parsing") {
  CHECK(std::isinf(parse_exponent("inf")));
  CHECK(parse_exponent("1.5") == 1.5);
  CHECK_THROWS_AS(parse_exponent("0.5"), DomainError);
  CHECK_THROWS_AS(parse_exponent("two"), DomainError);
  CHECK(exponent_name(kInf) == "inf");
}

TEST_CASE("norm monotone in R and truncation warning") {
  const auto grid = grid1();
  const auto g = gaussian_window(grid);
  const auto battery = default_battery(grid);
  const auto& f = battery[1].f;  // shifted
  double prev = 0.0;
  for (double R : {2.0, 4.0, 8.0, 12.0}) {
    ModNormOptions o;
    o.R = R;
    const auto m = mod_norm(f, g, 1, 1, 1, o);
    CHECK(m.value >= prev);
    prev = m.value;
    if (R == 2.0) CHECK_FALSE(m.warnings.empty());
  }
}

TEST_CASE("embeddings on the battery") {
  const auto grid = grid1();
  const auto g = gaussian_window(grid);
  for (const auto& s : default_battery(grid)) {
    CAPTURE(s.id);
    const double r_lo = mod_norm(s.f, g, 2, 2, -1).value, r_mid = mod_norm(s.f, g, 2, 2, 0).value,
                 r_hi = mod_norm(s.f, g, 2, 2, 2).value;
    CHECK(r_lo <= r_mid);
    CHECK(r_mid <= r_hi);
    const double p1 = mod_norm(s.f, g, 1, 1, 0).value, p2 = r_mid, pinf = mod_norm(s.f, g, kInf, kInf, 0).value;
    CHECK(p2 <= p1 * (1 + 1e-9));
    CHECK(pinf <= p2 * (1 + 1e-9));
    for (int r = -4; r <= 8; r += 4) CHECK(std::isfinite(mod_norm(s.f, g, 2, 2, r).value));
  }
}

TEST_CASE("weights") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 5.0);
  for (int k = 0; k < 500; ++k) {
    VectorXd z1(2), z2(2);
    z1 << n(rng), n(rng);
    z2 << n(rng), n(rng);
    // <z> is submultiplicative only up to the factor sqrt(2).
    for (double r : {0.0, 0.5, 2.0}) {
      const Weight v{r, {}};
      CHECK(v(z1 + z2) <= std::pow(2.0, r / 2.0) * v(z1) * v(z2) * (1 + 1e-12));
    }
    for (double r : {-3.0, -1.0, 1.5}) {
      const Weight v{r, {}}, va{std::abs(r), {}};
      CHECK(v(z1 + z2) <= std::pow(2.0, std::abs(r) / 2.0) * va(z1) * v(z2) * (1 + 1e-12));
    }
  }
  VectorXd e(2);
  e << 1.0, 0.0;
  CHECK(Weight{2.0, {}}(2.0 * e) > Weight{2.0, {}}(e) * Weight{2.0, {}}(e));

  const auto a = make_builtin("free_particle");
  const auto lip = lipschitz_estimate(a, 0.5);
  const auto eq = weight_composition_check(2.0, make_flow_map(a, 0.5), make_flow_map(a, -0.5), lip, box_probes(1, 8, 1));
  CHECK(eq.holds);
  CHECK(eq.observed > 1.0);
}

TEST_CASE("boundedness of propagators") {
  const auto grid = grid1();
  const auto g = gaussian_window(grid);
  const auto battery = default_battery(grid);
  BoundednessOptions opts;
  opts.route = SpectralRoute::factorized;
  const auto free = boundedness_report(make_builtin("free_particle"), {0.0, 0.25}, 2, 0, battery, g, opts);
  for (const auto& row : free.rows) CHECK(row.ratio == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(free.warnings.empty());
  // At t = 0.5 the sheared squeezed Gaussian leaves the ball and the tail check notices.
  const auto late = boundedness_report(make_builtin("free_particle"), {0.5}, 2, 0, battery, g, opts);
  CHECK_FALSE(late.warnings.empty());
  const auto harm = boundedness_report(make_builtin("harmonic"), {0.0, 0.25, 0.5, 1.0}, kInf, 1, battery, g, opts);
  for (const auto& row : harm.rows) {
    if (row.t == 0.0) CHECK(std::abs(row.ratio - 1.0) < 1e-10);
    CHECK(row.ratio <= 10.0);
  }
  MESSAGE("harmonic p=inf r=1 max ratios: ", harm.max_ratio[1], " ", harm.max_ratio[2], " ", harm.max_ratio[3],
          " jump ", harm.max_jump);
}

TEST_CASE("window equivalence") {
  const auto grid = grid1();
  const auto g0 = gaussian_window(grid), g1 = hermite_window(grid, 1);
  double lo = 1e300, hi = 0.0;
  for (const auto& s : default_battery(grid)) {
    const double q = mod_norm(s.f, g1, 2, 2, 1).value / mod_norm(s.f, g0, 2, 2, 1).value;
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  CHECK(lo > 0.0);
  CHECK(hi / lo < 10.0);
}

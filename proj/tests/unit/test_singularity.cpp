#include <doctest.h>

#include "tfprop/singularity.hpp"

#include <cmath>
#include <random>

using namespace tfprop;

namespace {

VectorXd v2(double a, double b) { return (VectorXd(2) << a, b).finished(); }

struct ChirpSetup {
  SpatialGrid grid = SpatialGrid::centered(1, 4096, 1.0 / 64.0);
  Window g = gaussian_window(grid);
  SampledSignal f = chirp_bump(grid);
  PhaseLattice lattice = PhaseLattice::box(1, -28, 28, 0.25, -28, 28, 0.25);
  StftArray V = stft(f, g, lattice);
  Region cone = Region::cone(v2(1, 2), 0.2);
  Region outside = Region::complement(cone);
};

const ChirpSetup& chirp() {
  static const ChirpSetup s;
  return s;
}

}  // namespace

TEST_CASE("delta neighbourhood membership") {
  const auto single = Region::points({v2(10, 0)});
  CHECK(single.in_delta(v2(10, 0.5), 0.1));
  CHECK_FALSE(single.in_delta(v2(10, 1.2), 0.1));
  const auto axis = Region::ray(v2(1, 0));
  CHECK_FALSE(axis.in_delta(v2(0, 5), 0.5));
  CHECK(axis.in_delta(v2(3, 0), 0.01));
  CHECK(axis.in_delta(v2(20, 2), 0.2));
  CHECK_THROWS_AS(check_delta(1.5), DomainError);
  CHECK_THROWS_AS(axis.in_delta(v2(1, 1), 0.0), DomainError);
}

TEST_CASE("conic membership agrees with a brute-force search") {
  // Gamma_delta for a ray: search z0 = s * dir over a fine s grid.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-20, 20);
  const VectorXd dir = v2(1, 2).normalized();
  const auto ray = Region::ray(v2(1, 2));
  int agree = 0, total = 0;
  for (int k = 0; k < 400; ++k) {
    const VectorXd z = v2(U(rng), U(rng));
    const double delta = 0.3;
    bool brute = false, margin = false;
    for (double s = 0.0; s <= 60.0; s += 1e-3) {
      const VectorXd z0 = s * dir;
      const double lhs = (z - z0).norm(), rhs = delta * std::sqrt(1.0 + z0.squaredNorm());
      if (lhs < rhs) brute = true;
      if (std::abs(lhs - rhs) < 1e-2) margin = true;
    }
    if (margin) continue;
    ++total;
    agree += brute == ray.in_delta(z, delta);
  }
  CHECK(total > 300);
  CHECK(agree == total);
}

TEST_CASE("nested neighbourhoods and complements on a ray") {
  const auto ray = Region::ray(v2(1, 0));
  const double delta = 0.3;
  const auto rep = delta_star(ray, PhaseMap::identity(1), LipschitzEstimate{}, delta, 12.0, 0.25);
  CHECK(rep.nested);
  CHECK(rep.complement);
  CHECK(rep.delta_star <= delta / 2.0 + 1e-15);
  CHECK(rep.points_checked > 0);
}

TEST_CASE("delta star under the free flow") {
  const auto a = make_builtin("free_particle");
  const double t = 0.5;
  ProbeRegion probe;
  probe.radius = 4.0;
  probe.step = 0.5;
  const auto lip = lipschitz_estimate(a, t, probe);
  const auto chi = PhaseMap::flow(a, t);
  REQUIRE(chi.linear.has_value());
  const auto rep = delta_star(Region::cone(v2(1, 2), 0.2), chi, lip, 0.2, 16.0, 0.25);
  CHECK(rep.forward);
  CHECK(rep.backward);
  CHECK(rep.delta_star <= delta_star_formula(lip, 0.2) + 1e-15);
}

TEST_CASE("region language") {
  CHECK(parse_region("ray(dir=(1,0))").contains(v2(5, 0)));
  CHECK(parse_region("cone(dir=(1,2),angle=0.2)").contains(v2(-1, -2)));
  CHECK_FALSE(parse_region("complement(cone(dir=(1,2),angle=0.2))").contains(v2(1, 2)));
  CHECK(parse_region("union(ray(dir=(1,0)),ball(center=(0,5),radius=1))").contains(v2(0, 5.5)));
  CHECK(parse_region("curve(phi=x^2/8,x=(-4,4))").in_delta(v2(2, 0.5), 0.05));
  CHECK_THROWS_AS(parse_region("cone(dir=(1,2))"), ParseError);
  CHECK_THROWS_AS(parse_region("blob(1)"), ParseError);
  CHECK_THROWS_AS(parse_region("ray(dir=(1,0)"), ParseError);
}

TEST_CASE("Gaussian is regular everywhere") {
  const auto grid = SpatialGrid::centered(1, 2048, 1.0 / 64.0);
  const auto g = gaussian_window(grid);
  const auto lat = PhaseLattice::centered(1, 14, 0.25);
  const auto s = regularity_score(g.samples, g, Region::complement(Region::ray(v2(0, 1))), 0.1, lat);
  CHECK(s.verdict == Verdict::regular);
}

TEST_CASE("chirp verdicts") {
  const auto& c = chirp();
  const auto out = regularity_score(c.V, c.outside, 0.05);
  const auto in = regularity_score(c.V, c.cone, 0.05);
  CHECK(out.verdict == Verdict::regular);
  CHECK(in.verdict == Verdict::singular);
  CHECK(out.j_max >= 3);
}

TEST_CASE("score is monotone in the region") {
  const auto& c = chirp();
  const auto small = regularity_score(c.V, c.outside, 0.05);
  const auto big = regularity_score(c.V, Region::unite({c.outside, Region::ray(v2(1, 0))}), 0.05);
  REQUIRE(small.scores.size() == big.scores.size());
  for (size_t j = 0; j < small.scores.size(); ++j) CHECK(small.scores[j] <= big.scores[j] * (1 + 1e-12));
}

TEST_CASE("bounded additions do not change the verdict") {
  const auto& c = chirp();
  const auto base = regularity_score(c.V, c.outside, 0.05);
  const auto more = regularity_score(c.V, Region::unite({c.outside, Region::ball(v2(1, 2), 1.5)}), 0.05);
  CHECK(base.verdict == more.verdict);
}

TEST_CASE("verdict does not depend on the window") {
  const auto& c = chirp();
  const auto h = hermite_window(c.grid, 1);
  const auto V1 = stft(c.f, h, c.lattice);
  CHECK(regularity_score(V1, c.outside, 0.05).verdict == Verdict::regular);
  CHECK(regularity_score(V1, c.cone, 0.05).verdict == Verdict::singular);
}

TEST_CASE("too few annuli is inconclusive") {
  const auto& c = chirp();
  RegularityOptions o;
  o.j_max = 2;
  CHECK(regularity_score(c.V, c.outside, 0.05, o).verdict == Verdict::inconclusive);
}

TEST_CASE("propagation reverses") {
  const auto grid = SpatialGrid::centered(1, 8192, 1.0 / 64.0);
  const auto g = gaussian_window(grid);
  const auto u0 = chirp_bump(grid);
  PropagationOptions o;
  o.support = chirp_support();
  const auto before = PhaseLattice::box(1, -28, 28, 0.25, -28, 28, 0.25);
  const auto after = PhaseLattice::box(1, -56, 56, 0.25, -28, 28, 0.25);
  const auto rep = propagation_check(u0, make_builtin("free_particle"), 0.25, Region::cone(v2(1, 2), 0.2), g,
                                     before, after, o);
  CHECK(rep.before.verdict == Verdict::singular);
  CHECK(rep.after.verdict == Verdict::singular);
  CHECK(rep.reversal_ok);
  CHECK(rep.preserved);
}

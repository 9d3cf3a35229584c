#include <doctest.h>

#include "tfprop/gabor_matrix.hpp"

#include <cmath>

using namespace tfprop;

namespace {

SpatialGrid grid1() { return SpatialGrid::centered(1, 1024, 1.0 / 32.0); }

PropagatorPlan plan_for(const std::string& name, double t, SpectralRoute route = SpectralRoute::factorized) {
  auto p = make_plan(make_builtin(name), t, Method::spectral, 10.0);
  p.route = route;
  return p;
}

}  // namespace

TEST_CASE("identity matrix is the Gaussian ambiguity function") {
  const auto g = gaussian_window(grid1());
  const auto w = PhaseLattice::centered(1, 2.0, 0.5);
  const auto z = PhaseLattice::centered(1, 5.0, 0.5);
  const auto k = compute_gabor_matrix(identity_operator(), g, w, z, 0.0, 2);
  double err = 0.0;
  for (Index i = 0; i < w.size(); ++i) {
    for (Index j = 0; j < z.size(); ++j) {
      const double want = std::exp(-0.5 * kPi * (z.point(j) - w.point(i)).squaredNorm());
      err = std::max(err, std::abs(std::abs(k.values(i, j)) - want));
    }
  }
  CHECK(err < 1e-6);

  const auto fit = fit_decay(k, identity_map(), "identity");
  CHECK(fit.s_fit > 10.0);
  CHECK_FALSE(fit.growth_flag);
  CHECK(fit.offdiag_mass < 1e-15);
}

TEST_CASE("columns keep unit energy and the adjoint transposes the matrix") {
  const auto g = gaussian_window(grid1());
  // Step 0.25 keeps the lattice Riemann sum of |V|^2 exact to roundoff.
  const auto lat = PhaseLattice::centered(1, 12.0, 0.25);
  const auto small = PhaseLattice::centered(1, 1.0, 0.5);
  const auto fwd = propagator_operator(plan_for("harmonic", 0.3));
  const auto back = propagator_operator(plan_for("harmonic", -0.3));
  const auto k = compute_gabor_matrix(fwd, g, small, lat, 0.3);
  for (Index i = 0; i < small.size(); ++i) {
    CHECK(k.values.row(i).squaredNorm() * lat.cell_area() == doctest::Approx(1.0).epsilon(1e-7));
  }
  const auto kf = compute_gabor_matrix(fwd, g, small, small, 0.3);
  const auto kb = compute_gabor_matrix(back, g, small, small, -0.3);
  CHECK((kf.values - kb.values.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit against the flow beats the identity") {
  const auto g = gaussian_window(grid1());
  const auto w = PhaseLattice::centered(1, 2.0, 0.5);
  const auto z = PhaseLattice::centered(1, 8.0, 0.5);
  const auto a = make_builtin("harmonic");
  const double t = 0.5;
  const auto k = compute_gabor_matrix(propagator_operator(plan_for("harmonic", t)), g, w, z, t);
  DecayFitOptions opts;
  opts.r_max = 8.0;
  const auto with_flow = fit_decay(k, make_flow_map(a, t), "chi_t", opts);
  CHECK(with_flow.s_fit > 3.0);
  CHECK(with_flow.annuli_used >= 5);
  // Against the identity the envelope is flat near the displaced diagonal.
  double s_id = 0.0;
  try {
    s_id = fit_decay(k, identity_map(), "identity", opts).s_fit;
  } catch (const UnderdeterminedFit&) {
    s_id = 0.0;
  }
  CHECK(with_flow.s_fit > 2.0 * s_id);
}

TEST_CASE("fit recovers a synthetic power law") {
  const auto w = PhaseLattice::centered(1, 2.0, 0.5);
  const auto z = PhaseLattice::centered(1, 14.0, 0.25);
  for (double s : {3.0, 7.0}) {
    GaborMatrixSample k;
    k.w_lattice = w;
    k.z_lattice = z;
    k.values = StftValues(w.size(), z.size());
    for (Index i = 0; i < w.size(); ++i) {
      for (Index j = 0; j < z.size(); ++j) {
        const double r = std::sqrt(1.0 + (z.point(j) - w.point(i)).squaredNorm());
        k.values(i, j) = Complex(2.5 * std::pow(r, -s), 0.0);
      }
    }
    const auto fit = fit_decay(k, identity_map(), "identity");
    CHECK(fit.s_fit == doctest::Approx(s).epsilon(1e-9));
    CHECK(fit.C == doctest::Approx(2.5).epsilon(1e-8));
    CHECK(fit.residual < 1e-9);
  }
}

TEST_CASE("fit errors") {
  const auto g = gaussian_window(grid1());
  const auto w = PhaseLattice::centered(1, 1.0, 0.5);
  const auto z = PhaseLattice::centered(1, 3.0, 0.5);
  const auto k = compute_gabor_matrix(identity_operator(), g, w, z);
  DecayFitOptions opts;
  opts.annuli = 4;
  CHECK_THROWS_AS(fit_decay(k, identity_map(), "identity", opts), UnderdeterminedFit);
  opts = {};
  opts.r_min = 0.5;
  CHECK_THROWS_AS(fit_decay(k, identity_map(), "identity", opts), DomainError);
}

TEST_CASE("pseudodifferential symbols") {
  const auto g = gaussian_window(grid1());
  const auto w = PhaseLattice::centered(1, 3.0, 0.5);
  const auto z = PhaseLattice::centered(1, 8.0, 0.5);
  DecayFitOptions opts;
  opts.r_max = 8.0;

  GaborMatrixSample one;
  almost_diag_check("1", g, w, z, opts, 1, &one);
  const auto id = compute_gabor_matrix(identity_operator(), g, w, z);
  CHECK((one.values - id.values).cwiseAbs().maxCoeff() < 1e-10);

  const auto smooth = almost_diag_check("sin(x)*cos(eta)", g, w, z, opts);
  CHECK(smooth.s_fit >= 8.0);
  CHECK_FALSE(smooth.growth_flag);

  const auto grows = almost_diag_check("x", g, w, z, opts);
  CHECK(grows.growth_flag);
}

TEST_CASE("composition of free propagators") {
  const auto g = gaussian_window(grid1());
  const auto a = make_builtin("free_particle");
  const double t1 = 0.05, t2 = 0.1;
  const auto w = PhaseLattice::centered(1, 1.0, 0.5);
  const auto u = PhaseLattice::centered(1, 6.0, 0.25);
  const auto z = PhaseLattice::centered(1, 6.0, 0.5);
  const auto k1 = compute_gabor_matrix(propagator_operator(plan_for("free_particle", t1)), g, w, u, t1);
  const auto op2 = propagator_operator(plan_for("free_particle", t2));
  const auto composed = compose_matrices(k1, op2, g, z, 1, 128);
  const auto direct = compute_gabor_matrix(propagator_operator(plan_for("free_particle", t1 + t2)), g, w, z);
  const auto k1z = compute_gabor_matrix(propagator_operator(plan_for("free_particle", t1)), g, w, z, t1);
  const auto k2z = compute_gabor_matrix(op2, g, w, z, t2);
  DecayFitOptions opts;
  opts.r_max = 6.0;
  const auto lip = lipschitz_estimate(a, t1);
  const auto rep =
      composition_bound_check(k1z, make_flow_map(a, t1), k2z, make_flow_map(a, t2), composed, lip, opts, &direct);
  CHECK(rep.direct_error < 1e-8);
  CHECK(rep.bound_holds);
  const auto direct_fit = fit_decay(direct, make_flow_map(a, t1 + t2), "chi", opts);
  CHECK(std::abs(rep.composed.s_fit - direct_fit.s_fit) < 0.1 * direct_fit.s_fit);
}

#include <doctest.h>

#include "tfprop/stft.hpp"

#include <cmath>
#include <random>

using namespace tfprop;

namespace {

SpatialGrid grid1() { return SpatialGrid::centered(1, 512, 1.0 / 16.0); }
// The chirp reaches instantaneous frequency ~28 inside its envelope.
SpatialGrid chirp_grid() { return SpatialGrid::centered(1, 2048, 1.0 / 64.0); }

double gauss_abs_stft(double x, double eta) { return std::exp(-kPi * (x * x + eta * eta) / 2.0); }

// Direct quadrature of int f(v) conj(g(v - x)) e^{-2 pi i v eta} dv with an analytic window.
Complex direct_stft(const SampledSignal& f, const Window& g, const VectorXd& x, const VectorXd& eta) {
  Complex acc = 0.0;
  for (Index i = 0; i < f.grid.size(); ++i) {
    const VectorXd v = f.grid.point(i);
    acc += f.values(i) * std::conj(g.analytic(v - x)) * std::polar(1.0, -kTwoPi * v.dot(eta));
  }
  return acc * f.grid.cell_volume();
}

SampledSignal chirp(const SpatialGrid& grid) {
  return SampledSignal::from_function(grid, [](const VectorXd& t) {
    return std::polar(std::exp(-kPi * t(0) * t(0) / 16.0), kTwoPi * t(0) * t(0));
  });
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(SpatialGrid::centered(1, 100, 0.1), DomainError);
  CHECK_THROWS_AS(SpatialGrid(1, 64, VectorXd::Zero(1), VectorXd::Constant(1, -1.0)), DomainError);
  const auto g = grid1();
  CHECK(g.coordinate(0, 256) == doctest::Approx(0.0));
  CHECK(g.nyquist(0) == doctest::Approx(8.0));
}

TEST_CASE("spectrum of the Gaussian is itself") {
  const auto grid = grid1();
  const auto g = gaussian_window(grid);
  const VectorXcd s = spectrum(g.samples);
  double err = 0.0;
  for (Index k = 0; k < grid.size(); ++k) err = std::max(err, std::abs(s(k) - g.analytic(grid.frequency_point(k))));
  CHECK(err < 1e-12);
  const auto back = from_spectrum(grid, s);
  CHECK(l2_distance(back, g.samples) < 1e-13);
}

TEST_CASE("time-frequency shifts") {
  const auto grid = grid1();
  const auto g = gaussian_window(grid);

  SUBCASE("identity") {
    const auto s = time_frequency_shift(g.samples, PhasePoint(VectorXd::Zero(1), VectorXd::Zero(1)));
    CHECK(l2_distance(s, g.samples) == 0.0);
  }
  SUBCASE("translation") {
    const auto s = time_frequency_shift(g.samples, PhasePoint(VectorXd::Ones(1), VectorXd::Zero(1)));
    const auto want = SampledSignal::from_function(grid, [](const VectorXd& t) {
      return std::pow(2.0, 0.25) * std::exp(-kPi * (t(0) - 1.0) * (t(0) - 1.0));
    });
    CHECK(l2_distance(s, want) < 1e-12);
  }
  SUBCASE("modulation") {
    const auto s = time_frequency_shift(g.samples, PhasePoint(VectorXd::Zero(1), VectorXd::Ones(1)));
    const auto want = SampledSignal::from_function(grid, [](const VectorXd& t) {
      return std::polar(std::pow(2.0, 0.25) * std::exp(-kPi * t(0) * t(0)), kTwoPi * t(0));
    });
    CHECK(l2_distance(s, want) < 1e-12);
    CHECK(s.l2_norm() == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("sub-sample shift is band-limited and norm preserving") {
    const double x = 0.37;
    const auto s = time_frequency_shift(g.samples, PhasePoint(VectorXd::Constant(1, x), VectorXd::Constant(1, -0.8)));
    const auto want = SampledSignal::from_function(grid, [x](const VectorXd& t) {
      return std::polar(std::pow(2.0, 0.25) * std::exp(-kPi * (t(0) - x) * (t(0) - x)), -kTwoPi * 0.8 * t(0));
    });
    CHECK(l2_distance(s, want) < 1e-10);
    CHECK(std::abs(s.l2_norm() - 1.0) < 1e-10);
  }
  SUBCASE("nearest-sample mode rounds the shift") {
    const auto s = time_frequency_shift(g.samples, PhasePoint(VectorXd::Constant(1, 1.01), VectorXd::Zero(1)),
                                        ShiftMode::nearest_sample);
    const auto want = time_frequency_shift(g.samples, PhasePoint(VectorXd::Ones(1), VectorXd::Zero(1)));
    CHECK(l2_distance(s, want) == 0.0);
  }
  SUBCASE("overflow") {
    CHECK_THROWS_AS(time_frequency_shift(g.samples, PhasePoint(VectorXd::Constant(1, 14.0), VectorXd::Zero(1))),
                    SupportOverflow);
    CHECK_THROWS_AS(time_frequency_shift(g.samples, PhasePoint(VectorXd::Zero(1), VectorXd::Constant(1, 6.0))),
                    SupportOverflow);
  }
}

TEST_CASE("stft of the Gaussian matches the closed form") {
  const auto grid = grid1();
  const auto g = gaussian_window(grid);
  const auto lat = PhaseLattice::centered(1, 6.0, 0.25);
  const auto V = stft(g.samples, g, lat);
  double err = 0.0;
  for (Index i = 0; i < lat.x_count(); ++i) {
    for (Index j = 0; j < lat.eta_count(); ++j) {
      err = std::max(err, std::abs(std::abs(V.values(i, j)) - gauss_abs_stft(lat.x_point(i)(0), lat.eta_point(j)(0))));
    }
  }
  CHECK(err < 1e-10);
  CHECK(std::abs(V.values(24, 24)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(V.values(28, 24)) == doctest::Approx(0.20788).epsilon(1e-4));
}

TEST_CASE("stft agrees with direct quadrature, including off-grid lattices") {
  const auto grid = chirp_grid();
  const auto g = gaussian_window(grid);
  const auto f = chirp(grid);
  // Off-grid lattice forces both the fractional window shift and the direct-DFT path.
  const PhaseLattice lat({{-3.03, 0.71, 9}}, {{-2.9, 0.63, 9}});
  const auto V = stft(f, g, lat);
  double worst = 0.0;
  for (Index i = 0; i < lat.x_count(); ++i) {
    for (Index j = 0; j < lat.eta_count(); ++j) {
      const Complex want = direct_stft(f, g, lat.x_point(i), lat.eta_point(j));
      worst = std::max(worst, std::abs(V.values(i, j) - want));
    }
  }
  CHECK(worst < 1e-8 * V.values.cwiseAbs().maxCoeff());
}

TEST_CASE("stft covariance") {
  const auto grid = grid1();
  const auto g = gaussian_window(grid);
  const auto f = hermite_window(grid, 3).samples;
  const auto lat = PhaseLattice::centered(1, 5.0, 0.5);
  const auto V = stft(f, g, lat);
  const auto shifted = time_frequency_shift(f, PhasePoint(VectorXd::Constant(1, 1.0), VectorXd::Constant(1, -0.5)));
  const auto W = stft(shifted, g, lat);
  // lattice step 0.5: w = (1, -0.5) is (+2, -1) in index units
  double err = 0.0;
  for (Index i = 2; i < lat.x_count(); ++i) {
    for (Index j = 0; j + 1 < lat.eta_count(); ++j) {
      err = std::max(err, std::abs(std::abs(W.values(i, j)) - std::abs(V.values(i - 2, j + 1))));
    }
  }
  CHECK(err < 1e-8);
}

TEST_CASE("stft error paths") {
  const auto grid = grid1();
  const auto g = gaussian_window(grid);
  CHECK_THROWS_AS(stft(g.samples, g, PhaseLattice::centered(1, 9.0, 0.5)), NyquistViolation);
  const auto other = SpatialGrid::centered(1, 256, 1.0 / 16.0);
  CHECK_THROWS_AS(stft(SampledSignal::zeros(other), g, PhaseLattice::centered(1, 2.0, 0.5)), GridMismatch);
  CHECK_THROWS_AS(PhaseLattice({{0.0, 0.0, 3}}, {{0.0, 1.0, 3}}), DomainError);
  const auto Z = stft(SampledSignal::zeros(grid), g, PhaseLattice::centered(1, 2.0, 0.5));
  CHECK(Z.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reconstruction at oversampling 4") {
  const auto cgrid = chirp_grid();
  CHECK(reconstruct(chirp(cgrid), gaussian_window(cgrid)) < 1e-6);
  const auto grid = grid1();
  const auto g = gaussian_window(grid);
  CHECK(reconstruct(g.samples, g) < 1e-6);
  CHECK(reconstruct(hermite_window(grid, 1).samples, g) < 1e-6);
  // A window with a different shape still reconstructs.
  CHECK(reconstruct(g.samples, hermite_window(grid, 1)) < 1e-6);

  StftArray zero{PhaseLattice::centered(1, 2.0, 0.25), StftValues::Zero(17, 17), g.id};
  CHECK(stft_adjoint(zero, g).l2_norm() == 0.0);
}

TEST_CASE("Parseval and adjointness") {
  const auto grid = chirp_grid();
  const auto g = gaussian_window(grid);
  const auto f = chirp(grid);
  const auto lat = covering_lattice(f, g, 4.0);
  const auto V = stft(f, g, lat);
  CHECK(std::abs(V.l2_norm() - f.l2_norm()) < 1e-6 * f.l2_norm());

  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  const auto small = PhaseLattice::centered(1, 3.0, 0.5);
  StftArray F{small, StftValues(small.x_count(), small.eta_count()), g.id};
  for (Index i = 0; i < F.values.size(); ++i) F.values.data()[i] = Complex(n01(rng), n01(rng));
  SampledSignal h = SampledSignal::from_function(grid, [&](const VectorXd& t) {
    return Complex(n01(rng), n01(rng)) * std::exp(-kPi * t.squaredNorm() / 9.0);
  });
  const Complex lhs = inner_product(stft_adjoint(F, g), h);
  const auto Vh = stft(h, g, small);
  const Complex rhs = (F.values.array() * Vh.values.array().conjugate()).sum() * small.cell_area();
  CHECK(std::abs(lhs - rhs) < 1e-8 * std::abs(rhs));

  // linearity
  StftArray F2 = F;
  F2.values *= Complex(0.3, -2.0);
  const auto a = stft_adjoint(F2, g);
  auto b = stft_adjoint(F, g);
  b.values *= Complex(0.3, -2.0);
  CHECK(l2_distance(a, b) < 1e-12 * b.l2_norm());
}

TEST_CASE("window-change domination") {
  const auto grid = grid1();
  const auto g0 = gaussian_window(grid);
  const auto g1 = hermite_window(grid, 1);
  const auto gamma = hermite_window(grid, 1);
  const auto lat = PhaseLattice::centered(1, 4.0, 0.25);
  CHECK(window_change_violation(g0.samples, g0, g1, gamma, lat) < 1e-6);
  CHECK_THROWS_AS(window_change_violation(g0.samples, g0, hermite_window(grid, 2), g0, lat), DomainError);
  CHECK(window_change_violation(hermite_window(grid, 1).samples, g0, g1, gamma, lat) < 1e-6);
}

TEST_CASE("d = 2 smoke") {
  const auto grid = SpatialGrid::centered(2, 64, 1.0 / 8.0);
  const auto g = gaussian_window(grid);
  const auto lat = PhaseLattice::centered(2, 2.0, 0.5);
  const auto V = stft(g.samples, g, lat);
  double err = 0.0;
  for (Index i = 0; i < lat.x_count(); ++i) {
    for (Index j = 0; j < lat.eta_count(); ++j) {
      const double want = std::exp(-kPi * (lat.x_point(i).squaredNorm() + lat.eta_point(j).squaredNorm()) / 2.0);
      err = std::max(err, std::abs(std::abs(V.values(i, j)) - want));
    }
  }
  CHECK(err < 1e-10);
  const auto s = time_frequency_shift(g.samples, PhasePoint(VectorXd::Constant(2, 0.3), VectorXd::Constant(2, 0.5)));
  CHECK(std::abs(s.l2_norm() - 1.0) < 1e-10);
  CHECK(reconstruct(g.samples, g, 2.0) < 1e-2);
}

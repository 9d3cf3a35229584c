#include "tfprop/propagator.hpp"

#include "tfprop/fft.hpp"
#include "tfprop/hermite.hpp"

#include <fmt/format.h>

#include <cmath>

namespace tfprop {

namespace {

void warn(Diagnostics* diag, std::string msg) {
  if (diag) diag->warnings.push_back(std::move(msg));
}

IsotropicOscillator require_oscillator(const HamiltonianSymbol& a) {
  const auto osc = as_isotropic_oscillator(a);
  if (!osc) throw ClassMismatch(fmt::format("symbol '{}' is not of the form beta|2pi xi|^2 + alpha|x|^2 + c", a.name));
  if (osc->alpha < 0.0 || osc->beta <= 0.0) throw ClassMismatch("spectral route needs alpha >= 0 and beta > 0");
  return *osc;
}

SampledSignal free_route(const IsotropicOscillator& osc, double t, const SampledSignal& u0) {
  const double w = t * osc.beta * 4.0 * kPi * kPi;
  const VectorXcd mult = sample_multiplier(u0.grid, [w](const VectorXd& xi) { return std::polar(1.0, w * xi.squaredNorm()); });
  SampledSignal u = apply_fourier_multiplier(u0, mult);
  u.values *= std::polar(1.0, osc.c * t);
  return u;
}

SampledSignal factorized_route(const IsotropicOscillator& osc, double t, const SampledSignal& u0) {
  const double lam2 = std::sqrt(osc.beta / osc.alpha);
  const double tau = 2.0 * std::sqrt(osc.alpha * osc.beta) * t;
  const auto pieces = std::max<Index>(1, static_cast<Index>(std::ceil(std::abs(tau) / (0.5 * kPi))));
  const double tk = tau / static_cast<double>(pieces);
  const double ct = std::tan(0.5 * tk) / (2.0 * lam2);
  const double mw = std::sin(tk) * lam2 * 2.0 * kPi * kPi;
  const VectorXcd mult = sample_multiplier(u0.grid, [mw](const VectorXd& xi) { return std::polar(1.0, mw * xi.squaredNorm()); });
  VectorXcd chirp(u0.grid.size());
  for (Index i = 0; i < u0.grid.size(); ++i) chirp(i) = std::polar(1.0, ct * u0.grid.point(i).squaredNorm());
  SampledSignal u = u0;
  for (Index p = 0; p < pieces; ++p) {
    u.values.array() *= chirp.array();
    u = apply_fourier_multiplier(u, mult);
    u.values.array() *= chirp.array();
  }
  u.values *= std::polar(1.0, osc.c * t);
  return u;
}

SampledSignal hermite_route(const IsotropicOscillator& osc, double t, const SampledSignal& u0, Diagnostics* diag) {
  const auto& grid = u0.grid;
  const int d = grid.dim();
  if (d > 2) throw DomainError("Hermite route supports d <= 2");
  const Index n = grid.points_per_axis();
  const double lam = std::pow(osc.beta / osc.alpha, 0.25);
  const double omega = std::sqrt(osc.alpha * osc.beta);

  // Largest order resolved by the grid in space and frequency.
  double reach = std::numeric_limits<double>::infinity();
  double dx = 0.0;
  for (int a = 0; a < d; ++a) {
    reach = std::min({reach, -grid.coordinate(a, 0), grid.coordinate(a, n - 1)});
    dx = std::max(dx, grid.spacing()(a));
  }
  const double by_space = std::pow(0.9 * reach / lam, 2) / 2.0;
  const double by_freq = std::pow(0.9 * kPi * lam / dx, 2) / 2.0;
  const auto n_max = std::max<Index>(8, static_cast<Index>(std::floor(std::min(by_space, by_freq))));

  // One table per axis (axes share n, origin may differ).
  std::vector<MatrixXd> tables;
  for (int a = 0; a < d; ++a) {
    VectorXd s(n);
    for (Index i = 0; i < n; ++i) s(i) = grid.coordinate(a, i) / lam;
    tables.push_back(hermite_function_table(s, n_max) / std::sqrt(lam));
  }
  const double energy = u0.values.squaredNorm() * grid.cell_volume();
  if (energy == 0.0) return u0;

  MatrixXcd coeff;
  if (d == 1) {
    coeff = tables[0].transpose() * u0.values * grid.spacing()(0);
  } else {
    const Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> U(u0.values.data(), n, n);
    coeff = tables[0].transpose() * U * tables[1] * grid.cell_volume();
  }

  // Adaptive truncation: stop once the last 8 orders are negligible; otherwise
  // accept the full table only if it captures the required energy fraction.
  auto order_energy = [&](Index k) {
    if (d == 1) return std::norm(coeff(k, 0));
    return coeff.row(k).head(k + 1).cwiseAbs2().sum() + coeff.col(k).head(k).cwiseAbs2().sum();
  };
  Index N = 0;
  double captured = 0.0;
  for (Index k = 0; k < n_max; ++k) {
    captured += order_energy(k);
    if (k + 1 >= 8) {
      double tail = 0.0;
      for (Index j = k - 7; j <= k; ++j) tail = std::max(tail, order_energy(j));
      if (tail < 1e-26 * energy && energy - captured <= 1e-10 * energy) {
        N = k + 1;
        break;
      }
    }
  }
  if (N == 0) {
    if (captured < (1.0 - 1e-10) * energy) {
      throw TruncationError(fmt::format("Hermite expansion captures only {:.12f} of the energy with {} terms",
                                        captured / energy, n_max));
    }
    N = n_max;
    warn(diag, fmt::format("Hermite expansion tail not converged at {} terms (capture {:.14f})", n_max, captured / energy));
  }
  if (diag) {
    diag->hermite_terms = N;
    diag->hermite_capture = captured / energy;
  }

  auto phase = [&](Index m) { return std::polar(1.0, (omega * static_cast<double>(2 * m + 1)) * t); };
  SampledSignal out = SampledSignal::zeros(grid);
  const Complex global = std::polar(1.0, osc.c * t);
  if (d == 1) {
    VectorXcd c(N);
    for (Index m = 0; m < N; ++m) c(m) = coeff(m, 0) * phase(m) * global;
    out.values = tables[0].leftCols(N) * c;
  } else {
    MatrixXcd c(N, N);
    for (Index i = 0; i < N; ++i) {
      for (Index j = 0; j < N; ++j) c(i, j) = coeff(i, j) * phase(i) * phase(j) * global;
    }
    const MatrixXcd U = tables[0].leftCols(N) * c * tables[1].leftCols(N).transpose();
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) out.values(i * n + j) = U(i, j);
    }
  }
  return out;
}

}  // namespace

SampledSignal propagate_spectral(const HamiltonianSymbol& a, double t, const SampledSignal& u0, SpectralRoute route,
                                 Diagnostics* diag) {
  if (a.cls != SymbolClass::quadratic) throw ClassMismatch(fmt::format("symbol '{}' is not quadratic", a.name));
  if (a.d != u0.grid.dim()) throw GridMismatch("symbol and signal dimensions differ");
  const auto osc = require_oscillator(a);
  if (t == 0.0) return u0;
  if (osc.alpha == 0.0) return free_route(osc, t, u0);
  if (route == SpectralRoute::factorized) return factorized_route(osc, t, u0);
  return hermite_route(osc, t, u0, diag);
}

SampledSignal propagate_split_step(const HamiltonianSymbol& a, double t, const SampledSignal& u0, double dt,
                                   Diagnostics* diag) {
  const auto sep = as_separable(a);
  if (!(dt > 0.0)) throw DomainError("split-step dt must be positive");
  if (a.d != u0.grid.dim()) throw GridMismatch("symbol and signal dimensions differ");
  if (t == 0.0) return u0;
  const auto steps = std::max<Index>(1, static_cast<Index>(std::llround(std::abs(t) / dt)));
  const double h = t / static_cast<double>(steps);
  const auto& grid = u0.grid;

  VectorXd V(grid.size());
  for (Index i = 0; i < grid.size(); ++i) V(i) = sep.V(grid.point(i));
  VectorXcd K(grid.size());
  double kmax = 0.0;
  for (Index i = 0; i < grid.size(); ++i) {
    const double k = sep.k(grid.frequency_point(i));
    kmax = std::max(kmax, std::abs(k));
    K(i) = std::polar(1.0, h * k);
  }
  if (std::abs(h) * kmax > kPi) {
    warn(diag, fmt::format("split-step: |dt| max|k| = {:.3g} > pi on the grid band; kinetic phase under-resolved",
                           std::abs(h) * kmax));
  }
  if (std::abs(h) * V.cwiseAbs().maxCoeff() > kPi) {
    warn(diag, fmt::format("split-step: |dt| max|V| = {:.3g} > pi; potential phase under-resolved",
                           std::abs(h) * V.cwiseAbs().maxCoeff()));
  }
  VectorXcd half(grid.size()), full(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    half(i) = std::polar(1.0, 0.5 * h * V(i));
    full(i) = std::polar(1.0, h * V(i));
  }
  const Index n = grid.points_per_axis();
  const int d = grid.dim();
  const double inv = 1.0 / static_cast<double>(grid.size());
  VectorXcd u = u0.values.cwiseProduct(half);
  for (Index s = 0; s < steps; ++s) {
    fft::forward(u, n, d);
    u.array() *= K.array() * inv;
    fft::inverse(u, n, d);
    u.array() *= (s + 1 < steps ? full : half).array();
  }
  return {grid, std::move(u)};
}

Amplitude leading_amplitude(const PhaseFunction& phi) {
  return [phi](const VectorXd& x, const VectorXd& eta) {
    const double det = phi.sample(x, eta).det_dxdy;
    return 1.0 / std::sqrt(Complex(det, 0.0));
  };
}

SampledSignal apply_fio_type1(const Amplitude& sigma, const PhaseFunction& phi, const SampledSignal& f,
                              Diagnostics* diag) {
  const auto& grid = f.grid;
  if (phi.d != grid.dim()) throw GridMismatch("phase and signal dimensions differ");
  const VectorXcd fh = spectrum(f);
  const double peak = fh.cwiseAbs().maxCoeff();
  SampledSignal out = SampledSignal::zeros(grid);
  if (peak == 0.0) return out;
  double deta = 1.0;
  for (int a = 0; a < grid.dim(); ++a) deta /= grid.extent(a);

  std::vector<Index> support;
  for (Index k = 0; k < grid.size(); ++k) {
    if (std::abs(fh(k)) > 1e-14 * peak) support.push_back(k);
  }
  // Stationary-phase scale against the eta spacing at the support centre.
  {
    const VectorXd x0 = VectorXd::Zero(grid.dim());
    const VectorXd e0 = grid.frequency_point(support[support.size() / 2]);
    const double h = 1e-4;
    double curv = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
      VectorXd ep = e0, em = e0;
      ep(a) += h;
      em(a) -= h;
      curv = std::max(curv, std::abs((phi.sample(x0, ep).grad_eta(a) - phi.sample(x0, em).grad_eta(a)) / (2 * h)));
    }
    const double cell = std::pow(deta, 1.0 / grid.dim());
    if (curv > 0.0 && 1.0 / std::sqrt(kTwoPi * curv) < 2.0 * cell) {
      warn(diag, fmt::format("fio: stationary-phase scale {:.3g} below two eta cells ({:.3g})",
                             1.0 / std::sqrt(kTwoPi * curv), 2.0 * cell));
    }
  }
  for (Index i = 0; i < grid.size(); ++i) {
    const VectorXd x = grid.point(i);
    Complex acc = 0.0;
    for (Index k : support) {
      const VectorXd eta = grid.frequency_point(k);
      acc += std::polar(1.0, kTwoPi * phi(x, eta)) * sigma(x, eta) * fh(k);
    }
    out.values(i) = acc * deta;
  }
  return out;
}

SampledSignal kohn_nirenberg_apply(const std::function<Complex(const VectorXd&, const VectorXd&)>& sigma,
                                   const SampledSignal& f) {
  return apply_fio_type1(sigma, trivial_phase(f.grid.dim()), f);
}

PropagatorPlan make_plan(const HamiltonianSymbol& a, double t, Method method, double segment, double dt) {
  if (!(segment > 0.0)) throw DomainError("segment length must be positive");
  PropagatorPlan p;
  p.method = method;
  p.a = a;
  p.t = t;
  p.dt = dt;
  const double sgn = t < 0 ? -1.0 : 1.0;
  const auto h = static_cast<Index>(std::floor(std::abs(t) / segment + 1e-9));
  for (Index i = 0; i < h; ++i) p.segments.push_back(sgn * segment);
  const double rest = t - sgn * static_cast<double>(h) * segment;
  if (std::abs(rest) > 1e-12) p.segments.push_back(rest);
  return p;
}

SampledSignal propagate_long_time(const PropagatorPlan& plan, const SampledSignal& u0, Diagnostics* diag) {
  double total = 0.0;
  for (double s : plan.segments) total += s;
  if (std::abs(total - plan.t) > 1e-9 * std::max(1.0, std::abs(plan.t))) throw DomainError("plan segments do not sum to t");
  SampledSignal u = u0;
  for (double s : plan.segments) {
    switch (plan.method) {
      case Method::spectral: u = propagate_spectral(plan.a, s, u, plan.route, diag); break;
      case Method::split_step: u = propagate_split_step(plan.a, s, u, plan.dt, diag); break;
      case Method::fio_type1: {
        const auto phi = build_phase(plan.a, s);
        u = apply_fio_type1(leading_amplitude(phi), phi, u, diag);
        break;
      }
    }
  }
  return u;
}

double schrodinger_residual(const HamiltonianSymbol& a, const std::function<SampledSignal(double)>& evolve, double t,
                            double dt) {
  const SampledSignal up = evolve(t + dt), um = evolve(t - dt), u = evolve(t);
  SampledSignal lhs = kohn_nirenberg_apply(
      [&a](const VectorXd& x, const VectorXd& xi) {
        VectorXd z(x.size() + xi.size());
        z << x, xi;
        return Complex(a.eval(z));
      },
      u);
  lhs.values += Complex(0.0, 1.0) * (up.values - um.values) / (2.0 * dt);
  return lhs.l2_norm();
}

Method parse_method(const std::string& s) {
  if (s == "spectral" || s == "spectral_quadratic") return Method::spectral;
  if (s == "split_step") return Method::split_step;
  if (s == "fio_type1" || s == "fio") return Method::fio_type1;
  throw DomainError(fmt::format("unknown propagation method '{}'", s));
}

std::string method_name(Method m) {
  switch (m) {
    case Method::spectral: return "spectral";
    case Method::split_step: return "split_step";
    case Method::fio_type1: return "fio_type1";
  }
  return "?";
}

}  // namespace tfprop

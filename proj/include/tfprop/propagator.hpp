#ifndef TFPROP_PROPAGATOR_HPP
#define TFPROP_PROPAGATOR_HPP

#include "tfprop/eikonal.hpp"
#include "tfprop/grid.hpp"

#include <functional>
#include <string>
#include <vector>

namespace tfprop {

// All routes compute u(t) = e^{itH} u0 for H = a(x, D).

/// Warnings collected by a propagation (resolution, truncation, ...).
struct Diagnostics {
  std::vector<std::string> warnings;
  Index hermite_terms = 0;
  double hermite_capture = 1.0;
};

enum class SpectralRoute {
  automatic,   // free multiplier when alpha = 0, Hermite expansion otherwise
  hermite,     // eigen-expansion
  factorized,  // exact chirp * multiplier * chirp factorisation
};

/// Exact propagator for symbols beta |2 pi xi|^2 + alpha |x|^2 + c.
SampledSignal propagate_spectral(const HamiltonianSymbol& a, double t, const SampledSignal& u0,
                                 SpectralRoute route = SpectralRoute::automatic, Diagnostics* diag = nullptr);

/// Strang splitting for k(xi) + V(x) with step dt (adjusted to divide t).
SampledSignal propagate_split_step(const HamiltonianSymbol& a, double t, const SampledSignal& u0, double dt,
                                   Diagnostics* diag = nullptr);

/// (x, eta) -> amplitude.
using Amplitude = std::function<Complex(const VectorXd& x, const VectorXd& eta)>;

/// sigma0 = (det dx/dy)^{-1/2} (principal branch) read off the phase.
Amplitude leading_amplitude(const PhaseFunction& phi);
inline Amplitude unit_amplitude() {
  return [](const VectorXd&, const VectorXd&) { return Complex(1.0); };
}

/// I(sigma, Phi) f (x) = int e^{2 pi i Phi(x, eta)} sigma(x, eta) f^(eta) d eta by direct
/// quadrature over the grid frequencies where |f^| is non-negligible.
SampledSignal apply_fio_type1(const Amplitude& sigma, const PhaseFunction& phi, const SampledSignal& f,
                              Diagnostics* diag = nullptr);

/// Kohn-Nirenberg quantisation sigma(x, D) f by direct quadrature.
SampledSignal kohn_nirenberg_apply(const std::function<Complex(const VectorXd&, const VectorXd&)>& sigma,
                                   const SampledSignal& f);

enum class Method { spectral, split_step, fio_type1 };

struct PropagatorPlan {
  Method method = Method::spectral;
  HamiltonianSymbol a;
  double t = 0.0;
  double dt = 1e-3;  // split-step step
  SpectralRoute route = SpectralRoute::automatic;
  std::vector<double> segments;  // sums to t
};

/// Segments of length segment (sign of t) plus a remainder, so that they sum to t.
PropagatorPlan make_plan(const HamiltonianSymbol& a, double t, Method method, double segment = 0.1,
                         double dt = 1e-3);

SampledSignal propagate_long_time(const PropagatorPlan& plan, const SampledSignal& u0, Diagnostics* diag = nullptr);

/// || i d_t u + a(x, D) u || at time t, with u(s) supplied by `evolve`, a central
/// difference of step dt in time, and a(x, D) by Kohn-Nirenberg quadrature.
double schrodinger_residual(const HamiltonianSymbol& a, const std::function<SampledSignal(double)>& evolve, double t,
                            double dt);

Method parse_method(const std::string& s);
std::string method_name(Method m);

}  // namespace tfprop

#endif  // TFPROP_PROPAGATOR_HPP

#ifndef TFPROP_EIKONAL_HPP
#define TFPROP_EIKONAL_HPP

#include "tfprop/flow.hpp"

#include <functional>
#include <vector>

namespace tfprop {

// Phase functions solve 2 pi d_t Phi = a(x, grad_x Phi) with Phi(0, x, eta) = <x, eta>.
// They generate the flow: (x, grad_x Phi) = chi_t(grad_eta Phi, eta).

enum class PhaseSource { closed_form_quadratic, characteristics, explicit_formula };

struct PhaseSample {
  double phi = 0.0;
  VectorXd grad_x;
  VectorXd grad_eta;     // = y(t, x, eta)
  double det_dxdy = 1.0; // det d x / d y at (y, eta); zero at caustics
};

struct PhaseFunction {
  double t = 0.0;
  int d = 1;
  PhaseSource source = PhaseSource::characteristics;
  std::function<PhaseSample(const VectorXd& x, const VectorXd& eta)> sample;
  /// The same construction at another time (used for time derivatives).
  std::function<PhaseFunction(double)> at;

  double operator()(const VectorXd& x, const VectorXd& eta) const { return sample(x, eta).phi; }
};

struct EikonalOptions {
  FlowOptions flow{};
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  double caustic_delta = 0.1;        // |det dx/dy| below this is a caustic
  bool force_characteristics = false;
};

/// Phi(t, .) from the flow. Quadratic symbols get the closed-form generating
/// function; otherwise Newton-inverted characteristics.
PhaseFunction build_phase(const HamiltonianSymbol& a, double t, const EikonalOptions& opts = {});

/// Phi = <x, eta> at every time (the unpropagated phase; a negative control).
PhaseFunction trivial_phase(int d);

/// Phi from explicit formulas (e.g. tests); `phi(t, x, eta)` with analytic gradients.
PhaseFunction explicit_phase(int d, double t, std::function<double(double, const VectorXd&, const VectorXd&)> phi,
                             std::function<VectorXd(double, const VectorXd&, const VectorXd&)> grad_x,
                             std::function<VectorXd(double, const VectorXd&, const VectorXd&)> grad_eta);

/// Probe points (x, eta) stacked; box [-radius, radius]^{2d}.
using PhaseProbes = std::vector<VectorXd>;

/// sup |2 pi d_t Phi - a(x, grad_x Phi)| with a centred difference in t of step dt.
double eikonal_residual(const PhaseFunction& phi, const HamiltonianSymbol& a, const PhaseProbes& probes,
                        double dt = 1e-5);

/// sup || (x, grad_x Phi) - chi_t(grad_eta Phi, eta) ||.
double phase_flow_residual(const PhaseFunction& phi, const HamiltonianSymbol& a, const PhaseProbes& probes,
                           const FlowOptions& opts = {});

struct TameRegion {
  double radius = 4.0;
  double step = 1.0;
};

struct TameReport {
  TameRegion region;
  double c_lower = 0.0;        // inf |det d^2 Phi / dx deta|
  double detcond_lower = 0.0;  // inf |det dx/dy|
  double sup_xx = 0.0, sup_xeta = 0.0, sup_etaeta = 0.0;
  bool caustic = false;        // detcond_lower < delta, or the phase could not be built
  bool pass = false;           // non-degenerate and no caustic
};

/// Finite-difference mixed Hessian (step h on the gradients) over the region.
TameReport tame_check(const PhaseFunction& phi, const TameRegion& region = {}, double delta = 0.1, double h = 1e-4);

/// First t > 0 (to 1e-6) at which inf |det dx/dy| over the region drops below delta;
/// returns t_max when none is found on [0, t_max].
double find_caustic_time(const HamiltonianSymbol& a, const TameRegion& region = {}, double delta = 0.1,
                         double t_max = 4.0, const FlowOptions& opts = {});

/// Largest power of two t (<= t_max) below the caustic time.
double detect_tame_horizon(const HamiltonianSymbol& a, const TameRegion& region = {}, double delta = 0.1,
                           double t_max = 4.0, const FlowOptions& opts = {});

}  // namespace tfprop

#endif  // TFPROP_EIKONAL_HPP

#ifndef TFPROP_FLOW_HPP
#define TFPROP_FLOW_HPP

#include "tfprop/hamiltonian.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace tfprop {

// The flow chi_t solves
//   2 pi dx/dt = -grad_xi a(x, xi),   2 pi dxi/dt = grad_x a(x, xi),
// with (x, xi)(0) = (y, eta).

struct FlowOptions {
  double step = 1e-3;            // RK4 step bound
  double segment = 0.1;          // long times are composed from segments of this length
  double escape_radius = 1e8;    // |z| beyond this aborts with FlowEscape
  bool estimate_error = true;    // step-halving estimate (triples the cost)
};

struct FlowResult {
  double t = 0.0;
  PhasePoint input;
  PhasePoint output;
  MatrixXd jacobian;           // d chi_t / d w
  double step = 0.0;           // step actually used
  Index steps = 0;
  double error_estimate = 0.0; // ||chi_h - chi_{h/2}|| * 16/15, 0 when not estimated
  double symplectic_defect = 0.0;
  double action = 0.0;         // (1/2pi) int_0^t [a - <xi, grad_xi a>] ds along the trajectory
};

FlowResult integrate_flow(const HamiltonianSymbol& a, double t, const PhasePoint& w, const FlowOptions& opts = {});

/// Affine map z -> M z + offset.
struct LinearFlow {
  MatrixXd M;
  VectorXd offset;
  VectorXd operator()(const VectorXd& z) const { return M * z + offset; }
};

/// Exact chi_t for a quadratic symbol via the exponential of the augmented generator.
LinearFlow flow_quadratic_exact(const HamiltonianSymbol& a, double t);

/// chi_t as a callable on stacked points: exact for quadratic symbols, RK4 otherwise.
using FlowMap = std::function<VectorXd(const VectorXd&)>;
FlowMap make_flow_map(const HamiltonianSymbol& a, double t, const FlowOptions& opts = {});
/// As make_flow_map, but chi_t is composed from |t| / segment pieces.
FlowMap make_composed_flow_map(const HamiltonianSymbol& a, double t, double segment, const FlowOptions& opts = {});

/// max over probes of ||chi_{t1}(chi_{t2}(w)) - chi_{t1+t2}(w)||.
double group_compose(const HamiltonianSymbol& a, double t1, double t2, const std::vector<VectorXd>& probes,
                     const FlowOptions& opts = {}, bool exact = false);

struct ProbeRegion {
  double radius = 5.0;  // box [-radius, radius]^{2d}
  double step = 1.0;
  std::uint64_t seed = 1;
  int random_pairs = 200;
};

struct LipschitzEstimate {
  double t = 0.0;
  double L_forward = 1.0;
  double L_inverse = 1.0;
  ProbeRegion region;
};

/// Lipschitz constants of chi_t and chi_{-t}: max of sampled difference quotients
/// and of Jacobian spectral norms over the probe lattice.
LipschitzEstimate lipschitz_estimate(const HamiltonianSymbol& a, double t, const ProbeRegion& region = {},
                                     const FlowOptions& opts = {});

/// Points of the lattice [-radius, radius]^{2d} with the given step.
std::vector<VectorXd> box_probes(int d, double radius, double step);

}  // namespace tfprop

#endif  // TFPROP_FLOW_HPP

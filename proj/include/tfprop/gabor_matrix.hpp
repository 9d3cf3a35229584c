#ifndef TFPROP_GABOR_MATRIX_HPP
#define TFPROP_GABOR_MATRIX_HPP

#include "tfprop/propagator.hpp"
#include "tfprop/stft.hpp"

#include <functional>
#include <string>
#include <vector>

namespace tfprop {

/// A linear operator on sampled signals, identified by a descriptor string.
struct SignalOperator {
  std::string descriptor;
  std::function<SampledSignal(const SampledSignal&)> apply;
};

SignalOperator identity_operator();
/// e^{itH} realised by the plan.
SignalOperator propagator_operator(const PropagatorPlan& plan);
/// Kohn-Nirenberg quantisation of an expression sigma(x, eta).
SignalOperator pseudodifferential_operator(const std::string& symbol, int d = 1);
/// second after first.
SignalOperator compose(const SignalOperator& second, const SignalOperator& first);

/// k(w, z) = <P pi(w) g, pi(z) g>; values(iw, iz) in the lattices' flat orders.
struct GaborMatrixSample {
  double t = 0.0;
  PhaseLattice w_lattice;
  PhaseLattice z_lattice;
  StftValues values;
  std::string window_id;
  std::string descriptor;
};

/// Column by column: shift the window, apply the operator, take the STFT.
GaborMatrixSample compute_gabor_matrix(const SignalOperator& op, const Window& g, const PhaseLattice& w_lattice,
                                       const PhaseLattice& z_lattice, double t = 0.0, std::size_t workers = 1);

struct DecayFitOptions {
  double r_min = 2.0;
  double r_max = 10.0;
  int annuli = 32;           // linear annuli on [r_min, r_max]
  double noise_floor = 1e-12;  // relative to max |k|
  double offdiag_radius = 5.0;
};

struct EnvelopePoint {
  double r;         // <z - map(w)> of the annulus maximum
  double envelope;  // max |k| over the annulus
  double fit;       // C r^{-s}
};

struct DecayFit {
  double C = 0.0;
  double s_fit = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;
  double residual = 0.0;  // RMS of the natural-log fit
  int annuli_used = 0;
  std::string map_used;
  double offdiag_mass = 0.0;   // max |k| with <z - map(w)> >= offdiag_radius
  double column_growth = 0.0;  // slope of ln(column peak) against ln<w>
  bool growth_flag = false;    // column_growth > 0.5
  std::vector<EnvelopePoint> envelope;
};

/// Power-law fit of the annulus envelope of |k| against r = <z - map(w)>.
DecayFit fit_decay(const GaborMatrixSample& k, const FlowMap& map, const std::string& map_name,
                   const DecayFitOptions& opts = {});

inline FlowMap identity_map() {
  return [](const VectorXd& z) { return z; };
}

/// Gabor matrix of sigma(x, D) fitted against the identity map.
DecayFit almost_diag_check(const std::string& symbol, const Window& g, const PhaseLattice& w_lattice,
                           const PhaseLattice& z_lattice, const DecayFitOptions& opts = {}, std::size_t workers = 1,
                           GaborMatrixSample* matrix_out = nullptr);

/// max over entries above the noise floor of |k(w, z)| <z - map(w)>^s.
double bound_constant(const GaborMatrixSample& k, const FlowMap& map, double s, double noise_floor = 1e-12);

/// K(w, z) = sum_u k1(w, u) k2(u, z) dA_u where k2 is evaluated column by column
/// on the intermediate lattice u; P2 is streamed in blocks of u.
GaborMatrixSample compose_matrices(const GaborMatrixSample& k1, const SignalOperator& op2, const Window& g,
                                   const PhaseLattice& z_lattice, std::size_t workers = 1, Index block = 256);

struct CompositionReport {
  DecayFit composed;          // fit of the composition against chi2 o chi1
  double s_check = 0.0;       // exponent used for the constant inequality
  double C_composed = 0.0;    // bound constant of the composition at s_check
  double C1 = 0.0, C2 = 0.0;  // bound constants of the factors at s_check
  double C0 = 0.0;            // (2^s + (2 L)^s) L_inv^{2d} int <v>^{-s} dv
  bool bound_holds = false;
  double direct_error = -1.0;  // max |K - K_direct| / max |K_direct| when a direct matrix is supplied
};

/// Checks C <= C0 C1 C2 at a common exponent for the discrete composition.
CompositionReport composition_bound_check(const GaborMatrixSample& k1, const FlowMap& chi1,
                                          const GaborMatrixSample& k2, const FlowMap& chi2,
                                          const GaborMatrixSample& composed, const LipschitzEstimate& lip,
                                          const DecayFitOptions& opts = {},
                                          const GaborMatrixSample* direct = nullptr);

/// Composition of two flow maps: second after first.
inline FlowMap compose_maps(FlowMap second, FlowMap first) {
  return [second = std::move(second), first = std::move(first)](const VectorXd& z) { return second(first(z)); };
}

}  // namespace tfprop

#endif  // TFPROP_GABOR_MATRIX_HPP

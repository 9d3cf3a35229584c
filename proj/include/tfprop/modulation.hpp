#ifndef TFPROP_MODULATION_HPP
#define TFPROP_MODULATION_HPP

#include "tfprop/flow.hpp"
#include "tfprop/propagator.hpp"
#include "tfprop/stft.hpp"

#include <string>
#include <vector>

namespace tfprop {

/// v_r(z) = <z>^r, optionally composed with a flow map: v_r(chi(z)).
struct Weight {
  double r = 0.0;
  FlowMap chi;  // empty for the plain weight

  double operator()(const VectorXd& z) const {
    return std::pow(japanese_bracket(chi ? chi(z) : z), r);
  }
};

/// p or q of infinity is represented by std::numeric_limits<double>::infinity().
double parse_exponent(const std::string& s);
std::string exponent_name(double p);

struct ModNormOptions {
  double R = 12.0;            // ball |z| <= R
  double oversampling = 4.0;  // lattice step 1 / oversampling (>= 2)
  double tail_band = 2.0;     // shell R - tail_band <= |z| <= R for the tail estimate
  double tail_limit = 0.01;   // warn when the shell carries more than this fraction
};

struct ModNorm {
  double p = 2.0, q = 2.0, r = 0.0;
  double value = 0.0;
  double R = 0.0;
  double tail_fraction = 0.0;  // shell norm over value
  std::string lattice;
  std::vector<std::string> warnings;
};

/// ||V_g f v_r||_{L^{p,q}} over the ball |z| <= R: p-norm in x at each eta, then q-norm in eta.
ModNorm mod_norm(const SampledSignal& f, const Window& g, double p, double q, double r, const ModNormOptions& opts = {});
/// Same from a precomputed STFT (the lattice must be a box containing the ball).
ModNorm mod_norm(const StftArray& V, double p, double q, double r, const ModNormOptions& opts = {});

struct BatterySignal {
  std::string id;
  SampledSignal f;
};

/// Schwartz test signals: Gaussian, shifted and modulated Gaussian, Hermite 2,
/// squeezed Gaussian, chirped Gaussian.
std::vector<BatterySignal> default_battery(const SpatialGrid& grid);

struct BoundednessRow {
  double t = 0.0;
  std::string signal_id;
  double p = 2.0, q = 2.0, r = 0.0;
  double norm_in = 0.0, norm_out = 0.0, ratio = 1.0;
};

struct BoundednessReport {
  std::vector<BoundednessRow> rows;
  std::vector<double> t;          // sorted t samples
  std::vector<double> max_ratio;  // per t sample
  double max_jump = 0.0;          // max relative change of max_ratio between adjacent t
  std::vector<std::string> warnings;
};

struct BoundednessOptions {
  Method method = Method::spectral;
  SpectralRoute route = SpectralRoute::automatic;
  double segment = 0.1;
  double dt = 1e-3;
  ModNormOptions norm;
  std::size_t workers = 1;
};

/// ||e^{itH} f||_{M^p_r} / ||f||_{M^p_r} for every (t, signal).
BoundednessReport boundedness_report(const HamiltonianSymbol& a, const std::vector<double>& t_list, double p, double r,
                                     const std::vector<BatterySignal>& battery, const Window& g,
                                     const BoundednessOptions& opts = {});

struct WeightEquivalence {
  double bound = 1.0;     // K^{|r|}
  double observed = 1.0;  // max over probes of max(v_r(chi z) / v_r(z), v_r(z) / v_r(chi z))
  bool holds = true;
};

/// v_r o chi is equivalent to v_r with constant K^{|r|},
/// K = sqrt(2) max(1 + |chi(0)|, L, 1 + |chi^{-1}(0)|, L_inv).
WeightEquivalence weight_composition_check(double r, const FlowMap& chi, const FlowMap& chi_inv,
                                           const LipschitzEstimate& lip, const std::vector<VectorXd>& probes);

}  // namespace tfprop

#endif  // TFPROP_MODULATION_HPP

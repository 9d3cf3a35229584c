#ifndef TFPROP_SINGULARITY_HPP
#define TFPROP_SINGULARITY_HPP

#include "tfprop/flow.hpp"
#include "tfprop/propagator.hpp"
#include "tfprop/stft.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tfprop {

/// A phase-space map with its inverse; `linear` is set for exact linear flows.
struct PhaseMap {
  FlowMap forward;
  FlowMap inverse;
  std::optional<MatrixXd> linear;
  double lipschitz = 1.0;  // bound for |chi(z) - chi(w)| / |z - w|

  static PhaseMap identity(int d);
  static PhaseMap from_matrix(const MatrixXd& M);
  /// chi_t of a; linear when the symbol is quadratic without linear part.
  static PhaseMap flow(const HamiltonianSymbol& a, double t, const FlowOptions& opts = {});
};

/// Subset Gamma of R^{2d}. Conic regions (rays, two-sided cones, complements, unions)
/// are exact; curves are densified point samples with a conservative margin.
class Region {
 public:
  static Region ray(const VectorXd& dir);
  /// Two-sided cone of half-angle `angle` around the line spanned by dir.
  static Region cone(const VectorXd& dir, double angle);
  /// Graph eta = phi(x) for x in [x_lo, x_hi] (d = 1), samples spaced <= h <z>.
  static Region curve(const std::string& phi, double x_lo, double x_hi, double h = 2e-3);
  static Region points(std::vector<VectorXd> pts);
  static Region ball(const VectorXd& center, double radius);
  static Region complement(const Region& r);
  static Region unite(const std::vector<Region>& parts);

  int phase_dim() const { return dim_; }
  const std::string& descriptor() const { return descriptor_; }

  bool contains(const VectorXd& z) const;
  /// z in Gamma_delta: |z - z0| < delta <z0> for some z0 in Gamma.
  bool in_delta(const VectorXd& z, double delta) const;

  /// chi(Gamma); conic regions need a linear map.
  Region image(const PhaseMap& chi) const;

  struct Impl;

 private:
  std::shared_ptr<const Impl> impl_;
  int dim_ = 2;
  std::string descriptor_;
};

/// Region DSL: ray(dir=(1,0)), cone(dir=(1,2),angle=0.2), curve(phi=x^2/8,x=(-16,16)),
/// points((10,0),(3,4)), ball(center=(0,0),radius=2), complement(...), union(..., ...).
Region parse_region(const std::string& text, int d = 1);

/// Throws DomainError unless 0 < delta < 1.
void check_delta(double delta);

bool in_delta_neighborhood(const VectorXd& z, const Region& gamma, double delta);

struct InclusionReport {
  double delta = 0.0;
  double delta_star = 0.0;
  int halvings = 0;
  Index points_checked = 0;
  // The four inclusions, all true on return.
  bool nested = false;       // (Gamma_{d*})_{d*} in Gamma_d
  bool complement = false;   // (R \ Gamma_d)_{d*} in R \ Gamma_{d*}
  bool forward = false;      // chi(Gamma_{d*}) in chi(Gamma)_d
  bool backward = false;     // chi(Gamma)_{d*} in chi(Gamma_d)
};

/// delta / (2 L_f L_i) with both constants clamped below by 1.
double delta_star_formula(const LipschitzEstimate& lip, double delta);

/// Starts from the formula and halves (at most 8 times) until the four inclusions hold
/// on the lattice [-radius, radius]^{2d} of the given step; GeometryError otherwise.
InclusionReport delta_star(const Region& gamma, const PhaseMap& chi, const LipschitzEstimate& lip, double delta,
                           double radius = 16.0, double step = 0.25);

enum class Verdict { regular, singular, inconclusive };
std::string verdict_name(Verdict v);

struct RegularityOptions {
  double p = 2.0;
  double r = 0.0;
  int j0 = 0;
  int j_max = -1;  // -1: largest annulus inside the lattice
  int top = 3;
  int min_annuli = 4;
  double slope_regular = -0.5;
  double slope_singular = 0.0;
  double noise_floor = 1e-12;  // relative to the whole-lattice weighted norm
};

struct RegularityScore {
  std::string region;
  double p = 2.0, r = 0.0, delta = 0.0;
  int j0 = 0;
  int j_max = 0;        // last annulus scored
  int j_lattice = 0;    // largest annulus inside the lattice
  int j_truncation = -1;  // cap from the signal's own truncation, -1 when none
  std::vector<double> scores;  // S_j, j = j0..j_max
  double floor = 0.0;
  double slope = 0.0;  // log2 S_j regression slope over the top annuli
  Verdict verdict = Verdict::inconclusive;
  std::string note;
};

/// Dyadic annulus scores of V over Gamma_delta and the verdict rule.
RegularityScore regularity_score(const StftArray& V, const Region& gamma, double delta,
                                 const RegularityOptions& opts = {});
RegularityScore regularity_score(const SampledSignal& f, const Window& g, const Region& gamma, double delta,
                                 const PhaseLattice& lattice, const RegularityOptions& opts = {});

/// Best verdict (regular > inconclusive > singular) over a delta sweep.
RegularityScore best_over_deltas(const StftArray& V, const Region& gamma, const std::vector<double>& deltas,
                                 const RegularityOptions& opts = {});

/// Largest j with 2^{j+1} <= radius: annuli that the truncated signal fills.
int truncation_annulus(double radius);

struct PropagationOptions {
  RegularityOptions reg;
  std::vector<double> deltas{0.05, 0.1, 0.2};
  Method method = Method::spectral;
  SpectralRoute route = SpectralRoute::automatic;
  double segment = 0.1;
  double dt = 1e-3;
  std::vector<VectorXd> support;  // phase-space outline of u0's truncation; empty for none
  double probe_radius = 16.0;      // delta-star inclusion lattice
  double probe_step = 0.25;
};

struct PropagationReport {
  double t = 0.0;
  RegularityScore before;    // u0 in Gamma
  RegularityScore after;     // e^{itH} u0 in chi_t(Gamma), delta' from delta_star
  RegularityScore reversed;  // e^{-itH} e^{itH} u0 in chi_{-t}(chi_t(Gamma))
  std::vector<double> delta_after;
  bool forward_ok = false;     // before regular => after regular
  bool preserved = false;      // before and after verdicts agree
  bool reversal_ok = false;    // reversed verdict equals before verdict
};

PropagationReport propagation_check(const SampledSignal& u0, const HamiltonianSymbol& a, double t, const Region& gamma,
                                    const Window& g, const PhaseLattice& lattice_before,
                                    const PhaseLattice& lattice_after, const PropagationOptions& opts = {});

/// e^{2 pi i beta x^2} times a smooth bump equal to 1 on |x| <= plateau and 0 for |x| >= half_width.
SampledSignal chirp_bump(const SpatialGrid& grid, double beta = 1.0, double half_width = 8.0, double plateau = 6.0);
/// Points (x, 2 beta x) outlining the chirp's phase-space support.
std::vector<VectorXd> chirp_support(double beta = 1.0, double half_width = 8.0, int n = 33);

}  // namespace tfprop

#endif  // TFPROP_SINGULARITY_HPP

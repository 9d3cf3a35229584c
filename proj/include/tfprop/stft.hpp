#ifndef TFPROP_STFT_HPP
#define TFPROP_STFT_HPP

#include "tfprop/grid.hpp"
#include "tfprop/window.hpp"

#include <string>
#include <vector>

namespace tfprop {

struct LatticeAxis {
  double start = 0.0;
  double step = 1.0;
  Index count = 1;
  double at(Index i) const { return start + static_cast<double>(i) * step; }
  double last() const { return at(count - 1); }
  bool operator==(const LatticeAxis&) const = default;
};

/// Uniform product lattice in phase space: an x-lattice times an eta-lattice.
/// Flat point index is ix * eta_count() + ieta, with each factor row-major over axes.
class PhaseLattice {
 public:
  PhaseLattice() = default;
  PhaseLattice(std::vector<LatticeAxis> x_axes, std::vector<LatticeAxis> eta_axes);

  /// Same box [lo, hi] with step h on every x axis and on every eta axis.
  static PhaseLattice box(int d, double x_lo, double x_hi, double x_step, double eta_lo, double eta_hi, double eta_step);
  static PhaseLattice centered(int d, double radius, double step) {
    return box(d, -radius, radius, step, -radius, radius, step);
  }

  int dim() const { return static_cast<int>(x_axes_.size()); }
  Index x_count() const { return x_count_; }
  Index eta_count() const { return eta_count_; }
  Index size() const { return x_count_ * eta_count_; }
  double cell_area() const;

  VectorXd x_point(Index i) const;
  VectorXd eta_point(Index j) const;
  /// Stacked (x, eta) of flat index.
  VectorXd point(Index flat) const;

  const std::vector<LatticeAxis>& x_axes() const { return x_axes_; }
  const std::vector<LatticeAxis>& eta_axes() const { return eta_axes_; }

  bool operator==(const PhaseLattice& o) const { return x_axes_ == o.x_axes_ && eta_axes_ == o.eta_axes_; }

 private:
  static VectorXd axis_point(const std::vector<LatticeAxis>& axes, Index flat);
  std::vector<LatticeAxis> x_axes_, eta_axes_;
  Index x_count_ = 0, eta_count_ = 0;
};

using StftValues = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// V_g f sampled on a PhaseLattice: values(ix, ieta).
struct StftArray {
  PhaseLattice lattice;
  StftValues values;
  std::string window_id;

  /// Lattice Riemann-sum L2 norm.
  double l2_norm() const { return std::sqrt(values.squaredNorm() * lattice.cell_area()); }
};

enum class ShiftMode { band_limited, nearest_sample };

/// pi(z) g (t) = e^{2 pi i <t, eta>} g(t - x). Throws SupportOverflow when the
/// shifted signal would leave the grid in space or in frequency.
SampledSignal time_frequency_shift(const SampledSignal& g, const PhasePoint& z,
                                   ShiftMode mode = ShiftMode::band_limited);

/// V_g f(x, eta) = int f(v) conj(g(v - x)) e^{-2 pi i <v, eta>} dv via windowed FFTs.
StftArray stft(const SampledSignal& f, const Window& g, const PhaseLattice& lattice);

/// V_g^* F = sum F(x, eta) pi(x, eta) g  dA  (Riemann sum of the adjoint integral).
SampledSignal stft_adjoint(const StftArray& F, const Window& g);

/// Lattice covering the time-frequency support of f for window g, step 1/oversampling.
PhaseLattice covering_lattice(const SampledSignal& f, const Window& g, double oversampling);

/// ||(1/||g||^2) V_g^* V_g f - f|| / ||f|| on the given lattice.
double reconstruct(const SampledSignal& f, const Window& g, const PhaseLattice& lattice);
double reconstruct(const SampledSignal& f, const Window& g, double oversampling = 4.0);

/// Maximum over the lattice of |V_{g0} f| - (|V_{g1} f| * |V_{g0} gamma|) / |<gamma, g1>|.
/// Non-positive (up to quadrature error) by the window-change inequality.
double window_change_violation(const SampledSignal& f, const Window& g0, const Window& g1, const Window& gamma,
                               const PhaseLattice& lattice);

}  // namespace tfprop

#endif  // TFPROP_STFT_HPP

#ifndef TFPROP_GRID_HPP
#define TFPROP_GRID_HPP

#include "tfprop/core.hpp"

#include <functional>
#include <vector>

namespace tfprop {

/// Uniform tensor grid on R^d with n points per axis. Flat indices are
/// row-major: axis 0 varies slowest.
class SpatialGrid {
 public:
  SpatialGrid() = default;
  SpatialGrid(int d, Index n, VectorXd origin, VectorXd dx);

  /// Grid of n points per axis with spacing dx, centred so that index n/2 sits at 0.
  static SpatialGrid centered(int d, Index n, double dx);

  int dim() const { return d_; }
  Index points_per_axis() const { return n_; }
  Index size() const { return size_; }
  const VectorXd& origin() const { return origin_; }
  const VectorXd& spacing() const { return dx_; }
  double cell_volume() const;
  double extent(int axis) const { return static_cast<double>(n_) * dx_(axis); }

  double coordinate(int axis, Index i) const { return origin_(axis) + static_cast<double>(i) * dx_(axis); }
  /// Frequency of FFT bin k along an axis (standard FFT ordering).
  double frequency(int axis, Index k) const;
  double nyquist(int axis) const { return 0.5 / dx_(axis); }

  VectorXd point(Index flat) const;
  VectorXd frequency_point(Index flat) const;
  std::vector<Index> unflatten(Index flat) const;
  Index flatten(const std::vector<Index>& idx) const;

  bool operator==(const SpatialGrid& o) const;
  bool operator!=(const SpatialGrid& o) const { return !(*this == o); }

 private:
  int d_ = 0;
  Index n_ = 0;
  Index size_ = 0;
  VectorXd origin_;
  VectorXd dx_;
};

/// Complex samples of a function on a SpatialGrid.
struct SampledSignal {
  SpatialGrid grid;
  VectorXcd values;

  SampledSignal() = default;
  SampledSignal(SpatialGrid g, VectorXcd v);
  static SampledSignal zeros(const SpatialGrid& g);
  static SampledSignal from_function(const SpatialGrid& g, const std::function<Complex(const VectorXd&)>& f);

  double l2_norm() const;
};

/// <f, h> = sum f conj(h) dx^d.
Complex inner_product(const SampledSignal& f, const SampledSignal& h);
double l2_distance(const SampledSignal& f, const SampledSignal& h);

void require_same_grid(const SpatialGrid& a, const SpatialGrid& b, const char* what);

// Fourier transforms with f^(xi) = int f(x) e^{-2 pi i x xi} dx realised on the grid.
// The spectrum is sampled at grid.frequency_point(k) in FFT order.
VectorXcd spectrum(const SampledSignal& f);
SampledSignal from_spectrum(const SpatialGrid& grid, const VectorXcd& spec);

/// IFFT(m . FFT(f)); m given at FFT-ordered frequency points.
SampledSignal apply_fourier_multiplier(const SampledSignal& f, const VectorXcd& multiplier);
VectorXcd sample_multiplier(const SpatialGrid& grid, const std::function<Complex(const VectorXd&)>& m);

/// Per-axis index box [lo, hi] where |v| exceeds rel_threshold * max|v|.
struct IndexBox {
  std::vector<Index> lo, hi;
  bool empty = true;
};
IndexBox effective_support(const SpatialGrid& grid, const VectorXcd& values, double rel_threshold);

}  // namespace tfprop

#endif  // TFPROP_GRID_HPP

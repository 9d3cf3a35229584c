#ifndef TFPROP_WINDOW_HPP
#define TFPROP_WINDOW_HPP

#include "tfprop/grid.hpp"

#include <functional>
#include <optional>
#include <string>

namespace tfprop {

enum class WindowKind { gaussian, hermite, custom };

/// Analysis window g: unit discrete L2 norm, negligible at the grid boundary.
struct Window {
  WindowKind kind = WindowKind::gaussian;
  int order = 0;  // Hermite order when kind == hermite
  SampledSignal samples;
  std::function<Complex(const VectorXd&)> analytic;  // may be empty
  std::string id;

  const SpatialGrid& grid() const { return samples.grid; }
};

/// g(t) = 2^{d/4} e^{-pi |t|^2}.
Window gaussian_window(const SpatialGrid& grid);
/// Hermite function of order k adapted to e^{-pi t^2} along axis 0, Gaussian in the other axes.
Window hermite_window(const SpatialGrid& grid, int k);
/// Wraps user samples; normalises them to unit discrete norm.
Window custom_window(SampledSignal samples, std::string id, std::function<Complex(const VectorXd&)> analytic = {});

/// Builds a window from its id: "gaussian", "hermite1", "hermite<k>".
Window window_from_id(const SpatialGrid& grid, const std::string& id);

/// Half-width (per axis, in length units) outside which |g| < rel * max|g|.
VectorXd window_half_width(const Window& g, double rel = 1e-15);

}  // namespace tfprop

#endif  // TFPROP_WINDOW_HPP

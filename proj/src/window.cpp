#include "tfprop/window.hpp"

#include "tfprop/hermite.hpp"

#include <fmt/format.h>

#include <cmath>

namespace tfprop {

namespace {

void check_boundary(const SampledSignal& s, const std::string& id) {
  const auto& grid = s.grid;
  const double peak = s.values.cwiseAbs().maxCoeff();
  double edge = 0.0;
  for (Index i = 0; i < grid.size(); ++i) {
    const auto idx = grid.unflatten(i);
    for (auto k : idx) {
      if (k == 0 || k == grid.points_per_axis() - 1) {
        edge = std::max(edge, std::abs(s.values(i)));
        break;
      }
    }
  }
  if (edge >= 1e-12 * peak) {
    throw SupportOverflow(fmt::format("window '{}' is not contained in the grid (edge/peak = {:.3e})", id, edge / peak));
  }
}

Window finish(WindowKind kind, int order, SampledSignal samples, std::function<Complex(const VectorXd&)> analytic,
              std::string id) {
  const double norm = samples.l2_norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw DomainError(fmt::format("window '{}' has zero or non-finite norm", id));
  samples.values /= norm;
  check_boundary(samples, id);
  return Window{kind, order, std::move(samples), std::move(analytic), std::move(id)};
}

}  // namespace

Window gaussian_window(const SpatialGrid& grid) {
  const double d = grid.dim();
  auto f = [d](const VectorXd& t) -> Complex { return std::pow(2.0, d / 4.0) * std::exp(-kPi * t.squaredNorm()); };
  return finish(WindowKind::gaussian, 0, SampledSignal::from_function(grid, f), f, "gaussian");
}

Window hermite_window(const SpatialGrid& grid, int k) {
  if (k < 0) throw DomainError("hermite window order must be >= 0");
  const double scale = std::sqrt(kTwoPi);
  auto f = [k, scale](const VectorXd& t) -> Complex {
    double v = std::pow(kTwoPi, 0.25) * hermite_function(k, scale * t(0));
    for (Index a = 1; a < t.size(); ++a) v *= std::pow(2.0, 0.25) * std::exp(-kPi * t(a) * t(a));
    return v;
  };
  auto kind = k == 0 ? WindowKind::gaussian : WindowKind::hermite;
  return finish(kind, k, SampledSignal::from_function(grid, f), f, k == 0 ? "gaussian" : fmt::format("hermite{}", k));
}

Window custom_window(SampledSignal samples, std::string id, std::function<Complex(const VectorXd&)> analytic) {
  return finish(WindowKind::custom, 0, std::move(samples), std::move(analytic), std::move(id));
}

Window window_from_id(const SpatialGrid& grid, const std::string& id) {
  if (id == "gaussian") return gaussian_window(grid);
  if (id.rfind("hermite", 0) == 0) {
    const std::string rest = id.substr(7);
    if (rest.empty()) return hermite_window(grid, 1);
    return hermite_window(grid, std::stoi(rest));
  }
  if (id == "oscillator_ground") {
    auto f = [](const VectorXd& t) -> Complex {
      return std::pow(kPi, -0.25 * static_cast<double>(t.size())) * std::exp(-0.5 * t.squaredNorm());
    };
    return custom_window(SampledSignal::from_function(grid, f), id, f);
  }
  throw DomainError(fmt::format("unknown window id '{}'", id));
}

VectorXd window_half_width(const Window& g, double rel) {
  const auto& grid = g.grid();
  const auto box = effective_support(grid, g.samples.values, rel);
  VectorXd hw = VectorXd::Zero(grid.dim());
  if (box.empty) return hw;
  for (int a = 0; a < grid.dim(); ++a) {
    const auto ua = static_cast<size_t>(a);
    hw(a) = std::max(std::abs(grid.coordinate(a, box.lo[ua])), std::abs(grid.coordinate(a, box.hi[ua])));
  }
  return hw;
}

}  // namespace tfprop

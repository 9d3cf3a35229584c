#include "tfprop/grid.hpp"

#include "tfprop/fft.hpp"

#include <fmt/format.h>

#include <cmath>

namespace tfprop {

namespace {

bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

SpatialGrid::SpatialGrid(int d, Index n, VectorXd origin, VectorXd dx)
    : d_(d), n_(n), origin_(std::move(origin)), dx_(std::move(dx)) {
  if (d < 1) throw DomainError("grid dimension must be >= 1");
  if (!is_power_of_two(n)) throw DomainError(fmt::format("grid size {} is not a power of two", n));
  if (origin_.size() != d || dx_.size() != d) throw DomainError("grid origin/spacing length differs from d");
  if ((dx_.array() <= 0.0).any()) throw DomainError("grid spacing must be positive");
  size_ = 1;
  for (int a = 0; a < d; ++a) size_ *= n;
}

SpatialGrid SpatialGrid::centered(int d, Index n, double dx) {
  return SpatialGrid(d, n, VectorXd::Constant(d, -static_cast<double>(n / 2) * dx), VectorXd::Constant(d, dx));
}

double SpatialGrid::cell_volume() const { return dx_.prod(); }

double SpatialGrid::frequency(int axis, Index k) const {
  const Index kk = k < n_ / 2 ? k : k - n_;
  return static_cast<double>(kk) / (static_cast<double>(n_) * dx_(axis));
}

std::vector<Index> SpatialGrid::unflatten(Index flat) const {
  std::vector<Index> idx(static_cast<size_t>(d_));
  for (int a = d_ - 1; a >= 0; --a) {
    idx[static_cast<size_t>(a)] = flat % n_;
    flat /= n_;
  }
  return idx;
}

Index SpatialGrid::flatten(const std::vector<Index>& idx) const {
  Index flat = 0;
  for (int a = 0; a < d_; ++a) flat = flat * n_ + idx[static_cast<size_t>(a)];
  return flat;
}

VectorXd SpatialGrid::point(Index flat) const {
  VectorXd p(d_);
  for (int a = d_ - 1; a >= 0; --a) {
    p(a) = coordinate(a, flat % n_);
    flat /= n_;
  }
  return p;
}

VectorXd SpatialGrid::frequency_point(Index flat) const {
  VectorXd p(d_);
  for (int a = d_ - 1; a >= 0; --a) {
    p(a) = frequency(a, flat % n_);
    flat /= n_;
  }
  return p;
}

bool SpatialGrid::operator==(const SpatialGrid& o) const {
  if (d_ != o.d_ || n_ != o.n_) return false;
  const double tol = 1e-12 * std::max(1.0, dx_.cwiseAbs().maxCoeff());
  return (origin_ - o.origin_).cwiseAbs().maxCoeff() <= tol * static_cast<double>(n_) &&
         (dx_ - o.dx_).cwiseAbs().maxCoeff() <= tol;
}

SampledSignal::SampledSignal(SpatialGrid g, VectorXcd v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.size()) throw GridMismatch("sample count does not match grid");
}

SampledSignal SampledSignal::zeros(const SpatialGrid& g) { return {g, VectorXcd::Zero(g.size())}; }

SampledSignal SampledSignal::from_function(const SpatialGrid& g, const std::function<Complex(const VectorXd&)>& f) {
  VectorXcd v(g.size());
  for (Index i = 0; i < g.size(); ++i) v(i) = f(g.point(i));
  return {g, std::move(v)};
}

double SampledSignal::l2_norm() const { return std::sqrt(values.squaredNorm() * grid.cell_volume()); }

void require_same_grid(const SpatialGrid& a, const SpatialGrid& b, const char* what) {
  if (a != b) throw GridMismatch(fmt::format("{}: incompatible grids", what));
}

Complex inner_product(const SampledSignal& f, const SampledSignal& h) {
  require_same_grid(f.grid, h.grid, "inner_product");
  // Eigen's dot conjugates its first argument.
  return h.values.dot(f.values) * f.grid.cell_volume();
}

double l2_distance(const SampledSignal& f, const SampledSignal& h) {
  require_same_grid(f.grid, h.grid, "l2_distance");
  return std::sqrt((f.values - h.values).squaredNorm() * f.grid.cell_volume());
}

VectorXcd spectrum(const SampledSignal& f) {
  const auto& g = f.grid;
  VectorXcd s = f.values;
  fft::forward(s, g.points_per_axis(), g.dim());
  const double vol = g.cell_volume();
  for (Index k = 0; k < g.size(); ++k) {
    const double phase = -kTwoPi * g.origin().dot(g.frequency_point(k));
    s(k) *= vol * std::polar(1.0, phase);
  }
  return s;
}

SampledSignal from_spectrum(const SpatialGrid& grid, const VectorXcd& spec) {
  if (spec.size() != grid.size()) throw GridMismatch("spectrum length does not match grid");
  VectorXcd v(grid.size());
  const double vol = grid.cell_volume();
  const double scale = 1.0 / (vol * static_cast<double>(grid.size()));
  for (Index k = 0; k < grid.size(); ++k) {
    const double phase = kTwoPi * grid.origin().dot(grid.frequency_point(k));
    v(k) = spec(k) * scale * std::polar(1.0, phase);
  }
  fft::inverse(v, grid.points_per_axis(), grid.dim());
  return {grid, std::move(v)};
}

SampledSignal apply_fourier_multiplier(const SampledSignal& f, const VectorXcd& multiplier) {
  if (multiplier.size() != f.grid.size()) throw GridMismatch("multiplier length does not match grid");
  VectorXcd v = f.values;
  fft::forward(v, f.grid.points_per_axis(), f.grid.dim());
  v.array() *= multiplier.array();
  fft::inverse(v, f.grid.points_per_axis(), f.grid.dim());
  v /= static_cast<double>(f.grid.size());
  return {f.grid, std::move(v)};
}

VectorXcd sample_multiplier(const SpatialGrid& grid, const std::function<Complex(const VectorXd&)>& m) {
  VectorXcd out(grid.size());
  for (Index k = 0; k < grid.size(); ++k) out(k) = m(grid.frequency_point(k));
  return out;
}

IndexBox effective_support(const SpatialGrid& grid, const VectorXcd& values, double rel_threshold) {
  IndexBox box;
  const double peak = values.size() ? values.cwiseAbs().maxCoeff() : 0.0;
  if (peak == 0.0) return box;
  const auto d = static_cast<size_t>(grid.dim());
  box.lo.assign(d, grid.points_per_axis());
  box.hi.assign(d, -1);
  const double cut = rel_threshold * peak;
  for (Index i = 0; i < values.size(); ++i) {
    if (std::abs(values(i)) <= cut) continue;
    const auto idx = grid.unflatten(i);
    for (size_t a = 0; a < d; ++a) {
      box.lo[a] = std::min(box.lo[a], idx[a]);
      box.hi[a] = std::max(box.hi[a], idx[a]);
    }
  }
  box.empty = false;
  return box;
}

}  // namespace tfprop

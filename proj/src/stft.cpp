#include "tfprop/stft.hpp"

#include "tfprop/fft.hpp"

#include <fmt/format.h>

#include <cmath>

namespace tfprop {

// ---------------------------------------------------------------------------
// PhaseLattice

PhaseLattice::PhaseLattice(std::vector<LatticeAxis> x_axes, std::vector<LatticeAxis> eta_axes)
    : x_axes_(std::move(x_axes)), eta_axes_(std::move(eta_axes)) {
  if (x_axes_.size() != eta_axes_.size() || x_axes_.empty()) throw DomainError("lattice needs d x-axes and d eta-axes");
  x_count_ = 1;
  eta_count_ = 1;
  for (const auto& a : x_axes_) {
    if (a.count < 1 || !(a.step > 0.0)) throw DomainError("lattice axis needs count >= 1 and step > 0");
    x_count_ *= a.count;
  }
  for (const auto& a : eta_axes_) {
    if (a.count < 1 || !(a.step > 0.0)) throw DomainError("lattice axis needs count >= 1 and step > 0");
    eta_count_ *= a.count;
  }
}

PhaseLattice PhaseLattice::box(int d, double x_lo, double x_hi, double x_step, double eta_lo, double eta_hi,
                               double eta_step) {
  auto axis = [](double lo, double hi, double step) {
    return LatticeAxis{lo, step, static_cast<Index>(std::llround((hi - lo) / step)) + 1};
  };
  std::vector<LatticeAxis> xs(static_cast<size_t>(d), axis(x_lo, x_hi, x_step));
  std::vector<LatticeAxis> es(static_cast<size_t>(d), axis(eta_lo, eta_hi, eta_step));
  return {std::move(xs), std::move(es)};
}

double PhaseLattice::cell_area() const {
  double a = 1.0;
  for (const auto& ax : x_axes_) a *= ax.step;
  for (const auto& ax : eta_axes_) a *= ax.step;
  return a;
}

VectorXd PhaseLattice::axis_point(const std::vector<LatticeAxis>& axes, Index flat) {
  const auto d = static_cast<Index>(axes.size());
  VectorXd p(d);
  for (Index a = d - 1; a >= 0; --a) {
    const auto& ax = axes[static_cast<size_t>(a)];
    p(a) = ax.at(flat % ax.count);
    flat /= ax.count;
  }
  return p;
}

VectorXd PhaseLattice::x_point(Index i) const { return axis_point(x_axes_, i); }
VectorXd PhaseLattice::eta_point(Index j) const { return axis_point(eta_axes_, j); }

VectorXd PhaseLattice::point(Index flat) const {
  VectorXd z(2 * dim());
  z << x_point(flat / eta_count_), eta_point(flat % eta_count_);
  return z;
}

// ---------------------------------------------------------------------------
// Time-frequency shifts

namespace {

Index centered_bin(Index k, Index n) { return k < n / 2 ? k : k - n; }

IndexBox spectral_support(const SpatialGrid& grid, const VectorXcd& dft, double rel) {
  IndexBox box;
  const double peak = dft.cwiseAbs().maxCoeff();
  if (peak == 0.0) return box;
  const auto d = static_cast<size_t>(grid.dim());
  const Index n = grid.points_per_axis();
  box.lo.assign(d, n);
  box.hi.assign(d, -n);
  for (Index i = 0; i < dft.size(); ++i) {
    if (std::abs(dft(i)) <= rel * peak) continue;
    const auto idx = grid.unflatten(i);
    for (size_t a = 0; a < d; ++a) {
      const Index c = centered_bin(idx[a], n);
      box.lo[a] = std::min(box.lo[a], c);
      box.hi[a] = std::max(box.hi[a], c);
    }
  }
  box.empty = false;
  return box;
}

bool near_integer(double v, double tol = 1e-9) { return std::abs(v - std::round(v)) <= tol; }

VectorXcd roll(const SpatialGrid& grid, const VectorXcd& v, const std::vector<Index>& shift) {
  VectorXcd out = VectorXcd::Zero(v.size());
  const Index n = grid.points_per_axis();
  for (Index i = 0; i < v.size(); ++i) {
    auto idx = grid.unflatten(i);
    bool inside = true;
    for (size_t a = 0; a < idx.size(); ++a) {
      idx[a] -= shift[a];
      if (idx[a] < 0 || idx[a] >= n) {
        inside = false;
        break;
      }
    }
    if (inside) out(i) = v(grid.flatten(idx));
  }
  return out;
}

}  // namespace

SampledSignal time_frequency_shift(const SampledSignal& g, const PhasePoint& z, ShiftMode mode) {
  const auto& grid = g.grid;
  const int d = grid.dim();
  if (z.dim() != d) throw DomainError("phase point dimension differs from grid dimension");
  const VectorXd x = z.x();
  const VectorXd eta = z.eta();
  const Index n = grid.points_per_axis();
  const bool translate = (x.array() != 0.0).any();
  const bool modulate = (eta.array() != 0.0).any();

  const auto box = effective_support(grid, g.values, 1e-12);
  if (box.empty) return g;

  VectorXd shift(d);
  for (int a = 0; a < d; ++a) shift(a) = x(a) / grid.spacing()(a);
  bool integer_shift = true;
  for (int a = 0; a < d; ++a) integer_shift = integer_shift && near_integer(shift(a));
  if (mode == ShiftMode::nearest_sample) {
    for (int a = 0; a < d; ++a) shift(a) = std::round(shift(a));
    integer_shift = true;
  }

  for (int a = 0; a < d; ++a) {
    const auto ua = static_cast<size_t>(a);
    const double lo = static_cast<double>(box.lo[ua]) + shift(a);
    const double hi = static_cast<double>(box.hi[ua]) + shift(a);
    if (lo < 0.0 || hi > static_cast<double>(n - 1)) {
      throw SupportOverflow(fmt::format("shift by x = {} moves the signal off the grid along axis {}", x(a), a));
    }
  }

  VectorXcd dft;
  const bool need_dft = modulate || (translate && !integer_shift);
  if (need_dft) {
    dft = g.values;
    fft::forward(dft, n, d);
  }
  if (modulate) {
    const auto sbox = spectral_support(grid, dft, 1e-12);
    for (int a = 0; a < d; ++a) {
      const auto ua = static_cast<size_t>(a);
      const double bins = eta(a) * static_cast<double>(n) * grid.spacing()(a);
      const double lo = static_cast<double>(sbox.lo[ua]) + bins;
      const double hi = static_cast<double>(sbox.hi[ua]) + bins;
      if (lo < -static_cast<double>(n / 2) || hi > static_cast<double>(n / 2 - 1)) {
        throw SupportOverflow(fmt::format("modulation by eta = {} moves the spectrum past Nyquist on axis {}", eta(a), a));
      }
    }
  }

  VectorXcd v;
  if (!translate) {
    v = g.values;
  } else if (integer_shift) {
    std::vector<Index> s(static_cast<size_t>(d));
    for (int a = 0; a < d; ++a) s[static_cast<size_t>(a)] = static_cast<Index>(std::llround(shift(a)));
    v = roll(grid, g.values, s);
  } else {
    v = dft;
    for (Index k = 0; k < grid.size(); ++k) v(k) *= std::polar(1.0, -kTwoPi * grid.frequency_point(k).dot(x));
    fft::inverse(v, n, d);
    v /= static_cast<double>(grid.size());
  }

  if (modulate) {
    for (Index i = 0; i < grid.size(); ++i) v(i) *= std::polar(1.0, kTwoPi * grid.point(i).dot(eta));
  }
  return {grid, std::move(v)};
}

// ---------------------------------------------------------------------------
// STFT

namespace {

/// Geometry of the windowed-FFT evaluation shared by analysis and synthesis.
struct SegmentPlan {
  Index m = 0;          // segment length per axis (power of two)
  bool aligned = true;  // lattice eta values fall on segment FFT bins
};

SegmentPlan plan_segments(const SpatialGrid& grid, const Window& g, const PhaseLattice& lattice) {
  const int d = grid.dim();
  const VectorXd hw = window_half_width(g, 1e-16);
  Index need = 2;
  for (int a = 0; a < d; ++a) {
    need = std::max<Index>(need, static_cast<Index>(std::ceil(2.0 * hw(a) / grid.spacing()(a))) + 2);
  }
  Index m = 2;
  while (m < need) m *= 2;
  m = std::min(m, grid.points_per_axis());
  auto aligned_for = [&](Index mm) {
    for (int a = 0; a < d; ++a) {
      const auto& ax = lattice.eta_axes()[static_cast<size_t>(a)];
      const double span = static_cast<double>(mm) * grid.spacing()(a);
      if (!near_integer(ax.step * span) || !near_integer(ax.start * span)) return false;
    }
    return true;
  };
  for (Index mm = m; mm <= grid.points_per_axis(); mm *= 2) {
    if (aligned_for(mm)) return {mm, true};
  }
  return {m, false};
}

void check_lattice(const SpatialGrid& grid, const PhaseLattice& lattice) {
  if (lattice.dim() != grid.dim()) throw DomainError("lattice dimension differs from grid dimension");
  for (int a = 0; a < grid.dim(); ++a) {
    const auto& ax = lattice.eta_axes()[static_cast<size_t>(a)];
    const double top = std::max(std::abs(ax.start), std::abs(ax.last()));
    if (top > grid.nyquist(a) * (1.0 + 1e-12)) {
      throw NyquistViolation(fmt::format("lattice frequency {} exceeds grid Nyquist {} on axis {}", top, grid.nyquist(a), a));
    }
  }
}

/// Window sampled at v - x for every grid v: returns the shifted window and the
/// integer index offset (or uses a band-limited shift when x is off-grid).
struct ShiftedWindow {
  const VectorXcd* values = nullptr;
  VectorXcd owned;
  std::vector<Index> offset;  // window index = grid index - offset
};

ShiftedWindow shifted_window(const Window& g, const VectorXd& x) {
  const auto& grid = g.grid();
  const int d = grid.dim();
  ShiftedWindow sw;
  sw.offset.assign(static_cast<size_t>(d), 0);
  bool integer = true;
  for (int a = 0; a < d; ++a) {
    const double s = x(a) / grid.spacing()(a);
    if (!near_integer(s)) integer = false;
    sw.offset[static_cast<size_t>(a)] = static_cast<Index>(std::llround(s));
  }
  if (integer) {
    sw.values = &g.samples.values;
    return sw;
  }
  // Off-grid centre: band-limited shift of the window by the fractional part.
  VectorXd frac(d);
  for (int a = 0; a < d; ++a) frac(a) = x(a) - static_cast<double>(sw.offset[static_cast<size_t>(a)]) * grid.spacing()(a);
  sw.owned = time_frequency_shift(g.samples, PhasePoint(frac, VectorXd::Zero(d))).values;
  sw.values = &sw.owned;
  return sw;
}

/// Iterates the m^d segment multi-indices starting at grid index `start`;
/// calls fn(segment_flat, grid_flat or -1, window_flat or -1).
template <typename Fn>
void for_each_segment_point(const SpatialGrid& grid, Index m, const std::vector<Index>& start,
                            const std::vector<Index>& offset, Fn&& fn) {
  const int d = grid.dim();
  const Index n = grid.points_per_axis();
  Index total = 1;
  for (int a = 0; a < d; ++a) total *= m;
  std::vector<Index> idx(static_cast<size_t>(d), 0);
  for (Index s = 0; s < total; ++s) {
    Index rem = s;
    for (int a = d - 1; a >= 0; --a) {
      idx[static_cast<size_t>(a)] = rem % m;
      rem /= m;
    }
    Index gflat = 0, wflat = 0;
    bool in_grid = true, in_win = true;
    for (int a = 0; a < d; ++a) {
      const auto ua = static_cast<size_t>(a);
      const Index gi = start[ua] + idx[ua];
      const Index wi = gi - offset[ua];  // grid is centred, so g(v - x) sits at gi - x/dx
      if (gi < 0 || gi >= n) in_grid = false;
      if (wi < 0 || wi >= n) in_win = false;
      gflat = gflat * n + gi;
      wflat = wflat * n + wi;
    }
    fn(s, in_grid ? gflat : Index{-1}, in_win ? wflat : Index{-1});
  }
}

std::vector<Index> segment_start(const SpatialGrid& grid, const VectorXd& x, Index m) {
  std::vector<Index> start(static_cast<size_t>(grid.dim()));
  for (int a = 0; a < grid.dim(); ++a) {
    const Index c = static_cast<Index>(std::llround((x(a) - grid.origin()(a)) / grid.spacing()(a)));
    start[static_cast<size_t>(a)] = c - m / 2;
  }
  return start;
}

VectorXd segment_origin(const SpatialGrid& grid, const std::vector<Index>& start) {
  VectorXd v0(grid.dim());
  for (int a = 0; a < grid.dim(); ++a) v0(a) = grid.coordinate(a, start[static_cast<size_t>(a)]);
  return v0;
}

Index segment_bin(const SpatialGrid& grid, const VectorXd& eta, Index m) {
  Index flat = 0;
  for (int a = 0; a < grid.dim(); ++a) {
    Index k = static_cast<Index>(std::llround(eta(a) * static_cast<double>(m) * grid.spacing()(a)));
    k = ((k % m) + m) % m;
    flat = flat * m + k;
  }
  return flat;
}

void check_window_centre(const Window& g) {
  const auto& grid = g.grid();
  for (int a = 0; a < grid.dim(); ++a) {
    if (std::abs(grid.coordinate(a, grid.points_per_axis() / 2)) > 1e-12 * grid.spacing()(a)) {
      throw GridMismatch("window grid must place the origin at index n/2");
    }
  }
}

}  // namespace

StftArray stft(const SampledSignal& f, const Window& g, const PhaseLattice& lattice) {
  require_same_grid(f.grid, g.grid(), "stft");
  check_window_centre(g);
  const auto& grid = f.grid;
  check_lattice(grid, lattice);
  const int d = grid.dim();
  const auto plan = plan_segments(grid, g, lattice);
  const Index m = plan.m;
  Index seg_total = 1;
  for (int a = 0; a < d; ++a) seg_total *= m;
  const double vol = grid.cell_volume();

  StftArray out{lattice, StftValues::Zero(lattice.x_count(), lattice.eta_count()), g.id};
  VectorXcd seg(seg_total);
  for (Index ix = 0; ix < lattice.x_count(); ++ix) {
    const VectorXd x = lattice.x_point(ix);
    const auto sw = shifted_window(g, x);
    const auto start = segment_start(grid, x, m);
    const VectorXd v0 = segment_origin(grid, start);
    seg.setZero();
    for_each_segment_point(grid, m, start, sw.offset, [&](Index s, Index gi, Index wi) {
      if (gi >= 0 && wi >= 0) seg(s) = f.values(gi) * std::conj((*sw.values)(wi));
    });
    if (plan.aligned) {
      fft::forward(seg, m, d);
      for (Index je = 0; je < lattice.eta_count(); ++je) {
        const VectorXd eta = lattice.eta_point(je);
        out.values(ix, je) = vol * std::polar(1.0, -kTwoPi * v0.dot(eta)) * seg(segment_bin(grid, eta, m));
      }
    } else {
      for (Index je = 0; je < lattice.eta_count(); ++je) {
        const VectorXd eta = lattice.eta_point(je);
        Complex acc = 0.0;
        for (Index s = 0; s < seg_total; ++s) {
          if (seg(s) == Complex(0.0)) continue;
          VectorXd v = v0;
          Index rem = s;
          for (int a = d - 1; a >= 0; --a) {
            v(a) += static_cast<double>(rem % m) * grid.spacing()(a);
            rem /= m;
          }
          acc += seg(s) * std::polar(1.0, -kTwoPi * v.dot(eta));
        }
        out.values(ix, je) = vol * acc;
      }
    }
  }
  return out;
}

SampledSignal stft_adjoint(const StftArray& F, const Window& g) {
  check_window_centre(g);
  const auto& grid = g.grid();
  const auto& lattice = F.lattice;
  check_lattice(grid, lattice);
  const int d = grid.dim();
  const auto plan = plan_segments(grid, g, lattice);
  const Index m = plan.m;
  Index seg_total = 1;
  for (int a = 0; a < d; ++a) seg_total *= m;
  const double area = lattice.cell_area();

  SampledSignal out = SampledSignal::zeros(grid);
  VectorXcd seg(seg_total);
  for (Index ix = 0; ix < lattice.x_count(); ++ix) {
    if (F.values.row(ix).squaredNorm() == 0.0) continue;
    const VectorXd x = lattice.x_point(ix);
    const auto sw = shifted_window(g, x);
    const auto start = segment_start(grid, x, m);
    const VectorXd v0 = segment_origin(grid, start);
    seg.setZero();
    if (plan.aligned) {
      for (Index je = 0; je < lattice.eta_count(); ++je) {
        const VectorXd eta = lattice.eta_point(je);
        seg(segment_bin(grid, eta, m)) += F.values(ix, je) * std::polar(1.0, kTwoPi * v0.dot(eta));
      }
      fft::inverse(seg, m, d);
    } else {
      for (Index s = 0; s < seg_total; ++s) {
        VectorXd v = v0;
        Index rem = s;
        for (int a = d - 1; a >= 0; --a) {
          v(a) += static_cast<double>(rem % m) * grid.spacing()(a);
          rem /= m;
        }
        Complex acc = 0.0;
        for (Index je = 0; je < lattice.eta_count(); ++je) {
          acc += F.values(ix, je) * std::polar(1.0, kTwoPi * v.dot(lattice.eta_point(je)));
        }
        seg(s) = acc;
      }
    }
    for_each_segment_point(grid, m, start, sw.offset, [&](Index s, Index gi, Index wi) {
      if (gi >= 0 && wi >= 0) out.values(gi) += area * seg(s) * (*sw.values)(wi);
    });
  }
  return out;
}

PhaseLattice covering_lattice(const SampledSignal& f, const Window& g, double oversampling) {
  if (!(oversampling >= 1.0)) throw DomainError("oversampling must be >= 1");
  const auto& grid = f.grid;
  const int d = grid.dim();
  const double step = 1.0 / oversampling;
  const VectorXd hw = window_half_width(g, 1e-12);
  const auto sbox = effective_support(grid, f.values, 1e-10);

  const VectorXcd fspec = spectrum(f);
  const VectorXcd gspec = spectrum(g.samples);
  // Frequency half-widths from the centred spectral boxes.
  auto spec_box = [&](const VectorXcd& s, double rel) {
    const double peak = s.cwiseAbs().maxCoeff();
    VectorXd lo = VectorXd::Constant(d, 0.0), hi = VectorXd::Constant(d, 0.0);
    bool first = true;
    for (Index k = 0; k < grid.size(); ++k) {
      if (std::abs(s(k)) <= rel * peak) continue;
      const VectorXd xi = grid.frequency_point(k);
      if (first) {
        lo = hi = xi;
        first = false;
      } else {
        lo = lo.cwiseMin(xi);
        hi = hi.cwiseMax(xi);
      }
    }
    return std::pair{lo, hi};
  };
  const auto [flo, fhi] = spec_box(fspec, 1e-10);
  const auto [glo, ghi] = spec_box(gspec, 1e-12);

  std::vector<LatticeAxis> xs, es;
  for (int a = 0; a < d; ++a) {
    const auto ua = static_cast<size_t>(a);
    double xlo = sbox.empty ? -hw(a) : grid.coordinate(a, sbox.lo[ua]) - hw(a) - 1.0;
    double xhi = sbox.empty ? hw(a) : grid.coordinate(a, sbox.hi[ua]) + hw(a) + 1.0;
    xlo = std::max(xlo, grid.coordinate(a, 0));
    xhi = std::min(xhi, grid.coordinate(a, grid.points_per_axis() - 1));
    double elo = flo(a) - std::max(std::abs(glo(a)), std::abs(ghi(a))) - 1.0;
    double ehi = fhi(a) + std::max(std::abs(glo(a)), std::abs(ghi(a))) + 1.0;
    elo = std::max(elo, -grid.nyquist(a));
    ehi = std::min(ehi, grid.nyquist(a));
    const double x0 = std::ceil(xlo / step) * step;
    const double e0 = std::ceil(elo / step) * step;
    xs.push_back({x0, step, static_cast<Index>(std::floor((xhi - x0) / step + 1e-9)) + 1});
    es.push_back({e0, step, static_cast<Index>(std::floor((ehi - e0) / step + 1e-9)) + 1});
  }
  return {std::move(xs), std::move(es)};
}

double reconstruct(const SampledSignal& f, const Window& g, const PhaseLattice& lattice) {
  const double fn = f.l2_norm();
  if (fn == 0.0) return 0.0;
  const StftArray F = stft(f, g, lattice);
  SampledSignal r = stft_adjoint(F, g);
  const double gn = g.samples.l2_norm();
  r.values /= gn * gn;
  return l2_distance(r, f) / fn;
}

double reconstruct(const SampledSignal& f, const Window& g, double oversampling) {
  return reconstruct(f, g, covering_lattice(f, g, oversampling));
}

double window_change_violation(const SampledSignal& f, const Window& g0, const Window& g1, const Window& gamma,
                               const PhaseLattice& lattice) {
  const int d = lattice.dim();
  const Complex pairing = inner_product(gamma.samples, g1.samples);
  if (std::abs(pairing) < 1e-14) throw DomainError("window change needs <gamma, g1> != 0");

  const StftArray lhs = stft(f, g0, lattice);
  const StftArray v1 = stft(f, g1, lattice);

  // Kernel |V_{g0} gamma| on the difference lattice, truncated where it is negligible.
  const VectorXd hw = window_half_width(g0, 1e-15) + window_half_width(gamma, 1e-15);
  std::vector<LatticeAxis> kx, ke;
  for (int a = 0; a < d; ++a) {
    const auto& ax = lattice.x_axes()[static_cast<size_t>(a)];
    const auto& ae = lattice.eta_axes()[static_cast<size_t>(a)];
    const Index hx = std::min<Index>(ax.count - 1, static_cast<Index>(std::ceil(hw(a) / ax.step)));
    const Index he = std::min<Index>(ae.count - 1, static_cast<Index>(std::ceil(hw(a) / ae.step)));
    kx.push_back({-static_cast<double>(hx) * ax.step, ax.step, 2 * hx + 1});
    ke.push_back({-static_cast<double>(he) * ae.step, ae.step, 2 * he + 1});
  }
  const PhaseLattice klat(kx, ke);
  const StftArray kernel = stft(gamma.samples, g0, klat);

  // Index-space offsets of the kernel lattice relative to its centre.
  auto to_offsets = [](const std::vector<LatticeAxis>& axes, Index flat) {
    std::vector<Index> o(axes.size());
    for (Index a = static_cast<Index>(axes.size()) - 1; a >= 0; --a) {
      const auto ua = static_cast<size_t>(a);
      o[ua] = flat % axes[ua].count;
      flat /= axes[ua].count;
    }
    return o;
  };
  auto to_flat = [](const std::vector<LatticeAxis>& axes, const std::vector<Index>& o) -> Index {
    Index flat = 0;
    for (size_t a = 0; a < axes.size(); ++a) {
      if (o[a] < 0 || o[a] >= axes[a].count) return -1;
      flat = flat * axes[a].count + o[a];
    }
    return flat;
  };

  const double area = lattice.cell_area();
  const double inv_pair = 1.0 / std::abs(pairing);
  double worst = -std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd a1 = v1.values.cwiseAbs();
  const Eigen::MatrixXd ak = kernel.values.cwiseAbs();
  for (Index zx = 0; zx < lattice.x_count(); ++zx) {
    const auto zxo = to_offsets(lattice.x_axes(), zx);
    for (Index ze = 0; ze < lattice.eta_count(); ++ze) {
      const auto zeo = to_offsets(lattice.eta_axes(), ze);
      double conv = 0.0;
      for (Index kxi = 0; kxi < klat.x_count(); ++kxi) {
        auto ko = to_offsets(kx, kxi);
        std::vector<Index> ux(zxo.size());
        for (size_t a = 0; a < ux.size(); ++a) ux[a] = zxo[a] - (ko[a] - (kx[a].count - 1) / 2);
        const Index uxf = to_flat(lattice.x_axes(), ux);
        if (uxf < 0) continue;
        for (Index kei = 0; kei < klat.eta_count(); ++kei) {
          auto keo = to_offsets(ke, kei);
          std::vector<Index> ue(zeo.size());
          for (size_t a = 0; a < ue.size(); ++a) ue[a] = zeo[a] - (keo[a] - (ke[a].count - 1) / 2);
          const Index uef = to_flat(lattice.eta_axes(), ue);
          if (uef < 0) continue;
          conv += a1(uxf, uef) * ak(kxi, kei);
        }
      }
      const double rhs = inv_pair * conv * area;
      worst = std::max(worst, std::abs(lhs.values(zx, ze)) - rhs);
    }
  }
  return worst;
}

}  // namespace tfprop

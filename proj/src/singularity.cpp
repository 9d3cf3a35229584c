#include "tfprop/singularity.hpp"

#include "tfprop/expression.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cctype>
#include <limits>
#include <cmath>
#include <utility>

namespace tfprop {

namespace {

// Largest distance to a curve neighbour: every point of the polyline lies within it.
std::vector<double> polyline_margins(const std::vector<VectorXd>& pts) {
  const size_t n = pts.size();
  std::vector<double> m(n, 0.0);
  for (size_t i = 0; i + 1 < n; ++i) {
    const double gap = (pts[i + 1] - pts[i]).norm();
    m[i] = std::max(m[i], gap);
    m[i + 1] = std::max(m[i + 1], gap);
  }
  return m;
}

using Arc = std::pair<double, double>;  // [a, b], b - a in [0, 2 pi]

double wrap(double a) {
  double w = std::fmod(a + kPi, kTwoPi);
  if (w < 0) w += kTwoPi;
  return w - kPi;
}

double arc_distance(double theta, const Arc& arc) {
  double t = arc.first + std::fmod(theta - arc.first, kTwoPi);
  if (t < arc.first) t += kTwoPi;
  if (t <= arc.second) return 0.0;
  return std::min(t - arc.second, arc.first + kTwoPi - t);
}

// Splits arcs at the seam, merges, and returns disjoint intervals of [-pi, pi].
std::vector<Arc> merged_intervals(const std::vector<Arc>& arcs) {
  std::vector<Arc> iv;
  for (const auto& [a0, b0] : arcs) {
    if (b0 - a0 >= kTwoPi - 1e-15) return {{-kPi, kPi}};
    const double a = wrap(a0), b = a + (b0 - a0);
    if (b <= kPi) {
      iv.emplace_back(a, b);
    } else {
      iv.emplace_back(a, kPi);
      iv.emplace_back(-kPi, b - kTwoPi);
    }
  }
  std::sort(iv.begin(), iv.end());
  std::vector<Arc> out;
  for (const auto& x : iv) {
    if (!out.empty() && x.first <= out.back().second) {
      out.back().second = std::max(out.back().second, x.second);
    } else {
      out.push_back(x);
    }
  }
  return out;
}

std::vector<Arc> complement_arcs(const std::vector<Arc>& arcs) {
  const auto iv = merged_intervals(arcs);
  std::vector<Arc> out;
  double cur = -kPi;
  for (const auto& [a, b] : iv) {
    if (a > cur) out.emplace_back(cur, a);
    cur = std::max(cur, b);
  }
  if (cur < kPi) out.emplace_back(cur, kPi);
  return out;
}

double bracket(double r) { return std::sqrt(1.0 + r * r); }

std::string vec_str(const VectorXd& v) {
  return fmt::format("({})", fmt::join(v.data(), v.data() + v.size(), ","));
}

}  // namespace

struct Region::Impl {
  enum class Kind { arcs, axis_cone, samples, ball, union_, everything, empty };
  Kind kind = Kind::empty;
  std::vector<Arc> arcs;
  VectorXd axis;
  double angle = 0.0;
  bool two_sided = true;
  bool complemented = false;
  std::vector<VectorXd> pts;  // sorted by first coordinate
  std::vector<double> key, margin;
  double max_margin = 0.0;
  bool polyline = false;  // pts are consecutive samples of a curve (before sorting: see order)
  std::vector<size_t> order;  // curve position of each sorted sample
  VectorXd center;
  double radius = 0.0;
  std::vector<std::shared_ptr<const Impl>> parts;

  bool conic() const { return kind == Kind::arcs || kind == Kind::axis_cone; }

  // Angle between z and the direction set; z != 0.
  double angular_distance(const VectorXd& z) const {
    if (kind == Kind::arcs) {
      const double th = std::atan2(z(1), z(0));
      double best = kPi;
      for (const auto& arc : arcs) best = std::min(best, arc_distance(th, arc));
      return best;
    }
    const double c = z.dot(axis) / z.norm();
    const double psi = std::acos(std::clamp(two_sided ? std::abs(c) : c, -1.0, 1.0));
    return complemented ? std::max(0.0, angle - psi) : std::max(0.0, psi - angle);
  }

  void finish_samples() {
    std::vector<size_t> idx(pts.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return pts[a](0) < pts[b](0); });
    std::vector<VectorXd> p2;
    std::vector<double> m2;
    std::vector<size_t> o2;
    for (auto i : idx) {
      p2.push_back(pts[i]);
      m2.push_back(margin[i]);
      o2.push_back(order.empty() ? i : order[i]);
    }
    pts = std::move(p2);
    margin = std::move(m2);
    order = std::move(o2);
    key.clear();
    for (const auto& p : pts) key.push_back(p(0));
    max_margin = margin.empty() ? 0.0 : *std::max_element(margin.begin(), margin.end());
  }

  bool contains(const VectorXd& z) const {
    switch (kind) {
      case Kind::everything: return true;
      case Kind::empty: return false;
      case Kind::arcs:
      case Kind::axis_cone: return z.norm() == 0.0 || angular_distance(z) <= 1e-12;
      case Kind::ball: return complemented ? (z - center).norm() >= radius : (z - center).norm() <= radius;
      case Kind::samples:
        for (size_t i = 0; i < pts.size(); ++i) {
          if ((z - pts[i]).norm() <= std::max(margin[i], 1e-12)) return true;
        }
        return false;
      case Kind::union_:
        for (const auto& p : parts) {
          if (p->contains(z)) return true;
        }
        return false;
    }
    return false;
  }

  bool in_delta(const VectorXd& z, double delta) const {
    switch (kind) {
      case Kind::everything: return true;
      case Kind::empty: return false;
      case Kind::arcs:
      case Kind::axis_cone: {
        // min over rho >= 0 of |z - rho u|^2 - delta^2 (1 + rho^2) for the closest direction u.
        const double n = z.norm();
        if (n < delta) return true;
        const double phi = angular_distance(z);
        if (phi >= kPi / 2) return false;
        const double c = n * std::cos(phi);
        return c * c > (1.0 - delta * delta) * (n * n - delta * delta);
      }
      case Kind::ball: {
        const double far = bracket(center.norm() + radius);
        const double r = (z - center).norm();
        if (complemented) return r >= radius || radius - r < delta * far;
        return std::max(0.0, r - radius) < delta * far;
      }
      case Kind::samples: {
        if (pts.empty()) return false;
        const double reach = (delta * japanese_bracket(z) + max_margin) / (1.0 - delta);
        auto lo = std::lower_bound(key.begin(), key.end(), z(0) - reach);
        auto hi = std::upper_bound(key.begin(), key.end(), z(0) + reach);
        for (auto it = lo; it != hi; ++it) {
          const auto i = static_cast<size_t>(it - key.begin());
          if ((z - pts[i]).norm() < delta * japanese_bracket(pts[i]) + margin[i]) return true;
        }
        return false;
      }
      case Kind::union_:
        for (const auto& p : parts) {
          if (p->in_delta(z, delta)) return true;
        }
        return false;
    }
    return false;
  }
};

namespace {

std::shared_ptr<Region::Impl> make_impl(Region::Impl::Kind k) {
  auto p = std::make_shared<Region::Impl>();
  p->kind = k;
  return p;
}

VectorXd unit(const VectorXd& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw GeometryError("direction must be a finite nonzero vector");
  return v / n;
}

std::vector<Arc> linear_arcs(const std::vector<Arc>& arcs, const MatrixXd& M) {
  auto ang = [&](double th) {
    Eigen::Vector2d u(std::cos(th), std::sin(th));
    const Eigen::Vector2d v = M * u;
    return std::atan2(v(1), v(0));
  };
  std::vector<Arc> out;
  for (const auto& [a, b] : arcs) {
    if (b - a >= kTwoPi - 1e-15) return {{-kPi, kPi}};
    const int K = 512;
    double prev = ang(a), acc = prev;
    double lo = acc, hi = acc;
    for (int k = 1; k <= K; ++k) {
      const double cur = ang(a + (b - a) * k / K);
      double step = cur - prev;
      while (step > kPi) step -= kTwoPi;
      while (step < -kPi) step += kTwoPi;
      acc += step;
      prev = cur;
      lo = std::min(lo, acc);
      hi = std::max(hi, acc);
    }
    const double first = wrap(lo);
    out.emplace_back(first, first + (hi - lo));
  }
  return out;
}

}  // namespace

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw DomainError(fmt::format("delta = {} violates 0 < delta < 1 of the delta-neighbourhood definition", delta));
  }
}

Region Region::ray(const VectorXd& dir) {
  Region r;
  r.dim_ = static_cast<int>(dir.size());
  const VectorXd u = unit(dir);
  std::shared_ptr<Impl> p;
  if (r.dim_ == 2) {
    p = make_impl(Impl::Kind::arcs);
    const double th = std::atan2(u(1), u(0));
    p->arcs = {{th, th}};
  } else {
    p = make_impl(Impl::Kind::axis_cone);
    p->axis = u;
    p->two_sided = false;
  }
  r.impl_ = p;
  r.descriptor_ = fmt::format("ray(dir={})", vec_str(dir));
  return r;
}

Region Region::cone(const VectorXd& dir, double angle) {
  if (!(angle >= 0.0 && angle < kPi / 2)) throw GeometryError("cone half-angle must lie in [0, pi/2)");
  Region r;
  r.dim_ = static_cast<int>(dir.size());
  const VectorXd u = unit(dir);
  std::shared_ptr<Impl> p;
  if (r.dim_ == 2) {
    p = make_impl(Impl::Kind::arcs);
    const double th = std::atan2(u(1), u(0));
    p->arcs = {{wrap(th - angle), wrap(th - angle) + 2 * angle}, {wrap(th + kPi - angle), wrap(th + kPi - angle) + 2 * angle}};
  } else {
    p = make_impl(Impl::Kind::axis_cone);
    p->axis = u;
    p->angle = angle;
  }
  r.impl_ = p;
  r.descriptor_ = fmt::format("cone(dir={},angle={})", vec_str(dir), angle);
  return r;
}

Region Region::curve(const std::string& phi, double x_lo, double x_hi, double h) {
  if (!(x_hi > x_lo)) throw GeometryError("curve needs x_lo < x_hi");
  if (!(h > 0.0 && h < 0.5)) throw GeometryError("curve densification h must lie in (0, 0.5)");
  const auto f = Expression::parse(phi, position_variables(1));
  const auto df = f.derivative(0);
  auto p = make_impl(Impl::Kind::samples);
  VectorXd arg(1);
  double x = x_lo;
  for (;;) {
    arg(0) = x;
    VectorXd z(2);
    z << x, f(arg);
    if (!z.allFinite()) throw GeometryError(fmt::format("curve '{}' is not finite at x = {}", phi, x));
    p->pts.push_back(z);
    if (x >= x_hi) break;
    const double slope = df(arg);
    const double dx = h * japanese_bracket(z) / std::sqrt(1.0 + slope * slope);
    x = std::min(x_hi, x + std::max(dx, 1e-9));
  }
  p->margin = polyline_margins(p->pts);
  p->polyline = true;
  p->finish_samples();
  Region r;
  r.dim_ = 2;
  r.impl_ = p;
  r.descriptor_ = fmt::format("curve(phi={},x=({},{}))", phi, x_lo, x_hi);
  return r;
}

Region Region::points(std::vector<VectorXd> pts) {
  if (pts.empty()) throw GeometryError("point region needs at least one point");
  auto p = make_impl(Impl::Kind::samples);
  const auto dim = pts.front().size();
  std::vector<std::string> names;
  for (const auto& z : pts) {
    if (z.size() != dim) throw GeometryError("points of different dimensions");
    names.push_back(vec_str(z));
  }
  p->pts = std::move(pts);
  p->margin.assign(p->pts.size(), 0.0);
  p->finish_samples();
  Region r;
  r.dim_ = static_cast<int>(dim);
  r.impl_ = p;
  r.descriptor_ = fmt::format("points({})", fmt::join(names, ","));
  return r;
}

Region Region::ball(const VectorXd& center, double radius) {
  if (!(radius > 0.0)) throw GeometryError("ball radius must be positive");
  auto p = make_impl(Impl::Kind::ball);
  p->center = center;
  p->radius = radius;
  Region r;
  r.dim_ = static_cast<int>(center.size());
  r.impl_ = p;
  r.descriptor_ = fmt::format("ball(center={},radius={})", vec_str(center), radius);
  return r;
}

Region Region::complement(const Region& in) {
  const auto& s = *in.impl_;
  std::shared_ptr<Impl> p;
  using K = Impl::Kind;
  switch (s.kind) {
    case K::arcs:
      p = make_impl(K::arcs);
      p->arcs = complement_arcs(s.arcs);
      if (p->arcs.empty()) p = make_impl(K::empty);
      break;
    case K::axis_cone:
      if (!s.two_sided || s.angle == 0.0) {
        p = make_impl(K::everything);  // a ray or a line has empty interior
      } else {
        p = std::make_shared<Impl>(s);
        p->complemented = !s.complemented;
      }
      break;
    case K::ball:
      p = std::make_shared<Impl>(s);
      p->complemented = !s.complemented;
      break;
    case K::samples: p = make_impl(K::everything); break;
    case K::everything: p = make_impl(K::empty); break;
    case K::empty: p = make_impl(K::everything); break;
    case K::union_: {
      std::vector<Arc> all;
      for (const auto& part : s.parts) {
        if (part->kind != K::arcs) throw GeometryError("complement of a union is supported for planar conic parts only");
        all.insert(all.end(), part->arcs.begin(), part->arcs.end());
      }
      p = make_impl(K::arcs);
      p->arcs = complement_arcs(all);
      if (p->arcs.empty()) p = make_impl(K::empty);
      break;
    }
  }
  Region r;
  r.dim_ = in.dim_;
  r.impl_ = p;
  r.descriptor_ = fmt::format("complement({})", in.descriptor_);
  return r;
}

Region Region::unite(const std::vector<Region>& parts) {
  if (parts.empty()) throw GeometryError("union needs at least one region");
  auto p = make_impl(Impl::Kind::union_);
  std::vector<std::string> names;
  for (const auto& r : parts) {
    if (r.dim_ != parts.front().dim_) throw GeometryError("union of regions of different dimensions");
    p->parts.push_back(r.impl_);
    names.push_back(r.descriptor_);
  }
  Region r;
  r.dim_ = parts.front().dim_;
  r.impl_ = p;
  r.descriptor_ = fmt::format("union({})", fmt::join(names, ","));
  return r;
}

bool Region::contains(const VectorXd& z) const {
  if (z.size() != dim_) throw GeometryError("point dimension differs from region dimension");
  return impl_->contains(z);
}

bool Region::in_delta(const VectorXd& z, double delta) const {
  check_delta(delta);
  if (z.size() != dim_) throw GeometryError("point dimension differs from region dimension");
  return impl_->in_delta(z, delta);
}

namespace {

std::shared_ptr<const Region::Impl> image_impl(const Region::Impl& s, const PhaseMap& chi) {
  using K = Region::Impl::Kind;
  switch (s.kind) {
    case K::everything:
    case K::empty: return std::make_shared<Region::Impl>(s);
    case K::arcs: {
      if (!chi.linear) throw GeometryError("the image of a conic region needs a linear map");
      auto p = make_impl(K::arcs);
      p->arcs = linear_arcs(s.arcs, *chi.linear);
      return p;
    }
    case K::axis_cone: {
      if (chi.linear && chi.linear->isIdentity(1e-14)) return std::make_shared<Region::Impl>(s);
      throw GeometryError("images of cones are supported in phase-space dimension 2 only");
    }
    case K::samples: {
      auto p = make_impl(K::samples);
      if (s.polyline) {
        // Map in curve order and measure the new spacing.
        std::vector<VectorXd> along(s.pts.size());
        for (size_t i = 0; i < s.pts.size(); ++i) along[s.order[i]] = chi.forward(s.pts[i]);
        p->margin = polyline_margins(along);
        p->pts = std::move(along);
        p->polyline = true;
      } else {
        for (size_t i = 0; i < s.pts.size(); ++i) {
          p->pts.push_back(chi.forward(s.pts[i]));
          p->margin.push_back(s.margin[i] * chi.lipschitz);
        }
      }
      p->finish_samples();
      return p;
    }
    case K::ball: {
      if (s.complemented && !chi.linear) throw GeometryError("the image of a ball complement needs a linear map");
      auto p = std::make_shared<Region::Impl>(s);
      p->center = chi.forward(s.center);
      p->radius = s.radius * chi.lipschitz;  // enclosing ball
      return p;
    }
    case K::union_: {
      auto p = make_impl(K::union_);
      for (const auto& part : s.parts) p->parts.push_back(image_impl(*part, chi));
      return p;
    }
  }
  return nullptr;
}

}  // namespace

Region Region::image(const PhaseMap& chi) const {
  Region r;
  r.dim_ = dim_;
  r.impl_ = image_impl(*impl_, chi);
  r.descriptor_ = fmt::format("image({})", descriptor_);
  return r;
}

PhaseMap PhaseMap::identity(int d) { return from_matrix(MatrixXd::Identity(2 * d, 2 * d)); }

PhaseMap PhaseMap::from_matrix(const MatrixXd& M) {
  const MatrixXd Minv = M.inverse();
  PhaseMap m;
  m.forward = [M](const VectorXd& z) -> VectorXd { return M * z; };
  m.inverse = [Minv](const VectorXd& z) -> VectorXd { return Minv * z; };
  m.linear = M;
  m.lipschitz = std::max(1.0, Eigen::JacobiSVD<MatrixXd>(M).singularValues()(0));
  return m;
}

PhaseMap PhaseMap::flow(const HamiltonianSymbol& a, double t, const FlowOptions& opts) {
  if (a.quadratic) {
    const auto lf = flow_quadratic_exact(a, t);
    if (lf.offset.cwiseAbs().maxCoeff() <= 1e-14) return from_matrix(lf.M);
    PhaseMap m;
    const auto back = flow_quadratic_exact(a, -t);
    m.forward = lf;
    m.inverse = back;
    m.lipschitz = std::max(1.0, Eigen::JacobiSVD<MatrixXd>(lf.M).singularValues()(0));
    return m;
  }
  PhaseMap m;
  m.forward = make_flow_map(a, t, opts);
  m.inverse = make_flow_map(a, -t, opts);
  m.lipschitz = std::max(1.0, lipschitz_estimate(a, t, {}, opts).L_forward);
  return m;
}

bool in_delta_neighborhood(const VectorXd& z, const Region& gamma, double delta) { return gamma.in_delta(z, delta); }

double delta_star_formula(const LipschitzEstimate& lip, double delta) {
  check_delta(delta);
  return delta / (2.0 * std::max(1.0, lip.L_forward) * std::max(1.0, lip.L_inverse));
}

namespace {

// Uniform probe lattice on [-R, R]^D restricted to the ball |z| <= R.
struct ProbeGrid {
  int D;
  Index n;
  double R, h;
  Index size() const {
    Index s = 1;
    for (int a = 0; a < D; ++a) s *= n;
    return s;
  }
  VectorXd point(Index flat) const {
    VectorXd z(D);
    for (int a = D - 1; a >= 0; --a) {
      z(a) = -R + h * static_cast<double>(flat % n);
      flat /= n;
    }
    return z;
  }
  std::vector<Index> index(Index flat) const {
    std::vector<Index> idx(static_cast<size_t>(D));
    for (int a = D - 1; a >= 0; --a) {
      idx[static_cast<size_t>(a)] = flat % n;
      flat /= n;
    }
    return idx;
  }
};

}  // namespace

InclusionReport delta_star(const Region& gamma, const PhaseMap& chi, const LipschitzEstimate& lip, double delta,
                           double radius, double step) {
  check_delta(delta);
  const int D = gamma.phase_dim();
  ProbeGrid grid{D, static_cast<Index>(std::floor(2 * radius / step + 1e-9)) + 1, radius, step};
  const Index N = grid.size();
  std::vector<VectorXd> pts(static_cast<size_t>(N));
  std::vector<char> inside(static_cast<size_t>(N));
  for (Index i = 0; i < N; ++i) {
    pts[static_cast<size_t>(i)] = grid.point(i);
    inside[static_cast<size_t>(i)] = pts[static_cast<size_t>(i)].norm() <= radius + 1e-12;
  }
  std::vector<char> in_d(static_cast<size_t>(N));
  for (Index i = 0; i < N; ++i) {
    if (inside[static_cast<size_t>(i)]) in_d[static_cast<size_t>(i)] = gamma.in_delta(pts[static_cast<size_t>(i)], delta);
  }
  const Region image = gamma.image(chi);

  InclusionReport rep;
  rep.delta = delta;
  double ds = delta_star_formula(lip, delta);
  std::string failure;
  for (rep.halvings = 0; rep.halvings <= 8; ++rep.halvings, ds /= 2) {
    rep.delta_star = ds;
    rep.points_checked = 0;
    failure.clear();
    std::vector<char> in_s(static_cast<size_t>(N), 0);
    for (Index i = 0; i < N; ++i) {
      if (inside[static_cast<size_t>(i)]) in_s[static_cast<size_t>(i)] = gamma.in_delta(pts[static_cast<size_t>(i)], ds);
    }
    auto fail = [&](const char* which, const VectorXd& z) {
      if (failure.empty()) failure = fmt::format("{} fails at z = {}", which, vec_str(z));
    };
    for (Index i = 0; i < N && failure.empty(); ++i) {
      const auto ui = static_cast<size_t>(i);
      if (!inside[ui]) continue;
      ++rep.points_checked;
      const VectorXd& z = pts[ui];
      if (in_s[ui] && !image.in_delta(chi.forward(z), delta)) fail("chi(G_d*) in chi(G)_d", z);
      if (image.in_delta(z, ds) && !gamma.in_delta(chi.inverse(z), delta)) fail("chi(G)_d* in chi(G_d)", z);
      // Lattice neighbours p of q = z with |p - q| < d* <q>.
      const double reach = ds * japanese_bracket(z);
      const auto k = static_cast<Index>(std::floor(reach / step));
      if (k == 0) {
        if (in_s[ui] && !in_d[ui]) fail("(G_d*)_d* in G_d", z);
        continue;
      }
      const auto base = grid.index(i);
      std::vector<Index> off(static_cast<size_t>(D), -k);
      for (;;) {
        Index flat = 0;
        bool ok = true;
        double dist2 = 0.0;
        for (int a = 0; a < D; ++a) {
          const Index c = base[static_cast<size_t>(a)] + off[static_cast<size_t>(a)];
          if (c < 0 || c >= grid.n) ok = false;
          flat = flat * grid.n + c;
          dist2 += std::pow(step * static_cast<double>(off[static_cast<size_t>(a)]), 2);
        }
        if (ok && std::sqrt(dist2) < reach && inside[static_cast<size_t>(flat)]) {
          const auto uf = static_cast<size_t>(flat);
          if (in_s[ui] && !in_d[uf]) fail("(G_d*)_d* in G_d", pts[uf]);
          if (!in_d[ui] && in_s[uf]) fail("(R\\G_d)_d* in R\\G_d*", pts[uf]);
        }
        int a = D - 1;
        while (a >= 0 && ++off[static_cast<size_t>(a)] > k) {
          off[static_cast<size_t>(a)] = -k;
          --a;
        }
        if (a < 0) break;
      }
    }
    if (failure.empty()) {
      rep.nested = rep.complement = rep.forward = rep.backward = true;
      return rep;
    }
  }
  throw GeometryError(fmt::format("no delta* found for {} at delta = {}: {}", gamma.descriptor(), delta, failure));
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::regular: return "regular";
    case Verdict::singular: return "singular";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

int truncation_annulus(double radius) {
  if (!(radius >= 2.0)) return -1;
  return static_cast<int>(std::floor(std::log2(radius) + 1e-12)) - 1;
}

RegularityScore regularity_score(const StftArray& V, const Region& gamma, double delta, const RegularityOptions& opts) {
  check_delta(delta);
  const auto& lat = V.lattice;
  const int d = lat.dim();
  if (gamma.phase_dim() != 2 * d) throw GeometryError("region and STFT dimensions differ");
  if (!(opts.p >= 1.0)) throw DomainError("p must be >= 1");

  RegularityScore s;
  s.region = gamma.descriptor();
  s.p = opts.p;
  s.r = opts.r;
  s.delta = delta;
  s.j0 = opts.j0;
  // An axis limits the annuli unless |V| is negligible on both of its faces.
  {
    const double peak = V.values.cwiseAbs().maxCoeff();
    std::vector<LatticeAxis> axes = lat.x_axes();
    axes.insert(axes.end(), lat.eta_axes().begin(), lat.eta_axes().end());
    std::vector<double> face(axes.size(), 0.0);
    double outer = 0.0;
    for (Index i = 0; i < lat.x_count(); ++i) {
      for (Index j = 0; j < lat.eta_count(); ++j) {
        const VectorXd z = (VectorXd(2 * d) << lat.x_point(i), lat.eta_point(j)).finished();
        outer = std::max(outer, z.norm());
        for (size_t a = 0; a < axes.size(); ++a) {
          const double c = z(static_cast<Index>(a));
          if (std::abs(c - axes[a].start) < 1e-9 || std::abs(c - axes[a].last()) < 1e-9) {
            face[a] = std::max(face[a], std::abs(V.values(i, j)));
          }
        }
      }
    }
    double inscribed = std::numeric_limits<double>::infinity();
    for (size_t a = 0; a < axes.size(); ++a) {
      if (face[a] > 1e-10 * peak) inscribed = std::min({inscribed, -axes[a].start, axes[a].last()});
    }
    s.j_lattice = std::isinf(inscribed) ? static_cast<int>(std::floor(std::log2(std::max(outer, 1.0)))) - 1
                                        : truncation_annulus(inscribed);
  }
  s.j_truncation = opts.j_max;
  s.j_max = opts.j_max >= 0 ? std::min(opts.j_max, s.j_lattice) : s.j_lattice;

  const bool inf = std::isinf(opts.p);
  double cell = 1.0;
  for (const auto& a : lat.x_axes()) cell *= a.step;
  for (const auto& a : lat.eta_axes()) cell *= a.step;

  const int nj = std::max(0, s.j_max - s.j0 + 1);
  std::vector<double> acc(static_cast<size_t>(nj), 0.0);
  double total = 0.0;
  VectorXd z(2 * d);
  for (Index i = 0; i < lat.x_count(); ++i) {
    z.head(d) = lat.x_point(i);
    for (Index j = 0; j < lat.eta_count(); ++j) {
      z.tail(d) = lat.eta_point(j);
      const double v = std::abs(V.values(i, j)) * std::pow(japanese_bracket(z), opts.r);
      const double w = inf ? v : std::pow(v, opts.p);
      total = inf ? std::max(total, w) : total + w;
      const double n = z.norm();
      if (n < std::ldexp(1.0, s.j0)) continue;
      const int jj = static_cast<int>(std::floor(std::log2(n)));
      if (jj > s.j_max) continue;
      if (!gamma.in_delta(z, delta)) continue;
      auto& a = acc[static_cast<size_t>(jj - s.j0)];
      a = inf ? std::max(a, w) : a + w;
    }
  }
  auto finish = [&](double a) { return inf ? a : std::pow(a * cell, 1.0 / opts.p); };
  for (double a : acc) s.scores.push_back(finish(a));
  s.floor = opts.noise_floor * finish(total);

  if (nj < opts.min_annuli) {
    s.verdict = Verdict::inconclusive;
    s.note = fmt::format("only {} annuli in range (need {})", nj, opts.min_annuli);
    return s;
  }
  for (double v : s.scores) {
    if (!std::isfinite(v)) {
      s.verdict = Verdict::singular;
      s.note = "non-finite annulus score";
      return s;
    }
  }
  const int top = std::min(opts.top, nj);
  bool all_vanished = true;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = nj - top; k < nj; ++k) {
    const double v = s.scores[static_cast<size_t>(k)];
    if (v > s.floor) all_vanished = false;
    const double x = k + s.j0, y = std::log2(std::max(v, s.floor > 0 ? s.floor : 1e-300));
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  s.slope = (top * sxy - sx * sy) / (top * sxx - sx * sx);
  if (all_vanished) {
    s.verdict = Verdict::regular;
    s.note = "top annuli below the noise floor";
  } else if (s.slope <= opts.slope_regular) {
    s.verdict = Verdict::regular;
  } else if (s.slope >= opts.slope_singular) {
    s.verdict = Verdict::singular;
  } else {
    s.verdict = Verdict::inconclusive;
    s.note = "slope between the thresholds";
  }
  if (s.j_truncation >= 0 && s.j_truncation < s.j_lattice) {
    s.note += (s.note.empty() ? "" : "; ") + fmt::format("capped at the signal truncation j = {}", s.j_truncation);
  }
  return s;
}

RegularityScore regularity_score(const SampledSignal& f, const Window& g, const Region& gamma, double delta,
                                 const PhaseLattice& lattice, const RegularityOptions& opts) {
  return regularity_score(stft(f, g, lattice), gamma, delta, opts);
}

namespace {

int rank(Verdict v) { return v == Verdict::regular ? 2 : v == Verdict::inconclusive ? 1 : 0; }

}  // namespace

RegularityScore best_over_deltas(const StftArray& V, const Region& gamma, const std::vector<double>& deltas,
                                 const RegularityOptions& opts) {
  if (deltas.empty()) throw DomainError("delta sweep is empty");
  RegularityScore best;
  bool first = true;
  for (double d : deltas) {
    auto s = regularity_score(V, gamma, d, opts);
    if (first || rank(s.verdict) > rank(best.verdict)) best = std::move(s);
    first = false;
  }
  return best;
}

PropagationReport propagation_check(const SampledSignal& u0, const HamiltonianSymbol& a, double t, const Region& gamma,
                                    const Window& g, const PhaseLattice& lattice_before,
                                    const PhaseLattice& lattice_after, const PropagationOptions& opts) {
  PropagationReport rep;
  rep.t = t;
  auto run = [&](const SampledSignal& u, double s) {
    auto plan = make_plan(a, s, opts.method, opts.segment, opts.dt);
    plan.route = opts.route;
    return propagate_long_time(plan, u);
  };
  auto cap = [&](const FlowMap& map) {
    RegularityOptions o = opts.reg;
    if (!opts.support.empty()) {
      double R = 0.0;
      for (const auto& z : opts.support) R = std::max(R, map ? map(z).norm() : z.norm());
      o.j_max = truncation_annulus(R);
    }
    return o;
  };

  rep.before = best_over_deltas(stft(u0, g, lattice_before), gamma, opts.deltas, cap({}));

  const auto chi = PhaseMap::flow(a, t);
  const auto lip = lipschitz_estimate(a, t);
  const Region moved = gamma.image(chi);
  for (double d : opts.deltas) {
    rep.delta_after.push_back(delta_star(gamma, chi, lip, d, opts.probe_radius, opts.probe_step).delta_star);
  }
  const SampledSignal u1 = run(u0, t);
  rep.after = best_over_deltas(stft(u1, g, lattice_after), moved, rep.delta_after, cap(chi.forward));

  const auto back = PhaseMap::flow(a, -t);
  const Region returned = moved.image(back);
  const SampledSignal u2 = run(u1, -t);
  rep.reversed = best_over_deltas(stft(u2, g, lattice_before), returned, opts.deltas, cap({}));

  rep.forward_ok = rep.before.verdict != Verdict::regular || rep.after.verdict == Verdict::regular;
  rep.preserved = rep.before.verdict == rep.after.verdict;
  rep.reversal_ok = rep.reversed.verdict == rep.before.verdict;
  return rep;
}

SampledSignal chirp_bump(const SpatialGrid& grid, double beta, double half_width, double plateau) {
  if (grid.dim() != 1) throw DomainError("chirp_bump is defined for d = 1");
  if (!(half_width > plateau && plateau >= 0.0)) throw DomainError("chirp bump needs 0 <= plateau < half_width");
  auto psi = [](double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; };
  return SampledSignal::from_function(grid, [=](const VectorXd& x) {
    const double u = (half_width - std::abs(x(0))) / (half_width - plateau);
    const double b = u >= 1.0 ? 1.0 : psi(u) / (psi(u) + psi(1.0 - u));
    return std::polar(b, kTwoPi * beta * x(0) * x(0));
  });
}

std::vector<VectorXd> chirp_support(double beta, double half_width, int n) {
  std::vector<VectorXd> out;
  for (int i = 0; i < n; ++i) {
    const double x = -half_width + 2.0 * half_width * i / (n - 1);
    VectorXd z(2);
    z << x, 2.0 * beta * x;
    out.push_back(z);
  }
  return out;
}

// ---- region DSL ----

namespace {

class RegionParser {
 public:
  RegionParser(const std::string& s, int d) : s_(s), d_(d) {}

  Region parse() {
    Region r = region();
    skip();
    if (pos_ != s_.size()) error("trailing input");
    return r;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    throw ParseError(fmt::format("region '{}': {} at offset {}", s_, what, pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) error(fmt::format("expected '{}'", c));
  }
  std::string ident() {
    skip();
    const auto start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    if (start == pos_) error("expected a name");
    return s_.substr(start, pos_ - start);
  }
  double number() {
    skip();
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) error("expected a number");
    pos_ += static_cast<size_t>(end - begin);
    return v;
  }
  VectorXd tuple() {
    expect('(');
    std::vector<double> v{number()};
    while (eat(',')) v.push_back(number());
    expect(')');
    return Eigen::Map<VectorXd>(v.data(), static_cast<Index>(v.size()));
  }
  // Raw text up to a top-level ',' or ')'.
  std::string raw() {
    skip();
    const auto start = pos_;
    int depth = 0;
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '(') ++depth;
      if (c == ')') {
        if (depth == 0) break;
        --depth;
      }
      if (c == ',' && depth == 0) break;
      ++pos_;
    }
    return s_.substr(start, pos_ - start);
  }
  VectorXd direction(const VectorXd& v) {
    if (v.size() != 2 * d_) error(fmt::format("direction needs {} components", 2 * d_));
    return v;
  }

  Region region() {
    const std::string name = ident();
    expect('(');
    Region out = dispatch(name);
    expect(')');
    return out;
  }

  Region dispatch(const std::string& name) {
    if (name == "complement") return Region::complement(region());
    if (name == "union") {
      std::vector<Region> parts{region()};
      while (eat(',')) parts.push_back(region());
      return Region::unite(parts);
    }
    if (name == "points") {
      std::vector<VectorXd> pts{direction(tuple())};
      while (eat(',')) pts.push_back(direction(tuple()));
      return Region::points(std::move(pts));
    }
    // key=value lists
    VectorXd dir, center;
    double angle = -1.0, radius = -1.0, h = 2e-3;
    std::string phi;
    VectorXd xr;
    do {
      const std::string key = ident();
      expect('=');
      if (key == "dir") {
        dir = direction(tuple());
      } else if (key == "center") {
        center = direction(tuple());
      } else if (key == "angle") {
        angle = number();
      } else if (key == "radius") {
        radius = number();
      } else if (key == "h") {
        h = number();
      } else if (key == "phi") {
        phi = raw();
      } else if (key == "x") {
        xr = tuple();
      } else {
        error(fmt::format("unknown key '{}'", key));
      }
    } while (eat(','));
    if (name == "ray") {
      if (dir.size() == 0) error("ray needs dir");
      return Region::ray(dir);
    }
    if (name == "cone") {
      if (dir.size() == 0 || angle < 0) error("cone needs dir and angle");
      return Region::cone(dir, angle);
    }
    if (name == "ball") {
      if (center.size() == 0 || radius <= 0) error("ball needs center and radius");
      return Region::ball(center, radius);
    }
    if (name == "curve") {
      if (d_ != 1) error("curves are supported for d = 1");
      if (phi.empty()) error("curve needs phi");
      if (xr.size() == 0) {
        xr.resize(2);
        xr << -16.0, 16.0;
      }
      if (xr.size() != 2) error("curve x range needs two values");
      return Region::curve(phi, xr(0), xr(1), h);
    }
    error(fmt::format("unknown region '{}'", name));
  }

  const std::string& s_;
  int d_;
  size_t pos_ = 0;
};

}  // namespace

Region parse_region(const std::string& text, int d) { return RegionParser(text, d).parse(); }

}  // namespace tfprop

#include "tfprop/hamiltonian.hpp"

#include <fmt/format.h>

#include <cmath>

namespace tfprop {

namespace {

constexpr double kFourPiSq = 4.0 * kPi * kPi;

HamiltonianSymbol quadratic_symbol(std::string name, int d, MatrixXd Q, VectorXd b, double c) {
  HamiltonianSymbol a;
  a.name = std::move(name);
  a.d = d;
  a.cls = SymbolClass::quadratic;
  a.quadratic = QuadraticPart{Q, b, c};
  a.eval = [Q, b, c](const VectorXd& z) { return 0.5 * z.dot(Q * z) + b.dot(z) + c; };
  a.grad = [Q, b](const VectorXd& z) -> VectorXd { return Q * z + b; };
  a.hessian = [Q](const VectorXd&) -> MatrixXd { return Q; };
  a.bound_constants = {{2, Q.cwiseAbs().maxCoeff()}, {3, 0.0}, {4, 0.0}};
  return a;
}

MatrixXd oscillator_matrix(int d, double alpha, double beta) {
  MatrixXd Q = MatrixXd::Zero(2 * d, 2 * d);
  Q.topLeftCorner(d, d).diagonal().setConstant(2.0 * alpha);
  Q.bottomRightCorner(d, d).diagonal().setConstant(2.0 * kFourPiSq * beta);
  return Q;
}

/// Builds a k(xi) + V(x) symbol with k = 4 pi^2 |xi|^2 and V given with derivatives.
HamiltonianSymbol kinetic_symbol(std::string name, int d, std::function<double(const VectorXd&)> V,
                                 std::function<VectorXd(const VectorXd&)> dV,
                                 std::function<MatrixXd(const VectorXd&)> d2V) {
  HamiltonianSymbol a;
  a.name = std::move(name);
  a.d = d;
  a.cls = SymbolClass::separable;
  auto k = [](const VectorXd& xi) { return kFourPiSq * xi.squaredNorm(); };
  a.separable = SeparablePart{k, V};
  a.eval = [d, V](const VectorXd& z) { return kFourPiSq * z.tail(d).squaredNorm() + V(z.head(d)); };
  a.grad = [d, dV](const VectorXd& z) -> VectorXd {
    VectorXd g(2 * d);
    g << dV(z.head(d)), 2.0 * kFourPiSq * z.tail(d);
    return g;
  };
  a.hessian = [d, d2V](const VectorXd& z) -> MatrixXd {
    MatrixXd h = MatrixXd::Zero(2 * d, 2 * d);
    h.topLeftCorner(d, d) = d2V(z.head(d));
    h.bottomRightCorner(d, d).diagonal().setConstant(2.0 * kFourPiSq);
    return h;
  };
  return a;
}

int lattice_points(int dims, double half_width, double& step) {
  // Keep the probe lattice tractable in higher phase-space dimension.
  const int per_axis_cap = dims <= 2 ? 1 << 20 : 17;
  int n = static_cast<int>(std::floor(2.0 * half_width / step + 1e-9)) + 1;
  if (n > per_axis_cap) {
    n = per_axis_cap;
    step = 2.0 * half_width / (n - 1);
  }
  return n;
}

struct Stencil {
  std::vector<int> offsets;
  std::vector<double> weights;
};

const Stencil& stencil(int order) {
  static const Stencil s[] = {
      {{0}, {1.0}},
      {{-1, 1}, {-0.5, 0.5}},
      {{-1, 0, 1}, {1.0, -2.0, 1.0}},
      {{-2, -1, 1, 2}, {-0.5, 1.0, -1.0, 0.5}},
      {{-2, -1, 0, 1, 2}, {1.0, -4.0, 6.0, -4.0, 1.0}},
  };
  if (order < 0 || order > 4) throw DomainError("derivative order per variable must be <= 4");
  return s[order];
}

void multi_indices(int dims, int order, std::vector<int>& cur, int pos, std::vector<std::vector<int>>& out) {
  if (pos == dims - 1) {
    cur[static_cast<size_t>(pos)] = order;
    out.push_back(cur);
    return;
  }
  for (int k = order; k >= 0; --k) {
    cur[static_cast<size_t>(pos)] = k;
    multi_indices(dims, order - k, cur, pos + 1, out);
  }
}

double fd_derivative(const HamiltonianSymbol& a, const VectorXd& z, const std::vector<int>& alpha, double h) {
  // Tensor product of 1-d central stencils over the variables involved.
  std::vector<int> vars;
  for (size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] > 0) vars.push_back(static_cast<int>(i));
  }
  int total = 0;
  for (int v : vars) total += alpha[static_cast<size_t>(v)];
  std::vector<size_t> idx(vars.size(), 0);
  double acc = 0.0;
  for (;;) {
    VectorXd p = z;
    double w = 1.0;
    for (size_t k = 0; k < vars.size(); ++k) {
      const auto& st = stencil(alpha[static_cast<size_t>(vars[k])]);
      p(vars[k]) += st.offsets[idx[k]] * h;
      w *= st.weights[idx[k]];
    }
    acc += w * a.eval(p);
    size_t k = 0;
    for (; k < vars.size(); ++k) {
      if (++idx[k] < stencil(alpha[static_cast<size_t>(vars[k])]).offsets.size()) break;
      idx[k] = 0;
    }
    if (k == vars.size()) break;
  }
  return acc / std::pow(h, total);
}

}  // namespace

HamiltonianSymbol make_builtin(const std::string& name, int d, double param, const std::string& potential) {
  if (d < 1) throw DomainError("dimension must be >= 1");
  if (name == "free_particle" || name == "free") {
    auto a = quadratic_symbol("free_particle", d, oscillator_matrix(d, 0.0, 1.0), VectorXd::Zero(2 * d), 0.0);
    a.separable = SeparablePart{[](const VectorXd& xi) { return kFourPiSq * xi.squaredNorm(); },
                                [](const VectorXd&) { return 0.0; }};
    return a;
  }
  if (name == "harmonic") {
    auto a = quadratic_symbol("harmonic", d, oscillator_matrix(d, 1.0, 1.0), VectorXd::Zero(2 * d), 0.0);
    a.separable = SeparablePart{[](const VectorXd& xi) { return kFourPiSq * xi.squaredNorm(); },
                                [](const VectorXd& x) { return x.squaredNorm(); }};
    return a;
  }
  if (name == "anharmonic") {
    const double eps = param;
    if (!(std::abs(eps) <= 1.0)) throw DomainError(fmt::format("anharmonic epsilon {} outside [-1, 1]", eps));
    auto a = kinetic_symbol(
        fmt::format("anharmonic({})", eps), d,
        [eps](const VectorXd& x) { return x.squaredNorm() + eps * std::sin(x(0)); },
        [eps](const VectorXd& x) -> VectorXd {
          VectorXd g = 2.0 * x;
          g(0) += eps * std::cos(x(0));
          return g;
        },
        [eps, d](const VectorXd& x) -> MatrixXd {
          MatrixXd h = 2.0 * MatrixXd::Identity(d, d);
          h(0, 0) -= eps * std::sin(x(0));
          return h;
        });
    a.bound_constants = {{2, std::max(2.0 * kFourPiSq, 2.0 + std::abs(eps))}, {3, std::abs(eps)}, {4, std::abs(eps)}};
    return a;
  }
  if (name == "kinetic_plus_potential") {
    if (potential.empty()) throw DomainError("kinetic_plus_potential needs a potential expression");
    const auto V = Expression::parse(potential, position_variables(d));
    std::vector<Expression> dV;
    std::vector<std::vector<Expression>> d2V;
    for (int i = 0; i < d; ++i) {
      dV.push_back(V.derivative(i));
      d2V.emplace_back();
      for (int j = 0; j < d; ++j) d2V.back().push_back(dV.back().derivative(j));
    }
    auto a = kinetic_symbol(
        fmt::format("kinetic_plus_potential({})", potential), d, [V](const VectorXd& x) { return V(x); },
        [dV, d](const VectorXd& x) -> VectorXd {
          VectorXd g(d);
          for (int i = 0; i < d; ++i) g(i) = dV[static_cast<size_t>(i)](x);
          return g;
        },
        [d2V, d](const VectorXd& x) -> MatrixXd {
          MatrixXd h(d, d);
          for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) h(i, j) = d2V[static_cast<size_t>(i)][static_cast<size_t>(j)](x);
          }
          return h;
        });
    const auto report = check_bounds(a);
    if (report.growth) {
      throw AssumptionViolation(fmt::format("potential '{}' has growing derivatives of order {}", potential,
                                            report.growing_orders.front()));
    }
    a.bound_constants = report.sup;
    return a;
  }
  throw DomainError(fmt::format("unknown builtin Hamiltonian '{}'", name));
}

HamiltonianSymbol symbol_from_expression(const std::string& text, int d) {
  const auto e = Expression::parse(text, phase_space_variables(d));
  const int n = 2 * d;
  std::vector<Expression> g;
  std::vector<std::vector<Expression>> h;
  for (int i = 0; i < n; ++i) {
    g.push_back(e.derivative(i));
    h.emplace_back();
    for (int j = 0; j < n; ++j) h.back().push_back(g.back().derivative(j));
  }
  HamiltonianSymbol a;
  a.name = text;
  a.d = d;
  a.cls = SymbolClass::generic;
  a.eval = [e](const VectorXd& z) { return e(z); };
  a.grad = [g, n](const VectorXd& z) -> VectorXd {
    VectorXd r(n);
    for (int i = 0; i < n; ++i) r(i) = g[static_cast<size_t>(i)](z);
    return r;
  };
  a.hessian = [h, n](const VectorXd& z) -> MatrixXd {
    MatrixXd r(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) r(i, j) = h[static_cast<size_t>(i)][static_cast<size_t>(j)](z);
    }
    return r;
  };
  return a;
}

std::optional<IsotropicOscillator> as_isotropic_oscillator(const HamiltonianSymbol& a) {
  if (a.cls != SymbolClass::quadratic || !a.quadratic) return std::nullopt;
  const auto& q = *a.quadratic;
  const int d = a.d;
  const double alpha = 0.5 * q.Q(0, 0);
  const double beta = 0.5 * q.Q(d, d) / kFourPiSq;
  const MatrixXd want = oscillator_matrix(d, alpha, beta);
  const double scale = std::max(1.0, q.Q.cwiseAbs().maxCoeff());
  if ((q.Q - want).cwiseAbs().maxCoeff() > 1e-14 * scale || q.b.cwiseAbs().maxCoeff() != 0.0) return std::nullopt;
  return IsotropicOscillator{alpha, beta, q.c};
}

SeparablePart as_separable(const HamiltonianSymbol& a) {
  if (!a.separable) throw ClassMismatch(fmt::format("symbol '{}' is not separable", a.name));
  return *a.separable;
}

BoundsReport check_bounds(const HamiltonianSymbol& a, const BoundsRegion& region, int order_max) {
  if (order_max < 2 || order_max > 4) throw DomainError("order_max must lie in 2..4");
  if (!(region.half_width > 0.0) || !(region.step > 0.0)) throw DomainError("bounds region needs positive size");
  const int dims = 2 * a.d;
  BoundsReport rep;
  rep.region = region;
  rep.order_max = order_max;
  double step = region.step;
  const int n = lattice_points(dims, region.half_width, step);
  rep.region.step = step;
  const double h = 0.25;

  std::vector<std::vector<std::vector<int>>> alphas(static_cast<size_t>(order_max + 1));
  for (int k = 2; k <= order_max; ++k) {
    std::vector<int> cur(static_cast<size_t>(dims), 0);
    multi_indices(dims, k, cur, 0, alphas[static_cast<size_t>(k)]);
    rep.sup[k] = 0.0;
    rep.sup_inner[k] = 0.0;
  }

  Index total = 1;
  for (int i = 0; i < dims; ++i) total *= n;
  VectorXd z(dims);
  for (Index flat = 0; flat < total; ++flat) {
    Index rem = flat;
    bool inner = true;
    for (int i = dims - 1; i >= 0; --i) {
      z(i) = -region.half_width + static_cast<double>(rem % n) * step;
      rem /= n;
      if (std::abs(z(i)) > 0.5 * region.half_width + 1e-12) inner = false;
    }
    for (int k = 2; k <= order_max; ++k) {
      for (const auto& alpha : alphas[static_cast<size_t>(k)]) {
        const double v = std::abs(fd_derivative(a, z, alpha, h));
        rep.sup[k] = std::max(rep.sup[k], v);
        if (inner) rep.sup_inner[k] = std::max(rep.sup_inner[k], v);
      }
    }
  }
  for (int k = 2; k <= order_max; ++k) {
    if (rep.sup[k] > 1e-6 && rep.sup[k] > 1.5 * rep.sup_inner[k]) {
      rep.growth = true;
      rep.growing_orders.push_back(k);
    }
  }
  return rep;
}

}  // namespace tfprop

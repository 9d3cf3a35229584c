#include "tfprop/gabor_matrix.hpp"

#include "tfprop/expression.hpp"
#include "tfprop/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tfprop {

SignalOperator identity_operator() {
  return {"identity", [](const SampledSignal& f) { return f; }};
}

SignalOperator propagator_operator(const PropagatorPlan& plan) {
  return {fmt::format("propagator:{}:t={}:{}", plan.a.name, plan.t, method_name(plan.method)),
          [plan](const SampledSignal& f) { return propagate_long_time(plan, f); }};
}

SignalOperator pseudodifferential_operator(const std::string& symbol, int d) {
  const auto sigma = Expression::parse(symbol, phase_space_variables(d));
  auto apply = [sigma, d](const SampledSignal& f) {
    const auto& grid = f.grid;
    if (grid.dim() != d) throw GridMismatch("symbol and signal dimensions differ");
    const VectorXcd fh = spectrum(f);
    SampledSignal out = SampledSignal::zeros(grid);
    const double peak = fh.cwiseAbs().maxCoeff();
    if (peak == 0.0) return out;
    double deta = 1.0;
    for (int a = 0; a < d; ++a) deta /= grid.extent(a);
    std::vector<Index> support;
    for (Index k = 0; k < grid.size(); ++k) {
      if (std::abs(fh(k)) > 1e-14 * peak) support.push_back(k);
    }
    std::vector<VectorXd> etas;
    etas.reserve(support.size());
    for (Index k : support) etas.push_back(grid.frequency_point(k));
    VectorXd z(2 * d);
    for (Index i = 0; i < grid.size(); ++i) {
      z.head(d) = grid.point(i);
      Complex acc = 0.0;
      for (size_t j = 0; j < support.size(); ++j) {
        z.tail(d) = etas[j];
        acc += sigma(z) * std::polar(1.0, kTwoPi * z.head(d).dot(etas[j])) * fh(support[j]);
      }
      out.values(i) = acc * deta;
    }
    return out;
  };
  return {fmt::format("kohn_nirenberg:{}", symbol), std::move(apply)};
}

SignalOperator compose(const SignalOperator& second, const SignalOperator& first) {
  return {second.descriptor + " o " + first.descriptor,
          [s = second.apply, f = first.apply](const SampledSignal& u) { return s(f(u)); }};
}

namespace {

// Row of V_g(P pi(w) g) on the z-lattice, in flat lattice order.
Eigen::Matrix<Complex, 1, Eigen::Dynamic> matrix_row(const SignalOperator& op, const Window& g, const VectorXd& w,
                                                      const PhaseLattice& z_lattice) {
  const SampledSignal col = op.apply(time_frequency_shift(g.samples, PhasePoint(w)));
  const StftArray s = stft(col, g, z_lattice);
  return Eigen::Map<const Eigen::Matrix<Complex, 1, Eigen::Dynamic>>(s.values.data(), s.values.size());
}

std::vector<VectorXd> mapped_points(const PhaseLattice& lattice, const FlowMap& map) {
  std::vector<VectorXd> out(static_cast<size_t>(lattice.size()));
  for (Index i = 0; i < lattice.size(); ++i) out[static_cast<size_t>(i)] = map(lattice.point(i));
  return out;
}

std::vector<VectorXd> lattice_points(const PhaseLattice& lattice) {
  std::vector<VectorXd> out(static_cast<size_t>(lattice.size()));
  for (Index i = 0; i < lattice.size(); ++i) out[static_cast<size_t>(i)] = lattice.point(i);
  return out;
}

}  // namespace

GaborMatrixSample compute_gabor_matrix(const SignalOperator& op, const Window& g, const PhaseLattice& w_lattice,
                                       const PhaseLattice& z_lattice, double t, std::size_t workers) {
  if (w_lattice.dim() != g.grid().dim() || z_lattice.dim() != g.grid().dim()) {
    throw GridMismatch("lattice and window dimensions differ");
  }
  GaborMatrixSample k;
  k.t = t;
  k.w_lattice = w_lattice;
  k.z_lattice = z_lattice;
  k.window_id = g.id;
  k.descriptor = op.descriptor;
  k.values.resize(w_lattice.size(), z_lattice.size());
  parallel_for(static_cast<std::size_t>(w_lattice.size()), workers, [&](std::size_t i) {
    const auto iw = static_cast<Index>(i);
    k.values.row(iw) = matrix_row(op, g, w_lattice.point(iw), z_lattice);
  });
  return k;
}

DecayFit fit_decay(const GaborMatrixSample& k, const FlowMap& map, const std::string& map_name,
                   const DecayFitOptions& opts) {
  if (!(opts.r_max > opts.r_min) || opts.r_min < 1.0 || opts.annuli < 1) {
    throw DomainError("decay fit needs 1 <= r_min < r_max and at least one annulus");
  }
  const Index nw = k.w_lattice.size(), nz = k.z_lattice.size();
  const auto zs = lattice_points(k.z_lattice);
  const auto images = mapped_points(k.w_lattice, map);
  const double peak = k.values.cwiseAbs().maxCoeff();

  DecayFit fit;
  fit.r_min = opts.r_min;
  fit.r_max = opts.r_max;
  fit.map_used = map_name;

  const auto n_ann = static_cast<size_t>(opts.annuli);
  const double width = (opts.r_max - opts.r_min) / static_cast<double>(opts.annuli);
  std::vector<double> env(n_ann, 0.0), env_r(n_ann, 0.0);
  VectorXd column_peak(nw);
  for (Index iw = 0; iw < nw; ++iw) {
    const VectorXd& cw = images[static_cast<size_t>(iw)];
    double col = 0.0;
    for (Index iz = 0; iz < nz; ++iz) {
      const double v = std::abs(k.values(iw, iz));
      col = std::max(col, v);
      const double r = japanese_bracket(zs[static_cast<size_t>(iz)] - cw);
      if (r >= opts.offdiag_radius) fit.offdiag_mass = std::max(fit.offdiag_mass, v);
      if (r < opts.r_min || r >= opts.r_max) continue;
      const auto b = std::min(n_ann - 1, static_cast<size_t>((r - opts.r_min) / width));
      if (v > env[b]) {
        env[b] = v;
        env_r[b] = r;
      }
    }
    column_peak(iw) = col;
  }

  // Column growth: slope of ln(max column peak) against ln<w> over shells of <w>.
  {
    constexpr int shells = 8;
    VectorXd bw(nw);
    for (Index iw = 0; iw < nw; ++iw) bw(iw) = japanese_bracket(k.w_lattice.point(iw));
    const double lo = bw.minCoeff(), hi = bw.maxCoeff();
    std::vector<double> best(shells, 0.0), at(shells, 1.0);
    for (Index iw = 0; iw < nw; ++iw) {
      const int b = hi > lo ? std::min(shells - 1, static_cast<int>((bw(iw) - lo) / (hi - lo) * shells)) : 0;
      if (column_peak(iw) > best[static_cast<size_t>(b)]) {
        best[static_cast<size_t>(b)] = column_peak(iw);
        at[static_cast<size_t>(b)] = bw(iw);
      }
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    for (int b = 0; b < shells; ++b) {
      if (best[static_cast<size_t>(b)] <= 0.0) continue;
      const double x = std::log(at[static_cast<size_t>(b)]), y = std::log(best[static_cast<size_t>(b)]);
      sx += x, sy += y, sxx += x * x, sxy += x * y, n += 1;
    }
    const double den = n * sxx - sx * sx;
    fit.column_growth = n >= 2 && den > 1e-12 ? (n * sxy - sx * sy) / den : 0.0;
    fit.growth_flag = fit.column_growth > 0.5;
  }

  std::vector<double> lr, le;
  for (size_t b = 0; b < n_ann; ++b) {
    if (env[b] > opts.noise_floor * peak && env[b] > 0.0) {
      lr.push_back(std::log(env_r[b]));
      le.push_back(std::log(env[b]));
    }
  }
  fit.annuli_used = static_cast<int>(lr.size());
  if (lr.size() < 5) {
    throw UnderdeterminedFit(fmt::format("only {} annuli above the noise floor in [{}, {}]", lr.size(), opts.r_min,
                                         opts.r_max));
  }
  const auto m = static_cast<Index>(lr.size());
  MatrixXd A(m, 2);
  VectorXd y(m);
  for (Index i = 0; i < m; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = -lr[static_cast<size_t>(i)];
    y(i) = le[static_cast<size_t>(i)];
  }
  const VectorXd p = A.colPivHouseholderQr().solve(y);
  fit.C = std::exp(p(0));
  fit.s_fit = p(1);
  fit.residual = std::sqrt((A * p - y).squaredNorm() / static_cast<double>(m));
  for (size_t b = 0; b < n_ann; ++b) {
    if (env[b] > opts.noise_floor * peak && env[b] > 0.0) {
      fit.envelope.push_back({env_r[b], env[b], fit.C * std::pow(env_r[b], -fit.s_fit)});
    }
  }
  return fit;
}

DecayFit almost_diag_check(const std::string& symbol, const Window& g, const PhaseLattice& w_lattice,
                           const PhaseLattice& z_lattice, const DecayFitOptions& opts, std::size_t workers,
                           GaborMatrixSample* matrix_out) {
  const auto op = pseudodifferential_operator(symbol, g.grid().dim());
  auto k = compute_gabor_matrix(op, g, w_lattice, z_lattice, 0.0, workers);
  auto fit = fit_decay(k, identity_map(), "identity", opts);
  if (matrix_out) *matrix_out = std::move(k);
  return fit;
}

double bound_constant(const GaborMatrixSample& k, const FlowMap& map, double s, double noise_floor) {
  const auto zs = lattice_points(k.z_lattice);
  const auto images = mapped_points(k.w_lattice, map);
  const double cut = noise_floor * k.values.cwiseAbs().maxCoeff();
  double c = 0.0;
  for (Index iw = 0; iw < k.values.rows(); ++iw) {
    for (Index iz = 0; iz < k.values.cols(); ++iz) {
      const double v = std::abs(k.values(iw, iz));
      if (v <= cut) continue;
      const double r = japanese_bracket(zs[static_cast<size_t>(iz)] - images[static_cast<size_t>(iw)]);
      c = std::max(c, v * std::pow(r, s));
    }
  }
  return c;
}

GaborMatrixSample compose_matrices(const GaborMatrixSample& k1, const SignalOperator& op2, const Window& g,
                                   const PhaseLattice& z_lattice, std::size_t workers, Index block) {
  const PhaseLattice& u = k1.z_lattice;
  if (block < 1) block = 1;
  GaborMatrixSample out;
  out.t = k1.t;
  out.w_lattice = k1.w_lattice;
  out.z_lattice = z_lattice;
  out.window_id = g.id;
  out.descriptor = op2.descriptor + " o " + k1.descriptor;
  out.values = StftValues::Zero(k1.values.rows(), z_lattice.size());
  const double dA = u.cell_area();
  for (Index b0 = 0; b0 < u.size(); b0 += block) {
    const Index nb = std::min(block, u.size() - b0);
    StftValues rows(nb, z_lattice.size());
    parallel_for(static_cast<std::size_t>(nb), workers, [&](std::size_t i) {
      const auto r = static_cast<Index>(i);
      rows.row(r) = matrix_row(op2, g, u.point(b0 + r), z_lattice);
    });
    out.values.noalias() += (k1.values.middleCols(b0, nb) * rows) * dA;
  }
  return out;
}

namespace {

// int_{R^{2d}} <v>^{-s} dv = pi^d Gamma(s/2 - d) / Gamma(s/2), finite for s > 2d.
double bracket_integral(double s, int d) {
  if (s <= 2.0 * d) return std::numeric_limits<double>::infinity();
  return std::pow(kPi, d) * std::exp(std::lgamma(0.5 * s - d) - std::lgamma(0.5 * s));
}

}  // namespace

CompositionReport composition_bound_check(const GaborMatrixSample& k1, const FlowMap& chi1,
                                          const GaborMatrixSample& k2, const FlowMap& chi2,
                                          const GaborMatrixSample& composed, const LipschitzEstimate& lip,
                                          const DecayFitOptions& opts, const GaborMatrixSample* direct) {
  CompositionReport rep;
  const FlowMap chi = compose_maps(chi2, chi1);
  rep.composed = fit_decay(composed, chi, "chi2 o chi1", opts);
  const auto f1 = fit_decay(k1, chi1, "chi1", opts);
  const auto f2 = fit_decay(k2, chi2, "chi2", opts);
  const int d = k1.w_lattice.dim();
  rep.s_check = std::min({f1.s_fit, f2.s_fit, rep.composed.s_fit});
  rep.C1 = bound_constant(k1, chi1, rep.s_check, opts.noise_floor);
  rep.C2 = bound_constant(k2, chi2, rep.s_check, opts.noise_floor);
  rep.C_composed = bound_constant(composed, chi, rep.s_check, opts.noise_floor);
  const double s = rep.s_check;
  rep.C0 = (std::pow(2.0, s) + std::pow(2.0 * lip.L_forward, s)) * std::pow(lip.L_inverse, 2.0 * d) *
           bracket_integral(s, d);
  rep.bound_holds = std::isfinite(rep.C0) && rep.C_composed <= rep.C0 * rep.C1 * rep.C2;
  if (direct) {
    if (direct->values.rows() != composed.values.rows() || direct->values.cols() != composed.values.cols()) {
      throw GridMismatch("direct matrix lattices differ from the composition");
    }
    const double scale = direct->values.cwiseAbs().maxCoeff();
    rep.direct_error = (composed.values - direct->values).cwiseAbs().maxCoeff() / (scale > 0.0 ? scale : 1.0);
  }
  return rep;
}

}  // namespace tfprop

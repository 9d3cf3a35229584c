#ifndef TFPROP_HAMILTONIAN_HPP
#define TFPROP_HAMILTONIAN_HPP

#include "tfprop/expression.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>

namespace tfprop {

enum class SymbolClass { quadratic, separable, generic };

/// a(z) = 1/2 z^T Q z + <b, z> + c on stacked z = (x, xi).
struct QuadraticPart {
  MatrixXd Q;
  VectorXd b;
  double c = 0.0;
};

/// a(x, xi) = k(xi) + V(x).
struct SeparablePart {
  std::function<double(const VectorXd&)> k;  // of xi
  std::function<double(const VectorXd&)> V;  // of x
};

/// Real symbol a(z) on R^{2d} with first and second derivatives.
struct HamiltonianSymbol {
  std::string name;
  int d = 1;
  SymbolClass cls = SymbolClass::generic;
  std::function<double(const VectorXd&)> eval;
  std::function<VectorXd(const VectorXd&)> grad;
  std::function<MatrixXd(const VectorXd&)> hessian;
  std::optional<QuadraticPart> quadratic;
  std::optional<SeparablePart> separable;
  /// sup |d^alpha a| per order |alpha| in 2..4, exact for builtins or sampled.
  std::map<int, double> bound_constants;

  double operator()(const VectorXd& z) const { return eval(z); }
};

/// Builtins: "free_particle", "harmonic", "anharmonic" (param = epsilon, |epsilon| <= 1),
/// "kinetic_plus_potential" (potential = expression in x or x1..xd).
HamiltonianSymbol make_builtin(const std::string& name, int d = 1, double param = 0.0,
                               const std::string& potential = {});

/// Symbol from an expression in x/x1.. and xi/xi1.. (eta accepted as xi). Class generic.
HamiltonianSymbol symbol_from_expression(const std::string& text, int d = 1);

/// a(x, xi) = beta |2 pi xi|^2 + alpha |x|^2 + c when the symbol has that shape.
struct IsotropicOscillator {
  double alpha = 0.0;
  double beta = 0.0;
  double c = 0.0;
};
std::optional<IsotropicOscillator> as_isotropic_oscillator(const HamiltonianSymbol& a);

/// Separable view; throws ClassMismatch for generic symbols.
SeparablePart as_separable(const HamiltonianSymbol& a);

struct BoundsRegion {
  double half_width = 20.0;  // box [-h, h]^{2d}
  double step = 0.5;
};

struct BoundsReport {
  BoundsRegion region;
  int order_max = 4;
  std::map<int, double> sup;          // over the full box
  std::map<int, double> sup_inner;    // over the half-size box
  bool growth = false;                // some order grows by > 1.5x from inner to full box
  std::vector<int> growing_orders;
};

/// Central finite-difference estimates of sup |d^alpha a| for 2 <= |alpha| <= order_max.
BoundsReport check_bounds(const HamiltonianSymbol& a, const BoundsRegion& region = {}, int order_max = 4);

}  // namespace tfprop

#endif  // TFPROP_HAMILTONIAN_HPP

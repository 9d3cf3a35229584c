#ifndef TFPROP_CORE_HPP
#define TFPROP_CORE_HPP

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tfprop {

using Index = Eigen::Index;
using Complex = std::complex<double>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// A point z = (x, eta) of phase space R^{2d}, stored stacked as one 2d-vector.
template <typename Scalar>
class PhasePointT {
 public:
  PhasePointT() = default;
  explicit PhasePointT(VectorX<Scalar> stacked) : z_(std::move(stacked)) {
    if (z_.size() % 2 != 0) throw std::invalid_argument("phase point needs even length");
  }
  PhasePointT(const VectorX<Scalar>& x, const VectorX<Scalar>& eta) : z_(x.size() + eta.size()) {
    if (x.size() != eta.size()) throw std::invalid_argument("x and eta dimensions differ");
    z_ << x, eta;
  }

  Index dim() const { return z_.size() / 2; }
  auto x() const { return z_.head(dim()); }
  auto eta() const { return z_.tail(dim()); }
  auto x() { return z_.head(dim()); }
  auto eta() { return z_.tail(dim()); }
  const VectorX<Scalar>& stacked() const { return z_; }
  bool finite() const { return z_.allFinite(); }

 private:
  VectorX<Scalar> z_;
};

using PhasePoint = PhasePointT<double>;

/// Japanese bracket <z> = (1 + |z|^2)^{1/2}.
template <typename Derived>
typename Derived::Scalar japanese_bracket(const Eigen::MatrixBase<Derived>& z) {
  using std::sqrt;
  return sqrt(typename Derived::Scalar(1) + z.squaredNorm());
}

/// Standard symplectic form [[0, I], [-I, 0]] on R^{2d}.
template <typename Scalar = double>
MatrixX<Scalar> symplectic_form(Index d) {
  MatrixX<Scalar> s = MatrixX<Scalar>::Zero(2 * d, 2 * d);
  s.topRightCorner(d, d).setIdentity();
  s.bottomLeftCorner(d, d) = -MatrixX<Scalar>::Identity(d, d);
  return s;
}

/// ||J^T sigma J - sigma||_max for a 2d x 2d Jacobian.
template <typename Derived>
typename Derived::Scalar symplectic_defect(const Eigen::MatrixBase<Derived>& jac) {
  using Scalar = typename Derived::Scalar;
  const Index d = jac.rows() / 2;
  const MatrixX<Scalar> s = symplectic_form<Scalar>(d);
  return (jac.transpose() * s * jac - s).cwiseAbs().maxCoeff();
}

// Error hierarchy. Every numerical precondition failure maps to one of these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
struct SupportOverflow : Error { using Error::Error; };
struct GridMismatch : Error { using Error::Error; };
struct NyquistViolation : Error { using Error::Error; };
struct AssumptionViolation : Error { using Error::Error; };
struct FlowEscape : Error { using Error::Error; };
struct ClassMismatch : Error { using Error::Error; };
struct CausticError : Error { using Error::Error; };
struct TruncationError : Error { using Error::Error; };
struct UnderdeterminedFit : Error { using Error::Error; };
struct GeometryError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };

}  // namespace tfprop

#endif  // TFPROP_CORE_HPP

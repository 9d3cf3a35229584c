#ifndef TFPROP_HERMITE_HPP
#define TFPROP_HERMITE_HPP

#include "tfprop/core.hpp"

namespace tfprop {

/// Table T(i, n) = psi_n(s_i) of the L2-normalised Hermite functions, the
/// eigenfunctions of -d^2/ds^2 + s^2 with eigenvalue 2n + 1.
///
/// Uses the normalised three-term recurrence
///   psi_{n+1} = sqrt(2/(n+1)) s psi_n - sqrt(n/(n+1)) psi_{n-1}
/// on a scaled pair, renormalising every 8 steps into a running log-scale so
/// that neither the Gaussian factor nor the polynomial growth overflows.
MatrixXd hermite_function_table(const VectorXd& s, Index count);

/// psi_n at a single point.
double hermite_function(Index n, double s);

}  // namespace tfprop

#endif  // TFPROP_HERMITE_HPP

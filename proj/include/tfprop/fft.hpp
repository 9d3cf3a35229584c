#ifndef TFPROP_FFT_HPP
#define TFPROP_FFT_HPP

#include "tfprop/core.hpp"

namespace tfprop::fft {

/// Unscaled in-place DFT over a d-dimensional cube of side n stored row-major.
/// forward: sum_j v_j e^{-2 pi i jk/n}; inverse: e^{+2 pi i jk/n}, no 1/n.
void transform(Complex* data, Index n, int d, bool inverse);

inline void forward(VectorXcd& v, Index n, int d) { transform(v.data(), n, d, false); }
inline void inverse(VectorXcd& v, Index n, int d) { transform(v.data(), n, d, true); }

}  // namespace tfprop::fft

#endif  // TFPROP_FFT_HPP

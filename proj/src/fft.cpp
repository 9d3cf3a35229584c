#include "tfprop/fft.hpp"

#include <unsupported/Eigen/FFT>

#include <vector>

namespace tfprop::fft {

namespace {

struct Workspace {
  Eigen::FFT<double> engine;
  std::vector<Complex> in, out;
  Workspace() { engine.SetFlag(Eigen::FFT<double>::Unscaled); }
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

}  // namespace

void transform(Complex* data, Index n, int d, bool inverse) {
  auto& ws = workspace();
  ws.in.resize(static_cast<size_t>(n));
  ws.out.resize(static_cast<size_t>(n));
  Index total = 1;
  for (int a = 0; a < d; ++a) total *= n;

  for (int axis = 0; axis < d; ++axis) {
    Index stride = 1;
    for (int a = axis + 1; a < d; ++a) stride *= n;
    const Index block = stride * n;
    for (Index base = 0; base < total; base += block) {
      for (Index off = 0; off < stride; ++off) {
        Complex* line = data + base + off;
        for (Index j = 0; j < n; ++j) ws.in[static_cast<size_t>(j)] = line[j * stride];
        if (inverse) {
          ws.engine.inv(ws.out, ws.in);
        } else {
          ws.engine.fwd(ws.out, ws.in);
        }
        for (Index j = 0; j < n; ++j) line[j * stride] = ws.out[static_cast<size_t>(j)];
      }
    }
  }
}

}  // namespace tfprop::fft

#include "tfprop/hermite.hpp"

#include <cmath>

namespace tfprop {

MatrixXd hermite_function_table(const VectorXd& s, Index count) {
  MatrixXd table(s.size(), count);
  if (count == 0) return table;
  const double log_norm0 = -0.25 * std::log(kPi);
  for (Index i = 0; i < s.size(); ++i) {
    const double si = s(i);
    double log_scale = -0.5 * si * si + log_norm0;
    double prev = 0.0;
    double cur = 1.0;
    table(i, 0) = std::exp(log_scale);
    for (Index n = 0; n + 1 < count; ++n) {
      const double nd = static_cast<double>(n);
      const double next = std::sqrt(2.0 / (nd + 1.0)) * si * cur - std::sqrt(nd / (nd + 1.0)) * prev;
      prev = cur;
      cur = next;
      if ((n + 1) % 8 == 0) {
        const double m = std::max(std::abs(prev), std::abs(cur));
        if (m > 0.0) {
          prev /= m;
          cur /= m;
          log_scale += std::log(m);
        }
      }
      table(i, n + 1) = cur * std::exp(log_scale);
    }
  }
  return table;
}

double hermite_function(Index n, double s) {
  VectorXd p(1);
  p(0) = s;
  return hermite_function_table(p, n + 1)(0, n);
}

}  // namespace tfprop

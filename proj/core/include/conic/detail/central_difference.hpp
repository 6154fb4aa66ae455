#pragma once

#include <cmath>

namespace conic {

double central_difference(const auto& f, double r, double h, int k) {
  // sum_j (-1)^j C(k, j) f(r + (k/2 - j) h) / h^k
  double acc = 0.0;
  double binom = 1.0;
  for (int j = 0; j <= k; ++j) {
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    acc += sign * binom * f(r + (0.5 * k - j) * h);
    binom = binom * (k - j) / (j + 1);
  }
  return acc / std::pow(h, k);
}

}  // namespace conic

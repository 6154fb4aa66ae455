#pragma once

// Least-squares helpers: straight lines in log-log space and the tail model
// S(x) = S_inf + c x^{-beta} fitted by variable projection over beta.

#include <vector>

namespace conic {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// slope of log|y| against log x, skipping non-positive entries
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct TailFit {
  double limit = 0.0;
  double amplitude = 0.0;
  double beta = 0.0;    // NaN when the samples carry no decaying part
  double rms = 0.0;     // residual of the 3-parameter fit
  double error = 0.0;   // spread of the limit under dropping the first sample
  bool monotone = true; // successive differences keep one sign
  bool fallback = false;
};

struct TailFitOptions {
  double beta_min = 0.05;
  double beta_max = 4.0;
  double fallback_beta = 0.5;  // Richardson exponent when the free fit is degenerate
  double flat_tolerance = 1e-13;
};

// x are positive abscissae (|t|), increasing; y the sampled values.
TailFit fit_power_tail(const std::vector<double>& x, const std::vector<double>& y, const TailFitOptions& opt = {});

// Two-point Richardson extrapolation assuming y = L + c x^{-beta}.
double richardson(double x1, double y1, double x2, double y2, double beta);

}  // namespace conic

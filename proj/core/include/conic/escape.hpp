#pragma once

// Escape function phi = chi1 chi2 chi3 chi4 along the reference trajectory
// (r(t), theta(t), rho(t), omega(t)) = exp((t + T0) H_p)(x0, xi0), t <= 0:
//
//   chi1 = chi(|r - r(t)| / (5 delta0 |t + T0|))
//   chi2 = chi(|theta - theta(t)| / (delta0 - C |t + T0|^{-mu}))
//   chi3 = chi(|rho - rho(t)| / (delta0 - C |t + T0|^{-mu-1}))
//   chi4 = chi(|omega - omega(t)| / (delta0 - C |t + T0|^{-mu}))
//
// with chi = 1 on [0, 1], 0 on [2, inf) and chi' <= 0.

#include <array>
#include <cstdint>
#include <vector>

#include "conic/geometry.hpp"
#include "conic/ode.hpp"

namespace conic {

struct EscapeParams {
  double delta_prime = 0.1;
  double delta0 = 0.075;   // in (delta_prime / 2, delta_prime)
  double C = 50.0;
  double T0 = 0.0;         // 0: -(2 C / delta_prime)^{1/mu}
  double t_min = -1e6;     // phi is available on [t_min, 0]
  double tol = 1e-10;
};

// chi(tau): 1 for tau <= 1, 0 for tau >= 2, C^inf and nonincreasing.
double escape_chi(double tau);

class EscapeFunction {
 public:
  EscapeFunction(const ScatteringMetric& g, const PhasePoint& start, const EscapeParams& params);

  const EscapeParams& params() const { return params_; }
  double T0() const { return params_.T0; }
  double mu() const { return mu_; }

  PhasePoint reference(double t) const;

  // Denominators of chi1..chi4 at time t.
  std::array<double, 4> scales(double t) const;

  double phi(double t, const PhasePoint& z) const;

  // (phi(t + h, z + h X) - phi(t - h, z - h X)) / 2h with X the Hamilton field of p.
  double lagrange(double t, const PhasePoint& z, double h = 1e-3) const;

 private:
  const ScatteringMetric* g_;
  EscapeParams params_;
  double mu_;
  std::vector<DenseStep> steps_;  // time-decreasing in s = t + T0
};

double escape_phi(const EscapeFunction& ef, double t, const PhasePoint& z);
double escape_phi_lagrange(const EscapeFunction& ef, double t, const PhasePoint& z);

struct EscapeSweepReport {
  std::size_t samples = 0;
  double phi_min = 0.0;
  double phi_max = 0.0;
  double lagrange_max = 0.0;       // max sampled D phi / Dt
  double lagrange_min = 0.0;
  double trajectory_phi_min = 1.0; // min phi on the reference trajectory
  double trajectory_lagrange_max = 0.0;
  std::size_t in_shell = 0;        // samples with 0 < phi < 1
};

// Random points around the reference trajectory: t uniform on [t_min, 0] and
// offsets up to 2.5 windows in each coordinate; one sample in 16 sits on
// the trajectory.
EscapeSweepReport escape_sweep(const EscapeFunction& ef, std::size_t n, std::uint64_t seed);

}  // namespace conic

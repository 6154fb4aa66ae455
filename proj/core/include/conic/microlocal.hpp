#pragma once

// Weyl quantization on polar grids and ladder tests for WF, FS and WF^rh.
//
// All operators act on the tensor grid of a WaveFunction. The sandwiched
// operator g^{-1/4} psi a^w psi g^{1/4} is applied to the half-density, so
// its H-norm is the flat l2 norm of psi a^w psi w.

#include <array>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "conic/geometry.hpp"
#include "conic/quantum.hpp"

namespace conic {

// C^inf bump exp(-s x^2 / (1 - x^2)) on (-1, 1), value 1 at 0. Larger s
// concentrates it near 0 and speeds up the decay of its Fourier transform
// until it meets the exp(-s) floor set by the compact support.
double bump(double x, double sharpness = 1.0);

// C^inf monotone step: 0 for x <= 0, 1 for x >= 1.
double smooth_step(double x);

// Normalised integral of bump(., sharpness) over [-1, 2x - 1]; a monotone
// C^inf step from 0 (x <= 0) to 1 (x >= 1).
double bump_step(double x, double sharpness);

inline constexpr double kDefaultSharpness = 8.0;

// Tensor bump a = b(dr/w_r) b(dtheta/w_theta) b(drho/w_rho) b(domega/w_omega).
// An infinite width makes a constant (= 1) in that coordinate.
struct SymbolCutoff {
  PhasePoint center;
  std::array<double, 4> widths{0.5, 0.5, 0.25, 0.25};
  double sharpness = kDefaultSharpness;

  double value(const PhasePoint& z) const;
  bool position_only() const;
};

enum class Quantization {
  Standard,             // a(r, theta, eps rho, eps omega)
  RadiallyHomogeneous,  // a(eps r, theta, eps rho, eps omega)
};

std::string to_string(Quantization q);

// Weyl quantization of a on the samples of u, flat dr dtheta measure.
// Throws ResolutionError if a momentum window is not resolved with 8 points
// per oscillation or the position support leaves the grid.
WaveFunction weyl_apply(const SymbolCutoff& a, double eps, const WaveFunction& u, Quantization q);

// psi = 1 on the position support of a, tapering to 0 over margin * width
// with a bump_step profile. psi ignores r for the radially homogeneous scaling.
struct PositionWindow {
  double margin = 1.0;
  double sharpness = kDefaultSharpness;

  double value(const SymbolCutoff& a, Quantization q, double r, double theta) const;
};

// g^{-1/4} psi a^w psi g^{1/4} u in the space of u.
WaveFunction sandwich(const SymbolCutoff& a, double eps, const WaveFunction& u, Quantization q,
                      const PositionWindow& psi, const ScatteringMetric& g);

enum class Decision { Absent, Present, Marginal };

std::string to_string(Decision d);

struct LadderPoint {
  double eps = 0.0;
  double norm = 0.0;
};

struct TestConfig {
  double eps0 = 1.0 / 16.0;
  int levels = 5;  // eps_k = eps0 2^{-k}, k < levels
  std::array<double, 4> widths{0.5, 0.5, 0.25, 0.25};
  double sharpness = kDefaultSharpness;  // of the symbol bumps
  PositionWindow window;
  double threshold = 4.0;       // absent iff exponent >= threshold
  double marginal_low = 3.0;    // [marginal_low, threshold) is marginal
  double floor = 1e-12;         // relative to the norm of the tested state
  double monotone_slack = 0.25; // log-ratio ripple tolerated against the trend

  std::vector<double> ladder() const;
};

struct WFVerdict {
  PhasePoint point;
  Quantization scaling = Quantization::Standard;
  std::vector<LadderPoint> ladder;
  double exponent = 0.0;
  Decision decision = Decision::Marginal;
  double threshold = 4.0;
  double marginal_low = 3.0;
  bool monotone = true;
  bool floor_hit = false;
  std::string diagnostic;
  std::array<double, 4> widths{};
  double sharpness = kDefaultSharpness;
  double window_margin = 1.0;
};

// Fits log norm against log eps and applies the thresholds. Norms below
// floor_abs are raised to floor_abs and the fit stops at the first of them,
// so the exponent is then a lower bound.
WFVerdict decide(const std::vector<LadderPoint>& ladder, const TestConfig& cfg, double floor_abs);

using StateFamily = std::function<WaveFunction(double eps)>;

// Frequency set test of an eps-indexed family with ||u(eps)|| <= 1.
WFVerdict fs_test(const StateFamily& family, const PhasePoint& point, const TestConfig& cfg,
                  const ScatteringMetric& g);

// Wave front set test of a fixed state.
WFVerdict wf_test(const WaveFunction& u, const PhasePoint& point, const TestConfig& cfg, const ScatteringMetric& g);

// Radially homogeneous wave front set test; needs r_max >= (r + w_r) / eps_min.
WFVerdict wf_rh_test(const WaveFunction& u, const PhasePoint& point, const TestConfig& cfg,
                     const ScatteringMetric& g);

}  // namespace conic

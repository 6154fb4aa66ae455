#pragma once

// Scattering metrics of short-range type on the end chart (1, inf) x S^1.
//
// In polar coordinates the metric is
//
//   g = (1 + m0) dr^2 + 2 r m1 dr dtheta + r^2 (h(theta) + m2) dtheta^2,
//
// with m_l = O(r^{-mu_l}). The kinetic symbol is p = g^{jk} xi_j xi_k in the
// cotangent coordinates (rho, omega) conjugate to (r, theta).

#include <Eigen/Dense>

#include <array>
#include <map>
#include <string>
#include <vector>

#include "conic/jet.hpp"

namespace conic {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Point of T*M_infinity in polar coordinates. theta is kept unwrapped.
struct PhasePoint {
  double r = 2.0;
  double theta = 0.0;
  double rho = 0.0;
  double omega = 0.0;
};

using ParamTable = std::map<std::string, double>;

// phi(theta) = offset + amplitude * cos(harmonic * theta - phase)
struct AngularProfile {
  double offset = 1.0;
  double amplitude = 0.0;
  int harmonic = 1;
  double phase = 0.0;

  Jet eval(const Jet& theta) const;
  double operator()(double theta) const;
  bool is_constant() const { return amplitude == 0.0; }
};

enum class RadialShape {
  Power,        // r^{-exponent}
  PowerSinLog,  // r^{-exponent} sin(log r)
  Ring,         // exp(-(r - center)^2 / (2 width^2))
};

struct RadialProfile {
  RadialShape shape = RadialShape::Power;
  double exponent = 1.0;
  double center = 0.0;
  double width = 1.0;

  Jet eval(const Jet& r) const;
};

struct BoundaryMetric {
  AngularProfile shape;  // h(theta); n = 2 so h is a scalar

  Jet h_jet(double theta) const { return shape.eval(Jet::theta_var(theta)); }
  double h(double theta) const { return shape(theta); }
  double h_det(double theta) const { return h(theta); }
};

// One of the m0 (order 0), m1 (order 1) or m2 (order 2) components.
struct PerturbationTerm {
  int order = 0;
  double amplitude = 0.0;
  RadialProfile radial;
  AngularProfile angular;
  double decay_mu = 1.5;

  Jet jet(double r, double theta) const;
  double value(double r, double theta) const { return jet(r, theta).v; }
};

// V = amplitude * r^{2 - mu3} * chi(theta)
struct Potential {
  double amplitude = 0.0;
  double decay_mu3 = 2.5;
  AngularProfile angular;

  Jet jet(double r, double theta) const;
  double value(double r, double theta) const;
  bool is_zero() const { return amplitude == 0.0; }
};

// Contravariant metric coefficients g^{rr}, g^{r theta}, g^{theta theta}.
struct InverseMetricJet {
  Jet grr;
  Jet grt;
  Jet gtt;
};

// Deviation of the inverse metric from the conic one:
// p = rho^2 + omega^2/(r^2 h) + a0 rho^2 + a1 rho omega / r + a2 omega^2 / r^2.
struct SymbolCoeffs {
  double a0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
};

// p with its gradient and Hessian in (r, theta, rho, omega).
struct SymbolDerivatives {
  double p = 0.0;
  Eigen::Vector4d grad = Eigen::Vector4d::Zero();
  Eigen::Matrix4d hess = Eigen::Matrix4d::Zero();
};

class ScatteringMetric {
 public:
  ScatteringMetric() = default;
  ScatteringMetric(std::string name, BoundaryMetric boundary, double r_conic,
                   std::vector<PerturbationTerm> perturbations, double mu);

  const std::string& name() const { return name_; }
  const BoundaryMetric& boundary() const { return boundary_; }
  double r_conic() const { return r_conic_; }
  double mu() const { return mu_; }
  const std::vector<PerturbationTerm>& perturbations() const { return perturbations_; }

  // True when no coefficient depends on theta.
  bool is_rotationally_symmetric() const;

  // Sum of all terms of the given order, with derivatives.
  Jet perturbation_jet(int order, double r, double theta) const;

  Eigen::Matrix2d metric_matrix(double r, double theta) const;
  InverseMetricJet inverse_jet(double r, double theta) const;
  SymbolCoeffs inverse_symbol_coeffs(double r, double theta) const;

  double symbol_p(const PhasePoint& z) const;
  SymbolDerivatives symbol_derivatives(const PhasePoint& z) const;

  // sqrt(det g_jk); the Riemannian density in chart coordinates.
  double sqrt_det(double r, double theta) const;

 private:
  void check_domain(double r) const;

  std::string name_ = "flat";
  BoundaryMetric boundary_;
  double r_conic_ = 1.0;
  std::vector<PerturbationTerm> perturbations_;
  double mu_ = 0.5;
};

// Scattering metric plus the potential entering the quantum Hamiltonian.
struct Model {
  ScatteringMetric metric;
  Potential potential;
};

struct ZooEntry {
  std::string name;
  std::string description;
  ParamTable defaults;
};

const std::vector<ZooEntry>& builtin_metrics();

// Throws ConfigError on an unknown name or parameter.
Model make_builtin_model(const std::string& name, const ParamTable& params = {});

// Amplitude of the radial ring that places a stable circular geodesic at
// r_star, from d/dr [r^2 (1 + eps B(r))] = 0.
double trap_ring_amplitude(double r_star, double ring_center, double ring_width);

struct DecaySlope {
  int k = 0;
  double slope = 0.0;
  double expected = 0.0;
  bool flagged = false;
};

struct DecayReport {
  double decay_mu = 0.0;
  std::vector<DecaySlope> slopes;
  bool passed() const;
};

// Samples of the validation grid: radii (r >= R_check) times angles.
struct DecayGrid {
  std::vector<double> radii;
  std::vector<double> angles;

  // Geometric radii on [r_lo, r_hi], uniform angles on [0, 2 pi).
  static DecayGrid standard(double r_lo = 10.0, double r_hi = 1000.0, int n_r = 25, int n_theta = 16);
};

// Fits log sup_theta |d^k m / dr^k| against log r for k = 0..k_max using
// central differences with step r/100 and flags slopes above -mu - k + 0.1.
DecayReport validate_decay(const PerturbationTerm& term, int k_max, const DecayGrid& grid);

// k-th central difference of f at r with step h.
double central_difference(const auto& f, double r, double h, int k);

}  // namespace conic

#include "conic/detail/central_difference.hpp"

#pragma once

// Propagator for i u_t = (-Delta_g + V) u on a truncated end [r0, r_max] x S^1.
//
// The state is evolved as the half-density w = g^{1/4} u, for which
// H = M Q M + V with M = g^{-1/4} and Q = sum_jk D_j^T (sqrt(g) g^{jk}) D_k
// is symmetric in the flat l2 product.

#include <vector>

#include "conic/geometry.hpp"
#include "conic/quantum.hpp"

namespace conic {

enum class Scheme {
  CrankNicolson,  // per angular mode, 3-point radial differences, Dirichlet ends
  Spectral,       // Fourier differences in r and theta, Chebyshev exponential
};

// W(r) = strength ((depth into the layer) / width)^power in layers of
// width_fraction (r_max - r0) at both radial ends; off when strength = 0.
struct AbsorbingLayer {
  double width_fraction = 0.1;
  double strength = 0.0;
  int power = 2;
};

struct EvolutionConfig {
  double dt = 1e-2;
  double t_total = 0.0;  // signed; negative evolves backwards
  Scheme scheme = Scheme::Spectral;
  AbsorbingLayer absorber;
  double series_tol = 1e-14;  // Chebyshev truncation, relative
  double phase_budget = 1e-2;  // Crank-Nicolson phase error allowance over t_total
};

struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;  // off[i] couples i and i+1
};

class CurvedPropagator {
 public:
  // seam_fraction > 0 (spectral scheme): in the outer seam_fraction of
  // [r0, r_max] at each end the coefficients are blended to values shared by
  // both ends. Periodic differences across r0 ~ r_max otherwise create
  // spurious modes that inflate the spectral interval. The blended zones
  // carry no physics and belong inside an absorbing layer.
  CurvedPropagator(const ScatteringMetric& g, const Potential& V, const PolarGrid& grid, Scheme scheme,
                   double seam_fraction = 0.0);
  ~CurvedPropagator();
  CurvedPropagator(const CurvedPropagator&) = delete;
  CurvedPropagator& operator=(const CurvedPropagator&) = delete;

  const PolarGrid& grid() const { return grid_; }
  // enclosing interval of the spectrum used by the spectral scheme
  double lambda_min() const { return lambda_min_; }
  double lambda_max() const { return lambda_max_; }
  Scheme scheme() const { return scheme_; }

  // e^{-i t_total H} u; u must live on grid().
  WaveFunction evolve(const WaveFunction& u, const EvolutionConfig& cfg) const;

  // H acting on a half-density (flat l2 representation).
  void apply(const std::vector<cplx>& w, std::vector<cplx>& out) const;

  // Radial matrix of angular mode m (Crank-Nicolson scheme only).
  Tridiagonal radial_matrix(int mode) const;

  // Largest admissible Crank-Nicolson step for the state u.
  double crank_nicolson_budget(const WaveFunction& u, const EvolutionConfig& cfg) const;

  std::vector<double> absorber_profile(const AbsorbingLayer& layer) const;

 private:
  void evolve_cn(std::vector<cplx>& w, const EvolutionConfig& cfg) const;
  void evolve_spectral(std::vector<cplx>& w, const EvolutionConfig& cfg) const;
  void blend_seam(double fraction);
  void spectral_bounds();
  void chebyshev_exp(std::vector<cplx>& w, double dt, const EvolutionConfig& cfg) const;

  ScatteringMetric g_;
  Potential V_;
  PolarGrid grid_;
  Scheme scheme_;
  GridFft fft_;

  // node data
  std::vector<double> m_, v_, arr_, art_, att_;
  std::vector<double> kr_, kt_;
  // Crank-Nicolson half-point coefficients
  std::vector<double> a_half_, gtt_node_;
  double lambda_min_ = 0.0, lambda_max_ = 0.0;
};

// J_0(x) .. J_n(x) for x >= 0 by backward recurrence, normalised with
// J_0 + 2 sum J_2k = 1.
std::vector<double> bessel_j_sequence(double x, int n);

// Convenience wrapper building a propagator for one evolution.
WaveFunction curved_evolve(const WaveFunction& u, const ScatteringMetric& g, const Potential& V,
                           const EvolutionConfig& cfg);

}  // namespace conic

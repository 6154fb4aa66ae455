#pragma once

// Grid states on M_free = R x S^1 and on the end M_infinity, the free
// evolution e^{-itH0} with H0 = -d^2/dr^2, and the identification operator
// (J u)(r, theta) = j(r) g^{-1/4} h^{1/4} u(r, theta).

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "conic/fft.hpp"
#include "conic/geometry.hpp"

namespace conic {

// Uniform tensor grid r_i = r0 + i dr (i < nr), theta_j = 2 pi j / ntheta.
struct PolarGrid {
  double r0 = 0.0;
  double dr = 0.05;
  int nr = 0;
  int ntheta = 1;

  double r(int i) const { return r0 + i * dr; }
  double theta(int j) const { return kTwoPi * j / ntheta; }
  double dtheta() const { return kTwoPi / ntheta; }
  double r_max() const { return r(nr - 1); }
  std::size_t size() const { return static_cast<std::size_t>(nr) * static_cast<std::size_t>(ntheta); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * ntheta + j; }

  // Smallest grid with nodes on r0 + k dr that covers [r_lo, r_hi].
  static PolarGrid covering(double r_lo, double r_hi, double dr, int ntheta);
};

enum class Space { Free, Curved };

struct WaveFunction {
  Space space = Space::Free;
  PolarGrid grid;
  std::vector<cplx> data;

  WaveFunction() = default;
  WaveFunction(Space s, const PolarGrid& g) : space(s), grid(g), data(g.size()) {}

  cplx& at(int i, int j) { return data[grid.index(i, j)]; }
  const cplx& at(int i, int j) const { return data[grid.index(i, j)]; }
};

// Quadrature weights: sqrt(h) dr dtheta on M_free, sqrt(g) dr dtheta on M.
std::vector<double> quadrature_weights(const WaveFunction& u, const ScatteringMetric& g);

// (u, v) = sum u conj(v) w with the weights of u's space.
cplx inner(const WaveFunction& u, const WaveFunction& v, const ScatteringMetric& g);
double norm(const WaveFunction& u, const ScatteringMetric& g);

// Plain l2 norm with dr dtheta weights, i.e. of a half-density.
double flat_norm(const WaveFunction& u);

// e^{-itH0} by the radial Fourier multiplier e^{-itk^2} (periodic in r).
WaveFunction free_evolve(const WaveFunction& u, double t);

// Smooth step: 0 for r <= 3/2, 1 for r >= 2.
double cutoff_j(double r);

// J: free -> curved on target_grid; target nodes must be free nodes.
WaveFunction J_embed(const WaveFunction& u, const ScatteringMetric& g, const PolarGrid& target_grid);
// J*: curved -> free on target_grid; curved nodes must be target nodes.
WaveFunction J_adjoint(const WaveFunction& v, const ScatteringMetric& g, const PolarGrid& target_grid);

// Half-density g^{1/4} u (curved) or h^{1/4} u (free) and its inverse.
WaveFunction to_half_density(const WaveFunction& u, const ScatteringMetric& g);
WaveFunction from_half_density(const WaveFunction& w, Space space, const ScatteringMetric& g);

// Gaussian wave packet with phase-space centre (r, theta, rho, omega) at
// semiclassical scale eps: |.|^2 has variance eps/2 in r and theta and the
// momenta are rho/eps, omega/eps. Unit norm in the space's inner product.
WaveFunction make_coherent_state(const PhasePoint& center, double eps, const PolarGrid& grid, Space space,
                                 const ScatteringMetric& g);

struct Moments {
  double r = 0.0;
  double theta = 0.0;  // circular mean
  double rho = 0.0;    // semiclassical momenta, eps * <D>
  double omega = 0.0;
  double mass = 0.0;
};

// Position and momentum expectations of the half-density of u.
Moments moments(const WaveFunction& u, const ScatteringMetric& g, double eps);

// Snapshot: header lines '# key=value' then rows 'r,mode,re,im' with the
// angular Fourier coefficients (1/ntheta) sum_j u(r, theta_j) e^{-i m theta_j}.
void write_snapshot_csv(std::ostream& os, const WaveFunction& u);
WaveFunction read_snapshot_csv(std::istream& is);
void write_snapshot_binary(std::ostream& os, const WaveFunction& u);
WaveFunction read_snapshot_binary(std::istream& is);

std::string to_string(Space s);

}  // namespace conic

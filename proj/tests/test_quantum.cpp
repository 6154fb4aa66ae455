#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "conic/errors.hpp"
#include "conic/fft.hpp"
#include "conic/quantum.hpp"
#include "oracles.hpp"

using namespace conic;

TEST(Fft, RoundTripScalesByLength) {
  GridFft f(8, 4);
  std::vector<cplx> a(32), b;
  for (int i = 0; i < 32; ++i) a[i] = cplx(std::sin(i), std::cos(3 * i));
  b = a;
  f.forward_r(b.data());
  f.backward_r(b.data());
  f.forward_theta(b.data());
  f.backward_theta(b.data());
  for (int i = 0; i < 32; ++i) EXPECT_NEAR(std::abs(b[i] - 32.0 * a[i]), 0.0, 1e-12);
}

TEST(Fft, Wavenumbers) {
  EXPECT_DOUBLE_EQ(fft_wavenumber(1, 8, 0.5), kTwoPi / 4.0);
  EXPECT_DOUBLE_EQ(fft_wavenumber(7, 8, 0.5), -kTwoPi / 4.0);
  EXPECT_DOUBLE_EQ(fft_wavenumber(0, 8, 0.5), 0.0);
}

TEST(Quantum, CoveringGrid) {
  const PolarGrid g = PolarGrid::covering(2.0, 3.0, 0.25, 4);
  EXPECT_LE(g.r(0), 2.0);
  EXPECT_GE(g.r_max(), 3.0);
  EXPECT_NEAR(std::remainder(g.r(0), 0.25), 0.0, 1e-12);
}

TEST(Quantum, FreeGaussianMatchesClosedForm) {
  PolarGrid g{-40.0, 0.05, 2048, 1};
  WaveFunction u(Space::Free, g);
  for (int i = 0; i < g.nr; ++i) u.at(i, 0) = oracle::free_gaussian(g.r(i), 1.0, 0.5, 2.0, 0.0);
  const WaveFunction v = free_evolve(u, 1.5);
  double worst = 0.0;
  for (int i = 0; i < g.nr; ++i)
    worst = std::max(worst, std::abs(v.at(i, 0) - oracle::free_gaussian(g.r(i), 1.0, 0.5, 2.0, 1.5)));
  EXPECT_LT(worst, 1e-10);
}

TEST(Quantum, FreeEvolutionIsUnitaryAndReversible) {
  const Model m = make_builtin_model("flat");
  const PolarGrid g = PolarGrid::covering(-10.0, 10.0, 0.05, 8);
  WaveFunction u(Space::Free, g);
  for (int i = 0; i < g.nr; ++i)
    for (int j = 0; j < g.ntheta; ++j) u.at(i, j) = std::exp(-g.r(i) * g.r(i)) * cplx(1.0 + std::cos(g.theta(j)), j);
  const WaveFunction v = free_evolve(free_evolve(u, 0.7), -0.7);
  EXPECT_NEAR(norm(free_evolve(u, 0.7), m.metric), norm(u, m.metric), 1e-12);
  for (std::size_t k = 0; k < u.data.size(); ++k) EXPECT_NEAR(std::abs(v.data[k] - u.data[k]), 0.0, 1e-12);
}

TEST(Quantum, CutoffJ) {
  EXPECT_EQ(cutoff_j(1.2), 0.0);
  EXPECT_EQ(cutoff_j(1.5), 0.0);
  EXPECT_EQ(cutoff_j(2.0), 1.0);
  EXPECT_EQ(cutoff_j(7.0), 1.0);
  double prev = 0.0;
  for (double r = 1.5; r <= 2.0; r += 0.01) {
    EXPECT_GE(cutoff_j(r), prev - 1e-15);
    prev = cutoff_j(r);
  }
}

TEST(Quantum, JAdjointPairing) {
  const Model m = make_builtin_model("composite");
  const PolarGrid free_grid{1.0, 0.02, 600, 16};
  const PolarGrid curved_grid{1.2, 0.02, 500, 16};
  WaveFunction u(Space::Free, free_grid), v(Space::Curved, curved_grid);
  for (int i = 0; i < free_grid.nr; ++i)
    for (int j = 0; j < 16; ++j) u.at(i, j) = cplx(std::sin(0.3 * i + j), std::cos(0.1 * i * j));
  for (int i = 0; i < curved_grid.nr; ++i)
    for (int j = 0; j < 16; ++j) v.at(i, j) = cplx(std::cos(0.2 * i - j), 0.5);
  const cplx lhs = inner(J_embed(u, m.metric, curved_grid), v, m.metric);
  const cplx rhs = inner(u, J_adjoint(v, m.metric, free_grid), m.metric);
  EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-10 * std::abs(lhs));
}

TEST(Quantum, JRejectsMisalignedGrids) {
  const Model m = make_builtin_model("flat");
  const WaveFunction u(Space::Free, PolarGrid{1.0, 0.02, 100, 4});
  EXPECT_THROW(J_embed(u, m.metric, PolarGrid{1.01, 0.02, 50, 4}), ResamplingError);
}

TEST(Quantum, HalfDensityRoundTrip) {
  const Model m = make_builtin_model("bump");
  WaveFunction u(Space::Curved, PolarGrid{2.0, 0.1, 30, 8});
  for (std::size_t k = 0; k < u.data.size(); ++k) u.data[k] = cplx(k, 1.0);
  const WaveFunction w = to_half_density(u, m.metric);
  EXPECT_NEAR(flat_norm(w), norm(u, m.metric), 1e-12 * norm(u, m.metric));
  const WaveFunction back = from_half_density(w, Space::Curved, m.metric);
  for (std::size_t k = 0; k < u.data.size(); ++k) EXPECT_NEAR(std::abs(back.data[k] - u.data[k]), 0.0, 1e-12 * k + 1e-12);
}

TEST(Quantum, CoherentStateMoments) {
  const Model m = make_builtin_model("bump");
  const double eps = 1.0 / 64.0;
  const PhasePoint c{6.0, 1.0, -0.5, 0.75};
  const WaveFunction u = make_coherent_state(c, eps, PolarGrid::covering(4.0, 8.0, 0.01, 512), Space::Curved, m.metric);
  EXPECT_NEAR(norm(u, m.metric), 1.0, 1e-10);
  const Moments mo = moments(u, m.metric, eps);
  EXPECT_NEAR(mo.r, c.r, 0.01);
  EXPECT_NEAR(mo.theta, c.theta, 0.01);
  EXPECT_NEAR(mo.rho, c.rho, 0.01);
  EXPECT_NEAR(mo.omega, c.omega, 0.01);
}

TEST(Quantum, SnapshotRoundTrips) {
  WaveFunction u(Space::Curved, PolarGrid{2.0, 0.125, 10, 4});
  for (std::size_t k = 0; k < u.data.size(); ++k) u.data[k] = cplx(0.1 * k, -0.3 * k * k);
  std::stringstream csv, bin;
  write_snapshot_csv(csv, u);
  write_snapshot_binary(bin, u);
  const WaveFunction a = read_snapshot_csv(csv), b = read_snapshot_binary(bin);
  EXPECT_EQ(a.space, Space::Curved);
  EXPECT_EQ(a.grid.nr, 10);
  EXPECT_EQ(b.grid.ntheta, 4);
  for (std::size_t k = 0; k < u.data.size(); ++k) {
    EXPECT_NEAR(std::abs(a.data[k] - u.data[k]), 0.0, 1e-12 * (1.0 + std::abs(u.data[k])));
    EXPECT_EQ(b.data[k], u.data[k]);
  }
}

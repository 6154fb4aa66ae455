#include <gtest/gtest.h>

#include <cmath>

#include "conic/errors.hpp"
#include "conic/propagator.hpp"
#include "oracles.hpp"

using namespace conic;

namespace {

WaveFunction packet(const PolarGrid& g, double r0, double k0) {
  WaveFunction u(Space::Curved, g);
  for (int i = 0; i < g.nr; ++i)
    for (int j = 0; j < g.ntheta; ++j)
      u.at(i, j) = std::exp(-(g.r(i) - r0) * (g.r(i) - r0) + cplx(0.0, k0 * g.r(i))) * (1.0 + 0.5 * std::cos(g.theta(j)));
  return u;
}

}  // namespace

TEST(Bessel, SequenceMatchesSeries) {
  for (double x : {0.0, 0.3, 2.5, 9.0, 17.0}) {
    const std::vector<double> j = bessel_j_sequence(x, 30);
    // the alternating series loses about exp(x) / 1e16 to cancellation
    const double tol = 1e-13 + 1e-16 * std::exp(x);
    for (int n = 0; n <= 30; ++n) EXPECT_NEAR(j[n], oracle::bessel_series(n, x), tol) << "n=" << n << " x=" << x;
  }
}

TEST(Bessel, LargeArgumentIdentity) {
  const double x = 400.0;
  const std::vector<double> j = bessel_j_sequence(x, 600);
  double s = j[0] * j[0];
  for (int n = 1; n <= 600; ++n) s += 2.0 * j[n] * j[n];
  EXPECT_NEAR(s, 1.0, 1e-12);
  // J_1 from the recurrence 2 J_1 / x = J_0 + J_2
  EXPECT_NEAR(2.0 * j[1] / x, j[0] + j[2], 1e-13);
}

TEST(Propagator, ApplyIsSymmetric) {
  const Model m = make_builtin_model("composite");
  const PolarGrid g{2.0, 0.05, 128, 16};
  const CurvedPropagator P(m.metric, m.potential, g, Scheme::Spectral, 0.05);
  const WaveFunction a = packet(g, 4.0, 1.0), b = packet(g, 5.0, -2.0);
  std::vector<cplx> ha, hb;
  P.apply(a.data, ha);
  P.apply(b.data, hb);
  cplx l = 0, r = 0;
  for (std::size_t k = 0; k < a.data.size(); ++k) {
    l += ha[k] * std::conj(b.data[k]);
    r += a.data[k] * std::conj(hb[k]);
  }
  EXPECT_NEAR(std::abs(l - r), 0.0, 1e-10 * std::abs(l));
}

TEST(Propagator, SpectralEvolutionIsUnitaryAndComposes) {
  const Model m = make_builtin_model("bump");
  const PolarGrid g{2.0, 0.05, 256, 16};
  const CurvedPropagator P(m.metric, m.potential, g, Scheme::Spectral, 0.05);
  const WaveFunction u = to_half_density(packet(g, 8.0, 2.0), m.metric);
  EvolutionConfig one;
  one.t_total = 0.4;
  one.dt = 0.4;
  EvolutionConfig two = one;
  two.dt = 0.1;
  const WaveFunction a = P.evolve(from_half_density(u, Space::Curved, m.metric), one);
  const WaveFunction b = P.evolve(from_half_density(u, Space::Curved, m.metric), two);
  EXPECT_NEAR(norm(a, m.metric), norm(from_half_density(u, Space::Curved, m.metric), m.metric), 1e-10);
  double d = 0.0;
  for (std::size_t k = 0; k < a.data.size(); ++k) d = std::max(d, std::abs(a.data[k] - b.data[k]));
  EXPECT_LT(d, 1e-10);
  one.t_total = -0.4;
  const WaveFunction back = P.evolve(a, one);
  const WaveFunction orig = from_half_density(u, Space::Curved, m.metric);
  d = 0.0;
  for (std::size_t k = 0; k < a.data.size(); ++k) d = std::max(d, std::abs(back.data[k] - orig.data[k]));
  EXPECT_LT(d, 1e-10);
}

TEST(Propagator, FlatRadialModeIsFreeEvolution) {
  // on the flat cone the theta-independent half-density sees -d^2/dr^2 - 1/(4 r^2)
  const Model m = make_builtin_model("flat");
  const PolarGrid g{2.0, 0.02, 1024, 1};
  WaveFunction w(Space::Curved, g);
  for (int i = 0; i < g.nr; ++i) w.at(i, 0) = oracle::free_gaussian(g.r(i), 12.0, 0.5, 1.0, 0.0);
  const CurvedPropagator P(m.metric, m.potential, g, Scheme::Spectral);
  EvolutionConfig ec;
  ec.t_total = 0.5;
  ec.dt = 0.5;
  const WaveFunction v = to_half_density(P.evolve(from_half_density(w, Space::Curved, m.metric), ec), m.metric);
  double worst = 0.0;
  for (int i = 0; i < g.nr; ++i) {
    const cplx free = oracle::free_gaussian(g.r(i), 12.0, 0.5, 1.0, 0.5);
    worst = std::max(worst, std::abs(v.at(i, 0) - free));
  }
  // the -1/(4 r^2) term acts for time 0.5 near r = 13
  EXPECT_LT(worst, 0.5 * 0.25 / (11.0 * 11.0) * 1.5);
}

TEST(Propagator, CrankNicolsonAgreesWithSpectral) {
  const Model m = make_builtin_model("composite-sym");
  const PolarGrid g{2.0, 0.02, 800, 8};
  const WaveFunction u = packet(g, 9.0, 1.0);
  const CurvedPropagator S(m.metric, m.potential, g, Scheme::Spectral);
  const CurvedPropagator C(m.metric, m.potential, g, Scheme::CrankNicolson);
  EvolutionConfig ec;
  ec.t_total = 0.2;
  ec.dt = 2e-4;
  ec.scheme = Scheme::CrankNicolson;
  const WaveFunction a = C.evolve(u, ec);
  ec.scheme = Scheme::Spectral;
  ec.dt = 0.2;
  const WaveFunction b = S.evolve(u, ec);
  double d = 0.0;
  for (std::size_t k = 0; k < a.data.size(); ++k) d = std::max(d, std::abs(a.data[k] - b.data[k]));
  // second order differences in r against a spectral derivative
  EXPECT_LT(d, 5e-3);
}

TEST(Propagator, CrankNicolsonBudgetEnforced) {
  const Model m = make_builtin_model("flat");
  const PolarGrid g{2.0, 0.02, 400, 4};
  const CurvedPropagator C(m.metric, m.potential, g, Scheme::CrankNicolson);
  const WaveFunction u = packet(g, 5.0, 20.0);
  EvolutionConfig ec;
  ec.scheme = Scheme::CrankNicolson;
  ec.t_total = 1.0;
  ec.dt = 0.5;
  const double budget = C.crank_nicolson_budget(u, ec);
  EXPECT_LT(budget, 0.5);
  try {
    C.evolve(u, ec);
    FAIL() << "expected BudgetError";
  } catch (const BudgetError& e) {
    EXPECT_NEAR(e.required_dt(), budget, 1e-12 * budget);
  }
}

TEST(Propagator, AbsorberProfile) {
  const Model m = make_builtin_model("flat");
  const PolarGrid g{2.0, 0.1, 101, 1};
  const CurvedPropagator P(m.metric, m.potential, g, Scheme::Spectral);
  const std::vector<double> w = P.absorber_profile({0.1, 10.0, 2});
  EXPECT_EQ(w[50], 0.0);
  EXPECT_GT(w[0], 0.0);
  EXPECT_GT(w[100], 0.0);
  EXPECT_NEAR(w[0], 10.0, 1.0);
}

TEST(Propagator, SeamFractionValidated) {
  const Model m = make_builtin_model("flat");
  EXPECT_THROW(CurvedPropagator(m.metric, m.potential, PolarGrid{2.0, 0.1, 64, 1}, Scheme::Spectral, 0.6),
               DomainError);
}

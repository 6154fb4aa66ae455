#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "conic/errors.hpp"
#include "conic/geometry.hpp"
#include "conic/fitting.hpp"

using namespace conic;

namespace {

double numeric_p(const ScatteringMetric& g, const PhasePoint& z) {
  const Eigen::Matrix2d inv = g.metric_matrix(z.r, z.theta).inverse();
  const Eigen::Vector2d xi(z.rho, z.omega);
  return xi.dot(inv * xi);
}

}  // namespace

TEST(Geometry, FlatSymbolIsConic) {
  const Model m = make_builtin_model("flat");
  const PhasePoint z{3.0, 0.7, -0.4, 1.3};
  EXPECT_NEAR(m.metric.symbol_p(z), 0.16 + 1.69 / 9.0, 1e-15);
  EXPECT_NEAR(m.metric.sqrt_det(3.0, 0.7), 3.0, 1e-15);
  EXPECT_TRUE(m.metric.is_rotationally_symmetric());
}

TEST(Geometry, SymbolMatchesInverseOfMetricMatrix) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (const char* name : {"bump", "radial", "composite", "composite-sym", "trap"}) {
    const Model m = make_builtin_model(name);
    for (int k = 0; k < 50; ++k) {
      const PhasePoint z{2.0 + 40.0 * U(rng), kTwoPi * U(rng), 2.0 * U(rng) - 1.0, 4.0 * U(rng) - 2.0};
      const double p = numeric_p(m.metric, z);
      EXPECT_NEAR(m.metric.symbol_p(z), p, 1e-12 * std::max(1.0, p)) << name;
    }
  }
}

TEST(Geometry, SymbolGradientAgreesWithDifferences) {
  const Model m = make_builtin_model("composite");
  const PhasePoint z{4.5, 1.1, -0.8, 0.6};
  const SymbolDerivatives d = m.metric.symbol_derivatives(z);
  const double h = 1e-6;
  for (int c = 0; c < 4; ++c) {
    PhasePoint a = z, b = z;
    double* pa = c == 0 ? &a.r : c == 1 ? &a.theta : c == 2 ? &a.rho : &a.omega;
    double* pb = c == 0 ? &b.r : c == 1 ? &b.theta : c == 2 ? &b.rho : &b.omega;
    *pa += h;
    *pb -= h;
    const double fd = (m.metric.symbol_p(a) - m.metric.symbol_p(b)) / (2 * h);
    EXPECT_NEAR(d.grad[c], fd, 1e-8) << c;
  }
  EXPECT_NEAR((d.hess - d.hess.transpose()).norm(), 0.0, 1e-12);
}

TEST(Geometry, HessianAgreesWithGradientDifferences) {
  const Model m = make_builtin_model("bump");
  const PhasePoint z{6.0, 2.3, 0.5, -1.2};
  const SymbolDerivatives d = m.metric.symbol_derivatives(z);
  const double h = 1e-5;
  PhasePoint a = z, b = z;
  a.r += h;
  b.r -= h;
  const Eigen::Vector4d col = (m.metric.symbol_derivatives(a).grad - m.metric.symbol_derivatives(b).grad) / (2 * h);
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(d.hess(c, 0), col[c], 1e-7);
}

TEST(Geometry, DecaySlopesOfZooTerms) {
  const Model m = make_builtin_model("composite");
  for (const auto& term : m.metric.perturbations()) {
    const DecayReport rep = validate_decay(term, 2, DecayGrid::standard());
    EXPECT_TRUE(rep.passed()) << "order " << term.order;
    for (const auto& s : rep.slopes) EXPECT_NEAR(s.slope, -term.decay_mu - s.k, 0.05);
  }
}

TEST(Geometry, SlowTermIsFlagged) {
  PerturbationTerm t;
  t.order = 2;
  t.amplitude = 0.1;
  t.radial.exponent = 0.3;
  t.decay_mu = 0.5;
  EXPECT_FALSE(validate_decay(t, 1, DecayGrid::standard()).passed());
}

TEST(Geometry, CentralDifferenceOfPolynomial) {
  const auto f = [](double x) { return x * x * x; };
  EXPECT_NEAR(central_difference(f, 2.0, 1e-3, 1), 12.0, 1e-5);
  EXPECT_NEAR(central_difference(f, 2.0, 1e-3, 2), 12.0, 1e-4);
}

TEST(Geometry, RejectsPointsOutsideTheEnd) {
  const Model m = make_builtin_model("bump");
  EXPECT_THROW(m.metric.symbol_p({0.5, 0.0, 1.0, 0.0}), DomainError);
}

TEST(Geometry, UnknownModelOrParameter) {
  EXPECT_THROW(make_builtin_model("nope"), ConfigError);
  EXPECT_THROW(make_builtin_model("bump", {{"bogus", 1.0}}), ConfigError);
}

TEST(Geometry, TrapRingPlacesCircularOrbit) {
  const Model m = make_builtin_model("trap");
  // circular orbit: the radial force vanishes for rho = 0
  const SymbolDerivatives d = m.metric.symbol_derivatives({10.0, 0.0, 0.0, 1.0});
  EXPECT_NEAR(d.grad[0], 0.0, 1e-10);
}

TEST(Fitting, LogLogSlope) {
  std::vector<double> x, y;
  for (int k = 1; k <= 8; ++k) {
    x.push_back(std::pow(2.0, k));
    y.push_back(3.0 * std::pow(x.back(), -1.7));
  }
  EXPECT_NEAR(fit_loglog(x, y).slope, -1.7, 1e-12);
}

TEST(Fitting, PowerTailRecoversLimitAndExponent) {
  std::vector<double> x, y;
  for (int k = 4; k <= 14; ++k) {
    x.push_back(std::pow(2.0, k));
    y.push_back(0.25 - 2.0 * std::pow(x.back(), -0.6));
  }
  const TailFit f = fit_power_tail(x, y);
  EXPECT_NEAR(f.limit, 0.25, 1e-9);
  EXPECT_NEAR(f.beta, 0.6, 1e-6);
  EXPECT_TRUE(f.monotone);
  EXPECT_FALSE(f.fallback);
}

TEST(Fitting, ConstantSamplesHaveNoExponent) {
  const TailFit f = fit_power_tail({1, 2, 4, 8}, {1.5, 1.5, 1.5, 1.5});
  EXPECT_TRUE(std::isnan(f.beta));
  EXPECT_EQ(f.limit, 1.5);
}

TEST(Fitting, RichardsonIsExactForPureTail) {
  const auto y = [](double x) { return -1.0 + 4.0 * std::pow(x, -1.5); };
  EXPECT_NEAR(richardson(10.0, y(10.0), 20.0, y(20.0), 1.5), -1.0, 1e-13);
}

#include "conic/escape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "conic/classical.hpp"
#include "conic/errors.hpp"
#include "conic/microlocal.hpp"

namespace conic {

namespace {

PhasePoint to_point(const OdeVector& y) { return {y[0], y[1], y[2], y[3]}; }

}  // namespace

double escape_chi(double tau) { return 1.0 - smooth_step(tau - 1.0); }

EscapeFunction::EscapeFunction(const ScatteringMetric& g, const PhasePoint& start, const EscapeParams& params)
    : g_(&g), params_(params), mu_(g.mu()) {
  auto& p = params_;
  if (!(p.delta_prime > 0.0) || !(p.delta0 > 0.5 * p.delta_prime) || !(p.delta0 < p.delta_prime))
    throw DomainError("escape function: need delta_prime/2 < delta0 < delta_prime");
  if (!(p.C > 0.0)) throw DomainError("escape function: C must be positive");
  if (!(p.t_min < 0.0)) throw DomainError("escape function: t_min must be negative");
  if (p.T0 == 0.0) p.T0 = -std::pow(2.0 * p.C / p.delta_prime, 1.0 / mu_);
  if (!(p.T0 < 0.0)) throw DomainError("escape function: T0 must be negative");
  // every denominator stays positive when it does at t = 0
  if (!(p.delta0 - p.C * std::pow(std::abs(p.T0), -mu_) > 0.0))
    throw DomainError("escape function: |T0| too small for delta0 and C");

  const Potential none;
  const FlowOptions fo;
  OdeOptions o;
  o.rtol = p.tol;
  o.atol = p.tol * 1e-2;
  DormandPrince dp(
      [&g, &none, fo](double, const OdeVector& y, OdeVector& dy) {
        const Eigen::Vector4d f = hamilton_rhs(g, none, to_point(y), fo);
        dy = f;
      },
      o);
  OdeVector y0(4);
  y0 << start.r, start.theta, start.rho, start.omega;
  const double s_end = p.T0 + p.t_min;
  const OdeResult res = dp.integrate(0.0, y0, s_end, [&](const DenseStep& st) {
    if (st.y_new()[0] <= fo.chart_margin) return false;
    steps_.push_back(st);
    return true;
  });
  if (res.stopped || steps_.empty() || std::abs(steps_.back().t_new() - s_end) > 1e-9 * std::abs(s_end))
    throw ChartExitError("escape function: reference trajectory leaves the end chart", steps_.empty() ? 0.0 : steps_.back().t_new());
}

PhasePoint EscapeFunction::reference(double t) const {
  if (t > 0.0 || t < params_.t_min) throw DomainError("escape function: t outside [t_min, 0]");
  const double s = t + params_.T0;
  // steps_ run from s = 0 downwards
  auto it = std::lower_bound(steps_.begin(), steps_.end(), s,
                             [](const DenseStep& st, double v) { return st.t_new() > v; });
  if (it == steps_.end()) it = steps_.end() - 1;
  return to_point((*it)(s));
}

std::array<double, 4> EscapeFunction::scales(double t) const {
  const double a = std::abs(t + params_.T0);
  const auto& p = params_;
  return {5.0 * p.delta0 * a, p.delta0 - p.C * std::pow(a, -mu_), p.delta0 - p.C * std::pow(a, -mu_ - 1.0),
          p.delta0 - p.C * std::pow(a, -mu_)};
}

double EscapeFunction::phi(double t, const PhasePoint& z) const {
  const PhasePoint ref = reference(t);
  const auto s = scales(t);
  return escape_chi(std::abs(z.r - ref.r) / s[0]) *
         escape_chi(std::abs(std::remainder(z.theta - ref.theta, kTwoPi)) / s[1]) *
         escape_chi(std::abs(z.rho - ref.rho) / s[2]) * escape_chi(std::abs(z.omega - ref.omega) / s[3]);
}

double EscapeFunction::lagrange(double t, const PhasePoint& z, double h) const {
  const SymbolDerivatives d = g_->symbol_derivatives(z);
  const Eigen::Vector4d x(d.grad[2], d.grad[3], -d.grad[0], -d.grad[1]);
  const auto shifted = [&](double s) {
    return PhasePoint{z.r + s * x[0], z.theta + s * x[1], z.rho + s * x[2], z.omega + s * x[3]};
  };
  // one-sided at t = 0
  if (t + h > 0.0) return (phi(t, shifted(0.0)) - phi(t - h, shifted(-h))) / h;
  return (phi(t + h, shifted(h)) - phi(t - h, shifted(-h))) / (2.0 * h);
}

double escape_phi(const EscapeFunction& ef, double t, const PhasePoint& z) { return ef.phi(t, z); }

double escape_phi_lagrange(const EscapeFunction& ef, double t, const PhasePoint& z) { return ef.lagrange(t, z); }

EscapeSweepReport escape_sweep(const EscapeFunction& ef, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0), sym(-1.0, 1.0);
  EscapeSweepReport rep;
  rep.phi_min = 1.0;
  rep.phi_max = 0.0;
  rep.lagrange_max = -std::numeric_limits<double>::infinity();
  rep.trajectory_lagrange_max = -std::numeric_limits<double>::infinity();
  const double h = 1e-3;
  const double t_lo = ef.params().t_min + h;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t_lo * unit(rng);
    const PhasePoint ref = ef.reference(t);
    const auto s = ef.scales(t);
    const bool on_traj = k % 16 == 0;
    PhasePoint z = ref;
    if (!on_traj) {
      z.r += 2.5 * s[0] * sym(rng);
      z.theta += 2.5 * s[1] * sym(rng);
      z.rho += 2.5 * s[2] * sym(rng);
      z.omega += 2.5 * s[3] * sym(rng);
      if (z.r <= 1.05) z.r = ref.r;
    }
    const double p = ef.phi(t, z);
    const double l = ef.lagrange(t, z, h);
    rep.phi_min = std::min(rep.phi_min, p);
    rep.phi_max = std::max(rep.phi_max, p);
    rep.lagrange_max = std::max(rep.lagrange_max, l);
    rep.lagrange_min = std::min(rep.lagrange_min, l);
    if (p > 0.0 && p < 1.0) ++rep.in_shell;
    if (on_traj) {
      rep.trajectory_phi_min = std::min(rep.trajectory_phi_min, p);
      rep.trajectory_lagrange_max = std::max(rep.trajectory_lagrange_max, l);
    }
    ++rep.samples;
  }
  return rep;
}

}  // namespace conic

#include "conic/classical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conic/errors.hpp"
#include "conic/fitting.hpp"
#include "conic/ode.hpp"

namespace conic {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

PhasePoint from_vec(const OdeVector& y) { return {y[0], y[1], y[2], y[3]}; }

// Shared backward driver. r_of maps (t, y) to the radius for chart bookkeeping.
// Returns false from on_step to stop early; chart exit is located on the dense
// output and reported through exit_time.
template <class ROf, class OnStep>
OdeResult drive(const OdeRhs& rhs, const OdeVector& y0, double t_from, double t_to, double tol, double margin,
                ROf r_of, OnStep on_step, double& exit_time) {
  OdeOptions o;
  o.rtol = tol;
  o.atol = tol * 1e-2;
  DormandPrince dp(rhs, o);
  exit_time = kNaN;
  return dp.integrate(t_from, y0, t_to, [&](const DenseStep& st) {
    if (r_of(st.t_new(), st.y_new()) <= margin) {
      double a = st.t_old(), b = st.t_new();
      for (int i = 0; i < 60; ++i) {
        const double m = 0.5 * (a + b);
        if (r_of(m, st(m)) > margin)
          a = m;
        else
          b = m;
      }
      exit_time = a;
      on_step(st, a);
      return false;
    }
    return on_step(st, st.t_new());
  });
}

OdeRhs standard_rhs(const ScatteringMetric& g, const Potential& V, const FlowOptions& opt) {
  return [&g, &V, opt](double, const OdeVector& y, OdeVector& dy) {
    const Eigen::Vector4d f = hamilton_rhs(g, V, from_vec(y), opt);
    dy = f;
  };
}

// (R, theta, rho, omega) with r = R + 2 t rho.
OdeRhs sheared_rhs(const ScatteringMetric& g, const Potential& V, const FlowOptions& opt) {
  return [&g, &V, opt](double t, const OdeVector& y, OdeVector& dy) {
    const PhasePoint z{y[0] + 2.0 * t * y[2], y[1], y[2], y[3]};
    const Eigen::Vector4d f = hamilton_rhs(g, V, z, opt);
    dy.resize(4);
    dy[0] = f[0] - 2.0 * z.rho - 2.0 * t * f[2];
    dy[1] = f[1];
    dy[2] = f[2];
    dy[3] = f[3];
  };
}

}  // namespace

Eigen::Vector4d hamilton_rhs(const ScatteringMetric& g, const Potential& V, const PhasePoint& z,
                             const FlowOptions& opt) {
  const SymbolDerivatives d = g.symbol_derivatives(z);
  Eigen::Vector4d f(d.grad(2), d.grad(3), -d.grad(0), -d.grad(1));
  if (opt.include_potential && !V.is_zero()) {
    const Jet v = V.jet(z.r, z.theta);
    f(2) -= v.dr;
    f(3) -= v.dt;
  }
  return f;
}

Eigen::Matrix4d hamilton_jacobian(const ScatteringMetric& g, const Potential& V, const PhasePoint& z,
                                  const FlowOptions& opt) {
  const SymbolDerivatives d = g.symbol_derivatives(z);
  Eigen::Matrix4d H = d.hess;
  if (opt.include_potential && !V.is_zero()) {
    const Jet v = V.jet(z.r, z.theta);
    H(0, 0) += v.drr;
    H(0, 1) += v.drt;
    H(1, 0) += v.drt;
    H(1, 1) += v.dtt;
  }
  Eigen::Matrix4d A;
  A.row(0) = H.row(2);
  A.row(1) = H.row(3);
  A.row(2) = -H.row(0);
  A.row(3) = -H.row(1);
  return A;
}

double radial_virial(const ScatteringMetric& g, const PhasePoint& z) {
  const SymbolDerivatives d = g.symbol_derivatives(z);
  const Eigen::Vector4d X(d.grad(2), d.grad(3), -d.grad(0), -d.grad(1));
  const double rdot = X(0);
  const double rddot = d.hess.row(2).dot(X);
  return 2.0 * rdot * rdot + 2.0 * z.r * rddot;
}

Trajectory integrate_flow(const ScatteringMetric& g, const Potential& V, const PhasePoint& start, double t_end,
                          const FlowOptions& opt, const std::vector<double>& sample_times) {
  if (!(start.r > opt.chart_margin)) throw DomainError("integrate_flow: start outside the end chart");
  if (!(t_end < 0.0)) throw DomainError("integrate_flow: t_end must be negative");
  if (!(opt.tol > 0.0)) throw DomainError("integrate_flow: tolerance must be positive");

  Trajectory tr;
  const auto energy = [&](const PhasePoint& z) {
    double p = g.symbol_p(z);
    if (opt.include_potential) p += V.value(z.r, z.theta);
    return p;
  };
  tr.p0 = energy(start);
  const auto drift = [&](const PhasePoint& z) {
    const double dp = std::abs(energy(z) - tr.p0);
    return tr.p0 != 0.0 ? dp / std::abs(tr.p0) : dp;
  };
  tr.samples.push_back({0.0, start, 0.0});

  std::vector<double> times = sample_times;
  std::sort(times.begin(), times.end(), std::greater<>());
  std::size_t next = 0;
  while (next < times.size() && times[next] >= 0.0) ++next;

  OdeVector y0(4);
  y0 << start.r, start.theta, start.rho, start.omega;
  double exit_time = kNaN;
  const OdeResult res = drive(
      standard_rhs(g, V, opt), y0, 0.0, t_end, opt.tol, opt.chart_margin,
      [](double, const OdeVector& y) { return y[0]; },
      [&](const DenseStep& st, double t_stop) {
        const PhasePoint zn = from_vec(st(t_stop));
        tr.energy_drift = std::max(tr.energy_drift, drift(zn));
        if (times.empty()) {
          tr.samples.push_back({t_stop, zn, drift(zn)});
        } else {
          while (next < times.size() && times[next] >= t_stop) {
            const PhasePoint z = from_vec(st(times[next]));
            tr.samples.push_back({times[next], z, drift(z)});
            ++next;
          }
        }
        return true;
      },
      exit_time);
  tr.chart_exit = !std::isnan(exit_time);
  tr.t_end = tr.chart_exit ? exit_time : res.t;
  if (tr.chart_exit && times.empty()) tr.samples.back().t = exit_time;
  tr.winding = static_cast<long>(std::floor(tr.samples.back().z.theta / kTwoPi));
  return tr;
}

std::string to_string(TrappingStatus s) {
  switch (s) {
    case TrappingStatus::Nontrapped:
      return "nontrapped";
    case TrappingStatus::Trapped:
      return "trapped";
    case TrappingStatus::Undecided:
      return "undecided";
  }
  return "undecided";
}

TrappingVerdict detect_nontrapping(const ScatteringMetric& g, const Potential& V, const PhasePoint& start,
                                   double t_max, double r_esc, const FlowOptions& opt) {
  if (!(t_max > 0.0)) throw DomainError("detect_nontrapping: T_max must be positive");
  if (!(r_esc > g.r_conic())) throw DomainError("detect_nontrapping: R_esc must exceed R_conic");

  TrappingVerdict v;
  v.escape_time = kNaN;
  std::vector<TrajectorySample> tail;
  std::vector<double> ts, rs;
  ts.push_back(0.0);
  rs.push_back(start.r);
  bool escaped = false;

  OdeVector y0(4);
  y0 << start.r, start.theta, start.rho, start.omega;
  double exit_time = kNaN;
  const auto rhs = standard_rhs(g, V, opt);
  const OdeResult res = drive(
      rhs, y0, 0.0, -t_max, opt.tol, opt.chart_margin, [](double, const OdeVector& y) { return y[0]; },
      [&](const DenseStep& st, double t_stop) {
        const PhasePoint z = from_vec(st(t_stop));
        ts.push_back(t_stop);
        rs.push_back(z.r);
        if (z.r > 0.5 * r_esc) tail.push_back({t_stop, z, 0.0});
        const double rdot = hamilton_rhs(g, V, z, opt)(0);
        if (z.r > r_esc && rdot < 0.0) {
          escaped = true;
          return false;
        }
        return true;
      },
      exit_time);

  // smallest C with r > |t|/C - C on every sample
  const auto holds = [&](double c) {
    for (std::size_t i = 0; i < ts.size(); ++i)
      if (!(rs[i] > std::abs(ts[i]) / c - c)) return false;
    return true;
  };
  double lo = 1e-6, hi = 1e12;
  if (holds(lo)) {
    v.c_fit = lo;
  } else {
    for (int i = 0; i < 200; ++i) {
      const double m = std::sqrt(lo * hi);
      (holds(m) ? hi : lo) = m;
    }
    v.c_fit = hi;
  }

  if (!std::isnan(exit_time)) {
    v.status = TrappingStatus::Undecided;
    v.reason = "left the end chart at t = " + std::to_string(exit_time);
    return v;
  }
  if (escaped) {
    v.virial_min = std::numeric_limits<double>::infinity();
    for (const auto& s : tail) v.virial_min = std::min(v.virial_min, radial_virial(g, s.z));
    if (v.virial_min > 0.0) {
      v.status = TrappingStatus::Nontrapped;
      v.escape_time = res.t;
      v.reason = "r exceeded R_esc with d^2(r^2)/dt^2 > 0 on the tail";
    } else {
      v.status = TrappingStatus::Undecided;
      v.reason = "escaped radius reached but the tail is not convex in r^2";
    }
    return v;
  }
  // ran to -T_max inside the chart
  double first = 0.0, second = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] > -0.5 * t_max)
      first = std::max(first, rs[i]);
    else
      second = std::max(second, rs[i]);
  }
  if (second <= 1.05 * first && second < r_esc) {
    v.status = TrappingStatus::Trapped;
    v.reason = "r bounded on [-T_max, 0]";
  } else {
    v.status = TrappingStatus::Undecided;
    v.reason = "no escape within T_max";
  }
  return v;
}

FreePhasePoint comparison_flow(const FreePhasePoint& z, double t) {
  return {z.r + 2.0 * t * z.rho, z.theta, z.rho, z.omega};
}

FreePhasePoint scattering_map_S_t(const ScatteringMetric& g, const Potential& V, const PhasePoint& start, double t,
                                  const FlowOptions& opt) {
  if (t > 0.0) throw DomainError("scattering_map_S_t: t must be non-positive");
  if (!(start.r > opt.chart_margin)) throw DomainError("scattering_map_S_t: start outside the end chart");
  if (t == 0.0) return {start.r, start.theta, start.rho, start.omega};
  OdeVector y0(4);
  y0 << start.r, start.theta, start.rho, start.omega;
  double exit_time = kNaN;
  const OdeResult res = drive(
      sheared_rhs(g, V, opt), y0, 0.0, t, opt.tol, opt.chart_margin,
      [](double tt, const OdeVector& y) { return y[0] + 2.0 * tt * y[2]; },
      [](const DenseStep&, double) { return true; }, exit_time);
  if (!std::isnan(exit_time)) throw ChartExitError("trajectory left the end chart", exit_time);
  return {res.y[0], res.y[1], res.y[2], res.y[3]};
}

double ScatteringData::theta_minus_mod() const {
  double m = std::fmod(theta_minus, kTwoPi);
  if (m < 0.0) m += kTwoPi;
  if (m >= kTwoPi) m = 0.0;
  return m;
}

long ScatteringData::winding() const { return static_cast<long>(std::floor(theta_minus / kTwoPi)); }

ScatteringData extract_scattering_data(const ScatteringMetric& g, const Potential& V, const PhasePoint& start,
                                       const ScatteringOptions& opt) {
  if (!(start.r > opt.flow.chart_margin)) throw DomainError("extract_scattering_data: start outside the end chart");
  if (opt.min_doublings < 2 || opt.max_doublings < opt.min_doublings || !(opt.t0 > 0.0))
    throw DomainError("extract_scattering_data: invalid ladder");

  ScatteringData out;
  out.mu_used = g.mu();
  out.p0 = g.symbol_p(start);

  OdeVector y(4);
  y << start.r, start.theta, start.rho, start.omega;
  double t = 0.0;
  const auto rhs = sheared_rhs(g, V, opt.flow);
  const auto r_of = [](double tt, const OdeVector& s) { return s[0] + 2.0 * tt * s[2]; };

  const auto component = [](const LadderEntry& e, int c) {
    return c == 0 ? e.s.r : c == 1 ? e.s.theta : c == 2 ? e.s.rho : e.s.omega;
  };
  const double noise = 10.0 * opt.flow.tol;
  // index of the last ladder step whose increment is above the noise floor
  const auto signal_end = [&](int c) {
    std::size_t last = 0;
    for (std::size_t i = 1; i < out.ladder.size(); ++i) {
      const double v = component(out.ladder[i], c);
      if (std::abs(v - component(out.ladder[i - 1], c)) > noise * std::max(1.0, std::abs(v))) last = i;
    }
    return last;
  };

  const auto fit_all = [&] {
    bool monotone = true;
    std::array<double, 4> lim{};
    for (int c = 0; c < 4; ++c) {
      const std::size_t n = out.ladder.size();
      std::size_t last = signal_end(c);
      if (last < 2) last = n - 1;
      const std::size_t first = last + 1 > opt.fit_points ? last + 1 - opt.fit_points : 0;
      std::vector<double> xs, ys;
      for (std::size_t i = first; i <= last; ++i) {
        xs.push_back(std::abs(out.ladder[i].t));
        ys.push_back(component(out.ladder[i], c));
      }
      TailFitOptions fo;
      fo.fallback_beta = c == 2 ? 1.0 + g.mu() : g.mu();
      fo.flat_tolerance = noise;
      const TailFit f = fit_power_tail(xs, ys, fo);
      lim[c] = f.limit;
      out.err[c] = f.error;
      out.beta[c] = f.beta;
      out.fallback[c] = f.fallback;
      monotone = monotone && f.monotone;
    }
    out.r_minus = lim[0];
    out.theta_minus = lim[1];
    out.rho_minus = lim[2];
    out.omega_minus = lim[3];
    out.status = monotone ? "ok" : "extrapolation-unreliable";
  };

  for (int k = 0; k <= opt.max_doublings; ++k) {
    const double tk = -opt.t0 * std::ldexp(1.0, k);
    double exit_time = kNaN;
    const OdeResult res =
        drive(rhs, y, t, tk, opt.flow.tol, opt.flow.chart_margin, r_of, [](const DenseStep&, double) { return true; },
              exit_time);
    if (!std::isnan(exit_time)) throw ChartExitError("trajectory left the end chart", exit_time);
    t = tk;
    y = res.y;
    out.ladder.push_back({tk, {y[0], y[1], y[2], y[3]}});
    if (k >= opt.min_doublings) {
      // every component has sat at the noise floor for the last three doublings
      bool settled = true;
      for (int c = 0; c < 4; ++c) settled = settled && signal_end(c) + 3 <= out.ladder.size() - 1;
      if (settled) break;
    }
  }
  fit_all();
  return out;
}

namespace {

OdeRhs variational_rhs(const ScatteringMetric& g, const Potential& V, const FlowOptions& opt) {
  const OdeRhs base = sheared_rhs(g, V, opt);
  return [&g, &V, opt, base](double t, const OdeVector& y, OdeVector& dy) {
    dy.resize(20);
    OdeVector head = y.head(4), dhead(4);
    base(t, head, dhead);
    dy.head(4) = dhead;
    const PhasePoint z{y[0] + 2.0 * t * y[2], y[1], y[2], y[3]};
    const Eigen::Matrix4d A = hamilton_jacobian(g, V, z, opt);
    Eigen::Matrix4d T = Eigen::Matrix4d::Identity(), Ti = Eigen::Matrix4d::Identity();
    T(0, 2) = -2.0 * t;
    Ti(0, 2) = 2.0 * t;
    Eigen::Matrix4d DF = T * A * Ti;
    DF(0, 2) -= 2.0;
    const Eigen::Map<const Eigen::Matrix4d> J(y.data() + 4);
    Eigen::Map<Eigen::Matrix4d> dJ(dy.data() + 4);
    dJ = DF * J;
  };
}

}  // namespace

std::vector<VariationalState> jacobian_ladder(const ScatteringMetric& g, const Potential& V, const PhasePoint& start,
                                              const std::vector<double>& times, const FlowOptions& opt) {
  if (!(start.r > opt.chart_margin)) throw DomainError("jacobian_S_t: start outside the end chart");
  std::vector<double> ts = times;
  for (double t : ts)
    if (t > 0.0) throw DomainError("jacobian_S_t: times must be non-positive");
  std::vector<std::size_t> order(ts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ts[a] > ts[b]; });

  OdeVector y(20);
  y.setZero();
  y.head(4) << start.r, start.theta, start.rho, start.omega;
  Eigen::Map<Eigen::Matrix4d>(y.data() + 4).setIdentity();

  std::vector<VariationalState> out(ts.size());
  const auto fill = [&](std::size_t idx, double t, const OdeVector& s) {
    VariationalState v;
    v.sheared = {s[0], s[1], s[2], s[3]};
    v.point = {s[0] + 2.0 * t * s[2], s[1], s[2], s[3]};
    v.jacobian = Eigen::Map<const Eigen::Matrix4d>(s.data() + 4);
    out[idx] = v;
  };
  std::size_t next = 0;
  while (next < order.size() && ts[order[next]] == 0.0) fill(order[next++], 0.0, y);
  if (next == order.size()) return out;

  double exit_time = kNaN;
  drive(
      variational_rhs(g, V, opt), y, 0.0, ts[order.back()], opt.tol, opt.chart_margin,
      [](double tt, const OdeVector& s) { return s[0] + 2.0 * tt * s[2]; },
      [&](const DenseStep& st, double t_stop) {
        while (next < order.size() && ts[order[next]] >= t_stop) {
          fill(order[next], ts[order[next]], st(ts[order[next]]));
          ++next;
        }
        return true;
      },
      exit_time);
  if (!std::isnan(exit_time)) throw ChartExitError("trajectory left the end chart", exit_time);
  return out;
}

VariationalState jacobian_S_t(const ScatteringMetric& g, const Potential& V, const PhasePoint& start, double t,
                              const FlowOptions& opt) {
  return jacobian_ladder(g, V, start, {t}, opt).front();
}

Eigen::Matrix4d finite_difference_jacobian(const ScatteringMetric& g, const Potential& V, const PhasePoint& start,
                                           double t, double h, const FlowOptions& opt) {
  FlowOptions fine = opt;
  fine.tol = std::min(opt.tol, 1e-12);
  Eigen::Matrix4d J;
  for (int c = 0; c < 4; ++c) {
    PhasePoint zp = start, zm = start;
    double* fp[4] = {&zp.r, &zp.theta, &zp.rho, &zp.omega};
    double* fm[4] = {&zm.r, &zm.theta, &zm.rho, &zm.omega};
    *fp[c] += h;
    *fm[c] -= h;
    const FreePhasePoint sp = scattering_map_S_t(g, V, zp, t, fine);
    const FreePhasePoint sm = scattering_map_S_t(g, V, zm, t, fine);
    J(0, c) = (sp.r - sm.r) / (2.0 * h);
    J(1, c) = (sp.theta - sm.theta) / (2.0 * h);
    J(2, c) = (sp.rho - sm.rho) / (2.0 * h);
    J(3, c) = (sp.omega - sm.omega) / (2.0 * h);
  }
  return J;
}

DiffeoReport check_local_diffeo(const ScatteringMetric& g, const Potential& V, const PhaseBox& window,
                                const std::vector<double>& t_ladder, int samples_per_axis, const FlowOptions& opt) {
  if (samples_per_axis < 1) throw DomainError("check_local_diffeo: need at least one sample per axis");
  DiffeoReport rep;
  for (double t : t_ladder) rep.entries.push_back({t, 0.0, 0});
  const int n = samples_per_axis;
  const auto lerp = [n](double a, double b, int i) { return n == 1 ? 0.5 * (a + b) : a + (b - a) * i / (n - 1); };
  for (int i0 = 0; i0 < n; ++i0)
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2)
        for (int i3 = 0; i3 < n; ++i3) {
          const PhasePoint z{lerp(window.lo.r, window.hi.r, i0), lerp(window.lo.theta, window.hi.theta, i1),
                             lerp(window.lo.rho, window.hi.rho, i2), lerp(window.lo.omega, window.hi.omega, i3)};
          ++rep.samples;
          try {
            const auto states = jacobian_ladder(g, V, z, t_ladder, opt);
            for (std::size_t k = 0; k < states.size(); ++k) {
              const Eigen::Matrix4d D = states[k].jacobian - Eigen::Matrix4d::Identity();
              const double nrm = Eigen::JacobiSVD<Eigen::Matrix4d>(D).singularValues()(0);
              rep.entries[k].sup_norm = std::max(rep.entries[k].sup_norm, nrm);
            }
          } catch (const Error&) {
            for (auto& e : rep.entries) ++e.failed_starts;
          }
        }
  bool below = true;
  for (const auto& e : rep.entries) below = below && e.sup_norm < 0.5 && e.failed_starts == 0;
  rep.convergent = true;
  if (rep.entries.size() >= 3) {
    const std::size_t m = rep.entries.size();
    const double first = std::abs(rep.entries[1].sup_norm - rep.entries[0].sup_norm);
    const double last = std::abs(rep.entries[m - 1].sup_norm - rep.entries[m - 2].sup_norm);
    rep.convergent = last <= std::max(first, 1e-3);
  }
  rep.passed = below && rep.convergent;
  return rep;
}

}  // namespace conic

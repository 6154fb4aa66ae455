// Acceptance suite: one PASS/FAIL line per criterion A1..A12.
//
//   acceptance            run everything
//   acceptance A3 A8      run a subset

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "conic/classical.hpp"
#include "conic/errors.hpp"
#include "conic/escape.hpp"
#include "conic/fitting.hpp"
#include "conic/microlocal.hpp"
#include "conic/propagator.hpp"
#include "conic/quantum.hpp"
#include "conic/theorem_check.hpp"
#include "oracles.hpp"

using namespace conic;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

Model bump_model() { return make_builtin_model("bump", {{"mu", 0.5}, {"epsilon", 0.1}}); }

// rotationally symmetric member of the bump family
Model bump_radial_model() { return make_builtin_model("bump", {{"mu", 0.5}, {"epsilon", 0.1}, {"phi0", 1.0}, {"phi1", 0.0}}); }

Outcome a1() {
  const auto t0 = std::chrono::steady_clock::now();
  const Model m = bump_model();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  FlowOptions fo;
  fo.tol = 1e-10;
  double worst = 0.0;
  int used = 0, skipped = 0;
  while (used < 100) {
    const PhasePoint z{5.0 + 15.0 * U(rng), kTwoPi * U(rng), -1.2 + 2.4 * U(rng), -2.0 + 4.0 * U(rng)};
    if (detect_nontrapping(m.metric, m.potential, z).status != TrappingStatus::Nontrapped) {
      ++skipped;
      continue;
    }
    const Trajectory tr = integrate_flow(m.metric, m.potential, z, -1e3, fo);
    if (tr.chart_exit) {
      ++skipped;
      continue;
    }
    worst = std::max(worst, tr.energy_drift);
    ++used;
  }
  const double s = seconds_since(t0);
  return {worst < 1e-8 && s < 60.0,
          fmt("max relative energy drift %.2e (< 1e-8) over %d trajectories, %d skipped, %.1f s (< 60 s)", worst, used,
              skipped, s)};
}

Outcome a2() {
  const auto t0 = std::chrono::steady_clock::now();
  const Model m = make_builtin_model("flat");
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  int n = 0;
  while (n < 100) {
    const double R = 2.0 + 18.0 * U(rng), a = kTwoPi * U(rng);
    const double K = 0.5 + 1.5 * U(rng), b = kTwoPi * U(rng);
    const double x1 = R * std::cos(a), x2 = R * std::sin(a), k1 = K * std::cos(b), k2 = K * std::sin(b);
    // keep the past of the line away from the origin
    const bool outgoing = x1 * k1 + x2 * k2 > 0.0;
    if (outgoing && std::abs(x1 * k2 - x2 * k1) / K < 1.5) continue;
    const auto p = oracle::polar(x1, x2, k1, k2);
    const auto want = oracle::flat_scattering(x1, x2, k1, k2);
    const ScatteringData sd = extract_scattering_data(m.metric, m.potential, {p.r, p.theta, p.rho, p.omega});
    worst = std::max({worst, std::abs(sd.r_minus - want.r), std::abs(sd.theta_minus - want.theta),
                      std::abs(sd.rho_minus - want.rho), std::abs(sd.omega_minus - want.omega)});
    ++n;
  }
  const double s = seconds_since(t0);
  return {worst < 1e-6 && s < 60.0,
          fmt("max componentwise error %.2e (< 1e-6) over %d starts, %.1f s (< 60 s)", worst, n, s)};
}

Outcome a3() {
  const auto t0 = std::chrono::steady_clock::now();
  const Model m = make_builtin_model("composite", {{"mu", 0.5}});
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::array<double, 4> lo{1e9, 1e9, 1e9, 1e9}, hi{-1e9, -1e9, -1e9, -1e9};
  bool ok = true;
  int bad = 0;
  for (int i = 0; i < 20; ++i) {
    const PhasePoint z{5.0 + 15.0 * U(rng), kTwoPi * U(rng), -1.2 + 0.6 * U(rng), -0.5 + U(rng)};
    const ScatteringData sd = extract_scattering_data(m.metric, m.potential, z);
    for (int c = 0; c < 4; ++c) {
      const double b = sd.beta[c];
      const bool in = c == 2 ? (b >= 1.3 && b <= 1.8) : (b >= 0.35 && b <= 0.80);
      if (!in) {
        ok = false;
        ++bad;
      }
      if (std::isfinite(b)) {
        lo[c] = std::min(lo[c], b);
        hi[c] = std::max(hi[c], b);
      }
    }
  }
  const double s = seconds_since(t0);
  return {ok && s < 300.0, fmt("beta_r [%.3f, %.3f] beta_theta [%.3f, %.3f] beta_rho [%.3f, %.3f] beta_omega [%.3f, "
                               "%.3f], %d out of range, %.1f s (< 300 s)",
                               lo[0], hi[0], lo[1], hi[1], lo[2], hi[2], lo[3], hi[3], bad, s)};
}

Outcome a4() {
  const Model m = bump_model();
  const double mu = m.metric.mu();
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double lo = 1e9, hi = -1e9;
  bool ok = true;
  for (int i = 0; i < 5; ++i) {
    const PhasePoint z{20.0 + 10.0 * U(rng), kTwoPi * U(rng), -1.0 + 0.3 * U(rng), -1.0 + 2.0 * U(rng)};
    std::vector<double> times;
    for (double t = -10.0; t >= -1e4; t *= 1.15) times.push_back(t);
    const Trajectory tr = integrate_flow(m.metric, m.potential, z, -1e4, {}, times);
    const double p0 = tr.p0;
    std::vector<double> r, dev;
    for (const auto& s : tr.samples) {
      if (s.z.r <= 50.0) continue;
      const double d = std::abs(radial_virial(m.metric, s.z) - 8.0 * p0);
      if (d > 0.0) {
        r.push_back(s.z.r);
        dev.push_back(d);
      }
    }
    const double slope = fit_loglog(r, dev).slope;
    lo = std::min(lo, slope);
    hi = std::max(hi, slope);
    ok = ok && slope >= -mu - 0.2 && slope <= -mu + 0.2;
  }
  return {ok, fmt("fitted slope of |d^2(r^2)/dt^2 - 8 p0| vs r on r > 50 in [%.3f, %.3f]; target [%.2f, %.2f]", lo, hi,
                  -mu - 0.2, -mu + 0.2)};
}

Outcome a5() {
  const Model m = bump_model();
  const PhaseBox box{{50.0, 0.2, -1.0, 0.5}, {51.0, 0.4, -0.9, 0.7}};
  const std::vector<double> ladder{-16, -32, -64, -128, -256, -512, -1024};
  const DiffeoReport rep = check_local_diffeo(m.metric, m.potential, box, ladder, 2);
  double sup = 0.0;
  int failed = 0;
  for (const auto& e : rep.entries) {
    sup = std::max(sup, e.sup_norm);
    failed += e.failed_starts;
  }
  double worst = 0.0;
  for (const PhasePoint z : {box.lo, box.hi, PhasePoint{50.5, 0.3, -0.95, 0.6}})
    for (double t : {-16.0, -128.0}) {
      const Eigen::Matrix4d Jv = jacobian_S_t(m.metric, m.potential, z, t).jacobian;
      const Eigen::Matrix4d Jf = finite_difference_jacobian(m.metric, m.potential, z, t);
      worst = std::max(worst, (Jv - Jf).cwiseAbs().maxCoeff() / std::max(1.0, Jv.cwiseAbs().maxCoeff()));
    }
  return {sup < 0.5 && failed == 0 && worst < 1e-4,
          fmt("sup |J(t) - I| = %.3f (< 0.5) over %d starts x %zu times, variational vs finite difference %.2e (< "
              "1e-4)",
              sup, rep.samples, ladder.size(), worst)};
}

Outcome a6() {
  // free Gaussian
  PolarGrid fg{-40.0, 0.02, 4000, 4};
  WaveFunction u(Space::Free, fg);
  const double r0 = 0.0, s2 = 1.0, k0 = 3.0, t = 1.5;
  for (int i = 0; i < fg.nr; ++i)
    for (int j = 0; j < fg.ntheta; ++j) u.at(i, j) = oracle::free_gaussian(fg.r(i), r0, s2, k0, 0.0);
  const WaveFunction v = free_evolve(u, t);
  double e_free = 0.0;
  for (int i = 0; i < fg.nr; ++i)
    for (int j = 0; j < fg.ntheta; ++j)
      e_free = std::max(e_free, std::abs(v.at(i, j) - oracle::free_gaussian(fg.r(i), r0, s2, k0, t)));

  // eigenmode of the mode-2 radial operator, rotationally symmetric curved metric
  const Model cm = make_builtin_model("composite-sym");
  PolarGrid eg{1.05, 0.02, 500, 8};
  const CurvedPropagator cn(cm.metric, cm.potential, eg, Scheme::CrankNicolson);
  const Tridiagonal T = cn.radial_matrix(2);
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(T.diag.data(), T.diag.size());
  Eigen::VectorXd o = Eigen::Map<const Eigen::VectorXd>(T.off.data(), T.off.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, o);
  const double lam = es.eigenvalues()(0);
  WaveFunction w(Space::Curved, eg);
  for (int i = 0; i < eg.nr; ++i)
    for (int k = 0; k < eg.ntheta; ++k) w.at(i, k) = es.eigenvectors()(i, 0) * std::polar(1.0, 2.0 * eg.theta(k));
  const WaveFunction mode = from_half_density(w, Space::Curved, cm.metric);
  EvolutionConfig ec;
  ec.scheme = Scheme::CrankNicolson;
  ec.dt = 1e-3;
  ec.t_total = 1.0;
  const WaveFunction moved = cn.evolve(mode, ec);
  const cplx ph = inner(moved, mode, cm.metric) / inner(mode, mode, cm.metric);
  const double e_phase = std::abs(ph - std::polar(1.0, -lam));

  // J adjointness and J J* = j^2
  const Model bm = bump_model();
  PolarGrid cg{1.05, 0.05, 200, 16}, fg2{1.05 - 140 * 0.05, 0.05, 400, 16};
  std::mt19937_64 rng(606);
  std::normal_distribution<double> N;
  WaveFunction a(Space::Free, fg2), b(Space::Curved, cg);
  for (auto& z : a.data) z = {N(rng), N(rng)};
  for (auto& z : b.data) z = {N(rng), N(rng)};
  const cplx l = inner(J_embed(a, bm.metric, cg), b, bm.metric);
  const cplx r = inner(a, J_adjoint(b, bm.metric, fg2), bm.metric);
  const double e_adj = std::abs(l - r) / (norm(a, bm.metric) * norm(b, bm.metric));
  const WaveFunction jj = J_embed(J_adjoint(b, bm.metric, fg2), bm.metric, cg);
  double e_jj = 0.0;
  for (int i = 0; i < cg.nr; ++i) {
    const double j2 = std::pow(cutoff_j(cg.r(i)), 2);
    for (int k = 0; k < cg.ntheta; ++k) e_jj = std::max(e_jj, std::abs(jj.at(i, k) - j2 * b.at(i, k)));
  }
  return {e_free < 1e-10 && e_phase < 1e-6 && e_adj < 1e-8 && e_jj < 1e-10,
          fmt("free Gaussian %.2e (< 1e-10), eigenmode phase %.2e (< 1e-6), J adjoint %.2e (< 1e-8), JJ* - j^2 %.2e "
              "(< 1e-10)",
              e_free, e_phase, e_adj, e_jj)};
}

Outcome a7() {
  const Model m = bump_model();
  const double eps = 1.0 / 64.0;
  const PhasePoint p0{8.0, 1.0, -1.0, 0.5};
  const PolarGrid G = PolarGrid::covering(3.0, 11.0, 0.012, 256);
  WaveFunction u = make_coherent_state(p0, eps, G, Space::Curved, m.metric);
  const CurvedPropagator P(m.metric, m.potential, G, Scheme::Spectral);
  const std::vector<double> times{0.25, 0.5, 0.75, 1.0};
  // p is even in the momenta, so the forward flow is the backward flow with rho, omega reversed
  std::vector<double> back;
  for (double t : times) back.push_back(-t);
  const Trajectory tr = integrate_flow(m.metric, m.potential, {p0.r, p0.theta, -p0.rho, -p0.omega}, -1.0, {}, back);
  EvolutionConfig ec;
  ec.dt = 0.05 * eps;
  ec.t_total = 0.25 * eps;
  double worst = 0.0;
  for (double t : times) {
    u = P.evolve(u, ec);
    const Moments mo = moments(u, m.metric, eps);
    const auto it = std::find_if(tr.samples.begin(), tr.samples.end(),
                                 [t](const TrajectorySample& s) { return std::abs(s.t + t) < 1e-12; });
    if (it == tr.samples.end()) return {false, "classical trajectory missed a sample time"};
    const PhasePoint& z = it->z;
    const double dx = mo.r * std::cos(mo.theta) - z.r * std::cos(z.theta);
    const double dy = mo.r * std::sin(mo.theta) - z.r * std::sin(z.theta);
    worst = std::max(worst, std::hypot(dx, dy));
  }
  const double bound = 3.0 * std::sqrt(eps);
  return {worst < bound, fmt("max position deviation %.3e (< %.3f) at t = 0.25 .. 1", worst, bound)};
}

// grid resolving the symbol window at scale eps around p
// and at momenta up to `reach` widths further out
PolarGrid ladder_grid(const PhasePoint& p, const TestConfig& cfg, double eps, double r_lo, double r_hi,
                      double reach = 1.0) {
  const double dr = kTwoPi * eps / (8.0 * (std::abs(p.rho) + reach * cfg.widths[2])) * 0.95;
  const double need = 8.0 * (std::abs(p.omega) + reach * cfg.widths[3]) / eps;
  int nt = 16;
  while (nt < need || kTwoPi / nt > std::sqrt(eps) / 2.0) nt *= 2;
  return PolarGrid::covering(r_lo, r_hi, dr, nt);
}

Outcome a8() {
  const Model m = bump_model();
  const PhasePoint c{6.0, 1.0, 0.5, 0.5};
  TestConfig cfg;
  cfg.eps0 = 1.0 / 16.0;
  const StateFamily fam = [&](double eps) {
    return make_coherent_state(c, eps, ladder_grid(c, cfg, eps, 3.0, 9.0, 4.0), Space::Curved, m.metric);
  };
  const WFVerdict at = fs_test(fam, c, cfg, m.metric);
  PhasePoint d = c;
  d.rho += 3.0 * cfg.widths[2];
  const WFVerdict off = fs_test(fam, d, cfg, m.metric);
  return {at.decision == Decision::Present && at.exponent < 1.0 && off.decision == Decision::Absent &&
              off.exponent >= 4.0,
          fmt("center: %s, exponent %.2f (< 1); rho + 3 widths: %s, exponent %.2f (>= 4)",
              to_string(at.decision).c_str(), at.exponent, to_string(off.decision).c_str(), off.exponent)};
}

Outcome a9() {
  const Model m = bump_model();
  const PhasePoint p0{8.0, 1.0, -1.0, 0.0};
  const double T0 = -0.25;
  TestConfig cfg;
  cfg.eps0 = 1.0 / 16.0;
  cfg.widths = {0.125, 0.5, 0.5, 0.25};
  const Trajectory tr = integrate_flow(m.metric, m.potential, p0, T0, {}, {T0});
  const PhasePoint p1 = tr.samples.back().z;
  std::map<double, WaveFunction> cache;
  const StateFamily fam = [&](double eps) {
    if (auto it = cache.find(eps); it != cache.end()) return it->second;
    const PolarGrid G = ladder_grid(p0, cfg, eps, 5.5, 11.0);
    const WaveFunction u = make_coherent_state(p0, eps, G, Space::Curved, m.metric);
    const CurvedPropagator P(m.metric, m.potential, G, Scheme::Spectral);
    EvolutionConfig ec;
    ec.t_total = eps * T0;
    ec.dt = 0.05 * eps;
    return cache[eps] = P.evolve(u, ec);
  };
  const WFVerdict at = fs_test(fam, p1, cfg, m.metric);
  const WFVerdict back = fs_test(fam, p0, cfg, m.metric);
  return {at.decision == Decision::Present && back.decision == Decision::Absent,
          fmt("at exp(T0 H_p) p0 = (%.3f, %.3f, %.3f, %.3f): %s (%.2f); at p0: %s (%.2f)", p1.r, p1.theta, p1.rho,
              p1.omega, to_string(at.decision).c_str(), at.exponent, to_string(back.decision).c_str(), back.exponent)};
}

// states shared by A10 and A11
struct TheoremFixture {
  TheoremCheckConfig cfg;
  std::map<std::pair<std::string, InitialProfile>, PreparedStates> states;

  const PreparedStates& get(const std::string& name, const Model& m, InitialProfile p) {
    const auto key = std::make_pair(name, p);
    auto it = states.find(key);
    if (it == states.end()) it = states.emplace(key, prepare_states(m, p, cfg)).first;
    return it->second;
  }
};

TheoremFixture& fixture() {
  static TheoremFixture f;
  return f;
}

std::vector<std::pair<std::string, Model>> theorem_models() {
  return {{"flat", make_builtin_model("flat")}, {"bump", bump_radial_model()}};
}

Outcome a10() {
  auto& fx = fixture();
  bool ok = true;
  std::string detail;
  for (const auto& [name, m] : theorem_models()) {
    const PreparedStates& st = fx.get(name, m, InitialProfile::Smooth);
    const PhasePoint x0{fx.cfg.state.r_jump, 1.0, fx.cfg.rho0, 0.0};
    const SmoothingReport r = smoothing_check(m, st, fx.cfg, x0);
    ok = ok && r.hypothesis.decision == Decision::Absent && r.conclusion.decision == Decision::Absent;
    detail += fmt("%s%s: WF^rh at (%.2f, %.2f, %.2f, %.2f) %s (%.2f), WF after t0 %s (%.2f)", detail.empty() ? "" : "; ",
                  name.c_str(), r.rh_point.r, r.rh_point.theta, r.rh_point.rho, r.rh_point.omega,
                  to_string(r.hypothesis.decision).c_str(), r.hypothesis.exponent,
                  to_string(r.conclusion.decision).c_str(), r.conclusion.exponent);
  }
  return {ok, detail};
}

Outcome a11() {
  const auto t0 = std::chrono::steady_clock::now();
  auto& fx = fixture();
  bool ok = true;
  std::string detail;
  int present = 0;
  for (const auto& [name, m] : theorem_models())
    for (InitialProfile p : {InitialProfile::Singular, InitialProfile::Smooth}) {
      const TheoremCheckReport r = theorem_check(m, fx.get(name, m, p), fx.cfg, 1100);
      const int n = static_cast<int>(r.results.size());
      ok = ok && r.contradictions == 0 && 10 * r.agreed >= 9 * n && r.agreed + r.inconclusive == n;
      if (p == InitialProfile::Singular) present += r.present_pairs;
      detail += fmt("%s%s/%s %d/%d agree (%d present, %d absent), %d inconclusive, %d contradictory",
                    detail.empty() ? "" : "; ", name.c_str(), to_string(p).c_str(), r.agreed, n, r.present_pairs,
                    r.absent_pairs, r.inconclusive, r.contradictions);
    }
  const double s = seconds_since(t0);
  ok = ok && present > 0 && s < 1800.0;
  detail += fmt("; %.0f s (< 1800 s)", s);
  return {ok, detail};
}

Outcome a12() {
  const Model m = bump_model();
  const EscapeFunction ef(m.metric, {5.0, 0.3, -1.0, 0.5}, EscapeParams{});
  const EscapeSweepReport r = escape_sweep(ef, 100000, 1212);
  const bool ok = r.phi_min >= 0.0 && r.phi_max <= 1.0 && r.trajectory_phi_min == 1.0 && r.lagrange_max <= 1e-6;
  return {ok, fmt("%zu samples (%zu in the shells): phi in [%.3g, %.3g], phi on trajectory >= %.17g, max D phi/Dt "
                  "%.2e (<= 1e-6)",
                  r.samples, r.in_shell, r.phi_min, r.phi_max, r.trajectory_phi_min, r.lagrange_max)};
}

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4},   {"A5", a5},   {"A6", a6},
      {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}, {"A11", a11}, {"A12", a12}};
  std::set<std::string> chosen(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    if (!chosen.empty() && !chosen.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%-3s %s  %s  [%.1f s]\n", id.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds_since(t0));
  }
  return failed ? 1 : 0;
}

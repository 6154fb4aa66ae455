#include "conic/theorem_check.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "conic/errors.hpp"
#include "conic/fft.hpp"
#include "conic/propagator.hpp"

namespace conic {

namespace {

template <class F>
void parallel_for(int n, int threads, F&& body) {
  threads = std::clamp(threads, 1, std::max(n, 1));
  if (threads == 1) {
    for (int k = 0; k < n; ++k) body(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int k = next++; k < n; k = next++) {
        try {
          body(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

void require_radial(const Model& model) {
  if (!model.metric.is_rotationally_symmetric())
    throw DomainError("theorem check: the radial test family needs a rotationally symmetric metric");
  if (!model.potential.is_zero() && !model.potential.angular.is_constant())
    throw DomainError("theorem check: the potential must not depend on theta");
}

}  // namespace

std::string to_string(InitialProfile p) { return p == InitialProfile::Singular ? "singular" : "smooth"; }

InitialProfile parse_initial_profile(const std::string& s) {
  if (s == "singular") return InitialProfile::Singular;
  if (s == "smooth") return InitialProfile::Smooth;
  throw DomainError("unknown initial profile '" + s + "'");
}

TheoremCheckConfig::TheoremCheckConfig() {
  test.eps0 = 0.25;
  test.levels = 5;
  test.widths = {3.0, 0.5, 0.25, 0.125};
  test.window.margin = 4.0;
  rh_test = test;
  rh_test.widths = {0.2, 0.5, 0.25, 0.125};
}

PolarGrid TheoremCheckConfig::curved_grid() const { return {r_inner, dr, nr_curved, 1}; }

PolarGrid TheoremCheckConfig::free_grid() const { return {r_inner - free_pad * dr, dr, nr_free, 1}; }

void TheoremCheckConfig::validate() const {
  if (!(t0 > 0.0)) throw DomainError("theorem check: t0 must be positive");
  if (!(dr > 0.0) || nr_curved < 16 || nr_free < 16 || free_pad < 0)
    throw DomainError("theorem check: bad grid sizes");
  if (ntheta_test < 1) throw DomainError("theorem check: ntheta_test must be positive");
  if (!(dt > 0.0)) throw DomainError("theorem check: dt must be positive");
  if (placements < 1 || aligned_every < 1) throw DomainError("theorem check: need at least one placement");
  if (!(offset_min > 0.0) || !(offset_max >= offset_min)) throw DomainError("theorem check: bad offset range");
  if (!(rho0 < 0.0)) throw DomainError("theorem check: rho0 must be negative (incoming)");
  const auto& s = state;
  if (!(s.cutoff_halfwidth > 0.0) || !(s.mollifier > 0.0) || !(s.band > 0.0) || !(s.band_taper > 0.0))
    throw DomainError("theorem check: state lengths must be positive");
  const double k_max = s.band + s.band_taper;
  if (k_max * dr > kTwoPi / 6.0) throw DomainError("theorem check: dr does not resolve the band with 6 points");
  // the free evolution moves frequency k by 2 k t0
  const double spread = s.cutoff_halfwidth + 2.0 * k_max * t0;
  const PolarGrid F = free_grid();
  if (s.r_jump - spread < F.r0 || s.r_jump + spread > F.r_max())
    throw DomainError("theorem check: the free grid does not hold e^{i t0 H0} F");
  const PolarGrid C = curved_grid();
  if (s.r_jump + spread > C.r_max() * (1.0 - absorber_width))
    throw DomainError("theorem check: the state reaches the outer absorber");
  if (F.r0 > C.r0 || F.r_max() < C.r_max()) throw DomainError("theorem check: the free grid must cover the curved one");
}

WaveFunction jump_profile(const PolarGrid& F, const JumpStateParams& p, InitialProfile profile) {
  WaveFunction f(Space::Free, F);
  for (int i = 0; i < F.nr; ++i) {
    const double x = F.r(i) - p.r_jump;
    const double c = bump(x / p.cutoff_halfwidth, p.sharpness);
    double h;
    if (profile == InitialProfile::Singular)
      h = x > 0.0 ? 1.0 : (x == 0.0 ? 0.5 : 0.0);
    else
      h = bump_step(x / p.mollifier + 0.5, p.sharpness);
    for (int j = 0; j < F.ntheta; ++j) f.at(i, j) = h * c;
  }
  GridFft fft(F.nr, F.ntheta);
  fft.forward_r(f.data.data());
  for (int k = 0; k < F.nr; ++k) {
    const double kk = std::abs(fft_wavenumber(k, F.nr, F.dr));
    const double keep = (1.0 - bump_step((kk - p.band) / p.band_taper, p.sharpness)) / F.nr;
    for (int j = 0; j < F.ntheta; ++j) f.at(k, j) *= keep;
  }
  fft.backward_r(f.data.data());
  return f;
}

WaveFunction replicate_theta(const WaveFunction& u, int ntheta) {
  if (u.grid.ntheta != 1) throw DomainError("replicate_theta: expects a single-mode state");
  PolarGrid G = u.grid;
  G.ntheta = ntheta;
  WaveFunction v(u.space, G);
  for (int i = 0; i < G.nr; ++i)
    for (int j = 0; j < ntheta; ++j) v.at(i, j) = u.data[i];
  return v;
}

PreparedStates prepare_states(const Model& model, InitialProfile profile, const TheoremCheckConfig& cfg) {
  cfg.validate();
  require_radial(model);
  const ScatteringMetric& g = model.metric;
  const PolarGrid C = cfg.curved_grid(), F = cfg.free_grid();

  PreparedStates s;
  s.profile = profile;
  const WaveFunction f = jump_profile(F, cfg.state, profile);
  s.u0 = J_embed(free_evolve(f, -cfg.t0), g, C);
  const WaveFunction right = free_evolve(J_adjoint(s.u0, g, F), cfg.t0);

  CurvedPropagator P(g, model.potential, C, Scheme::Spectral, cfg.seam_fraction);
  EvolutionConfig ec;
  ec.t_total = cfg.t0;
  ec.dt = cfg.dt;
  ec.scheme = Scheme::Spectral;
  ec.absorber.width_fraction = cfg.absorber_width;
  ec.absorber.strength = cfg.absorber_strength;
  const WaveFunction left = P.evolve(s.u0, ec);

  s.lambda_max = P.lambda_max();
  s.norm_u0 = norm(s.u0, g);
  s.norm_left = norm(left, g);
  s.norm_right = norm(right, g);
  s.left = replicate_theta(left, cfg.ntheta_test);
  s.right = replicate_theta(right, cfg.ntheta_test);
  return s;
}

std::vector<Placement> make_placements(const TheoremCheckConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi), offset(cfg.offset_min, cfg.offset_max);
  std::bernoulli_distribution side(0.5);
  std::vector<Placement> out;
  for (int k = 0; k < cfg.placements; ++k) {
    Placement p;
    p.aligned = k % cfg.aligned_every == 0;
    const double th = angle(rng);
    const double dx = offset(rng);
    const bool outward = side(rng);
    p.offset = p.aligned ? 0.0 : (outward ? dx : -dx);
    p.point = {cfg.state.r_jump + p.offset, th, cfg.rho0, 0.0};
    out.push_back(p);
  }
  return out;
}

std::string to_string(Agreement a) {
  switch (a) {
    case Agreement::Agree: return "agree";
    case Agreement::Inconclusive: return "inconclusive";
    case Agreement::Contradiction: return "contradiction";
  }
  return "?";
}

Agreement compare_verdicts(const WFVerdict& left, const WFVerdict& right) {
  if (left.decision == Decision::Marginal || right.decision == Decision::Marginal) return Agreement::Inconclusive;
  return left.decision == right.decision ? Agreement::Agree : Agreement::Contradiction;
}

std::string TheoremCheckReport::status() const {
  if (contradictions > 0) return "contradiction";
  if (inconclusive > 0) return "inconclusive";
  return "agree";
}

TheoremCheckReport theorem_check(const Model& model, const PreparedStates& states, const TheoremCheckConfig& cfg,
                                 std::uint64_t seed) {
  cfg.validate();
  require_radial(model);
  const ScatteringMetric& g = model.metric;

  TheoremCheckReport rep;
  rep.metric = g.name();
  rep.profile = states.profile;
  rep.t0 = cfg.t0;
  rep.seed = seed;
  rep.norm_u0 = states.norm_u0;
  rep.norm_left = states.norm_left;
  rep.norm_right = states.norm_right;
  rep.lambda_max = states.lambda_max;

  const auto placements = make_placements(cfg, seed);
  rep.results.resize(placements.size());
  for (std::size_t k = 0; k < placements.size(); ++k) {
    auto& res = rep.results[k];
    res.placement = placements[k];
    res.scattering = extract_scattering_data(g, model.potential, res.placement.point, cfg.scattering);
    const auto& sd = res.scattering;
    res.paired = {sd.r_minus, sd.theta_minus_mod(), sd.rho_minus, sd.omega_minus};
  }

  const int n = static_cast<int>(placements.size());
  parallel_for(2 * n, cfg.threads, [&](int item) {
    auto& res = rep.results[item / 2];
    if (item % 2 == 0)
      res.left = wf_test(states.left, res.placement.point, cfg.test, g);
    else
      res.right = wf_test(states.right, res.paired, cfg.test, g);
  });

  for (auto& res : rep.results) {
    res.agreement = compare_verdicts(res.left, res.right);
    switch (res.agreement) {
      case Agreement::Agree:
        ++rep.agreed;
        ++(res.left.decision == Decision::Present ? rep.present_pairs : rep.absent_pairs);
        break;
      case Agreement::Inconclusive: ++rep.inconclusive; break;
      case Agreement::Contradiction: ++rep.contradictions; break;
    }
  }
  return rep;
}

std::string SmoothingReport::status() const {
  if (hypothesis.decision == Decision::Marginal || conclusion.decision == Decision::Marginal) return "inconclusive";
  if (hypothesis.decision != Decision::Absent) return "hypothesis-failed";
  return conclusion.decision == Decision::Absent ? "confirmed" : "violated";
}

SmoothingReport smoothing_check(const Model& model, const PreparedStates& states, const TheoremCheckConfig& cfg,
                                const PhasePoint& point) {
  cfg.validate();
  require_radial(model);
  const ScatteringMetric& g = model.metric;
  SmoothingReport rep;
  rep.metric = g.name();
  rep.profile = states.profile;
  rep.point = point;
  rep.scattering = extract_scattering_data(g, model.potential, point, cfg.scattering);
  const auto& sd = rep.scattering;
  rep.rh_point = {-2.0 * cfg.t0 * sd.rho_minus, sd.theta_minus_mod(), sd.rho_minus, sd.omega_minus};
  rep.hypothesis = wf_rh_test(replicate_theta(states.u0, cfg.ntheta_test), rep.rh_point, cfg.rh_test, g);
  rep.conclusion = wf_test(states.left, point, cfg.test, g);
  return rep;
}

}  // namespace conic

#include "conic/harness.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "conic/errors.hpp"

namespace conic {

namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& p, bool binary = false) {
  std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
  if (!os) throw Error("cannot write " + p.string());
  return os;
}

void write_json(const fs::path& p, const Json& j) {
  auto os = open_out(p);
  os << j.dump(2) << '\n';
}

Json components(const std::array<double, 4>& a) {
  return Json{{"r", json_number(a[0])}, {"theta", json_number(a[1])}, {"rho", json_number(a[2])},
              {"omega", json_number(a[3])}};
}

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << x;
  return os.str();
}

RunResult run_trajectory(const Scenario& sc, const fs::path& out) {
  const auto& t = sc.trajectory;
  std::vector<double> times(t.samples);
  for (int k = 0; k < t.samples; ++k) times[k] = t.t_end * k / (t.samples - 1);
  const Trajectory tr = integrate_flow(sc.model.metric, sc.model.potential, t.start, t.t_end, t.flow, times);
  RunResult res;
  const fs::path p = out / (sc.name + ".csv");
  auto os = open_out(p);
  write_trajectory_csv(os, tr, sc.config);
  res.artifacts.push_back(p);
  res.summary = "trajectory: " + std::to_string(tr.samples.size()) + " samples to t=" + fmt(tr.t_end) +
                ", energy drift " + fmt(tr.energy_drift, 3);
  if (tr.chart_exit) {
    res.exit_code = kExitNumeric;
    res.summary += ", left the end chart";
  }
  return res;
}

RunResult run_scatter(const Scenario& sc, const fs::path& out) {
  const ScatteringData sd = extract_scattering_data(sc.model.metric, sc.model.potential, sc.scatter.start,
                                                    sc.scatter.options);
  Json j = to_json(sd);
  j["config"] = sc.config;
  RunResult res;
  const fs::path p = out / (sc.name + ".json");
  write_json(p, j);
  res.artifacts.push_back(p);
  res.summary = "scatter-data: (" + fmt(sd.r_minus, 8) + ", " + fmt(sd.theta_minus, 8) + ", " + fmt(sd.rho_minus, 8) +
                ", " + fmt(sd.omega_minus, 8) + ") status " + sd.status;
  return res;
}

RunResult run_diffeo(const Scenario& sc, const fs::path& out) {
  const auto& d = sc.diffeo;
  const DiffeoReport rep =
      check_local_diffeo(sc.model.metric, sc.model.potential, d.window, d.t_ladder, d.samples_per_axis, d.flow);
  Json j = to_json(rep);
  j["config"] = sc.config;
  RunResult res;
  const fs::path p = out / (sc.name + ".json");
  write_json(p, j);
  res.artifacts.push_back(p);
  double sup = 0.0;
  for (const auto& e : rep.entries) sup = std::max(sup, e.sup_norm);
  res.summary = "diffeo-check: sup |J - I| = " + fmt(sup, 3) + (rep.passed ? ", passed" : ", failed");
  if (!rep.passed) res.exit_code = kExitNumeric;
  return res;
}

Json moments_json(const Moments& m) {
  return Json{{"r", m.r}, {"theta", m.theta}, {"rho", m.rho}, {"omega", m.omega}, {"mass", m.mass}};
}

RunResult run_evolve(const Scenario& sc, const fs::path& out) {
  const auto& e = sc.evolve;
  const ScatteringMetric& g = sc.model.metric;
  const WaveFunction u = build_state(e.state, g);
  WaveFunction v;
  Json extra = Json::object();
  if (sc.kind == ScenarioKind::EvolveFree) {
    if (u.space != Space::Free) throw DomainError("evolve-free: the state lives on the curved space");
    v = free_evolve(u, e.t);
  } else {
    if (u.space != Space::Curved) throw DomainError("evolve-curved: the state lives on the free space");
    const CurvedPropagator P(g, sc.model.potential, u.grid, e.evolution.scheme, e.seam_fraction);
    v = P.evolve(u, e.evolution);
    extra["lambda_min"] = P.lambda_min();
    extra["lambda_max"] = P.lambda_max();
  }
  const double eps = e.state.type == "coherent" ? e.state.eps : 1.0;
  RunResult res;
  const fs::path snap = out / (sc.name + (e.binary_snapshot ? ".snapshot.bin" : ".snapshot.csv"));
  {
    auto os = open_out(snap, e.binary_snapshot);
    if (e.binary_snapshot) {
      write_snapshot_binary(os, v);
    } else {
      os << "# config=" << sc.config.dump() << '\n';
      write_snapshot_csv(os, v);
    }
  }
  const double n0 = norm(u, g), n1 = norm(v, g);
  Json j{{"kind", to_string(sc.kind)},
         {"t", e.t},
         {"grid", {{"r0", u.grid.r0}, {"dr", u.grid.dr}, {"nr", u.grid.nr}, {"ntheta", u.grid.ntheta}}},
         {"norm_before", n0},
         {"norm_after", n1},
         {"moments_eps", eps},
         {"moments_before", moments_json(moments(u, g, eps))},
         {"moments_after", moments_json(moments(v, g, eps))},
         {"snapshot", snap.filename().string()}};
  j.update(extra);
  j["config"] = sc.config;
  const fs::path p = out / (sc.name + ".json");
  write_json(p, j);
  res.artifacts = {p, snap};
  res.summary = to_string(sc.kind) + ": t=" + fmt(e.t) + ", norm " + fmt(n0, 10) + " -> " + fmt(n1, 10);
  return res;
}

RunResult run_wf(const Scenario& sc, const fs::path& out) {
  const auto& w = sc.wf;
  const ScatteringMetric& g = sc.model.metric;
  const WaveFunction u = build_state(w.state, g);
  const WFVerdict v = w.scaling == Quantization::Standard ? wf_test(u, w.point, w.test, g)
                                                          : wf_rh_test(u, w.point, w.test, g);
  Json j = to_json(v);
  j["config"] = sc.config;
  RunResult res;
  const fs::path p = out / (sc.name + ".json"), lp = out / (sc.name + ".ladder.csv");
  write_json(p, j);
  auto os = open_out(lp);
  write_ladder_csv(os, v, sc.config);
  res.artifacts = {p, lp};
  res.summary = "wf-test: " + to_string(v.decision) + ", exponent " + fmt(v.exponent, 3);
  if (!v.diagnostic.empty()) res.summary += " (" + v.diagnostic + ")";
  return res;
}

RunResult run_theorem(const Scenario& sc, const fs::path& out, int threads, bool smoothing) {
  TheoremCheckConfig cfg = sc.theorem.check;
  cfg.threads = threads;
  Json reports = Json::array();
  RunResult res;
  int inconclusive = 0, failed = 0;
  std::string parts;
  const fs::path lp = out / (sc.name + ".ladders.csv");
  auto ladders = open_out(lp);
  ladders << "# config=" << sc.config.dump() << '\n';
  ladders << std::setprecision(17);
  if (smoothing)
    ladders << "profile,test,eps,norm\n";
  else
    ladders << "profile,placement,side,eps,norm\n";
  for (InitialProfile prof : sc.theorem.profiles) {
    const PreparedStates st = prepare_states(sc.model, prof, cfg);
    const std::string name = to_string(prof);
    if (smoothing) {
      const SmoothingReport r = smoothing_check(sc.model, st, cfg, sc.theorem.point);
      reports.push_back(to_json(r));
      const std::string s = r.status();
      if (s == "inconclusive") ++inconclusive;
      if (s == "violated") ++failed;
      parts += (parts.empty() ? "" : ", ") + name + " " + s;
      for (const auto& p : r.hypothesis.ladder) ladders << name << ",hypothesis," << p.eps << ',' << p.norm << '\n';
      for (const auto& p : r.conclusion.ladder) ladders << name << ",conclusion," << p.eps << ',' << p.norm << '\n';
    } else {
      const TheoremCheckReport r = theorem_check(sc.model, st, cfg, sc.seed);
      reports.push_back(to_json(r));
      inconclusive += r.inconclusive;
      failed += r.contradictions;
      parts += (parts.empty() ? "" : ", ") + name + " " + std::to_string(r.agreed) + "/" +
               std::to_string(r.results.size()) + " agree";
      for (std::size_t k = 0; k < r.results.size(); ++k) {
        for (const auto& p : r.results[k].left.ladder)
          ladders << name << ',' << k << ",left," << p.eps << ',' << p.norm << '\n';
        for (const auto& p : r.results[k].right.ladder)
          ladders << name << ',' << k << ",right," << p.eps << ',' << p.norm << '\n';
      }
    }
  }
  const std::string status = failed ? (smoothing ? "violated" : "contradiction")
                                    : (inconclusive ? "inconclusive" : (smoothing ? "confirmed" : "agree"));
  Json j{{"kind", to_string(sc.kind)}, {"status", status}, {"reports", reports}, {"config", sc.config}};
  const fs::path p = out / (sc.name + ".json");
  write_json(p, j);
  res.artifacts = {p, lp};
  res.summary = to_string(sc.kind) + ": " + status + " (" + parts + ")";
  if (failed)
    res.exit_code = kExitNumeric;
  else if (inconclusive)
    res.exit_code = kExitInconclusive;
  return res;
}

}  // namespace

Json json_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

Json to_json(const PhasePoint& p) {
  return Json{{"r", p.r}, {"theta", p.theta}, {"rho", p.rho}, {"omega", p.omega}};
}

Json to_json(const ScatteringData& sd) {
  Json ladder = Json::array();
  for (const auto& e : sd.ladder)
    ladder.push_back({{"t", e.t}, {"r", e.s.r}, {"theta", e.s.theta}, {"rho", e.s.rho}, {"omega", e.s.omega}});
  Json fb{{"r", sd.fallback[0]}, {"theta", sd.fallback[1]}, {"rho", sd.fallback[2]}, {"omega", sd.fallback[3]}};
  return Json{{"r_minus", sd.r_minus},
              {"theta_minus", sd.theta_minus},
              {"rho_minus", sd.rho_minus},
              {"omega_minus", sd.omega_minus},
              {"err", components(sd.err)},
              {"beta_fit", components(sd.beta)},
              {"status", sd.status},
              {"theta_minus_mod", sd.theta_minus_mod()},
              {"winding", sd.winding()},
              {"p0", sd.p0},
              {"mu_used", sd.mu_used},
              {"fallback", fb},
              {"ladder", ladder}};
}

Json to_json(const WFVerdict& v) {
  Json ladder = Json::array();
  for (const auto& p : v.ladder) ladder.push_back({{"eps", p.eps}, {"norm", p.norm}});
  return Json{{"point", to_json(v.point)},
              {"scaling", to_string(v.scaling)},
              {"ladder", ladder},
              {"exponent", json_number(v.exponent)},
              {"decision", to_string(v.decision)},
              {"threshold", v.threshold},
              {"marginal_low", v.marginal_low},
              {"monotone", v.monotone},
              {"floor_hit", v.floor_hit},
              {"diagnostic", v.diagnostic},
              {"symbol", {{"widths", v.widths}, {"sharpness", v.sharpness}}},
              {"window", {{"margin", v.window_margin}}}};
}

Json to_json(const DiffeoReport& r) {
  Json entries = Json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"t", e.t}, {"sup_norm", e.sup_norm}, {"failed_starts", e.failed_starts}});
  return Json{{"entries", entries}, {"samples", r.samples}, {"convergent", r.convergent}, {"passed", r.passed}};
}

Json to_json(const TheoremCheckReport& r) {
  Json placements = Json::array();
  for (const auto& p : r.results)
    placements.push_back({{"point", to_json(p.placement.point)},
                          {"offset", p.placement.offset},
                          {"aligned", p.placement.aligned},
                          {"scattering", to_json(p.scattering)},
                          {"paired_point", to_json(p.paired)},
                          {"left", to_json(p.left)},
                          {"right", to_json(p.right)},
                          {"agreement", to_string(p.agreement)}});
  return Json{{"metric", r.metric},
              {"profile", to_string(r.profile)},
              {"t0", r.t0},
              {"seed", r.seed},
              {"status", r.status()},
              {"agreed", r.agreed},
              {"present_pairs", r.present_pairs},
              {"absent_pairs", r.absent_pairs},
              {"inconclusive", r.inconclusive},
              {"contradictions", r.contradictions},
              {"norm_u0", r.norm_u0},
              {"norm_left", r.norm_left},
              {"norm_right", r.norm_right},
              {"lambda_max", r.lambda_max},
              {"placements", placements}};
}

Json to_json(const SmoothingReport& r) {
  return Json{{"metric", r.metric},
              {"profile", to_string(r.profile)},
              {"status", r.status()},
              {"point", to_json(r.point)},
              {"scattering", to_json(r.scattering)},
              {"rh_point", to_json(r.rh_point)},
              {"hypothesis", to_json(r.hypothesis)},
              {"conclusion", to_json(r.conclusion)}};
}

Json to_json(const EscapeSweepReport& r) {
  return Json{{"samples", r.samples},
              {"phi_min", r.phi_min},
              {"phi_max", r.phi_max},
              {"lagrange_min", r.lagrange_min},
              {"lagrange_max", r.lagrange_max},
              {"trajectory_phi_min", r.trajectory_phi_min},
              {"trajectory_lagrange_max", r.trajectory_lagrange_max},
              {"in_shell", r.in_shell}};
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const Json& config) {
  os << "# config=" << config.dump() << '\n';
  os << "t,r,theta_unwrapped,rho,omega,p_rel_drift\n";
  os << std::setprecision(17);
  for (const auto& s : tr.samples)
    os << s.t << ',' << s.z.r << ',' << s.z.theta << ',' << s.z.rho << ',' << s.z.omega << ',' << s.p_rel_drift
       << '\n';
}

void write_ladder_csv(std::ostream& os, const WFVerdict& v, const Json& config) {
  os << "# config=" << config.dump() << '\n';
  os << "eps,norm\n";
  os << std::setprecision(17);
  for (const auto& p : v.ladder) os << p.eps << ',' << p.norm << '\n';
}

Json metrics_catalog() {
  Json out = Json::array();
  for (const auto& z : builtin_metrics()) {
    Json params = Json::object();
    for (const auto& [k, v] : z.defaults) params[k] = v;
    out.push_back({{"name", z.name}, {"description", z.description}, {"params", params}});
  }
  return out;
}

WaveFunction build_state(const StateSpec& s, const ScatteringMetric& g) {
  if (s.type == "snapshot") {
    const bool binary = fs::path(s.path).extension() == ".bin";
    std::ifstream in(s.path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw ConfigError("cannot open snapshot " + s.path);
    return binary ? read_snapshot_binary(in) : read_snapshot_csv(in);
  }
  const PolarGrid G = PolarGrid::covering(s.r_lo, s.r_hi, s.dr, s.ntheta);
  if (s.type == "coherent") return make_coherent_state(s.center, s.eps, G, s.space, g);
  WaveFunction u = jump_profile(G, s.jump, s.profile);
  u.space = s.space;
  return u;
}

RunResult run_scenario(Scenario sc, const RunOptions& opt) {
  if (opt.seed) {
    sc.seed = *opt.seed;
    sc.config["seed"] = *opt.seed;
  }
  if (opt.threads < 1) throw ConfigError("--threads must be positive");
  std::error_code ec;
  fs::create_directories(opt.out_dir, ec);
  if (ec) throw Error("cannot create output directory " + opt.out_dir.string() + ": " + ec.message());
  switch (sc.kind) {
    case ScenarioKind::Trajectory: return run_trajectory(sc, opt.out_dir);
    case ScenarioKind::ScatterData: return run_scatter(sc, opt.out_dir);
    case ScenarioKind::DiffeoCheck: return run_diffeo(sc, opt.out_dir);
    case ScenarioKind::EvolveFree:
    case ScenarioKind::EvolveCurved: return run_evolve(sc, opt.out_dir);
    case ScenarioKind::WfTest: return run_wf(sc, opt.out_dir);
    case ScenarioKind::SmoothingCheck: return run_theorem(sc, opt.out_dir, opt.threads, true);
    case ScenarioKind::TheoremCheck: return run_theorem(sc, opt.out_dir, opt.threads, false);
  }
  throw Error("unknown scenario kind");
}

}  // namespace conic

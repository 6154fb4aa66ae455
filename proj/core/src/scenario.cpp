#include "conic/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "conic/errors.hpp"

namespace conic {

namespace {

using Path = std::vector<std::string>;

std::string join(const Path& p) {
  std::string s;
  for (const auto& k : p) s += (s.empty() ? "" : ".") + k;
  return s.empty() ? "<root>" : s;
}

class Reader {
 public:
  Reader(const std::string& text, std::string origin) : text_(text), origin_(std::move(origin)) {}

  int line_at(std::size_t pos) const {
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + std::min(pos, text_.size()), '\n'));
  }

  // Line of the last key of path that can be found, searching keys in order.
  int line_of(const Path& path) const {
    std::size_t pos = 0, found = std::string::npos;
    for (const auto& key : path) {
      const std::string quoted = "\"" + key + "\"";
      std::size_t at = pos;
      bool hit = false;
      while ((at = text_.find(quoted, at)) != std::string::npos) {
        std::size_t after = at + quoted.size();
        while (after < text_.size() && std::isspace(static_cast<unsigned char>(text_[after]))) ++after;
        if (after < text_.size() && text_[after] == ':') {
          hit = true;
          break;
        }
        at += quoted.size();
      }
      if (!hit) break;
      found = at;
      pos = at + quoted.size();
    }
    return found == std::string::npos ? 1 : line_at(found);
  }

  [[noreturn]] void fail(const Path& path, const std::string& msg) const {
    throw ConfigError(origin_ + ":" + std::to_string(line_of(path)) + ": " + msg);
  }

  [[noreturn]] void fail_at(std::size_t byte, const std::string& msg) const {
    throw ConfigError(origin_ + ":" + std::to_string(line_at(byte)) + ": " + msg);
  }

 private:
  const std::string& text_;
  std::string origin_;
};

class Node {
 public:
  Node(Json& j, Path path, const Reader& r) : j_(&j), path_(std::move(path)), r_(&r) {
    if (!j_->is_object()) r_->fail(path_, "'" + join(path_) + "' must be an object");
  }

  const Path& path() const { return path_; }
  bool has(const std::string& key) const { return j_->contains(key); }
  Json& raw(const std::string& key) { return (*j_)[key]; }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const { r_->fail(sub(key), msg); }

  Node child(const std::string& key, bool required) {
    if (!has(key)) {
      if (required) r_->fail(path_, "missing required object '" + join(sub(key)) + "'");
      (*j_)[key] = Json::object();
    }
    return Node((*j_)[key], sub(key), *r_);
  }

  double num(const std::string& key, std::optional<double> def = std::nullopt) {
    if (!has(key)) {
      if (!def) r_->fail(path_, "missing required number '" + join(sub(key)) + "'");
      (*j_)[key] = *def;
      return *def;
    }
    const Json& v = (*j_)[key];
    if (!v.is_number()) r_->fail(sub(key), "'" + join(sub(key)) + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) r_->fail(sub(key), "'" + join(sub(key)) + "' must be finite");
    return x;
  }

  double positive(const std::string& key, std::optional<double> def = std::nullopt) {
    const double x = num(key, def);
    if (!(x > 0.0)) r_->fail(sub(key), "'" + join(sub(key)) + "' must be positive");
    return x;
  }

  long integer(const std::string& key, std::optional<long> def = std::nullopt) {
    if (!has(key)) {
      if (!def) r_->fail(path_, "missing required integer '" + join(sub(key)) + "'");
      (*j_)[key] = *def;
      return *def;
    }
    const Json& v = (*j_)[key];
    if (!v.is_number_integer()) r_->fail(sub(key), "'" + join(sub(key)) + "' must be an integer");
    return v.get<long>();
  }

  long count(const std::string& key, std::optional<long> def = std::nullopt, long min = 1) {
    const long n = integer(key, def);
    if (n < min) r_->fail(sub(key), "'" + join(sub(key)) + "' must be at least " + std::to_string(min));
    return n;
  }

  std::string str(const std::string& key, std::optional<std::string> def = std::nullopt) {
    if (!has(key)) {
      if (!def) r_->fail(path_, "missing required string '" + join(sub(key)) + "'");
      (*j_)[key] = *def;
      return *def;
    }
    const Json& v = (*j_)[key];
    if (!v.is_string()) r_->fail(sub(key), "'" + join(sub(key)) + "' must be a string");
    return v.get<std::string>();
  }

  std::string choice(const std::string& key, const std::vector<std::string>& allowed,
                     std::optional<std::string> def = std::nullopt) {
    const std::string s = str(key, def);
    if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      r_->fail(sub(key), "'" + join(sub(key)) + "' is '" + s + "'; expected one of " + list);
    }
    return s;
  }

  bool flag(const std::string& key, bool def) {
    if (!has(key)) {
      (*j_)[key] = def;
      return def;
    }
    const Json& v = (*j_)[key];
    if (!v.is_boolean()) r_->fail(sub(key), "'" + join(sub(key)) + "' must be true or false");
    return v.get<bool>();
  }

  std::vector<double> nums(const std::string& key, std::optional<std::vector<double>> def = std::nullopt,
                           std::size_t size = 0) {
    if (!has(key)) {
      if (!def) r_->fail(path_, "missing required array '" + join(sub(key)) + "'");
      (*j_)[key] = *def;
      return *def;
    }
    const Json& v = (*j_)[key];
    if (!v.is_array()) r_->fail(sub(key), "'" + join(sub(key)) + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) r_->fail(sub(key), "'" + join(sub(key)) + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
    if (size && out.size() != size)
      r_->fail(sub(key), "'" + join(sub(key)) + "' must have " + std::to_string(size) + " entries");
    return out;
  }

  void only(std::initializer_list<const char*> allowed) const {
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; });
      if (!ok) r_->fail(sub(it.key()), "unknown key '" + join(sub(it.key())) + "'");
    }
  }

 private:
  Path sub(const std::string& key) const {
    Path p = path_;
    p.push_back(key);
    return p;
  }

  Json* j_;
  Path path_;
  const Reader* r_;
};

// {r, theta, rho, omega} or Cartesian {x: [x1, x2], xi: [xi1, xi2]}
PhasePoint read_point(Node n) {
  if (n.has("x") || n.has("xi")) {
    n.only({"x", "xi"});
    const auto x = n.nums("x", std::nullopt, 2);
    const auto xi = n.nums("xi", std::nullopt, 2);
    const double r = std::hypot(x[0], x[1]);
    if (!(r > 1.0)) n.fail("x", "'" + join(n.path()) + ".x' must lie outside the unit disc (end chart)");
    return {r, std::atan2(x[1], x[0]), (x[0] * xi[0] + x[1] * xi[1]) / r, x[0] * xi[1] - x[1] * xi[0]};
  }
  n.only({"r", "theta", "rho", "omega"});
  PhasePoint p{n.num("r"), n.num("theta", 0.0), n.num("rho"), n.num("omega", 0.0)};
  if (!(p.r > 1.0)) n.fail("r", "'" + join(n.path()) + ".r' must exceed 1 (end chart)");
  return p;
}

FlowOptions read_flow(Node& n, double default_tol) {
  FlowOptions f;
  f.tol = n.positive("tol", default_tol);
  f.include_potential = n.flag("include_potential", false);
  return f;
}

void read_test_config(Node n, TestConfig& t) {
  n.only({"eps0", "levels", "widths", "sharpness", "window_margin", "threshold", "marginal_low", "floor",
          "monotone_slack"});
  t.eps0 = n.positive("eps0", t.eps0);
  t.levels = static_cast<int>(n.count("levels", t.levels, 5));
  const auto w = n.nums("widths", std::vector<double>(t.widths.begin(), t.widths.end()), 4);
  for (int k = 0; k < 4; ++k) {
    if (!(w[k] > 0.0)) n.fail("widths", "widths must be positive");
    t.widths[k] = w[k];
  }
  t.sharpness = n.positive("sharpness", t.sharpness);
  t.window.margin = n.positive("window_margin", t.window.margin);
  t.window.sharpness = t.sharpness;
  t.threshold = n.positive("threshold", t.threshold);
  t.marginal_low = n.positive("marginal_low", t.marginal_low);
  if (!(t.marginal_low <= t.threshold)) n.fail("marginal_low", "marginal_low must not exceed threshold");
  t.floor = n.positive("floor", t.floor);
  t.monotone_slack = n.num("monotone_slack", t.monotone_slack);
  if (t.monotone_slack < 0.0) n.fail("monotone_slack", "monotone_slack must be non-negative");
}

void read_jump(Node& n, JumpStateParams& j) {
  j.r_jump = n.positive("r_jump", j.r_jump);
  j.cutoff_halfwidth = n.positive("cutoff_halfwidth", j.cutoff_halfwidth);
  j.mollifier = n.positive("mollifier", j.mollifier);
  j.band = n.positive("band", j.band);
  j.band_taper = n.positive("band_taper", j.band_taper);
  j.sharpness = n.positive("sharpness", j.sharpness);
}

StateSpec read_state(Node n) {
  StateSpec s;
  s.type = n.choice("type", {"coherent", "jump", "snapshot"});
  if (s.type == "snapshot") {
    n.only({"type", "path"});
    s.path = n.str("path");
    return s;
  }
  s.space = n.choice("space", {"free", "curved"}, std::string("curved")) == "free" ? Space::Free : Space::Curved;
  Node grid = n.child("grid", true);
  grid.only({"r_lo", "r_hi", "dr", "ntheta"});
  s.r_lo = grid.num("r_lo");
  s.r_hi = grid.num("r_hi");
  s.dr = grid.positive("dr");
  s.ntheta = static_cast<int>(grid.count("ntheta", 64));
  if (!(s.r_hi > s.r_lo)) grid.fail("r_hi", "grid r_hi must exceed r_lo");
  if (s.space == Space::Curved && !(s.r_lo > 1.0)) grid.fail("r_lo", "curved grids must start beyond r = 1");
  if (s.type == "coherent") {
    n.only({"type", "space", "grid", "center", "eps"});
    s.center = read_point(n.child("center", true));
    s.eps = n.positive("eps", 1.0 / 16.0);
  } else {
    n.only({"type", "space", "grid", "profile", "r_jump", "cutoff_halfwidth", "mollifier", "band", "band_taper",
            "sharpness"});
    s.profile = parse_initial_profile(n.choice("profile", {"singular", "smooth"}, std::string("singular")));
    read_jump(n, s.jump);
  }
  return s;
}

void read_theorem(Node n, Scenario& sc, bool smoothing) {
  auto& c = sc.theorem.check;
  if (smoothing)
    n.only({"t0", "state", "grid", "evolution", "test", "rh_test", "rho0", "point", "profiles", "scattering"});
  else
    n.only({"t0", "state", "grid", "evolution", "test", "rho0", "placements", "aligned_every", "offset_min",
            "offset_max", "profiles", "scattering"});
  c.t0 = n.positive("t0", 0.5);

  Node st = n.child("state", false);
  st.only({"r_jump", "cutoff_halfwidth", "mollifier", "band", "band_taper", "sharpness"});
  read_jump(st, c.state);

  Node gr = n.child("grid", false);
  gr.only({"dr", "r_inner", "nr_curved", "free_pad", "nr_free", "ntheta_test"});
  c.dr = gr.positive("dr", c.dr);
  c.r_inner = gr.num("r_inner", c.r_inner);
  if (!(c.r_inner > 1.0)) gr.fail("r_inner", "r_inner must exceed 1");
  c.nr_curved = static_cast<int>(gr.count("nr_curved", c.nr_curved, 16));
  c.free_pad = static_cast<int>(gr.count("free_pad", c.free_pad, 0));
  c.nr_free = static_cast<int>(gr.count("nr_free", c.nr_free, 16));
  c.ntheta_test = static_cast<int>(gr.count("ntheta_test", c.ntheta_test));

  Node ev = n.child("evolution", false);
  ev.only({"dt", "absorber_width", "absorber_strength", "seam_fraction"});
  c.dt = ev.positive("dt", c.dt);
  c.absorber_width = ev.positive("absorber_width", c.absorber_width);
  c.absorber_strength = ev.num("absorber_strength", c.absorber_strength);
  c.seam_fraction = ev.num("seam_fraction", c.seam_fraction);
  if (c.seam_fraction < 0.0 || c.seam_fraction >= 0.5) ev.fail("seam_fraction", "seam_fraction must lie in [0, 0.5)");

  read_test_config(n.child("test", false), c.test);
  c.rho0 = n.num("rho0", c.rho0);
  if (!(c.rho0 < 0.0)) n.fail("rho0", "rho0 must be negative");

  Node sd = n.child("scattering", false);
  sd.only({"t0", "tol", "min_doublings", "max_doublings", "fit_points"});
  c.scattering.t0 = sd.positive("t0", c.scattering.t0);
  c.scattering.flow.tol = sd.positive("tol", c.scattering.flow.tol);
  c.scattering.min_doublings = static_cast<int>(sd.count("min_doublings", c.scattering.min_doublings, 3));
  c.scattering.max_doublings =
      static_cast<int>(sd.count("max_doublings", c.scattering.max_doublings, c.scattering.min_doublings));
  c.scattering.fit_points = static_cast<std::size_t>(sd.count("fit_points", c.scattering.fit_points, 3));

  if (smoothing) {
    read_test_config(n.child("rh_test", false), c.rh_test);
    Node p = n.child("point", false);
    if (!p.has("r")) p.raw("r") = c.state.r_jump;
    if (!p.has("rho")) p.raw("rho") = c.rho0;
    sc.theorem.point = read_point(p);
  } else {
    c.placements = static_cast<int>(n.count("placements", c.placements));
    c.aligned_every = static_cast<int>(n.count("aligned_every", c.aligned_every));
    c.offset_min = n.positive("offset_min", c.offset_min);
    c.offset_max = n.positive("offset_max", c.offset_max);
    if (c.offset_max < c.offset_min) n.fail("offset_max", "offset_max must not be below offset_min");
  }

  if (!n.has("profiles")) n.raw("profiles") = smoothing ? Json::array({"smooth"}) : Json::array({"singular", "smooth"});
  const Json& pr = n.raw("profiles");
  if (!pr.is_array() || pr.empty()) n.fail("profiles", "'profiles' must be a non-empty array of strings");
  for (const auto& e : pr) {
    if (!e.is_string() || (e != "singular" && e != "smooth"))
      n.fail("profiles", "'profiles' entries must be \"singular\" or \"smooth\"");
    sc.theorem.profiles.push_back(parse_initial_profile(e.get<std::string>()));
  }
  try {
    c.validate();
  } catch (const DomainError& e) {
    n.fail("t0", e.what());
  }
}

}  // namespace

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Trajectory: return "trajectory";
    case ScenarioKind::ScatterData: return "scatter-data";
    case ScenarioKind::DiffeoCheck: return "diffeo-check";
    case ScenarioKind::EvolveFree: return "evolve-free";
    case ScenarioKind::EvolveCurved: return "evolve-curved";
    case ScenarioKind::WfTest: return "wf-test";
    case ScenarioKind::SmoothingCheck: return "smoothing-check";
    case ScenarioKind::TheoremCheck: return "theorem-check";
  }
  return "?";
}

const std::vector<ScenarioKind>& scenario_kinds() {
  static const std::vector<ScenarioKind> kinds{
      ScenarioKind::Trajectory, ScenarioKind::ScatterData,  ScenarioKind::DiffeoCheck,    ScenarioKind::EvolveFree,
      ScenarioKind::EvolveCurved, ScenarioKind::WfTest,     ScenarioKind::SmoothingCheck, ScenarioKind::TheoremCheck};
  return kinds;
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  const Reader reader(text, origin);
  Scenario sc;
  sc.origin = origin;
  try {
    sc.config = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::string what = e.what();
    if (auto p = what.find("parse error"); p != std::string::npos) what = what.substr(p);
    reader.fail_at(e.byte > 0 ? e.byte - 1 : 0, what);
  }
  Node root(sc.config, {}, reader);

  sc.version = static_cast<int>(root.integer("version"));
  if (sc.version != kScenarioVersion)
    root.fail("version", "unsupported config version " + std::to_string(sc.version) + " (this build reads " +
                             std::to_string(kScenarioVersion) + ")");
  std::vector<std::string> names;
  for (auto k : scenario_kinds()) names.push_back(to_string(k));
  const std::string kind = root.choice("kind", names);
  sc.kind = scenario_kinds()[std::find(names.begin(), names.end(), kind) - names.begin()];
  root.only({"version", "kind", "name", "seed", "model", kind.c_str()});
  sc.name = root.str("name", kind);
  if (sc.name.empty() || sc.name.find('/') != std::string::npos) root.fail("name", "'name' must be a plain file stem");
  const long seed = root.integer("seed", 0);
  if (seed < 0) root.fail("seed", "'seed' must be non-negative");
  sc.seed = static_cast<std::uint64_t>(seed);

  Node model = root.child("model", false);
  model.only({"name", "params"});
  sc.model_name = model.str("name", std::string("flat"));
  Node params = model.child("params", false);
  {
    std::vector<std::string> keys;
    for (auto it = model.raw("params").begin(); it != model.raw("params").end(); ++it) keys.push_back(it.key());
    for (const auto& k : keys) sc.model_params[k] = params.num(k);
  }
  try {
    sc.model = make_builtin_model(sc.model_name, sc.model_params);
  } catch (const Error& e) {
    model.fail("name", std::string("model: ") + e.what());
  }
  for (const auto& z : builtin_metrics())
    if (z.name == sc.model_name)
      for (const auto& [k, v] : z.defaults)
        if (!sc.model_params.count(k)) model.raw("params")[k] = v;

  Node body = root.child(kind, true);
  switch (sc.kind) {
    case ScenarioKind::Trajectory: {
      body.only({"start", "t_end", "samples", "tol", "include_potential"});
      auto& t = sc.trajectory;
      t.start = read_point(body.child("start", true));
      t.t_end = body.num("t_end");
      if (!(t.t_end < 0.0)) body.fail("t_end", "'t_end' must be negative (backward flow)");
      t.samples = static_cast<int>(body.count("samples", 101, 2));
      t.flow = read_flow(body, 1e-10);
      break;
    }
    case ScenarioKind::ScatterData: {
      body.only({"start", "t0", "tol", "min_doublings", "max_doublings", "fit_points", "include_potential"});
      auto& s = sc.scatter;
      s.start = read_point(body.child("start", true));
      s.options.t0 = body.positive("t0", s.options.t0);
      s.options.flow = read_flow(body, s.options.flow.tol);
      s.options.min_doublings = static_cast<int>(body.count("min_doublings", s.options.min_doublings, 3));
      s.options.max_doublings =
          static_cast<int>(body.count("max_doublings", s.options.max_doublings, s.options.min_doublings));
      s.options.fit_points = static_cast<std::size_t>(body.count("fit_points", s.options.fit_points, 3));
      break;
    }
    case ScenarioKind::DiffeoCheck: {
      body.only({"lo", "hi", "t_ladder", "samples_per_axis", "tol", "include_potential"});
      auto& d = sc.diffeo;
      d.window.lo = read_point(body.child("lo", true));
      d.window.hi = read_point(body.child("hi", true));
      const auto& lo = d.window.lo;
      const auto& hi = d.window.hi;
      if (hi.r < lo.r || hi.theta < lo.theta || hi.rho < lo.rho || hi.omega < lo.omega)
        body.fail("hi", "window 'hi' must dominate 'lo' componentwise");
      d.t_ladder = body.nums("t_ladder", std::vector<double>{-16, -32, -64, -128, -256, -512});
      if (d.t_ladder.empty()) body.fail("t_ladder", "'t_ladder' must not be empty");
      for (double t : d.t_ladder)
        if (!(t < 0.0)) body.fail("t_ladder", "'t_ladder' times must be negative");
      d.samples_per_axis = static_cast<int>(body.count("samples_per_axis", 3, 2));
      d.flow = read_flow(body, 1e-10);
      break;
    }
    case ScenarioKind::EvolveFree:
    case ScenarioKind::EvolveCurved: {
      const bool curved = sc.kind == ScenarioKind::EvolveCurved;
      if (curved)
        body.only({"state", "t", "dt", "scheme", "absorber", "series_tol", "phase_budget", "seam_fraction",
                   "snapshot_format"});
      else
        body.only({"state", "t", "snapshot_format"});
      auto& e = sc.evolve;
      e.state = read_state(body.child("state", true));
      if (e.state.type != "snapshot" && e.state.space != (curved ? Space::Curved : Space::Free))
        body.fail("state", std::string("state space must be '") + (curved ? "curved" : "free") + "'");
      e.t = body.num("t");
      e.evolution.t_total = e.t;
      e.binary_snapshot = body.choice("snapshot_format", {"csv", "binary"}, std::string("csv")) == "binary";
      if (curved) {
        e.evolution.dt = body.positive("dt", 1e-2);
        e.evolution.scheme = body.choice("scheme", {"spectral", "crank-nicolson"}, std::string("spectral")) ==
                                     "spectral"
                                 ? Scheme::Spectral
                                 : Scheme::CrankNicolson;
        Node ab = body.child("absorber", false);
        ab.only({"width_fraction", "strength", "power"});
        e.evolution.absorber.width_fraction = ab.positive("width_fraction", 0.1);
        e.evolution.absorber.strength = ab.num("strength", 0.0);
        if (e.evolution.absorber.strength < 0.0) ab.fail("strength", "absorber strength must be non-negative");
        e.evolution.absorber.power = static_cast<int>(ab.count("power", 2));
        e.evolution.series_tol = body.positive("series_tol", 1e-14);
        e.evolution.phase_budget = body.positive("phase_budget", 1e-2);
        e.seam_fraction = body.num("seam_fraction", 0.0);
        if (e.seam_fraction < 0.0 || e.seam_fraction >= 0.5)
          body.fail("seam_fraction", "seam_fraction must lie in [0, 0.5)");
      }
      break;
    }
    case ScenarioKind::WfTest: {
      body.only({"state", "point", "scaling", "test"});
      auto& w = sc.wf;
      w.state = read_state(body.child("state", true));
      w.point = read_point(body.child("point", true));
      w.scaling = body.choice("scaling", {"standard", "radially-homogeneous"}, std::string("standard")) == "standard"
                      ? Quantization::Standard
                      : Quantization::RadiallyHomogeneous;
      read_test_config(body.child("test", false), w.test);
      break;
    }
    case ScenarioKind::SmoothingCheck: read_theorem(body, sc, true); break;
    case ScenarioKind::TheoremCheck: read_theorem(body, sc, false); break;
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ":1: cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

}  // namespace conic

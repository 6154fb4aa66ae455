#pragma once

// Versioned JSON scenario files. Parsing validates everything the chosen
// kind needs and fills in defaults, so Scenario::config is the effective
// configuration echoed into artifacts. Errors are ConfigError with a
// "<origin>:<line>: " prefix.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "conic/classical.hpp"
#include "conic/microlocal.hpp"
#include "conic/propagator.hpp"
#include "conic/quantum.hpp"
#include "conic/theorem_check.hpp"

namespace conic {

using Json = nlohmann::ordered_json;

inline constexpr int kScenarioVersion = 1;

enum class ScenarioKind {
  Trajectory,
  ScatterData,
  DiffeoCheck,
  EvolveFree,
  EvolveCurved,
  WfTest,
  SmoothingCheck,
  TheoremCheck,
};

std::string to_string(ScenarioKind k);
const std::vector<ScenarioKind>& scenario_kinds();

struct TrajectorySpec {
  PhasePoint start;
  double t_end = -10.0;
  int samples = 101;
  FlowOptions flow;
};

struct ScatterSpec {
  PhasePoint start;
  ScatteringOptions options;
};

struct DiffeoSpec {
  PhaseBox window;
  std::vector<double> t_ladder;
  int samples_per_axis = 3;
  FlowOptions flow;
};

struct StateSpec {
  std::string type = "coherent";  // coherent | jump | snapshot
  Space space = Space::Curved;
  PhasePoint center;
  double eps = 1.0 / 16.0;
  double r_lo = 1.5, r_hi = 10.0, dr = 0.01;
  int ntheta = 64;
  JumpStateParams jump;
  InitialProfile profile = InitialProfile::Singular;
  std::string path;
};

struct EvolveSpec {
  StateSpec state;
  double t = 1.0;
  EvolutionConfig evolution;
  double seam_fraction = 0.0;
  bool binary_snapshot = false;
};

struct WfSpec {
  StateSpec state;
  PhasePoint point;
  Quantization scaling = Quantization::Standard;
  TestConfig test;
};

struct TheoremSpec {
  TheoremCheckConfig check;
  std::vector<InitialProfile> profiles;
  PhasePoint point;  // smoothing check only
};

struct Scenario {
  int version = kScenarioVersion;
  ScenarioKind kind = ScenarioKind::Trajectory;
  std::string name;
  std::uint64_t seed = 0;
  std::string model_name;
  ParamTable model_params;
  Model model;
  Json config;
  std::string origin;

  TrajectorySpec trajectory;
  ScatterSpec scatter;
  DiffeoSpec diffeo;
  EvolveSpec evolve;
  WfSpec wf;
  TheoremSpec theorem;
};

Scenario parse_scenario(const std::string& text, const std::string& origin);
Scenario load_scenario(const std::string& path);

}  // namespace conic

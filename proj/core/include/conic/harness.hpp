#pragma once

// Scenario runner and artifact writers. Every artifact carries the
// effective config; outputs depend only on the config and the seed.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "conic/escape.hpp"
#include "conic/scenario.hpp"

namespace conic {

// Exit statuses of run_scenario and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNumeric = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInconclusive = 3;

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;  // overrides the config seed
  int threads = 1;
};

struct RunResult {
  int exit_code = kExitOk;
  std::string summary;  // one line
  std::vector<std::filesystem::path> artifacts;
};

// Module errors propagate as exceptions; the CLI maps ConfigError to
// kExitConfig and other errors to kExitNumeric.
RunResult run_scenario(Scenario sc, const RunOptions& opt);

// Non-finite values become the strings "inf", "-inf", "nan".
Json json_number(double x);

Json to_json(const PhasePoint& p);
Json to_json(const ScatteringData& sd);
Json to_json(const WFVerdict& v);
Json to_json(const DiffeoReport& r);
Json to_json(const TheoremCheckReport& r);
Json to_json(const SmoothingReport& r);
Json to_json(const EscapeSweepReport& r);

void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const Json& config);
void write_ladder_csv(std::ostream& os, const WFVerdict& v, const Json& config);

// Name, description and default parameters of every built-in model.
Json metrics_catalog();

WaveFunction build_state(const StateSpec& s, const ScatteringMetric& g);

}  // namespace conic

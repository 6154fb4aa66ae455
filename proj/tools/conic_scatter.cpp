// conic-scatter: run, validate and list scenarios.

#include <cstdint>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "conic/errors.hpp"
#include "conic/harness.hpp"

namespace {

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const conic::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return conic::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return conic::kExitNumeric;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scattering experiments on conic ends"};
  app.require_subcommand(1);

  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
  int threads = 1;

  auto* run = app.add_subcommand("run", "run a scenario and write its artifacts");
  run->add_option("config", config, "scenario JSON")->required();
  run->add_option("--out", out, "output directory");
  auto* seed_opt = run->add_option("--seed", seed, "override the config seed");
  run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "check a scenario without running it");
  validate->add_option("config", config, "scenario JSON")->required();

  auto* list = app.add_subcommand("list-metrics", "print the built-in models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : conic::kExitConfig;
  }

  if (*list) {
    for (const auto& m : conic::metrics_catalog()) {
      std::cout << m["name"].get<std::string>() << "  " << m["description"].get<std::string>() << '\n';
      std::cout << "    params " << m["params"].dump() << '\n';
    }
    return conic::kExitOk;
  }

  if (*validate)
    return guarded([&] {
      const conic::Scenario sc = conic::load_scenario(config);
      std::cout << config << ": ok (" << conic::to_string(sc.kind) << ", model " << sc.model_name << ")\n";
      return conic::kExitOk;
    });

  return guarded([&] {
    conic::RunOptions opt;
    opt.out_dir = out;
    opt.threads = threads;
    if (*seed_opt) opt.seed = seed;
    const conic::RunResult res = conic::run_scenario(conic::load_scenario(config), opt);
    std::cout << res.summary << '\n';
    for (const auto& p : res.artifacts) std::cout << "  wrote " << p.string() << '\n';
    return res.exit_code;
  });
}

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "conic/errors.hpp"
#include "conic/harness.hpp"
#include "conic/scenario.hpp"

using namespace conic;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_scenario(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

class Workdir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("conic_harness_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
  }

  int cli(const std::string& args) const {
    const std::string cmd = std::string(CONIC_SCATTER_EXE) + " " + args + " > " + (dir / "stdout.txt").string() +
                            " 2> " + (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string slurp(const fs::path& p) const {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir;
};

const char* kRadial = R"({
  "version": 1,
  "kind": "trajectory",
  "name": "radial",
  "model": {"name": "flat"},
  "trajectory": {"start": {"r": 5, "theta": 0, "rho": -1, "omega": 0}, "t_end": -1.5, "samples": 4, "tol": 1e-12}
})";

const char* kScatter = R"({
  "version": 1,
  "kind": "scatter-data",
  "name": "straight",
  "model": {"name": "flat"},
  "scatter-data": {"start": {"x": [3, 4], "xi": [1, 0]}}
})";

}  // namespace

TEST(Scenario, EffectiveConfigCarriesDefaults) {
  const Scenario sc = parse_scenario(R"({"version": 1, "kind": "trajectory", "model": {"name": "bump"},
    "trajectory": {"start": {"r": 4, "rho": -1}, "t_end": -3}})", "x.json");
  EXPECT_EQ(sc.kind, ScenarioKind::Trajectory);
  EXPECT_EQ(sc.name, "trajectory");
  EXPECT_EQ(sc.model_name, "bump");
  EXPECT_EQ(sc.config["model"]["params"]["epsilon"].get<double>(), 0.1);
  EXPECT_EQ(sc.trajectory.t_end, -3.0);
  EXPECT_EQ(sc.trajectory.start.theta, 0.0);
}

TEST(Scenario, CartesianStart) {
  const Scenario sc = parse_scenario(kScatter, "s.json");
  EXPECT_NEAR(sc.scatter.start.r, 5.0, 1e-15);
  EXPECT_NEAR(sc.scatter.start.rho, 0.6, 1e-15);
  EXPECT_NEAR(sc.scatter.start.omega, -4.0, 1e-15);
}

TEST(Scenario, ErrorsNameTheLine) {
  const std::string bad_type = "{\n  \"version\": 1,\n  \"kind\": \"trajectory\",\n  \"trajectory\": {\n"
                               "    \"start\": {\"r\": 4, \"rho\": -1},\n    \"t_end\": \"soon\"\n  }\n}";
  const std::string e1 = config_error(bad_type);
  EXPECT_NE(e1.find("cfg.json:6:"), std::string::npos) << e1;
  EXPECT_NE(e1.find("t_end"), std::string::npos) << e1;

  const std::string syntax = "{\n  \"version\": 1,\n  \"kind\": \"trajectory\"\n  \"name\": \"x\"\n}";
  EXPECT_NE(config_error(syntax).find("cfg.json:4:"), std::string::npos) << config_error(syntax);

  const std::string unknown = "{\n  \"version\": 1,\n  \"kind\": \"trajectory\",\n  \"colour\": 3,\n"
                              "  \"trajectory\": {\"start\": {\"r\": 4, \"rho\": -1}, \"t_end\": -1}\n}";
  EXPECT_NE(config_error(unknown).find("cfg.json:4:"), std::string::npos) << config_error(unknown);
}

TEST(Scenario, RejectsBadValues) {
  EXPECT_NE(config_error(R"({"version": 2, "kind": "trajectory"})"), "");
  EXPECT_NE(config_error(R"({"version": 1, "kind": "orbit"})"), "");
  EXPECT_NE(config_error(R"({"version": 1, "kind": "trajectory", "model": {"name": "nope"},
    "trajectory": {"start": {"r": 4, "rho": -1}, "t_end": -1}})"), "");
  EXPECT_NE(config_error(R"({"version": 1, "kind": "trajectory",
    "trajectory": {"start": {"r": 0.5, "rho": -1}, "t_end": -1}})"), "");
  EXPECT_NE(config_error(R"({"version": 1, "kind": "trajectory",
    "trajectory": {"start": {"r": 4, "rho": -1}, "t_end": 2}})"), "");
  EXPECT_NE(config_error(R"({"version": 1, "kind": "scatter-data",
    "scatter-data": {"start": {"x": [0.3, 0.4], "xi": [1, 0]}}})"), "");
}

TEST(Harness, JsonNumbersStayFinite) {
  EXPECT_EQ(json_number(INFINITY).get<std::string>(), "inf");
  EXPECT_EQ(json_number(-INFINITY).get<std::string>(), "-inf");
  EXPECT_EQ(json_number(NAN).get<std::string>(), "nan");
  EXPECT_EQ(json_number(1.5).get<double>(), 1.5);
}

TEST(Harness, MetricsCatalogListsEveryModel) {
  const Json cat = metrics_catalog();
  EXPECT_EQ(cat.size(), builtin_metrics().size());
  for (const auto& m : cat) EXPECT_NO_THROW(make_builtin_model(m["name"].get<std::string>()));
}

TEST_F(Workdir, TrajectoryCsvFollowsStraightLine) {
  const fs::path cfg = write("radial.json", kRadial);
  ASSERT_EQ(cli("run " + cfg.string() + " --out " + dir.string()), kExitOk) << slurp(dir / "stderr.txt");
  std::ifstream in(dir / "radial.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# config=", 0), 0u);
  std::getline(in, line);
  EXPECT_EQ(line, "t,r,theta_unwrapped,rho,omega,p_rel_drift");
  int rows = 0;
  while (std::getline(in, line)) {
    double t, r;
    ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf", &t, &r), 2);
    EXPECT_NEAR(r, 5.0 - 2.0 * t, 1e-9);
    ++rows;
  }
  EXPECT_EQ(rows, 4);
}

TEST_F(Workdir, ScatterJsonMatchesFlatClosedForm) {
  const fs::path cfg = write("straight.json", kScatter);
  ASSERT_EQ(cli("run " + cfg.string() + " --out " + dir.string()), kExitOk) << slurp(dir / "stderr.txt");
  const Json j = Json::parse(slurp(dir / "straight.json"));
  EXPECT_EQ(j["config"]["kind"], "scatter-data");
  const Json& d = j;
  EXPECT_NEAR(d["r_minus"].get<double>(), -3.0, 1e-6);
  EXPECT_NEAR(d["theta_minus"].get<double>(), std::acos(-1.0), 1e-6);
  EXPECT_NEAR(d["rho_minus"].get<double>(), -1.0, 1e-8);
  EXPECT_NEAR(d["omega_minus"].get<double>(), -4.0, 1e-8);
}

TEST_F(Workdir, RunsAreDeterministic) {
  const fs::path cfg = write("radial.json", kRadial);
  ASSERT_EQ(cli("run " + cfg.string() + " --out " + (dir / "a").string()), kExitOk);
  ASSERT_EQ(cli("run " + cfg.string() + " --out " + (dir / "b").string()), kExitOk);
  EXPECT_EQ(slurp(dir / "a" / "radial.csv"), slurp(dir / "b" / "radial.csv"));
}

TEST_F(Workdir, ExitCodes) {
  const fs::path bad = write("bad.json", "{\n  \"version\": 1,\n  \"kind\": \"trajectory\",\n  \"trajectory\": {\n"
                                         "    \"start\": {\"r\": 4, \"rho\": -1},\n    \"t_end\": \"x\"\n  }\n}\n");
  EXPECT_EQ(cli("run " + bad.string() + " --out " + dir.string()), kExitConfig);
  EXPECT_NE(slurp(dir / "stderr.txt").find("bad.json:6:"), std::string::npos);
  EXPECT_EQ(cli("validate " + bad.string()), kExitConfig);
  EXPECT_EQ(cli("validate " + (dir / "missing.json").string()), kExitConfig);
  EXPECT_EQ(cli("run"), kExitConfig);
  EXPECT_EQ(cli("validate " + write("ok.json", kRadial).string()), kExitOk);
  EXPECT_EQ(cli("list-metrics"), kExitOk);
  EXPECT_NE(slurp(dir / "stdout.txt").find("composite"), std::string::npos);
  // inward radial start reaches r = 1 before t_end
  const fs::path fall = write("fall.json", R"({"version": 1, "kind": "trajectory",
    "trajectory": {"start": {"r": 3, "rho": 1}, "t_end": -5}})");
  EXPECT_EQ(cli("run " + fall.string() + " --out " + dir.string()), kExitNumeric);
}

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rwdre/harness/compare.hpp"
#include "rwdre/harness/config.hpp"
#include "rwdre/harness/run.hpp"

namespace fs = std::filesystem;
using namespace rwdre;
using namespace rwdre::harness;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rwdre_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig unit_config(const std::string& mode, const fs::path& out) {
  ExperimentConfig c;
  c.mode = mode;
  c.out = out.string();
  c.system.gamma = 0.7;
  c.system.delta = 0.3;
  c.alpha = 0.55;
  c.beta = 0.45;
  c.horizon = 2000;
  c.steps = 5000;
  c.replicas = 4;
  return c;
}

json report(const fs::path& dir) { return json::parse(slurp(dir / "report.json")); }

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const ExperimentConfig c;
  const auto back = from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(config_hash(c).size(), 40u);
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(from_json(json{{"modes", "simulate"}}), ConfigError);
  EXPECT_THROW(from_json(json{{"model", {{"gamma", 1.0}}}}), ConfigError);
  EXPECT_THROW(from_json(json{{"horizon", "long"}}), ConfigError);
}

TEST(Config, Validation) {
  ExperimentConfig c;
  c.alpha = 0.9;
  c.beta = 1.1;
  EXPECT_THROW(validate(c), ConfigError);
  c.allow_degenerate = true;
  EXPECT_NO_THROW(validate(c));
  ExperimentConfig d;
  d.mode = "fly";
  EXPECT_THROW(validate(d), ConfigError);
  d = {};
  d.L = 3;
  EXPECT_THROW(validate(d), ConfigError);
  d = {};
  d.system.gamma = -1;
  EXPECT_THROW(validate(d), ConfigError);
  d = {};
  d.system.kind = "voter";
  EXPECT_THROW(validate(d), ConfigError);
  d = {};
  d.replicas = 0;
  EXPECT_THROW(validate(d), ConfigError);
}

TEST(Config, HashTracksExperimentNotPlumbing) {
  ExperimentConfig a, b;
  b.out = "elsewhere";
  b.threads = 8;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, LoadFromFile) {
  const auto dir = scratch("load");
  std::ofstream(dir / "c.json") << R"({"mode": "expand", "model": {"alpha": 0.55, "beta": 0.45},
                                      "system": {"kind": "independent", "gamma": 0.7, "delta": 0.3}})";
  const auto c = load_config((dir / "c.json").string());
  EXPECT_EQ(c.mode, "expand");
  EXPECT_EQ(c.system.gamma, 0.7);
  EXPECT_EQ(c.replicas, ExperimentConfig{}.replicas);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(load_config((dir / "bad.json").string()), ConfigError);
  EXPECT_THROW(load_config((dir / "missing.json").string()), ConfigError);
}

TEST(Run, ExpandReportsC3) {
  const auto dir = scratch("expand");
  auto c = unit_config("expand", dir);
  c.alpha = 0.55;
  c.beta = 0.45;
  std::ostringstream out, err;
  ASSERT_EQ(run_main(c, out, err), kExitOk) << err.str();
  const auto r = report(dir);
  EXPECT_NEAR(r["results"]["expansion"]["c3"].get<double>(), -0.0323824, 1e-7);
  EXPECT_NEAR(r["results"]["expansion"]["v_pred"].get<double>(), 0.0399676, 1e-7);
  EXPECT_EQ(r["config_hash"], config_hash(c));
  EXPECT_EQ(r["config"], to_json(c));
  EXPECT_NE(out.str().find("v_pred"), std::string::npos);
}

TEST(Run, ExpandRefusesOutsideDomain) {
  const auto dir = scratch("expand_refuse");
  auto c = unit_config("expand", dir);
  c.alpha = 0.9;
  c.beta = 0.1;
  std::ostringstream out, err;
  EXPECT_EQ(run_main(c, out, err), kExitConfig);
  EXPECT_NE(err.str().find("series domain"), std::string::npos);
  c.force = true;
  EXPECT_EQ(run_main(c, out, err), kExitOk);
  EXPECT_FALSE(report(dir)["results"]["expansion"]["valid"].get<bool>());
}

TEST(Run, InvalidModelExitsTwo) {
  auto c = unit_config("simulate", scratch("bad_model"));
  c.alpha = 0.4;
  c.beta = 0.6;
  std::ostringstream out, err;
  EXPECT_EQ(run_main(c, out, err), kExitConfig);
  EXPECT_NE(err.str().find("beta < alpha"), std::string::npos);
}

TEST(Run, SimulationErrorExitsThree) {
  auto c = unit_config("regen", scratch("short_regen"));
  c.steps = 20;
  c.replicas = 1;
  std::ostringstream out, err;
  EXPECT_EQ(run_main(c, out, err), kExitSimulation) << err.str();
}

TEST(Run, EveryCsvCarriesHashAndSeed) {
  for (const std::string mode : {"simulate", "regen", "expand", "mix", "couple"}) {
    const auto dir = scratch("csv_" + mode);
    auto c = unit_config(mode, dir);
    if (mode == "mix") c.tips = {0.0, 4.0};
    if (mode == "couple") c.replicas = 40;
    std::ostringstream out, err;
    ASSERT_EQ(run_main(c, out, err), kExitOk) << mode << ": " << err.str();
    const std::string header = "# config_hash=" + config_hash(c) + " seed=" + std::to_string(c.seed);
    std::size_t csvs = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() != ".csv") continue;
      ++csvs;
      std::ifstream in(e.path());
      std::string first;
      std::getline(in, first);
      EXPECT_EQ(first, header) << e.path();
    }
    EXPECT_GT(csvs, 0u) << mode;
    EXPECT_EQ(report(dir)["config_hash"], config_hash(c));
  }
}

TEST(Run, OutputsIndependentOfThreadCount) {
  for (const std::string mode : {"simulate", "regen", "couple"}) {
    const auto d1 = scratch("thr1_" + mode), d4 = scratch("thr4_" + mode);
    auto c1 = unit_config(mode, d1);
    if (mode == "couple") c1.replicas = 40;
    auto c4 = c1;
    c4.out = d4.string();
    c4.threads = 4;
    std::ostringstream out, err;
    ASSERT_EQ(run_main(c1, out, err), kExitOk) << err.str();
    ASSERT_EQ(run_main(c4, out, err), kExitOk) << err.str();
    for (const auto& e : fs::directory_iterator(d1))
      EXPECT_EQ(slurp(e.path()), slurp(d4 / e.path().filename())) << mode << " " << e.path().filename();
  }
}

TEST(Run, InteractingSimulateAndCaveat) {
  const auto dir = scratch("glauber");
  auto c = unit_config("simulate", dir);
  c.system.kind = "glauber";
  c.system.J = 0.2;
  c.system.torus_size = 256;
  c.horizon = 200;
  c.replicas = 2;
  std::ostringstream out, err;
  ASSERT_EQ(run_main(c, out, err), kExitOk) << err.str();
  const auto r = report(dir);
  EXPECT_GT(r["results"]["system"]["burn_in_time"].get<double>(), 0.0);

  const auto d2 = scratch("nonattractive");
  auto k = unit_config("couple", d2);
  k.system.kind = "glauber";
  k.system.J = -0.05;
  k.system.torus_size = 32;
  k.replicas = 40;
  ASSERT_EQ(run_main(k, out, err), kExitOk) << err.str();
  EXPECT_TRUE(report(d2)["results"].contains("caveat"));
}

TEST(Compare, SymmetricEnvironmentPasses) {
  const auto dir = scratch("compare_sym");
  auto c = unit_config("compare", dir);
  c.system.gamma = 0.5;
  c.system.delta = 0.5;
  c.horizon = 5000;
  c.replicas = 8;
  std::ostringstream out, err;
  ASSERT_EQ(run_main(c, out, err), kExitOk) << err.str() << out.str();
  const auto r = report(dir)["results"];
  EXPECT_NEAR(r["v_series"]["v"].get<double>(), 0.0, 1e-12);
  for (const char* k : {"v_mc", "v_regen"})
    EXPECT_LE(std::abs(r[k]["v"].get<double>()), 3 * r[k]["se"].get<double>()) << k;
}

TEST(Compare, MirrorNegates) {
  auto c = unit_config("compare", scratch("mirror"));
  c.horizon = 5000;
  c.replicas = 8;
  auto m = c;
  m.system.gamma = 0.3;
  m.system.delta = 0.7;
  m.seed = 99;
  const auto a = compare_speeds(c), b = compare_speeds(m);
  EXPECT_NEAR(a.mc.v, -b.mc.v, 3 * std::hypot(a.mc.se, b.mc.se));
  EXPECT_NEAR(a.regen.v, -b.regen.v, 3 * std::hypot(a.regen.se, b.regen.se));
  EXPECT_NEAR(a.series.v, -b.series.v, 1e-12);
}

TEST(Compare, RefusesLargeDriftAndInteracting) {
  auto c = unit_config("compare", scratch("compare_refuse"));
  c.alpha = 0.9;
  c.beta = 0.1;
  std::ostringstream out, err;
  EXPECT_EQ(run_main(c, out, err), kExitConfig);
  EXPECT_NE(err.str().find("series domain"), std::string::npos);
  auto g = unit_config("compare", scratch("compare_glauber"));
  g.system.kind = "glauber";
  EXPECT_THROW(compare_speeds(g), ConfigError);
}

TEST(Cli, SubcommandsAndExitCodes) {
  const auto dir = scratch("cli");
  std::ofstream(dir / "c.json") << R"({"model": {"alpha": 0.55, "beta": 0.45},
                                      "system": {"kind": "independent", "gamma": 0.7, "delta": 0.3}})";
  const std::string cli = RWDRE_CLI_PATH;
  const std::string cfg = (dir / "c.json").string();
  auto call = [&](const std::string& args) {
    const int s = std::system((cli + " " + args + " > " + (dir / "log.txt").string() + " 2>&1").c_str());
    return WEXITSTATUS(s);
  };
  EXPECT_EQ(call("expand --config " + cfg + " --out " + (dir / "e").string()), 0);
  EXPECT_NEAR(report(dir / "e")["results"]["expansion"]["c3"].get<double>(), -0.0323824, 1e-7);
  EXPECT_EQ(call("expand --config " + cfg + " --seed 7 --out " + (dir / "s").string()), 0);
  EXPECT_EQ(report(dir / "s")["seed"], 7);
  EXPECT_EQ(call("teleport"), 2);
  EXPECT_EQ(call("expand --config " + (dir / "none.json").string()), 2);
  std::ofstream(dir / "bad.json") << R"({"model": {"alpha": 0.4, "beta": 0.6}})";
  EXPECT_EQ(call("simulate --config " + (dir / "bad.json").string() + " --out " + (dir / "b").string()), 2);
  EXPECT_NE(slurp(dir / "log.txt").find("beta < alpha"), std::string::npos);
}

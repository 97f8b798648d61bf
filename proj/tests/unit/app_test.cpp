#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "ssle/acceptance.hpp"
#include "ssle/app.hpp"

namespace ssle {
namespace {

namespace fs = std::filesystem;

const char* kConfig = R"({
  "prior": [{"family": "gaussian", "params": [0.0, 1.0]}, {"family": "uniform", "params": [-2.0, 2.0]}],
  "likelihood": {"model": "identity", "data": [[0.3, -0.4]], "sigma": [0.5, 0.5]},
  "method": {"mode": "adaptive", "N_ref": 10, "N_ED": 60, "seed": 4},
  "reference": {"type": "oracle", "panels": 20},
  "outputs": {"dir": "unused", "marginals": [{"dims": [0]}, {"dims": [0, 1], "grid": [[-1, 0, 1], [-1, 0, 1]]}]},
  "compare": {"modes": ["adaptive", "sle"], "seeds": [1, 2]}
})";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ssle_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string config_path_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

TEST(Config, ParsesTheFullSchema) {
  const auto cfg = parse_config(kConfig);
  EXPECT_EQ(cfg.prior.dim(), 2u);
  EXPECT_EQ(cfg.method.n_ed, 60u);
  ASSERT_TRUE(cfg.reference.has_value());
  EXPECT_EQ(cfg.reference->oracle.panels, 20u);
  EXPECT_EQ(cfg.outputs.marginals.size(), 2u);
  EXPECT_EQ(cfg.compare.seeds.size(), 2u);
  EXPECT_EQ(cfg.text, kConfig);
}

TEST(Config, ErrorsNameTheField) {
  std::string bad = kConfig;
  bad.replace(bad.find("\"seed\": 4"), 9, "\"seed\": 4, \"adaptivity\": {\"q_grid\": [0.5, 1.5]}");
  EXPECT_EQ(config_path_error(bad), "method.adaptivity.q_grid[1]");
  bad = kConfig;
  bad.replace(bad.find("\"N_ref\""), 7, "\"N_reff\"");
  EXPECT_EQ(config_path_error(bad), "method.N_reff");
  bad = kConfig;
  bad.replace(bad.find("\"gaussian\""), 10, "\"cauchy\"");
  EXPECT_EQ(config_path_error(bad), "prior[0].family");
  EXPECT_EQ(config_path_error("{"), "<document>");
}

TEST(Run, WritesEveryDeclaredOutputAndIsDeterministic) {
  const auto cfg = parse_config(kConfig);
  const auto a = scratch("run_a");
  const auto b = scratch("run_b");
  const auto out = run_command(cfg, a);
  run_command(cfg, b);
  const auto meta = nlohmann::json::parse(slurp(a / "metadata.json"));
  for (const auto& f : meta.at("files")) EXPECT_TRUE(fs::exists(a / f.get<std::string>())) << f;
  EXPECT_EQ(slurp(a / "config.json"), kConfig);
  EXPECT_LE(meta.at("budget_used").get<std::size_t>(), 60u);
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
  EXPECT_TRUE(fs::exists(a / "marginal_0.csv"));
  EXPECT_TRUE(fs::exists(a / "marginal_0_1.csv"));
  const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
  EXPECT_GT(summary.at("evidence").get<double>(), 0.0);
  EXPECT_TRUE(summary.contains("comparison"));
  EXPECT_EQ(out.result.evaluations, meta.at("budget_used").get<std::size_t>());
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Compare, MethodAgainstItselfHasZeroEta) {
  std::string text = kConfig;
  text.replace(text.find("{\"type\": \"oracle\", \"panels\": 20}"), 32,
               "{\"type\": \"method\", \"mode\": \"adaptive\", \"seed\": 1}");
  text.replace(text.find("[\"adaptive\", \"sle\"]"), 19, "[\"adaptive\"]");
  text.replace(text.find("[1, 2]"), 6, "[1]");
  const auto cfg = parse_config(text);
  const auto dir = scratch("compare");
  const auto report = compare_command(cfg, dir);
  EXPECT_EQ(report.at("mean_eta").at("adaptive").get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(dir / "compare.csv"));
  fs::remove_all(dir);
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(INVERT_BINARY) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  std::string bad = kConfig;
  bad.replace(bad.find("\"seed\": 4"), 9, "\"seed\": 4, \"adaptivity\": {\"q_grid\": [1.5]}");
  std::ofstream(dir / "bad.json") << bad;
  EXPECT_EQ(run_cli("run " + (dir / "bad.json").string()), 2);

  std::string failing = kConfig;
  failing.replace(failing.find("{\"model\": \"identity\""), 20,
                  "{\"model\": \"subprocess\", \"options\": {\"command\": [\"/bin/false\"], \"output_dim\": 2}");
  std::ofstream(dir / "fail.json") << failing;
  EXPECT_EQ(run_cli("run " + (dir / "fail.json").string() + " --output-dir " + (dir / "o").string()), 3);

  std::ofstream(dir / "good.json") << kConfig;
  EXPECT_EQ(run_cli("run " + (dir / "good.json").string() + " --output-dir " + (dir / "ok").string() + " --seed 9"), 0);
  const auto meta = nlohmann::json::parse(slurp(dir / "ok" / "metadata.json"));
  EXPECT_EQ(meta.at("seed").get<int>(), 9);
  fs::remove_all(dir);
}

TEST(Acceptance, FilterRunsExactlyOneCriterion) {
  std::ostringstream log;
  const auto report = run_acceptance("AC-8", log);
  ASSERT_EQ(report.at("criteria").size(), 1u);
  EXPECT_EQ(report.at("criteria")[0].at("id"), "AC-8");
  EXPECT_THROW(run_acceptance("AC-99", log), std::invalid_argument);
}

TEST(Acceptance, PassFlagsAgreeWithThresholds) {
  std::ostringstream log;
  const auto report = run_acceptance("AC-6,AC-9", log);
  for (const auto& c : report.at("criteria")) {
    const double v = c.at("observed").get<double>();
    const bool expected = c.at("id") == "AC-6" ? v <= 1e-8 : v < 1e-10;
    EXPECT_EQ(c.at("criterion_met").get<bool>(), expected);
  }
}

TEST(Acceptance, LocalMaxima) {
  EXPECT_EQ(local_maxima({0, 1, 0, 2, 2, 1, 0.001, 0.002, 0}, 0.01), (std::vector<std::size_t>{1, 3}));
  EXPECT_TRUE(local_maxima({1, 2, 3}, 0.0).empty());
}

}  // namespace
}  // namespace ssle

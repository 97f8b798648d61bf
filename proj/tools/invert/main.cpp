#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ssle/acceptance.hpp"
#include "ssle/app.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kLikelihoodError = 3;

ssle::AppConfig load(const std::string& path, const std::optional<std::string>& out_dir,
                     const std::optional<std::uint64_t>& seed) {
  auto cfg = ssle::load_config(path);
  if (out_dir) cfg.outputs.dir = *out_dir;
  if (seed) cfg.method.seed = *seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian inversion with adaptive stochastic spectral likelihood embedding"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::string filter;

  auto* run = app.add_subcommand("run", "Run the configured method and write all outputs");
  run->add_option("config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  run->add_option("--output-dir", out_dir, "Override outputs.dir");
  run->add_option("--seed", seed, "Override method.seed");

  auto* compare = app.add_subcommand("compare", "Compare methods against a reference (eta report)");
  compare->add_option("config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  compare->add_option("--output-dir", out_dir, "Override outputs.dir");
  compare->add_option("--seed", seed, "Override method.seed");

  auto* acceptance = app.add_subcommand("acceptance", "Run the acceptance criteria");
  acceptance->add_option("--filter", filter, "Comma-separated criterion ids, e.g. AC-2");
  acceptance->add_option("--output-dir", out_dir, "Write report.json here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = load(config, out_dir, seed);
      const auto outcome = ssle::run_command(cfg, cfg.outputs.dir);
      std::cout << "evidence " << outcome.summary.evidence << ", " << outcome.result.evaluations
                << " likelihood evaluations, outputs in " << cfg.outputs.dir.string() << "\n";
      if (!outcome.summary.evidence_positive) std::cerr << "warning: evidence is not positive\n";
      return 0;
    }
    if (*compare) {
      const auto cfg = load(config, out_dir, seed);
      const auto report = ssle::compare_command(cfg, cfg.outputs.dir);
      for (const auto& [mode, eta] : report.at("mean_eta").items()) {
        std::cout << mode << ": mean eta " << eta.get<double>() << "\n";
      }
      return 0;
    }
    if (*acceptance) {
      const auto report = ssle::run_acceptance(filter, std::cout);
      if (out_dir) ssle::write_atomic(std::filesystem::path(*out_dir) / "report.json", report.dump(2) + "\n");
      return report.at("all_passed").get<bool>() ? 0 : 1;
    }
  } catch (const ssle::ConfigError& e) {
    std::cerr << "config error at " << e.path() << ": " << e.what() << "\n";
    return kConfigError;
  } catch (const ssle::LikelihoodError& e) {
    std::cerr << "likelihood evaluation failed at x = [";
    for (Eigen::Index i = 0; i < e.point().size(); ++i) std::cerr << (i ? ", " : "") << e.point()[i];
    std::cerr << "]: " << e.what() << "\n";
    return kLikelihoodError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

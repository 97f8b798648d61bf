#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssle/adaptive.hpp"
#include "ssle/models.hpp"
#include "ssle/posterior.hpp"
#include "ssle/prob.hpp"
#include "ssle/reference.hpp"

namespace ssle {

/// Invalid run configuration; `path` names the offending field, e.g.
/// "method.adaptivity.q_grid[0]".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct ReferenceConfig {
  enum class Type { Oracle, Mcmc, Method };
  Type type = Type::Oracle;
  std::size_t walkers = 50;
  std::size_t steps = 5000;
  std::size_t burn_in = 0;  // 0 selects steps / 5
  std::uint64_t seed = 1;
  OracleOptions oracle;
  /// For Type::Method: the run that serves as reference.
  Mode mode = Mode::AdaptiveSSLE;
};

struct OutputConfig {
  std::filesystem::path dir = "out";
  std::vector<MarginalRequest> marginals;
};

struct CompareConfig {
  std::vector<Mode> modes;
  std::vector<std::uint64_t> seeds;
};

struct AppConfig {
  PriorModel prior;
  std::shared_ptr<const LikelihoodModel> likelihood;
  RunConfig method;
  std::optional<ReferenceConfig> reference;
  OutputConfig outputs;
  CompareConfig compare;
  /// Configuration text exactly as read.
  std::string text;
};

/// Parses and validates a JSON configuration; throws ConfigError.
AppConfig parse_config(const std::string& text);
AppConfig load_config(const std::filesystem::path& path);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Marginal axes (one per dimension) used for JSD comparisons: a configured
/// 1-D grid when present, otherwise the default axis.
std::vector<std::vector<double>> comparison_axes(const AppConfig& cfg);

/// Reference 1-D marginals on the comparison axes.
std::vector<DensityGrid> reference_marginals(const AppConfig& cfg, const ReferenceConfig& ref);

/// Posterior 1-D marginals of a fitted tree on the given axes.
std::vector<DensityGrid> method_marginals(const SseTree& tree, const PriorModel& prior,
                                          const std::vector<std::vector<double>>& axes);

struct RunOutcome {
  SseResult result;
  PosteriorSummary summary;
  std::vector<std::filesystem::path> files;
};

/// Runs the configured method and writes summary.json, tree.json, trace.csv,
/// design.csv, marginal CSVs, config.json and metadata.json into `dir`.
RunOutcome run_command(const AppConfig& cfg, const std::filesystem::path& dir);

/// Runs every (mode, seed) pair of the compare block against the reference and
/// writes compare.csv and compare.json into `dir`; returns the JSON report.
nlohmann::json compare_command(const AppConfig& cfg, const std::filesystem::path& dir);

}  // namespace ssle

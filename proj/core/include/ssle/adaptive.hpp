#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ssle/models.hpp"
#include "ssle/prob.hpp"
#include "ssle/sparse_regression.hpp"
#include "ssle/sse_tree.hpp"

namespace ssle {

enum class Mode { SLE, StaticSSLE, AdaptiveSSLE };

std::string to_string(Mode mode);
/// Accepts "sle", "static", "adaptive".
Mode mode_from_string(const std::string& name);

struct RunConfig {
  std::size_t n_ref = 10;
  std::size_t n_ed = 100;
  std::uint64_t seed = 1;
  AdaptivityConfig adaptivity;
  Mode mode = Mode::AdaptiveSSLE;
  bool track_moments = false;

  void validate() const;
};

struct TraceRecord {
  std::size_t iteration = 0;
  NodeId node;
  int split_dim = -1;
  std::size_t new_points = 0;
  /// Likelihood evaluations used up to and including this iteration.
  std::size_t evaluations = 0;
  double evidence = 0.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

struct RefinementTrace {
  bool with_moments = false;
  std::vector<TraceRecord> records;

  /// Columns: iteration, node, split_dim, n_new_points, evaluations, evidence,
  /// then mean_i and sd_i per dimension when moments are tracked.
  void write_csv(std::ostream& os, std::size_t dim) const;
};

struct SseResult {
  SseTree tree;
  ExperimentalDesign design;
  RefinementTrace trace;
  /// Likelihood evaluations performed by the run.
  std::size_t evaluations = 0;
};

/// E = (own absolute LOO, else the parent's) x prior mass.
double error_estimator(const SseNode& node, std::optional<double> parent_loo);

/// |Var(side 1) - Var(side 2)| per dimension for a midpoint split, with the
/// unbiased sample variance; -inf where a side holds fewer than two points.
std::vector<double> split_scores(const QuantileBox& box, const PointSet& points,
                                 const std::vector<double>& residuals);
/// Dimension with the largest split score (lowest index on ties). When no
/// dimension is eligible, the one with the most balanced point split.
std::size_t split_direction(const QuantileBox& box, const PointSet& points,
                            const std::vector<double>& residuals);

/// Tops the node up to n_ref design points with a Latin hypercube sample in
/// its box, when the deficit is strictly smaller than the remaining budget.
/// New residuals are the likelihood minus all expansions on the node's path.
/// Returns the number of points added.
std::size_t enrich(const SseTree& tree, std::size_t node, ExperimentalDesign& design,
                   const RunConfig& cfg, const PriorModel& prior, const LikelihoodModel& likelihood);

SseResult run_adaptive_ssle(const LikelihoodModel& likelihood, const PriorModel& prior,
                            const RunConfig& cfg);
SseResult run_static_ssle(const LikelihoodModel& likelihood, const PriorModel& prior,
                          const RunConfig& cfg);

struct SleResult {
  SparseExpansion expansion;
  ExperimentalDesign design;
  std::size_t evaluations = 0;
};

SleResult run_sle(const LikelihoodModel& likelihood, const PriorModel& prior, const RunConfig& cfg);

/// One-node tree holding a global expansion.
SseTree tree_from_expansion(const SparseExpansion& e);

/// Dispatches on cfg.mode; SLE results are returned as a one-node tree.
SseResult run_method(const LikelihoodModel& likelihood, const PriorModel& prior, const RunConfig& cfg);

}  // namespace ssle

#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssle/prob.hpp"
#include "ssle/sparse_regression.hpp"

namespace ssle {

/// Node address (level, position); the root is (0, 1) and the children of
/// (l, p) are (l + 1, 2p - 1) and (l + 1, 2p).
struct NodeId {
  int level = 0;
  long long pos = 1;

  auto operator<=>(const NodeId&) const = default;
  std::string str() const;
};

struct SseNode {
  NodeId id;
  QuantileBox box;
  /// Prior mass of the box, i.e. its quantile-space volume.
  double prior_mass = 1.0;
  std::optional<SparseExpansion> expansion;
  /// Absolute LOO error used by the error estimator: the node's own, or the
  /// nearest ancestor's when the node carries no expansion.
  double effective_loo = 0.0;
  double error_estimate = 0.0;
  std::optional<std::size_t> parent;
  std::optional<std::pair<std::size_t, std::size_t>> children;
  int split_dim = -1;
  /// Refinement iteration that created the node (0 for the root).
  std::size_t created_iteration = 0;

  bool terminal() const { return !children.has_value(); }
};

/// Binary partition tree over [0,1]^M. Nodes are stored in creation order;
/// index 0 is the root.
class SseTree {
 public:
  SseTree() = default;
  explicit SseTree(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<SseNode>& nodes() const { return nodes_; }
  const SseNode& node(std::size_t i) const { return nodes_.at(i); }
  SseNode& node(std::size_t i) { return nodes_.at(i); }
  std::optional<std::size_t> find(const NodeId& id) const;

  /// Splits a terminal node at the midpoint of dimension d and returns the
  /// indices of the (lower, upper) children.
  std::pair<std::size_t, std::size_t> split(std::size_t index, std::size_t d,
                                            std::size_t iteration = 0);
  /// Undoes the most recent split; `index` must be the node that was split.
  void undo_split(std::size_t index);

  std::vector<std::size_t> terminals() const;
  /// Node indices from the root to the terminal node containing u.
  std::vector<std::size_t> locate(const Point& u) const;
  /// Sum of the expansions along the locate path.
  double evaluate(const Point& u) const;

  /// Indices sorted by (level, position).
  std::vector<std::size_t> ordered() const;

 private:
  std::size_t dim_ = 0;
  std::vector<SseNode> nodes_;
};

std::vector<std::size_t> locate(const SseTree& tree, const Point& u);
double evaluate_ssle(const SseTree& tree, const Point& u);

/// Design points in quantile and physical space with likelihood values and
/// the current residual at each point.
struct ExperimentalDesign {
  PointSet points_u;
  PointSet points_x;
  std::vector<double> likelihood;
  std::vector<double> residual;

  std::size_t size() const { return points_u.size(); }
  std::vector<std::size_t> indices_in(const QuantileBox& box) const;
};

/// Subtracts the node's expansion from the residual of every design point
/// inside its box.
void update_residuals(const SseTree& tree, ExperimentalDesign& design, std::size_t node);

/// Likelihood of design point i minus every expansion on its locate path.
double recompute_residual(const SseTree& tree, const ExperimentalDesign& design, std::size_t i);

nlohmann::json to_json(const SparseExpansion& e);
SparseExpansion expansion_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SseTree& tree);
SseTree tree_from_json(const nlohmann::json& j);

}  // namespace ssle

#include "ssle/sse_tree.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ssle {

std::string NodeId::str() const { return std::to_string(level) + ":" + std::to_string(pos); }

SseTree::SseTree(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("SseTree: dimension must be >= 1");
  SseNode root;
  root.box = QuantileBox::unit(dim);
  root.prior_mass = 1.0;
  nodes_.push_back(std::move(root));
}

std::optional<std::size_t> SseTree::find(const NodeId& id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  return std::nullopt;
}

std::pair<std::size_t, std::size_t> SseTree::split(std::size_t index, std::size_t d,
                                                   std::size_t iteration) {
  if (d >= dim_) throw std::out_of_range("SseTree::split: dimension out of range");
  if (!nodes_.at(index).terminal()) throw std::logic_error("SseTree::split: node already split");
  auto [lo_box, hi_box] = nodes_[index].box.split(d);
  const NodeId id = nodes_[index].id;
  const std::size_t a = nodes_.size();
  for (int s = 0; s < 2; ++s) {
    SseNode child;
    child.id = {id.level + 1, 2 * id.pos - 1 + s};
    child.box = s == 0 ? lo_box : hi_box;
    child.prior_mass = child.box.volume();
    child.parent = index;
    child.created_iteration = iteration;
    nodes_.push_back(std::move(child));
  }
  nodes_[index].children = std::make_pair(a, a + 1);
  nodes_[index].split_dim = static_cast<int>(d);
  return {a, a + 1};
}

void SseTree::undo_split(std::size_t index) {
  auto& n = nodes_.at(index);
  if (!n.children || n.children->second + 1 != nodes_.size()) {
    throw std::logic_error("SseTree::undo_split: not the most recent split");
  }
  n.children.reset();
  n.split_dim = -1;
  nodes_.resize(nodes_.size() - 2);
}

std::vector<std::size_t> SseTree::terminals() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].terminal()) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> SseTree::locate(const Point& u) const {
  std::vector<std::size_t> path;
  if (nodes_.empty()) return path;
  std::size_t i = 0;
  path.push_back(i);
  while (nodes_[i].children) {
    const auto [lo, hi] = *nodes_[i].children;
    const auto d = static_cast<std::size_t>(nodes_[i].split_dim);
    i = nodes_[lo].box.contains_coordinate(d, u[static_cast<Eigen::Index>(d)]) ? lo : hi;
    path.push_back(i);
  }
  return path;
}

double SseTree::evaluate(const Point& u) const {
  double s = 0.0;
  for (std::size_t i : locate(u)) {
    if (nodes_[i].expansion) s += nodes_[i].expansion->evaluate(u);
  }
  return s;
}

std::vector<std::size_t> SseTree::ordered() const {
  std::vector<std::size_t> idx(nodes_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return nodes_[a].id < nodes_[b].id; });
  return idx;
}

std::vector<std::size_t> locate(const SseTree& tree, const Point& u) { return tree.locate(u); }

double evaluate_ssle(const SseTree& tree, const Point& u) { return tree.evaluate(u); }

std::vector<std::size_t> ExperimentalDesign::indices_in(const QuantileBox& box) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points_u.size(); ++i) {
    if (box.contains(points_u[i])) out.push_back(i);
  }
  return out;
}

void update_residuals(const SseTree& tree, ExperimentalDesign& design, std::size_t node) {
  const auto& n = tree.node(node);
  if (!n.expansion) return;
  for (std::size_t i : design.indices_in(n.box)) {
    design.residual[i] -= n.expansion->evaluate(design.points_u[i]);
  }
}

double recompute_residual(const SseTree& tree, const ExperimentalDesign& design, std::size_t i) {
  return design.likelihood.at(i) - tree.evaluate(design.points_u.at(i));
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json to_json(const SparseExpansion& e) {
  nlohmann::json indices = nlohmann::json::array();
  for (const auto& a : e.basis.indices) indices.push_back(a.values());
  return {{"degree", e.degree},
          {"q_norm", e.q_norm},
          {"loo_error", e.loo_error},
          {"loo_absolute", e.loo_absolute},
          {"multi_indices", std::move(indices)},
          {"coefficients", vec_json(e.coefficients)}};
}

SparseExpansion expansion_from_json(const nlohmann::json& j) {
  SparseExpansion e;
  e.degree = j.at("degree").get<int>();
  e.q_norm = j.at("q_norm").get<double>();
  e.loo_error = j.at("loo_error").get<double>();
  e.loo_absolute = j.at("loo_absolute").get<double>();
  for (const auto& a : j.at("multi_indices")) e.basis.indices.emplace_back(a.get<std::vector<int>>());
  e.basis.dim = e.basis.indices.empty() ? 0 : e.basis.indices.front().dim();
  e.coefficients = json_vec(j.at("coefficients"));
  if (static_cast<std::size_t>(e.coefficients.size()) != e.basis.size()) {
    throw std::invalid_argument("expansion: coefficient count does not match the basis");
  }
  return e;
}

nlohmann::json to_json(const SseTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i : tree.ordered()) {
    const auto& n = tree.node(i);
    nlohmann::json jn = {{"id", {n.id.level, n.id.pos}},
                         {"lower", vec_json(n.box.lower)},
                         {"upper", vec_json(n.box.upper)},
                         {"prior_mass", n.prior_mass},
                         {"error_estimate", n.error_estimate},
                         {"effective_loo", n.effective_loo},
                         {"terminal", n.terminal()},
                         {"split_dim", n.split_dim},
                         {"created_iteration", n.created_iteration}};
    jn["expansion"] = n.expansion ? to_json(*n.expansion) : nlohmann::json(nullptr);
    nodes.push_back(std::move(jn));
  }
  return {{"dim", tree.dim()}, {"nodes", std::move(nodes)}};
}

SseTree tree_from_json(const nlohmann::json& j) {
  const auto dim = j.at("dim").get<std::size_t>();
  SseTree tree(dim);
  // Nodes are id-ordered, so every parent precedes its children.
  for (const auto& jn : j.at("nodes")) {
    const NodeId id{jn.at("id").at(0).get<int>(), jn.at("id").at(1).get<long long>()};
    std::size_t index = 0;
    if (id.level > 0) {
      const NodeId parent_id{id.level - 1, (id.pos + 1) / 2};
      const auto parent = tree.find(parent_id);
      if (!parent) throw std::invalid_argument("tree: node " + id.str() + " has no parent");
      if (tree.node(*parent).terminal()) {
        const int d = tree.node(*parent).split_dim;
        if (d < 0) throw std::invalid_argument("tree: split node without split_dim");
        tree.split(*parent, static_cast<std::size_t>(d), tree.node(*parent).created_iteration);
      }
      const auto found = tree.find(id);
      if (!found) throw std::invalid_argument("tree: inconsistent node " + id.str());
      index = *found;
    }
    auto& n = tree.node(index);
    n.box = QuantileBox(json_vec(jn.at("lower")), json_vec(jn.at("upper")));
    n.prior_mass = jn.at("prior_mass").get<double>();
    n.error_estimate = jn.at("error_estimate").get<double>();
    n.effective_loo = jn.at("effective_loo").get<double>();
    n.split_dim = jn.at("split_dim").get<int>();
    n.created_iteration = jn.at("created_iteration").get<std::size_t>();
    if (n.terminal() && !jn.at("terminal").get<bool>() && n.split_dim < 0) {
      throw std::invalid_argument("tree: split node without split_dim");
    }
    if (!jn.at("expansion").is_null()) {
      n.expansion = expansion_from_json(jn.at("expansion"));
      n.expansion->box = n.box;
    }
  }
  return tree;
}

}  // namespace ssle

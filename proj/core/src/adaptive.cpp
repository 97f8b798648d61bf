#include "ssle/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ssle/posterior.hpp"

namespace ssle {

namespace {

void append_points(const PointSet& us, const SseTree& tree, ExperimentalDesign& design,
                   const PriorModel& prior, const LikelihoodModel& likelihood) {
  PointSet xs;
  xs.reserve(us.size());
  for (const auto& u : us) xs.push_back(prior.to_physical(u));
  const auto values = likelihood.evaluate_batch(xs);
  for (std::size_t k = 0; k < us.size(); ++k) {
    design.points_u.push_back(us[k]);
    design.points_x.push_back(xs[k]);
    design.likelihood.push_back(values[k]);
    design.residual.push_back(values[k] - tree.evaluate(us[k]));
  }
}

struct LocalData {
  std::vector<std::size_t> indices;
  PointSet points;
  std::vector<double> residuals;
};

LocalData local_data(const ExperimentalDesign& design, const QuantileBox& box) {
  LocalData d;
  d.indices = design.indices_in(box);
  for (std::size_t i : d.indices) {
    d.points.push_back(design.points_u[i]);
    d.residuals.push_back(design.residual[i]);
  }
  return d;
}

/// Fits the residual expansion of a node, updates residuals and the node's
/// error estimate.
void fit_node(SseTree& tree, std::size_t index, ExperimentalDesign& design, const RunConfig& cfg) {
  auto& node = tree.node(index);
  const LocalData d = local_data(design, node.box);
  const Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(d.residuals.data(), static_cast<Eigen::Index>(d.residuals.size()));
  node.expansion = fit_sparse_pce(d.points, y, node.box, cfg.adaptivity);
  node.effective_loo = node.expansion->loo_absolute;
  node.error_estimate = error_estimator(node, std::nullopt);
  update_residuals(tree, design, index);
}

void inherit_error(SseTree& tree, std::size_t index) {
  auto& node = tree.node(index);
  const double parent_loo = tree.node(*node.parent).effective_loo;
  node.effective_loo = parent_loo;
  node.error_estimate = error_estimator(node, parent_loo);
}

void record(RefinementTrace& trace, const SseTree& tree, const PriorModel& prior, std::size_t iteration,
            const NodeId& node, int split_dim, std::size_t new_points, std::size_t evaluations) {
  TraceRecord r;
  r.iteration = iteration;
  r.node = node;
  r.split_dim = split_dim;
  r.new_points = new_points;
  r.evaluations = evaluations;
  r.evidence = evidence(tree);
  if (trace.with_moments) {
    SummaryOptions opts;
    opts.covariance = false;
    const auto s = summarize(tree, prior, opts);
    r.mean = s.mean;
    r.sd = s.sd;
  }
  trace.records.push_back(std::move(r));
}

void check_inputs(const LikelihoodModel& likelihood, const PriorModel& prior, const RunConfig& cfg) {
  cfg.validate();
  if (prior.dim() == 0) throw std::invalid_argument("run: prior has no dimensions");
  const std::size_t in_dim = likelihood.model().input_dim();
  if (in_dim != 0 && in_dim != prior.dim()) {
    throw std::invalid_argument("run: prior dimension does not match the forward model input");
  }
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::SLE:
      return "sle";
    case Mode::StaticSSLE:
      return "static";
    case Mode::AdaptiveSSLE:
      return "adaptive";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& name) {
  if (name == "sle") return Mode::SLE;
  if (name == "static") return Mode::StaticSSLE;
  if (name == "adaptive") return Mode::AdaptiveSSLE;
  throw std::invalid_argument("unknown mode '" + name + "' (expected sle, static or adaptive)");
}

void RunConfig::validate() const {
  if (n_ref < 2) throw std::invalid_argument("N_ref must be >= 2");
  if (n_ed < n_ref) throw std::invalid_argument("N_ED must be >= N_ref");
  adaptivity.validate();
}

void RefinementTrace::write_csv(std::ostream& os, std::size_t dim) const {
  const auto old_precision = os.precision(17);
  os << "iteration,node,split_dim,n_new_points,evidence";
  if (with_moments) {
    for (std::size_t i = 0; i < dim; ++i) os << ",mean_" << i;
    for (std::size_t i = 0; i < dim; ++i) os << ",sd_" << i;
  }
  os << '\n';
  for (const auto& r : records) {
    os << r.iteration << ',' << r.node.str() << ',' << r.split_dim << ',' << r.new_points << ','
       << r.evidence;
    if (with_moments) {
      for (Eigen::Index i = 0; i < r.mean.size(); ++i) os << ',' << r.mean[i];
      for (Eigen::Index i = 0; i < r.sd.size(); ++i) os << ',' << r.sd[i];
    }
    os << '\n';
  }
  os.precision(old_precision);
}

double error_estimator(const SseNode& node, std::optional<double> parent_loo) {
  if (node.expansion) return node.expansion->loo_absolute * node.prior_mass;
  if (!parent_loo) throw std::invalid_argument("error_estimator: no LOO error available for the node");
  return *parent_loo * node.prior_mass;
}

std::vector<double> split_scores(const QuantileBox& box, const PointSet& points,
                                 const std::vector<double>& residuals) {
  if (points.size() != residuals.size()) throw std::invalid_argument("split_scores: size mismatch");
  const std::size_t m = box.dim();
  std::vector<double> scores(m, -std::numeric_limits<double>::infinity());
  for (std::size_t d = 0; d < m; ++d) {
    const QuantileBox lower = box.split(d).first;
    std::vector<double> side[2];
    for (std::size_t k = 0; k < points.size(); ++k) {
      const bool low = lower.contains_coordinate(d, points[k][static_cast<Eigen::Index>(d)]);
      side[low ? 0 : 1].push_back(residuals[k]);
    }
    if (side[0].size() < 2 || side[1].size() < 2) continue;
    double var[2];
    for (int s = 0; s < 2; ++s) {
      const auto& v = side[s];
      double mean = 0.0;
      for (double r : v) mean += r;
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double r : v) ss += (r - mean) * (r - mean);
      var[s] = ss / static_cast<double>(v.size() - 1);
    }
    scores[d] = std::abs(var[0] - var[1]);
  }
  return scores;
}

std::size_t split_direction(const QuantileBox& box, const PointSet& points,
                            const std::vector<double>& residuals) {
  const auto scores = split_scores(box, points, residuals);
  std::size_t best = 0;
  bool any = false;
  for (std::size_t d = 0; d < scores.size(); ++d) {
    if (std::isinf(scores[d]) && scores[d] < 0.0) continue;
    if (!any || scores[d] > scores[best]) {
      best = d;
      any = true;
    }
  }
  if (any) return best;
  std::size_t best_gap = std::numeric_limits<std::size_t>::max();
  for (std::size_t d = 0; d < box.dim(); ++d) {
    const QuantileBox lower = box.split(d).first;
    std::size_t n_low = 0;
    for (const auto& u : points) n_low += lower.contains_coordinate(d, u[static_cast<Eigen::Index>(d)]);
    const std::size_t n_high = points.size() - n_low;
    const std::size_t gap = n_low > n_high ? n_low - n_high : n_high - n_low;
    if (gap < best_gap) {
      best_gap = gap;
      best = d;
    }
  }
  return best;
}

std::size_t enrich(const SseTree& tree, std::size_t node, ExperimentalDesign& design,
                   const RunConfig& cfg, const PriorModel& prior, const LikelihoodModel& likelihood) {
  const auto& n = tree.node(node);
  const std::size_t present = design.indices_in(n.box).size();
  if (present >= cfg.n_ref) return 0;
  const std::size_t deficit = cfg.n_ref - present;
  const std::size_t remaining = cfg.n_ed > design.size() ? cfg.n_ed - design.size() : 0;
  if (!(deficit < remaining)) return 0;
  const auto seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(n.id.level),
                                static_cast<std::uint64_t>(n.id.pos));
  append_points(sample_lhs(n.box, deficit, seed), tree, design, prior, likelihood);
  return deficit;
}

SseResult run_adaptive_ssle(const LikelihoodModel& likelihood, const PriorModel& prior,
                            const RunConfig& cfg) {
  check_inputs(likelihood, prior, cfg);
  const std::size_t start = likelihood.evaluations();
  SseResult out;
  out.tree = SseTree(prior.dim());
  out.trace.with_moments = cfg.track_moments;
  auto& tree = out.tree;
  auto& design = out.design;

  append_points(sample_lhs(tree.node(0).box, cfg.n_ref, derive_seed(cfg.seed, 0, 1)), tree, design,
                prior, likelihood);
  fit_node(tree, 0, design, cfg);
  record(out.trace, tree, prior, 0, tree.node(0).id, -1, cfg.n_ref, likelihood.evaluations() - start);

  for (std::size_t iteration = 1;; ++iteration) {
    std::size_t target = 0;
    double best = -1.0;
    for (std::size_t k : tree.terminals()) {
      const auto& n = tree.node(k);
      if (n.error_estimate > best || (n.error_estimate == best && n.id < tree.node(target).id)) {
        best = n.error_estimate;
        target = k;
      }
    }
    // An exactly represented likelihood leaves nothing to refine.
    if (!(best > 0.0)) break;

    const LocalData local = local_data(design, tree.node(target).box);
    const std::size_t d = split_direction(tree.node(target).box, local.points, local.residuals);
    const auto [lo, hi] = tree.split(target, d, iteration);

    std::size_t created = 0;
    std::size_t added = 0;
    for (std::size_t child : {lo, hi}) {
      added += enrich(tree, child, design, cfg, prior, likelihood);
      if (design.indices_in(tree.node(child).box).size() == cfg.n_ref) {
        fit_node(tree, child, design, cfg);
        ++created;
      } else {
        inherit_error(tree, child);
      }
    }
    if (created == 0) {
      tree.undo_split(target);
      break;
    }
    record(out.trace, tree, prior, iteration, tree.node(target).id, static_cast<int>(d), added,
           likelihood.evaluations() - start);
  }
  out.evaluations = likelihood.evaluations() - start;
  return out;
}

SseResult run_static_ssle(const LikelihoodModel& likelihood, const PriorModel& prior,
                          const RunConfig& cfg) {
  check_inputs(likelihood, prior, cfg);
  const std::size_t start = likelihood.evaluations();
  SseResult out;
  out.tree = SseTree(prior.dim());
  out.trace.with_moments = cfg.track_moments;
  auto& tree = out.tree;
  auto& design = out.design;
  append_points(sample_lhs(tree.node(0).box, cfg.n_ed, derive_seed(cfg.seed, 0, 1)), tree, design,
                prior, likelihood);

  std::size_t iteration = 0;
  std::vector<std::size_t> level{0};
  while (!level.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t index : level) {
      if (design.indices_in(tree.node(index).box).size() < cfg.n_ref) {
        inherit_error(tree, index);
        continue;
      }
      fit_node(tree, index, design, cfg);
      int split_dim = -1;
      if (tree.node(index).expansion->loo_absolute > 0.0) {
        const LocalData local = local_data(design, tree.node(index).box);
        const std::size_t d = split_direction(tree.node(index).box, local.points, local.residuals);
        const QuantileBox lower = tree.node(index).box.split(d).first;
        std::size_t n_low = 0;
        for (const auto& u : local.points) n_low += lower.contains(u);
        const std::size_t n_high = local.points.size() - n_low;
        // Split only when a child can still hold an expansion.
        if (std::max(n_low, n_high) >= cfg.n_ref) {
          const auto [lo, hi] = tree.split(index, d, iteration + 1);
          next.push_back(lo);
          next.push_back(hi);
          split_dim = static_cast<int>(d);
        }
      }
      record(out.trace, tree, prior, iteration, tree.node(index).id, split_dim,
             iteration == 0 ? cfg.n_ed : 0, likelihood.evaluations() - start);
      ++iteration;
    }
    level = std::move(next);
  }
  out.evaluations = likelihood.evaluations() - start;
  return out;
}

SleResult run_sle(const LikelihoodModel& likelihood, const PriorModel& prior, const RunConfig& cfg) {
  check_inputs(likelihood, prior, cfg);
  const std::size_t start = likelihood.evaluations();
  SleResult out;
  const SseTree empty(prior.dim());
  append_points(sample_lhs(QuantileBox::unit(prior.dim()), cfg.n_ed, derive_seed(cfg.seed, 0, 1)),
                empty, out.design, prior, likelihood);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
      out.design.likelihood.data(), static_cast<Eigen::Index>(out.design.likelihood.size()));
  out.expansion = fit_sparse_pce(out.design.points_u, y, QuantileBox::unit(prior.dim()), cfg.adaptivity);
  for (std::size_t i = 0; i < out.design.size(); ++i) {
    out.design.residual[i] -= out.expansion.evaluate(out.design.points_u[i]);
  }
  out.evaluations = likelihood.evaluations() - start;
  return out;
}

SseTree tree_from_expansion(const SparseExpansion& e) {
  SseTree tree(e.box.dim());
  auto& root = tree.node(0);
  root.expansion = e;
  root.effective_loo = e.loo_absolute;
  root.error_estimate = e.loo_absolute;
  return tree;
}

SseResult run_method(const LikelihoodModel& likelihood, const PriorModel& prior, const RunConfig& cfg) {
  switch (cfg.mode) {
    case Mode::AdaptiveSSLE:
      return run_adaptive_ssle(likelihood, prior, cfg);
    case Mode::StaticSSLE:
      return run_static_ssle(likelihood, prior, cfg);
    case Mode::SLE:
      break;
  }
  SleResult sle = run_sle(likelihood, prior, cfg);
  SseResult out;
  out.tree = tree_from_expansion(sle.expansion);
  out.design = std::move(sle.design);
  out.evaluations = sle.evaluations;
  out.trace.with_moments = cfg.track_moments;
  record(out.trace, out.tree, prior, 0, out.tree.node(0).id, -1, cfg.n_ed, out.evaluations);
  return out;
}

}  // namespace ssle

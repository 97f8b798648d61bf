#include "ssle/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ssle/polybasis.hpp"
#include "ssle/quadrature.hpp"

namespace ssle {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_dim(const PriorModel& prior, std::size_t i) {
  if (i >= prior.dim()) throw std::out_of_range("QoI: coordinate index out of range");
}

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const auto k = static_cast<std::size_t>(it - xs.begin());
  const double w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
  return (1.0 - w) * ys[k - 1] + w * ys[k];
}

bool supported_on(const MultiIndex& alpha, std::size_t i, std::size_t j) {
  for (std::size_t d = 0; d < alpha.dim(); ++d) {
    if (alpha[d] != 0 && d != i && d != j) return false;
  }
  return true;
}

/// Sum over alpha of a_alpha b_alpha for one expansion.
double qoi_inner(const QoI& h, const SparseExpansion& e, const PriorModel& prior) {
  const auto b = local_qoi_coefficients(h, e, prior);
  double s = 0.0;
  for (std::size_t a = 0; a < b.size(); ++a) s += e.coefficients[static_cast<Eigen::Index>(a)] * b[a];
  return s;
}

struct GridPoint {
  Point x;  // physical coordinates of the marginal dims
  Point u;  // full-length quantile point, marginal dims filled in
  double prior_density = 0.0;
  bool inside = true;
};

std::vector<GridPoint> tensor_points(const PriorModel& prior, const std::vector<std::size_t>& dims,
                                     const std::vector<std::vector<double>>& axes) {
  if (dims.empty()) throw std::invalid_argument("posterior_marginal: no dimensions requested");
  if (axes.size() != dims.size()) throw std::invalid_argument("posterior_marginal: one axis per dimension");
  for (std::size_t d : dims) {
    if (d >= prior.dim()) throw std::out_of_range("posterior_marginal: dimension out of range");
  }
  for (std::size_t a = 0; a < dims.size(); ++a) {
    for (std::size_t b = a + 1; b < dims.size(); ++b) {
      if (dims[a] == dims[b]) throw std::invalid_argument("posterior_marginal: repeated dimension");
    }
  }
  std::size_t total = 1;
  for (const auto& ax : axes) {
    if (ax.empty()) throw std::invalid_argument("posterior_marginal: empty axis");
    total *= ax.size();
  }
  std::vector<GridPoint> pts(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    auto& p = pts[flat];
    p.x.resize(static_cast<Eigen::Index>(dims.size()));
    p.u = Point::Constant(static_cast<Eigen::Index>(prior.dim()), 0.5);
    p.prior_density = 1.0;
    std::size_t rem = flat;
    for (std::size_t a = dims.size(); a-- > 0;) {
      const std::size_t k = rem % axes[a].size();
      rem /= axes[a].size();
      const double x = axes[a][k];
      const auto& m = prior.marginal(dims[a]);
      p.x[static_cast<Eigen::Index>(a)] = x;
      p.u[static_cast<Eigen::Index>(dims[a])] = m.cdf(x);
      const double pdf = m.pdf(x);
      if (!(pdf > 0.0)) p.inside = false;
      p.prior_density *= pdf;
    }
  }
  return pts;
}

/// Clips, integrates and counts exclusions for raw marginal values.
MarginalGrid finish_marginal(const std::vector<std::size_t>& dims,
                             const std::vector<std::vector<double>>& axes,
                             const std::vector<GridPoint>& pts, std::vector<double> raw) {
  MarginalGrid g;
  g.dims = dims;
  g.axes = axes;
  std::vector<double> negative(raw.size(), 0.0);
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (!pts[k].inside) ++g.excluded;
    if (raw[k] < 0.0) {
      negative[k] = -raw[k];
      raw[k] = 0.0;
    }
  }
  g.density = std::move(raw);
  g.integral = trapezoid(axes, g.density);
  g.clipped_mass = trapezoid(axes, negative);
  return g;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = 0.5 * (a + b);
    return out;
  }
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  return out;
}

template <class MomentFn, class MarginalFn>
PosteriorSummary summarize_with(double z, const PriorModel& prior, const SummaryOptions& options,
                                MomentFn&& expectation, MarginalFn&& marginal) {
  const auto m = static_cast<Eigen::Index>(prior.dim());
  PosteriorSummary s;
  s.evidence = z;
  s.evidence_positive = z > 0.0;
  s.mean = Eigen::VectorXd::Constant(m, kNaN);
  s.variance = Eigen::VectorXd::Constant(m, kNaN);
  s.sd = Eigen::VectorXd::Constant(m, kNaN);
  s.variance_valid.assign(static_cast<std::size_t>(m), false);
  if (options.covariance) s.covariance = Eigen::MatrixXd::Constant(m, m, kNaN);
  if (!s.evidence_positive) return s;

  for (Eigen::Index i = 0; i < m; ++i) {
    s.mean[i] = expectation(QoI::coordinate(static_cast<std::size_t>(i)));
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    s.variance[i] = expectation(QoI::centered_square(iu, s.mean[i]));
    s.variance_valid[iu] = s.variance[i] >= 0.0;
    s.sd[i] = s.variance_valid[iu] ? std::sqrt(s.variance[i]) : kNaN;
  }
  if (options.covariance) {
    for (Eigen::Index i = 0; i < m; ++i) {
      s.covariance(i, i) = s.variance[i];
      for (Eigen::Index j = i + 1; j < m; ++j) {
        const double c = expectation(QoI::product(static_cast<std::size_t>(i),
                                                  static_cast<std::size_t>(j), s.mean[i], s.mean[j]));
        s.covariance(i, j) = c;
        s.covariance(j, i) = c;
      }
    }
  }
  for (const auto& req : options.marginals) {
    std::vector<std::vector<double>> axes = req.axes;
    axes.resize(req.dims.size());
    for (std::size_t a = 0; a < req.dims.size(); ++a) {
      if (axes[a].empty()) axes[a] = default_axis(prior.marginal(req.dims.at(a)));
    }
    s.marginals.push_back(marginal(req.dims, axes));
    const auto& g = s.marginals.back();
    const double total = g.clipped_mass + g.integral;
    if (total > 0.0) s.negative_mass_fraction = std::max(s.negative_mass_fraction, g.clipped_mass / total);
  }
  return s;
}

}  // namespace

QoI QoI::constant() { return {}; }

QoI QoI::coordinate(std::size_t i) {
  QoI h;
  h.kind = Kind::Coordinate;
  h.i = i;
  return h;
}

QoI QoI::centered_square(std::size_t i, double c) {
  QoI h;
  h.kind = Kind::CenteredSquare;
  h.i = i;
  h.ci = c;
  return h;
}

QoI QoI::product(std::size_t i, std::size_t j, double ci, double cj) {
  QoI h;
  h.kind = Kind::Product;
  h.i = i;
  h.j = j;
  h.ci = ci;
  h.cj = cj;
  return h;
}

QoI QoI::grid(std::size_t i, std::vector<double> xs, std::vector<double> ys) {
  if (xs.size() < 2 || xs.size() != ys.size()) {
    throw std::invalid_argument("QoI::grid: need at least two (x, y) pairs of equal length");
  }
  if (!std::is_sorted(xs.begin(), xs.end()) ||
      std::adjacent_find(xs.begin(), xs.end()) != xs.end()) {
    throw std::invalid_argument("QoI::grid: x values must be strictly increasing");
  }
  QoI h;
  h.kind = Kind::Grid;
  h.i = i;
  h.grid_x = std::move(xs);
  h.grid_y = std::move(ys);
  return h;
}

std::vector<double> univariate_projection(const MarginalDistribution& marginal, double lower,
                                          double upper, const std::function<double(double)>& f,
                                          int n_max) {
  if (!(upper > lower)) throw std::invalid_argument("univariate_projection: empty interval");
  const double width = upper - lower;
  std::vector<double> nodes;
  std::vector<double> weights;
  const bool left = !marginal.bounded() && lower <= 0.0;
  const bool right = !marginal.bounded() && upper >= 1.0;
  if (left || right) {
    auto rule = graded_rule(lower, upper, 32, left, right);
    nodes = std::move(rule.nodes);
    weights = std::move(rule.weights);
  } else {
    const auto& rule = gauss_legendre(64);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      nodes.push_back(lower + 0.5 * width * (rule.nodes[k] + 1.0));
      weights.push_back(0.5 * width * rule.weights[k]);
    }
  }
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
  std::vector<double> leg(static_cast<std::size_t>(n_max) + 1);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double fx = f(marginal.quantile(nodes[k]));
    legendre_orthonormal_all(n_max, 2.0 * (nodes[k] - lower) / width - 1.0, leg.data());
    for (int n = 0; n <= n_max; ++n) out[static_cast<std::size_t>(n)] += weights[k] * fx * leg[static_cast<std::size_t>(n)];
  }
  for (double& c : out) c /= width;
  return out;
}

std::vector<double> local_qoi_coefficients(const QoI& h, const SparseExpansion& e,
                                           const PriorModel& prior) {
  const auto& basis = e.basis;
  std::vector<double> b(basis.size(), 0.0);
  const auto proj = [&](std::size_t d, const std::function<double(double)>& f) {
    const auto k = static_cast<Eigen::Index>(d);
    return univariate_projection(prior.marginal(d), e.box.lower[k], e.box.upper[k], f,
                                 basis.max_degree(d));
  };
  const auto univariate = [&](std::size_t d, const std::function<double(double)>& f) {
    const auto c = proj(d, f);
    for (std::size_t a = 0; a < basis.size(); ++a) {
      const auto& alpha = basis.indices[a];
      if (supported_on(alpha, d, d)) b[a] = c[static_cast<std::size_t>(alpha[d])];
    }
  };
  switch (h.kind) {
    case QoI::Kind::Constant:
      for (std::size_t a = 0; a < basis.size(); ++a) {
        if (basis.indices[a].is_zero()) b[a] = 1.0;
      }
      break;
    case QoI::Kind::Coordinate:
      check_dim(prior, h.i);
      univariate(h.i, [](double x) { return x; });
      break;
    case QoI::Kind::CenteredSquare: {
      check_dim(prior, h.i);
      const double c = h.ci;
      univariate(h.i, [c](double x) { return (x - c) * (x - c); });
      break;
    }
    case QoI::Kind::Grid:
      check_dim(prior, h.i);
      univariate(h.i, [&h](double x) { return interpolate(h.grid_x, h.grid_y, x); });
      break;
    case QoI::Kind::Product: {
      check_dim(prior, h.i);
      check_dim(prior, h.j);
      const double ci = h.ci;
      const double cj = h.cj;
      if (h.i == h.j) {
        univariate(h.i, [ci, cj](double x) { return (x - ci) * (x - cj); });
        break;
      }
      const auto pi = proj(h.i, [ci](double x) { return x - ci; });
      const auto pj = proj(h.j, [cj](double x) { return x - cj; });
      for (std::size_t a = 0; a < basis.size(); ++a) {
        const auto& alpha = basis.indices[a];
        if (supported_on(alpha, h.i, h.j)) {
          b[a] = pi[static_cast<std::size_t>(alpha[h.i])] * pj[static_cast<std::size_t>(alpha[h.j])];
        }
      }
      break;
    }
    default:
      throw std::invalid_argument("local_qoi_coefficients: unsupported quantity of interest");
  }
  return b;
}

double evidence(const SseTree& tree) {
  double z = 0.0;
  for (const auto& n : tree.nodes()) {
    if (n.expansion) z += n.prior_mass * n.expansion->constant();
  }
  return z;
}

double posterior_pdf(const SseTree& tree, const PriorModel& prior, const Point& x) {
  const double z = evidence(tree);
  if (!(z > 0.0)) throw std::domain_error("posterior_pdf: evidence is not positive");
  const double p = prior.pdf(x);
  if (!(p > 0.0)) return 0.0;
  return p * std::max(tree.evaluate(prior.to_quantile(x)), 0.0) / z;
}

double posterior_expectation(const SseTree& tree, const PriorModel& prior, const QoI& h) {
  const double z = evidence(tree);
  if (!(z > 0.0)) throw std::domain_error("posterior_expectation: evidence is not positive");
  double s = 0.0;
  for (const auto& n : tree.nodes()) {
    if (n.expansion) s += n.prior_mass * qoi_inner(h, *n.expansion, prior);
  }
  return s / z;
}

MarginalGrid posterior_marginal(const SseTree& tree, const PriorModel& prior,
                                const std::vector<std::size_t>& dims,
                                const std::vector<std::vector<double>>& axes) {
  const double z = evidence(tree);
  if (!(z > 0.0)) throw std::domain_error("posterior_marginal: evidence is not positive");
  const auto pts = tensor_points(prior, dims, axes);
  std::vector<char> in_dims(prior.dim(), 0);
  for (std::size_t d : dims) in_dims[d] = 1;
  std::vector<double> raw(pts.size(), 0.0);
  for (const auto& n : tree.nodes()) {
    if (!n.expansion) continue;
    double v_rest = 1.0;
    for (std::size_t d = 0; d < prior.dim(); ++d) {
      if (!in_dims[d]) v_rest *= n.box.width(d);
    }
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (!pts[k].inside) continue;
      bool inside = true;
      for (std::size_t d : dims) {
        if (!n.box.contains_coordinate(d, pts[k].u[static_cast<Eigen::Index>(d)])) {
          inside = false;
          break;
        }
      }
      if (inside) raw[k] += v_rest * n.expansion->evaluate_subexpansion(pts[k].u, dims);
    }
  }
  for (std::size_t k = 0; k < pts.size(); ++k) {
    raw[k] = pts[k].inside ? pts[k].prior_density * raw[k] / z : 0.0;
  }
  return finish_marginal(dims, axes, pts, std::move(raw));
}

std::vector<double> default_axis(const MarginalDistribution& marginal, std::size_t n, double mass) {
  const double tail = 0.5 * (1.0 - mass);
  return linspace(marginal.quantile(tail), marginal.quantile(1.0 - tail), n);
}

PosteriorSummary summarize(const SseTree& tree, const PriorModel& prior, const SummaryOptions& options) {
  return summarize_with(
      evidence(tree), prior, options,
      [&](const QoI& h) { return posterior_expectation(tree, prior, h); },
      [&](const std::vector<std::size_t>& dims, const std::vector<std::vector<double>>& axes) {
        return posterior_marginal(tree, prior, dims, axes);
      });
}

double trapezoid(const std::vector<std::vector<double>>& axes, const std::vector<double>& values) {
  std::size_t total = 1;
  for (const auto& ax : axes) total *= ax.size();
  if (values.size() != total) throw std::invalid_argument("trapezoid: size mismatch");
  double s = 0.0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    double w = 1.0;
    std::size_t rem = flat;
    for (std::size_t a = axes.size(); a-- > 0;) {
      const auto& ax = axes[a];
      const std::size_t k = rem % ax.size();
      rem /= ax.size();
      if (ax.size() == 1) continue;
      const double left = k > 0 ? ax[k] - ax[k - 1] : 0.0;
      const double right = k + 1 < ax.size() ? ax[k + 1] - ax[k] : 0.0;
      w *= 0.5 * (left + right);
    }
    s += w * values[flat];
  }
  return s;
}

nlohmann::json to_json(const PosteriorSummary& s) {
  const auto vec = [](const Eigen::VectorXd& v) {
    nlohmann::json j = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      j.push_back(std::isfinite(v[i]) ? nlohmann::json(v[i]) : nlohmann::json(nullptr));
    }
    return j;
  };
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index i = 0; i < s.covariance.rows(); ++i) cov.push_back(vec(s.covariance.row(i).transpose()));
  nlohmann::json marginals = nlohmann::json::array();
  for (const auto& g : s.marginals) {
    marginals.push_back({{"dims", g.dims},
                         {"points", g.density.size()},
                         {"integral", g.integral},
                         {"clipped_mass", g.clipped_mass},
                         {"excluded", g.excluded}});
  }
  nlohmann::json warnings = nlohmann::json::array();
  if (!s.evidence_positive) warnings.push_back("evidence is not positive");
  for (std::size_t i = 0; i < s.variance_valid.size(); ++i) {
    if (s.evidence_positive && !s.variance_valid[i]) {
      warnings.push_back("negative variance estimate in dimension " + std::to_string(i));
    }
  }
  return {{"evidence", s.evidence},
          {"evidence_positive", s.evidence_positive},
          {"mean", vec(s.mean)},
          {"variance", vec(s.variance)},
          {"sd", vec(s.sd)},
          {"variance_valid", s.variance_valid},
          {"covariance", std::move(cov)},
          {"negative_mass_fraction", s.negative_mass_fraction},
          {"marginals", std::move(marginals)},
          {"warnings", std::move(warnings)}};
}

std::string marginal_csv(const MarginalGrid& g) {
  std::ostringstream os;
  os.precision(12);
  for (std::size_t d : g.dims) os << "x" << d << ',';
  os << "density\n";
  for (std::size_t flat = 0; flat < g.density.size(); ++flat) {
    std::vector<std::size_t> idx(g.axes.size());
    std::size_t rem = flat;
    for (std::size_t a = g.axes.size(); a-- > 0;) {
      idx[a] = rem % g.axes[a].size();
      rem /= g.axes[a].size();
    }
    for (std::size_t a = 0; a < g.axes.size(); ++a) os << g.axes[a][idx[a]] << ',';
    os << g.density[flat] << '\n';
  }
  return os.str();
}

namespace sle {

double evidence(const SparseExpansion& e) { return e.constant(); }

double posterior_pdf(const SparseExpansion& e, const PriorModel& prior, const Point& x) {
  const double z = evidence(e);
  if (!(z > 0.0)) throw std::domain_error("posterior_pdf: evidence is not positive");
  const double p = prior.pdf(x);
  if (!(p > 0.0)) return 0.0;
  return p * std::max(e.evaluate(prior.to_quantile(x)), 0.0) / z;
}

double posterior_expectation(const SparseExpansion& e, const PriorModel& prior, const QoI& h) {
  const double z = evidence(e);
  if (!(z > 0.0)) throw std::domain_error("posterior_expectation: evidence is not positive");
  return qoi_inner(h, e, prior) / z;
}

MarginalGrid posterior_marginal(const SparseExpansion& e, const PriorModel& prior,
                                const std::vector<std::size_t>& dims,
                                const std::vector<std::vector<double>>& axes) {
  const double z = evidence(e);
  if (!(z > 0.0)) throw std::domain_error("posterior_marginal: evidence is not positive");
  const auto pts = tensor_points(prior, dims, axes);
  std::vector<double> raw(pts.size(), 0.0);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (pts[k].inside) raw[k] = pts[k].prior_density * e.evaluate_subexpansion(pts[k].u, dims) / z;
  }
  return finish_marginal(dims, axes, pts, std::move(raw));
}

PosteriorSummary summarize(const SparseExpansion& e, const PriorModel& prior,
                           const SummaryOptions& options) {
  return summarize_with(
      evidence(e), prior, options,
      [&](const QoI& h) { return posterior_expectation(e, prior, h); },
      [&](const std::vector<std::size_t>& dims, const std::vector<std::vector<double>>& axes) {
        return posterior_marginal(e, prior, dims, axes);
      });
}

}  // namespace sle

}  // namespace ssle

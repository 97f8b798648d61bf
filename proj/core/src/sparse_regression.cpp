#include "ssle/sparse_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/QR>

namespace ssle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double population_variance(const Eigen::VectorXd& y) {
  if (y.size() == 0) return 0.0;
  const double mean = y.mean();
  return (y.array() - mean).square().mean();
}

bool all_equal(const Eigen::VectorXd& y) {
  for (Eigen::Index i = 1; i < y.size(); ++i) {
    if (y[i] != y[0]) return false;
  }
  return true;
}

double loo_from(const Eigen::VectorXd& e, const Eigen::VectorXd& h) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    const double d = 1.0 - h[i];
    if (!(d > 1e-12)) return kInf;
    const double r = e[i] / d;
    s += r * r;
  }
  return s / static_cast<double>(e.size());
}

struct Candidate {
  double loo = kInf;
  int degree = 0;
  double q = 1.0;
  BasisSet basis;
  std::vector<Eigen::Index> active;  // columns of `basis`, intercept excluded
};

}  // namespace

void AdaptivityConfig::validate() const {
  if (p_max < 0) throw std::invalid_argument("adaptivity.p_max must be >= 0");
  if (q_grid.empty()) throw std::invalid_argument("adaptivity.q_grid must be non-empty");
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    if (!(q_grid[i] > 0.0 && q_grid[i] <= 1.0)) {
      throw std::invalid_argument("adaptivity.q_grid entries must lie in (0, 1]");
    }
    if (i > 0 && !(q_grid[i] > q_grid[i - 1])) {
      throw std::invalid_argument("adaptivity.q_grid must be strictly ascending");
    }
  }
  if (rank < 1) throw std::invalid_argument("adaptivity.rank must be >= 1");
  if (patience < 1) throw std::invalid_argument("adaptivity.patience must be >= 1");
  if (max_candidates < 1) throw std::invalid_argument("adaptivity.max_candidates must be >= 1");
}

double SparseExpansion::evaluate(const Point& u) const {
  const std::size_t m = basis.dim;
  thread_local std::vector<std::vector<double>> values;
  values.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const int nmax = basis.max_degree(i);
    values[i].resize(static_cast<std::size_t>(nmax) + 1);
    legendre_orthonormal_all(nmax, to_reference(box, i, u[static_cast<Eigen::Index>(i)]),
                             values[i].data());
  }
  double s = 0.0;
  for (std::size_t a = 0; a < basis.size(); ++a) {
    const auto& alpha = basis.indices[a];
    double term = coefficients[static_cast<Eigen::Index>(a)];
    for (std::size_t i = 0; i < m; ++i) {
      if (alpha[i] > 0) term *= values[i][static_cast<std::size_t>(alpha[i])];
    }
    s += term;
  }
  return s;
}

double SparseExpansion::evaluate_subexpansion(const Point& u,
                                              std::span<const std::size_t> dims) const {
  const std::size_t m = basis.dim;
  std::vector<char> keep(m, 0);
  for (std::size_t d : dims) keep.at(d) = 1;
  std::vector<std::vector<double>> values(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!keep[i]) continue;
    const int nmax = basis.max_degree(i);
    values[i].resize(static_cast<std::size_t>(nmax) + 1);
    legendre_orthonormal_all(nmax, to_reference(box, i, u[static_cast<Eigen::Index>(i)]),
                             values[i].data());
  }
  double s = 0.0;
  for (std::size_t a = 0; a < basis.size(); ++a) {
    const auto& alpha = basis.indices[a];
    double term = coefficients[static_cast<Eigen::Index>(a)];
    bool inside = true;
    for (std::size_t i = 0; i < m && inside; ++i) {
      if (alpha[i] == 0) continue;
      if (!keep[i]) {
        inside = false;
      } else {
        term *= values[i][static_cast<std::size_t>(alpha[i])];
      }
    }
    if (inside) s += term;
  }
  return s;
}

LooError loo_error(const Eigen::MatrixXd& regressors, const Eigen::VectorXd& responses,
                   std::span<const Eigen::Index> active_set) {
  const Eigen::Index k = regressors.rows();
  const auto n = static_cast<Eigen::Index>(active_set.size());
  if (responses.size() != k) throw std::invalid_argument("loo_error: size mismatch");
  if (n == 0) throw std::invalid_argument("loo_error: empty active set");
  if (k <= n) {
    throw std::invalid_argument("loo_error: underdetermined (need more points than columns)");
  }
  const double var = population_variance(responses);
  if (var == 0.0) return {0.0, 0.0};

  Eigen::MatrixXd xa(k, n);
  for (Eigen::Index j = 0; j < n; ++j) xa.col(j) = regressors.col(active_set[j]);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xa);
  if (qr.rank() < n) throw std::invalid_argument("loo_error: active columns are linearly dependent");
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k, n);
  const Eigen::VectorXd h = q.rowwise().squaredNorm();
  const Eigen::VectorXd e = responses - q * (q.transpose() * responses);
  const double abs = loo_from(e, h);
  return {abs, abs / var};
}

LarsPath lars_path(const Eigen::MatrixXd& regressors, const Eigen::VectorXd& responses,
                   std::size_t max_steps) {
  const Eigen::Index k = regressors.rows();
  const Eigen::Index p = regressors.cols() - 1;
  LarsPath path;
  if (k == 0 || regressors.cols() == 0) return path;

  const Eigen::VectorXd yc = responses.array() - responses.mean();
  Eigen::VectorXd h = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  Eigen::VectorXd e = yc;
  path.loo.push_back(loo_from(e, h));
  if (p <= 0 || max_steps == 0) return path;

  // Centered, unit-norm candidate columns.
  Eigen::MatrixXd xs = regressors.rightCols(p);
  xs.rowwise() -= xs.colwise().mean();
  std::vector<char> eligible(static_cast<std::size_t>(p), 1);
  const double norm_tol = 1e-10 * std::sqrt(static_cast<double>(k));
  for (Eigen::Index j = 0; j < p; ++j) {
    const double nrm = xs.col(j).norm();
    if (nrm <= norm_tol) {
      eligible[static_cast<std::size_t>(j)] = 0;
      xs.col(j).setZero();
    } else {
      xs.col(j) /= nrm;
    }
  }

  const std::size_t steps_cap = std::min<std::size_t>(max_steps, static_cast<std::size_t>(p));
  const auto cap = static_cast<Eigen::Index>(steps_cap);
  Eigen::MatrixXd q(k, cap);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(cap, cap);
  std::vector<char> active(static_cast<std::size_t>(p), 0);
  std::vector<Eigen::Index> order;
  Eigen::VectorXd c = xs.transpose() * yc;

  auto argmax_inactive = [&]() -> Eigen::Index {
    Eigen::Index best = -1;
    double best_val = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (active[ju] || !eligible[ju]) continue;
      const double v = std::abs(c[j]);
      if (v > best_val) {
        best_val = v;
        best = j;
      }
    }
    return best;
  };

  Eigen::Index next = argmax_inactive();
  std::size_t best_step = 0;
  double best_loo = path.loo[0];
  const std::size_t patience = std::max<std::size_t>(10, steps_cap / 10);

  while (next >= 0 && order.size() < steps_cap) {
    const auto n = static_cast<Eigen::Index>(order.size());
    // Gram-Schmidt with one re-orthogonalization pass.
    Eigen::VectorXd v = xs.col(next);
    Eigen::VectorXd rcol = Eigen::VectorXd::Zero(n);
    for (int pass = 0; pass < 2 && n > 0; ++pass) {
      const Eigen::VectorXd proj = q.leftCols(n).transpose() * v;
      v -= q.leftCols(n) * proj;
      rcol += proj;
    }
    const double rnn = v.norm();
    if (rnn < 1e-9) {
      eligible[static_cast<std::size_t>(next)] = 0;
      next = argmax_inactive();
      continue;
    }
    q.col(n) = v / rnn;
    r.col(n).head(n) = rcol;
    r(n, n) = rnn;
    active[static_cast<std::size_t>(next)] = 1;
    order.push_back(next);

    const auto qn = q.col(n);
    h.array() += qn.array().square();
    e -= qn * qn.dot(e);
    const double loo = loo_from(e, h);
    path.loo.push_back(loo);
    if (loo < best_loo) {
      best_loo = loo;
      best_step = order.size();
    } else if (order.size() - best_step > patience) {
      break;
    }
    if (order.size() >= steps_cap) break;

    // Equiangular direction through the active set.
    const Eigen::Index na = n + 1;
    Eigen::VectorXd s(na);
    double c_max = 0.0;
    for (Eigen::Index a = 0; a < na; ++a) {
      const double ca = c[order[static_cast<std::size_t>(a)]];
      s[a] = ca >= 0.0 ? 1.0 : -1.0;
      c_max = std::max(c_max, std::abs(ca));
    }
    const Eigen::VectorXd z =
        r.topLeftCorner(na, na).transpose().triangularView<Eigen::Lower>().solve(s);
    const double zn = z.norm();
    if (!(zn > 0.0) || !std::isfinite(zn)) break;
    const double aa = 1.0 / zn;
    const Eigen::VectorXd u = q.leftCols(na) * (z * aa);
    const Eigen::VectorXd corr = xs.transpose() * u;

    double gamma = kInf;
    Eigen::Index arg = -1;
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (active[ju] || !eligible[ju]) continue;
      const double d1 = aa - corr[j];
      const double d2 = aa + corr[j];
      if (d1 > 1e-14) {
        const double g = (c_max - c[j]) / d1;
        if (g > 1e-14 && g < gamma) {
          gamma = g;
          arg = j;
        }
      }
      if (d2 > 1e-14) {
        const double g = (c_max + c[j]) / d2;
        if (g > 1e-14 && g < gamma) {
          gamma = g;
          arg = j;
        }
      }
    }
    if (arg < 0) break;
    c -= gamma * corr;
    next = arg;
  }
  path.order = std::move(order);
  return path;
}

SparseExpansion fit_sparse_pce(const PointSet& points, const Eigen::VectorXd& responses,
                               const QuantileBox& box, const AdaptivityConfig& cfg) {
  cfg.validate();
  const auto k = static_cast<Eigen::Index>(points.size());
  if (k == 0) throw std::invalid_argument("fit_sparse_pce: no points");
  if (responses.size() != k) throw std::invalid_argument("fit_sparse_pce: size mismatch");
  const std::size_t m = box.dim();
  for (const auto& u : points) {
    if (!box.contains(u)) throw std::out_of_range("fit_sparse_pce: point outside the box");
  }

  SparseExpansion out;
  out.box = box;
  out.basis.dim = m;
  out.basis.indices.push_back(MultiIndex(m));

  if (all_equal(responses)) {
    out.coefficients = Eigen::VectorXd::Constant(1, responses[0]);
    out.loo_error = 0.0;
    out.loo_absolute = 0.0;
    return out;
  }

  const int p_max = std::max(cfg.p_max, 0);
  const auto tables = legendre_tables(box, points, p_max);

  Candidate best;
  {
    const Eigen::VectorXd yc = responses.array() - responses.mean();
    best.loo = loo_from(yc, Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k)));
    best.degree = 0;
    best.basis = out.basis;
  }

  int stale = 0;
  for (int p = 1; p <= p_max && k >= 3; ++p) {
    bool improved = false;
    std::size_t previous_size = 0;
    for (double q : cfg.q_grid) {
      TruncationSpec spec{p, q, cfg.rank};
      BasisSet basis = enumerate_basis(m, spec, cfg.max_candidates);
      if (basis.size() == previous_size) continue;  // q-grid step added no terms
      previous_size = basis.size();

      Eigen::MatrixXd psi(k, static_cast<Eigen::Index>(basis.size()));
      for (std::size_t a = 0; a < basis.size(); ++a) {
        auto col = psi.col(static_cast<Eigen::Index>(a));
        col.setOnes();
        for (std::size_t i = 0; i < m; ++i) {
          const int deg = basis.indices[a][i];
          if (deg > 0) col.array() *= tables[i].col(deg).array();
        }
      }
      const std::size_t max_steps =
          std::min<std::size_t>(basis.size() - 1, static_cast<std::size_t>(k - 2));
      const LarsPath path = lars_path(psi, responses, max_steps);
      const auto it = std::min_element(path.loo.begin(), path.loo.end());
      if (*it < best.loo) {
        const auto steps = static_cast<std::size_t>(it - path.loo.begin());
        best.loo = *it;
        best.degree = p;
        best.q = q;
        best.active.clear();
        for (std::size_t s = 0; s < steps; ++s) best.active.push_back(path.order[s] + 1);
        best.basis = std::move(basis);
        improved = true;
      }
    }
    if (improved) {
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }

  // Refit the selected terms by ordinary least squares.
  std::vector<MultiIndex> selected{MultiIndex(m)};
  for (Eigen::Index col : best.active) selected.push_back(best.basis.indices[static_cast<std::size_t>(col)]);
  std::sort(selected.begin() + 1, selected.end(), graded_less);
  out.basis.indices = std::move(selected);
  out.degree = best.degree;
  out.q_norm = best.q;

  const Eigen::MatrixXd psi = eval_local_basis(out.basis, box, points);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(psi);
  out.coefficients = qr.solve(responses);
  std::vector<Eigen::Index> all(out.basis.size());
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  if (k > static_cast<Eigen::Index>(all.size())) {
    const LooError loo = loo_error(psi, responses, all);
    out.loo_absolute = loo.absolute;
    out.loo_error = loo.normalized;
  } else {
    out.loo_absolute = kInf;
    out.loo_error = kInf;
  }
  return out;
}

}  // namespace ssle

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ssle/polybasis.hpp"
#include "ssle/prob.hpp"

namespace ssle {

/// Degree and q-norm adaptivity of a local expansion.
struct AdaptivityConfig {
  int p_max = 20;
  std::vector<double> q_grid{0.5, 0.6, 0.7, 0.8};
  int rank = 2;
  /// Consecutive non-improving degrees before the degree sweep stops.
  int patience = 2;
  std::size_t max_candidates = 50000;

  void validate() const;
};

/// Local polynomial expansion of a (residual) response on one quantile box.
struct SparseExpansion {
  BasisSet basis;
  Eigen::VectorXd coefficients;
  /// LOO error divided by the population variance of the responses.
  double loo_error = 0.0;
  /// LOO error in the units of the squared response.
  double loo_absolute = 0.0;
  QuantileBox box;
  int degree = 0;
  double q_norm = 1.0;

  double constant() const { return coefficients.size() ? coefficients[0] : 0.0; }
  /// Value at a quantile-space point; the point is not checked against the box.
  double evaluate(const Point& u) const;
  /// Sum restricted to terms whose non-zero degrees lie within `dims`,
  /// evaluated at the coordinates u[dims[j]].
  double evaluate_subexpansion(const Point& u, std::span<const std::size_t> dims) const;
};

struct LooError {
  double absolute = 0.0;
  double normalized = 0.0;
};

/// Analytic leave-one-out error of the OLS fit on the given columns:
/// (1/K) sum_i (e_i / (1 - h_i))^2, plus the same value divided by the
/// population variance of the responses (0 when that variance is 0).
LooError loo_error(const Eigen::MatrixXd& regressors, const Eigen::VectorXd& responses,
                   std::span<const Eigen::Index> active_set);

/// Variables in the order least-angle regression activates them. Column 0 is
/// treated as the intercept and is never part of the returned path; entries
/// index the remaining columns, so entry j refers to column j + 1.
struct LarsPath {
  std::vector<Eigen::Index> order;
  /// LOO error (absolute) of intercept + first k variables, k = 0..order.size().
  std::vector<double> loo;
};

/// Plain LARS on centered, unit-norm columns with an analytic-LOO score of
/// the OLS refit at every step. Stops after `max_steps` variables or when
/// the score has not improved for a while.
LarsPath lars_path(const Eigen::MatrixXd& regressors, const Eigen::VectorXd& responses,
                   std::size_t max_steps);

/// Degree- and q-norm-adaptive sparse expansion fitted by LARS + OLS,
/// selected by the lowest LOO error.
SparseExpansion fit_sparse_pce(const PointSet& points, const Eigen::VectorXd& responses,
                               const QuantileBox& box, const AdaptivityConfig& cfg);

}  // namespace ssle

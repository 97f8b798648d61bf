#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "ssle/prob.hpp"
#include "ssle/sparse_regression.hpp"
#include "ssle/sse_tree.hpp"

namespace ssle {

/// Supported quantities of interest h(x) for posterior expectations.
struct QoI {
  enum class Kind { Constant, Coordinate, CenteredSquare, Product, Grid };
  Kind kind = Kind::Constant;
  std::size_t i = 0;
  std::size_t j = 0;
  double ci = 0.0;
  double cj = 0.0;
  /// Grid form: piecewise-linear h(x_i) through (grid_x, grid_y), held
  /// constant beyond the ends.
  std::vector<double> grid_x;
  std::vector<double> grid_y;

  static QoI constant();
  static QoI coordinate(std::size_t i);
  /// (x_i - c)^2.
  static QoI centered_square(std::size_t i, double c);
  /// (x_i - ci) (x_j - cj).
  static QoI product(std::size_t i, std::size_t j, double ci = 0.0, double cj = 0.0);
  static QoI grid(std::size_t i, std::vector<double> xs, std::vector<double> ys);
};

/// Coefficients c_n = E_u[f(F_i^{-1}(u)) L_n(t(u))], n = 0..n_max, with u
/// uniform on [lower, upper] and t the affine map onto [-1, 1].
std::vector<double> univariate_projection(const MarginalDistribution& marginal, double lower,
                                          double upper, const std::function<double(double)>& f,
                                          int n_max);

/// Expansion coefficients b_alpha of h in the basis of `expansion` (box-uniform
/// measure), aligned with expansion.basis.
std::vector<double> local_qoi_coefficients(const QoI& h, const SparseExpansion& expansion,
                                           const PriorModel& prior);

/// Sum over expanded nodes of V^k a_0^k.
double evidence(const SseTree& tree);
/// prior(x) max(L_SSLE(u(x)), 0) / Z; 0 outside the prior support.
double posterior_pdf(const SseTree& tree, const PriorModel& prior, const Point& x);
/// (1/Z) sum_k V^k sum_alpha a_alpha^k b_alpha^k.
double posterior_expectation(const SseTree& tree, const PriorModel& prior, const QoI& h);

/// Marginal density over `dims` on a tensor grid of physical coordinates.
struct MarginalGrid {
  std::vector<std::size_t> dims;
  std::vector<std::vector<double>> axes;
  /// Row-major over axes (last axis fastest), clipped at zero.
  std::vector<double> density;
  /// Integral of the negative part removed by clipping (same units as density).
  double clipped_mass = 0.0;
  /// Trapezoid integral of the clipped density.
  double integral = 0.0;
  /// Grid points whose quantile image fell outside [0, 1].
  std::size_t excluded = 0;
};

MarginalGrid posterior_marginal(const SseTree& tree, const PriorModel& prior,
                                const std::vector<std::size_t>& dims,
                                const std::vector<std::vector<double>>& axes);

/// Axis of n points spanning the central `mass` probability interval of a marginal.
std::vector<double> default_axis(const MarginalDistribution& marginal, std::size_t n = 512,
                                 double mass = 0.9999);

struct MarginalRequest {
  std::vector<std::size_t> dims;
  /// One axis per dim; empty axes are replaced by default_axis.
  std::vector<std::vector<double>> axes;
};

struct PosteriorSummary {
  double evidence = 0.0;
  bool evidence_positive = true;
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  /// sqrt(variance); NaN where the variance estimate is negative.
  Eigen::VectorXd sd;
  std::vector<bool> variance_valid;
  Eigen::MatrixXd covariance;
  std::vector<MarginalGrid> marginals;
  /// Largest share of clipped negative mass, clipped / (clipped + integral),
  /// over the marginal grids.
  double negative_mass_fraction = 0.0;
};

struct SummaryOptions {
  bool covariance = true;
  std::vector<MarginalRequest> marginals;
};

PosteriorSummary summarize(const SseTree& tree, const PriorModel& prior,
                           const SummaryOptions& options = {});

nlohmann::json to_json(const PosteriorSummary& s);
/// CSV with one column per marginal dimension followed by "density".
std::string marginal_csv(const MarginalGrid& g);
/// Trapezoid integral of a tensor grid density.
double trapezoid(const std::vector<std::vector<double>>& axes, const std::vector<double>& values);

/// Post-processing of a single global expansion.
namespace sle {
double evidence(const SparseExpansion& e);
double posterior_pdf(const SparseExpansion& e, const PriorModel& prior, const Point& x);
double posterior_expectation(const SparseExpansion& e, const PriorModel& prior, const QoI& h);
MarginalGrid posterior_marginal(const SparseExpansion& e, const PriorModel& prior,
                                const std::vector<std::size_t>& dims,
                                const std::vector<std::vector<double>>& axes);
PosteriorSummary summarize(const SparseExpansion& e, const PriorModel& prior,
                           const SummaryOptions& options = {});
}  // namespace sle

}  // namespace ssle

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include <Eigen/Core>

#include "ssle/prob.hpp"

namespace ssle {

using LogDensity = std::function<double(const Point&)>;

/// Ensemble chain; column s * walkers + w of `states` is walker w after step s.
struct Chain {
  std::size_t walkers = 0;
  std::size_t steps = 0;
  std::size_t dim = 0;
  Eigen::MatrixXd states;
  std::vector<double> log_posterior;
  double acceptance_rate = 0.0;

  Point state(std::size_t walker, std::size_t step) const;
  /// Coordinate i of all states from step `burn_in` on, step-major.
  std::vector<double> coordinate(std::size_t i, std::size_t burn_in = 0) const;
  /// Columns: walker, step, x_0..x_{M-1}, log_posterior.
  void write_csv(std::ostream& os) const;
};

/// Affine-invariant ensemble sampler with the stretch move (a = 2). Walkers
/// start from prior draws; each half-ensemble update draws its random numbers
/// in walker order before evaluating proposals, so chains depend only on the seed.
Chain aies_sample(const LogDensity& log_posterior, const PriorModel& prior, std::size_t walkers,
                  std::size_t steps, std::uint64_t seed, double stretch = 2.0);

/// Integrated autocorrelation time of coordinate i, averaged over walkers
/// (automatic window with c = 5).
double integrated_autocorr_time(const Chain& chain, std::size_t i, std::size_t burn_in = 0);
double effective_sample_size(const Chain& chain, std::size_t i, std::size_t burn_in = 0);

struct DensityGrid {
  std::vector<double> x;
  std::vector<double> density;

  double integral() const;
};

/// Gaussian KDE with bandwidth 1.06 min(sd, IQR / 1.34) n^(-1/5).
DensityGrid kde_marginal(const std::vector<double>& samples, const std::vector<double>& grid);
double silverman_bandwidth(const std::vector<double>& samples);

/// Jensen-Shannon divergence (natural log) of two densities on a shared grid,
/// each renormalized by its trapezoid integral first.
double js_divergence(const DensityGrid& p, const DensityGrid& q);

/// Mean of the per-dimension JSDs.
double eta_error(const std::vector<DensityGrid>& approx, const std::vector<DensityGrid>& reference);

struct OracleResult {
  double evidence = 0.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  std::vector<DensityGrid> marginals;
};

struct OracleOptions {
  /// Composite Gauss-Legendre rule per quantile dimension.
  std::size_t nodes_per_panel = 20;
  std::size_t panels = 10;
  /// Grade the end panels of unbounded marginals geometrically.
  bool graded_ends = true;
};

/// Tensor Gauss-Legendre integration in quantile space for M <= 3: evidence,
/// posterior moments and normalized 1-D marginals on the given physical axes.
OracleResult quadrature_oracle(const std::function<double(const Point&)>& likelihood,
                               const PriorModel& prior,
                               const std::vector<std::vector<double>>& marginal_axes,
                               const OracleOptions& options = {});

}  // namespace ssle

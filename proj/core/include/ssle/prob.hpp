#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace ssle {

using Point = Eigen::VectorXd;
using PointSet = std::vector<Point>;

enum class Family { Uniform, Gaussian, Lognormal };

std::string to_string(Family family);

/// Standard normal CDF.
double normal_cdf(double z);

/// Standard normal quantile: rational approximation refined by one Newton step.
double normal_quantile(double p);

/// One-dimensional prior marginal.
///
/// `param1`/`param2` carry the user-facing parameterization: bounds for
/// Uniform, mean and standard deviation for Gaussian and Lognormal. A
/// lognormal can also be built from the parameters of ln X, in which case
/// param1/param2 still report the moments of X.
class MarginalDistribution {
 public:
  static MarginalDistribution uniform(double lower, double upper);
  static MarginalDistribution gaussian(double mean, double sd);
  /// Moment parameterization: mean and standard deviation of X itself.
  static MarginalDistribution lognormal(double mean, double sd);
  /// Log-space parameterization: X = exp(mu_log + sigma_log * Z).
  static MarginalDistribution lognormal_log(double mu_log, double sigma_log);

  Family family() const { return family_; }
  double param1() const { return p1_; }
  double param2() const { return p2_; }

  double pdf(double x) const;
  double log_pdf(double x) const;
  double cdf(double x) const;
  /// F^{-1}(u). Throws std::domain_error for u outside [0,1]; u is clamped to
  /// [1e-15, 1 - 1e-15] before inversion so box corners stay finite.
  double quantile(double u) const;

  double mean() const;
  double sd() const;
  bool bounded() const { return family_ == Family::Uniform; }
  /// Support as (lower, upper); infinite ends for unbounded families.
  std::pair<double, double> support() const;

  /// Parameters of ln X (lognormal only).
  double mu_log() const { return mu_log_; }
  double sigma_log() const { return sigma_log_; }

 private:
  MarginalDistribution(Family family, double p1, double p2);

  Family family_;
  double p1_;
  double p2_;
  double mu_log_ = 0.0;
  double sigma_log_ = 0.0;
};

/// Joint prior with independent marginals.
class PriorModel {
 public:
  PriorModel() = default;
  explicit PriorModel(std::vector<MarginalDistribution> marginals);

  std::size_t dim() const { return marginals_.size(); }
  const MarginalDistribution& marginal(std::size_t i) const { return marginals_.at(i); }
  const std::vector<MarginalDistribution>& marginals() const { return marginals_; }

  Point to_physical(const Point& u) const;
  Point to_quantile(const Point& x) const;
  /// Sum of marginal log densities; -inf outside the support.
  double log_pdf(const Point& x) const;
  double pdf(const Point& x) const;

 private:
  std::vector<MarginalDistribution> marginals_;
};

/// Axis-aligned box in the unit quantile hypercube.
///
/// Membership is half-open per coordinate, (lower, upper], with the face at
/// u = 0 included. A point on a split plane therefore belongs to the lower
/// child, and sibling boxes never share a point.
struct QuantileBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  QuantileBox() = default;
  QuantileBox(Eigen::VectorXd lo, Eigen::VectorXd hi);
  static QuantileBox unit(std::size_t dim);

  std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }
  double volume() const;
  double width(std::size_t i) const { return upper[i] - lower[i]; }
  double midpoint(std::size_t i) const { return 0.5 * (lower[i] + upper[i]); }
  bool contains(const Point& u) const;
  bool contains_coordinate(std::size_t i, double ui) const;
  /// Halves the box at the midpoint of dimension d; returns (lower, upper).
  std::pair<QuantileBox, QuantileBox> split(std::size_t d) const;
};

/// F^{-1} applied componentwise.
Point quantile_transform(const PriorModel& prior, const Point& u);

/// Sum of marginal log densities at a physical point.
double log_pdf(const PriorModel& prior, const Point& x);

/// Latin hypercube sample of n points inside the box, deterministic in seed.
PointSet sample_lhs(const QuantileBox& box, std::size_t n, std::uint64_t seed);

/// Mixes a base seed with a stream tag into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace ssle

#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ssle/prob.hpp"

namespace ssle {

/// Deterministic map from physical parameters to model outputs.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;
  virtual std::string name() const = 0;
  /// Expected input length; 0 accepts any length.
  virtual std::size_t input_dim() const { return 0; }
  virtual std::size_t output_dim() const = 0;
  virtual Eigen::VectorXd evaluate(const Point& x) const = 0;
  /// Outputs in input order.
  virtual std::vector<Eigen::VectorXd> evaluate_batch(const PointSet& xs) const;
};

/// Amplitude of the frequency response of a damped single-degree-of-freedom
/// oscillator with stiffness x.
double oscillator_frf(double x, double mass = 1.0, double omega = 1.0, double damping = 0.1);

class OscillatorModel final : public ForwardModel {
 public:
  OscillatorModel(double mass = 1.0, double omega = 1.0, double damping = 0.1);
  std::string name() const override { return "oscillator"; }
  std::size_t input_dim() const override { return 1; }
  std::size_t output_dim() const override { return 1; }
  Eigen::VectorXd evaluate(const Point& x) const override;

 private:
  double mass_;
  double omega_;
  double damping_;
};

/// Returns x unchanged; pairs with a Gaussian discrepancy to give
/// product-Gaussian (conjugate) likelihoods.
class IdentityModel final : public ForwardModel {
 public:
  explicit IdentityModel(std::size_t dim) : dim_(dim) {}
  std::string name() const override { return "identity"; }
  std::size_t input_dim() const override { return dim_; }
  std::size_t output_dim() const override { return dim_; }
  Eigen::VectorXd evaluate(const Point& x) const override { return x; }

 private:
  std::size_t dim_;
};

/// Truncated Karhunen-Loeve basis of a stationary field on [0, 1] with
/// correlation exp(-|s - s'| / corr_length).
struct KLBasis {
  double corr_length = 1.0 / 3.0;
  double variance = 1.0;
  /// Nystrom grid (cell midpoints) and eigenvectors scaled to unit L2 norm.
  Eigen::VectorXd grid;
  Eigen::MatrixXd grid_functions;
  /// Retained eigenvalues, descending.
  Eigen::VectorXd eigenvalues;
  /// All eigenvalues of the discretized kernel, descending.
  Eigen::VectorXd all_eigenvalues;

  std::size_t terms() const { return static_cast<std::size_t>(eigenvalues.size()); }
  /// sqrt(lambda_k) e_k(s) for every retained k, by Nystrom interpolation.
  Eigen::VectorXd scaled_functions_at(double s) const;
  /// Number of leading terms explaining at least `fraction` of the variance.
  std::size_t terms_for_fraction(double fraction) const;
};

KLBasis kl_expansion(double corr_length, double variance, std::size_t resolution, std::size_t terms);

/// First eigenvalue of the exponential kernel on an interval of the given
/// length, from the transcendental characteristic equation.
double exponential_kernel_first_eigenvalue(double corr_length, double variance, double length);

/// u(1) for -(kappa u')' = 1, u(0) = 0, u'(1) = 1, kappa = exp(10 + 3 g),
/// g = sum_k xi_k sqrt(lambda_k) e_k, via u(1) = int_0^1 (kappa(1) + 1 - s) / kappa(s) ds.
double diffusion_u1(const Eigen::VectorXd& xi, const KLBasis& kl, std::size_t nodes = 512);

class DiffusionModel final : public ForwardModel {
 public:
  explicit DiffusionModel(KLBasis kl, std::size_t nodes = 512);
  std::string name() const override { return "diffusion"; }
  std::size_t input_dim() const override { return kl_.terms(); }
  std::size_t output_dim() const override { return 1; }
  Eigen::VectorXd evaluate(const Point& x) const override;
  const KLBasis& kl() const { return kl_; }

 private:
  KLBasis kl_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  Eigen::MatrixXd phi_;  // scaled eigenfunctions at the quadrature nodes
  Eigen::VectorXd phi_end_;
};

/// External model: input rows are written as CSV to the child's stdin and one
/// CSV output row per input is read back from its stdout.
class SubprocessModel final : public ForwardModel {
 public:
  SubprocessModel(std::vector<std::string> argv, std::size_t input_dim, std::size_t output_dim);
  std::string name() const override { return "subprocess"; }
  std::size_t input_dim() const override { return input_dim_; }
  std::size_t output_dim() const override { return output_dim_; }
  Eigen::VectorXd evaluate(const Point& x) const override;
  std::vector<Eigen::VectorXd> evaluate_batch(const PointSet& xs) const override;

 private:
  std::vector<std::string> argv_;
  std::size_t input_dim_;
  std::size_t output_dim_;
};

/// Additive Gaussian discrepancy with scalar, diagonal or full covariance.
class GaussianDiscrepancy {
 public:
  static GaussianDiscrepancy scalar(double sigma, std::size_t dim);
  static GaussianDiscrepancy diagonal(const Eigen::VectorXd& sigmas);
  /// Throws std::invalid_argument when cov is not symmetric positive definite.
  static GaussianDiscrepancy full(const Eigen::MatrixXd& cov);

  std::size_t dim() const { return static_cast<std::size_t>(chol_.rows()); }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  /// log N(r; 0, Sigma).
  double log_density(const Eigen::VectorXd& residual) const;

 private:
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;  // lower Cholesky factor
  double log_norm_ = 0.0;
};

/// Forward-model failure at a specific input.
class LikelihoodError : public std::runtime_error {
 public:
  LikelihoodError(const std::string& what, Point x) : std::runtime_error(what), point_(std::move(x)) {}
  const Point& point() const { return point_; }

 private:
  Point point_;
};

/// L(x) = prod_i N(y_i | m(x), Sigma) over independent observations y_i.
class LikelihoodModel {
 public:
  LikelihoodModel(std::shared_ptr<const ForwardModel> model, GaussianDiscrepancy discrepancy,
                  std::vector<Eigen::VectorXd> data);
  LikelihoodModel(const LikelihoodModel& other);

  double log_likelihood(const Point& x) const;
  double evaluate(const Point& x) const;
  /// Values in input order; forward calls go through one batch request.
  std::vector<double> evaluate_batch(const PointSet& xs) const;
  std::vector<double> log_likelihood_batch(const PointSet& xs) const;

  /// Number of forward-model evaluations so far.
  std::size_t evaluations() const { return counter_.load(); }
  void reset_counter() { counter_.store(0); }

  const ForwardModel& model() const { return *model_; }
  const GaussianDiscrepancy& discrepancy() const { return discrepancy_; }
  const std::vector<Eigen::VectorXd>& data() const { return data_; }
  double log_from_output(const Eigen::VectorXd& output) const;

 private:
  std::shared_ptr<const ForwardModel> model_;
  GaussianDiscrepancy discrepancy_;
  std::vector<Eigen::VectorXd> data_;
  mutable std::atomic<std::size_t> counter_{0};
};

/// Product-Gaussian bump exp-form likelihood N(center | x, width^2 I) in m
/// dimensions.
LikelihoodModel synthetic_peaked_likelihood(std::size_t m, const Eigen::VectorXd& center, double width);

}  // namespace ssle

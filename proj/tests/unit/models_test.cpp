#include <cmath>
#include <numbers>
#include <thread>
#include <vector>

#include <Eigen/LU>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "ssle/models.hpp"

namespace ssle {
namespace {

TEST(Oscillator, FrequencyResponse) {
  EXPECT_NEAR(oscillator_frf(1.0), 10.0, 1e-12);
  EXPECT_NEAR(oscillator_frf(0.5), 1.0 / std::sqrt(0.25 + 0.01), 1e-12);
}

TEST(Oscillator, LogLikelihoodAtUnitStiffness) {
  const std::vector<double> y{9.01, 8.67, 8.84, 9.22, 8.54};
  std::vector<Eigen::VectorXd> data;
  for (double v : y) data.push_back(Eigen::VectorXd::Constant(1, v));
  const LikelihoodModel lik(std::make_shared<OscillatorModel>(), GaussianDiscrepancy::scalar(0.2, 1), data);
  double ref = 0.0;
  for (double v : y) ref += -0.5 * std::log(2.0 * std::numbers::pi * 0.04) - (v - 10.0) * (v - 10.0) / 0.08;
  EXPECT_NEAR(lik.log_likelihood(Eigen::VectorXd::Constant(1, 1.0)), ref, 1e-10);
  EXPECT_NEAR(ref, -81.98, 5e-3);
}

TEST(Discrepancy, FullMatchesDiagonalAndRejectsBadMatrices) {
  Eigen::Vector2d s(0.5, 2.0);
  const auto d = GaussianDiscrepancy::diagonal(s);
  const auto f = GaussianDiscrepancy::full(Eigen::Vector2d(0.25, 4.0).asDiagonal());
  const Eigen::Vector2d r(0.3, -1.0);
  EXPECT_NEAR(d.log_density(r), f.log_density(r), 1e-14);
  Eigen::Matrix2d bad;
  bad << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(GaussianDiscrepancy::full(bad), std::invalid_argument);
  bad << 1.0, 0.1, 0.2, 1.0;
  EXPECT_THROW(GaussianDiscrepancy::full(bad), std::invalid_argument);
}

TEST(Discrepancy, CorrelatedDensity) {
  Eigen::Matrix2d c;
  c << 2.0, 0.6, 0.6, 1.0;
  const Eigen::Vector2d r(0.4, -0.3);
  const double ref = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(c.determinant()) - 0.5 * r.dot(c.inverse() * r);
  EXPECT_NEAR(GaussianDiscrepancy::full(c).log_density(r), ref, 1e-13);
}

TEST(Likelihood, LogAndDirectFormsAgree) {
  const auto lik = synthetic_peaked_likelihood(3, Eigen::Vector3d(0.1, 0.2, 0.3), 0.7);
  const Eigen::Vector3d x(0.0, 0.5, -0.2);
  const double l = lik.evaluate(x);
  ASSERT_GT(l, 1e-300);
  EXPECT_NEAR(std::exp(lik.log_likelihood(x)), l, 4 * std::numeric_limits<double>::epsilon() * l);
}

TEST(Likelihood, CounterIsExactUnderConcurrentBatches) {
  const auto lik = synthetic_peaked_likelihood(2, Eigen::Vector2d(0.0, 0.0), 1.0);
  PointSet xs(37, Eigen::Vector2d(0.1, 0.2));
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int k = 0; k < 10; ++k) lik.evaluate_batch(xs);
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(lik.evaluations(), 8u * 10u * 37u);
}

TEST(Kl, FirstEigenvalueMatchesCharacteristicEquation) {
  const auto kl = kl_expansion(1.0 / 3.0, 1.0, 400, 10);
  const double analytic = exponential_kernel_first_eigenvalue(1.0 / 3.0, 1.0, 1.0);
  EXPECT_NEAR(kl.eigenvalues[0] / analytic, 1.0, 1e-3);
  for (Eigen::Index k = 1; k < kl.eigenvalues.size(); ++k) EXPECT_LE(kl.eigenvalues[k], kl.eigenvalues[k - 1]);
  // Trace of the discretized kernel equals variance times length.
  EXPECT_NEAR(kl.all_eigenvalues.sum(), 1.0, 1e-10);
}

TEST(Kl, EigenvaluesSolveTheEquationForShortCorrelation) {
  // omega tan(omega / 2) = c with c = 1 / corr_length, lambda = 2 c / (omega^2 + c^2).
  const double c = 10.0;
  const double lam = exponential_kernel_first_eigenvalue(0.1, 1.0, 1.0);
  const double omega = std::sqrt(2.0 * c / lam - c * c);
  EXPECT_NEAR(omega * std::tan(omega / 2.0), c, 1e-9);
}

TEST(Diffusion, ConstantFieldClosedForm) {
  const auto kl = kl_expansion(1.0 / 3.0, 1.0, 200, 4);
  const double u1 = diffusion_u1(Eigen::VectorXd::Zero(4), kl);
  EXPECT_NEAR(u1, 1.0 + 0.5 * std::exp(-10.0), 1e-14);
}

TEST(Diffusion, MatchesIndependentQuadrature) {
  const auto kl = kl_expansion(1.0 / 3.0, 1.0, 400, 6);
  Eigen::VectorXd xi(6);
  xi << 0.8, -1.2, 0.4, 0.1, -0.6, 1.5;
  const auto g = [&](double s) { return kl.scaled_functions_at(s).dot(xi); };
  const double k1 = std::exp(10.0 + 3.0 * g(1.0));
  const auto f = [&](double s) { return (k1 + 1.0 - s) / std::exp(10.0 + 3.0 * g(s)); };
  // The interpolated eigenfunctions have kinks at the grid nodes; integrate between them.
  boost::math::quadrature::tanh_sinh<double> ts;
  std::vector<double> edges{0.0};
  for (Eigen::Index j = 0; j < kl.grid.size(); ++j) edges.push_back(kl.grid[j]);
  edges.push_back(1.0);
  double ref = 0.0;
  for (std::size_t j = 0; j + 1 < edges.size(); ++j) ref += ts.integrate(f, edges[j], edges[j + 1]);
  EXPECT_NEAR(diffusion_u1(xi, kl, 2048) / ref, 1.0, 1e-6);
  const DiffusionModel model(kl);
  EXPECT_NEAR(model.evaluate(xi)[0], diffusion_u1(xi, kl), 1e-12);
}

TEST(Subprocess, RoundTripsRowsThroughAChildProcess) {
  const SubprocessModel model({"/bin/sh", "-c", "awk -F, '{ print $1 + $2 \",\" $1 * $2 }'"}, 2, 2);
  PointSet xs{Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(-0.5, 4.0), Eigen::Vector2d(3.0, 0.25)};
  const auto out = model.evaluate_batch(xs);
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_NEAR(out[i][0], xs[i][0] + xs[i][1], 1e-9);
    EXPECT_NEAR(out[i][1], xs[i][0] * xs[i][1], 1e-9);
  }
}

TEST(Subprocess, FailureBecomesLikelihoodError) {
  const LikelihoodModel lik(std::make_shared<SubprocessModel>(std::vector<std::string>{"/bin/sh", "-c", "exit 3"}, 1, 1),
                            GaussianDiscrepancy::scalar(1.0, 1), {Eigen::VectorXd::Zero(1)});
  try {
    lik.evaluate(Eigen::VectorXd::Constant(1, 0.25));
    FAIL() << "expected LikelihoodError";
  } catch (const LikelihoodError& e) {
    EXPECT_EQ(e.point()[0], 0.25);
  }
}

}  // namespace
}  // namespace ssle

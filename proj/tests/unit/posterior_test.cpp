#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "ssle/adaptive.hpp"
#include "ssle/posterior.hpp"
#include "ssle/quadrature.hpp"

namespace ssle {
namespace {

SparseExpansion constant_expansion(const QuantileBox& box, double a0) {
  SparseExpansion e;
  e.basis.dim = box.dim();
  e.basis.indices = {MultiIndex(box.dim())};
  e.coefficients = Eigen::VectorXd::Constant(1, a0);
  e.box = box;
  return e;
}

// Integral of f over every terminal box of the tree with a 24-point rule per box.
double integrate_tree_1d(const SseTree& tree, const std::function<double(double)>& f) {
  double s = 0.0;
  for (std::size_t t : tree.terminals()) {
    const auto& box = tree.node(t).box;
    s += integrate_gl(f, box.lower[0], box.upper[0], 24);
  }
  return s;
}

TEST(Projection, UniformCoordinateHandValue) {
  const auto m = MarginalDistribution::uniform(0.0, 1.0);
  const auto c = univariate_projection(m, 0.0, 1.0, [](double x) { return x; }, 2);
  EXPECT_NEAR(c[0], 0.5, 1e-15);
  EXPECT_NEAR(c[1], std::sqrt(3.0) / 6.0, 1e-15);
  EXPECT_NEAR(c[2], 0.0, 1e-15);
}

TEST(Projection, GaussianHalfBoxAgainstTanhSinh) {
  const auto m = MarginalDistribution::gaussian(0.0, 1.0);
  const auto c = univariate_projection(m, 0.0, 0.5, [](double x) { return x; }, 6);
  boost::math::quadrature::tanh_sinh<double> ts;
  for (int n = 0; n <= 6; ++n) {
    const double ref = ts.integrate([&](double u) { return m.quantile(u) * legendre_orthonormal(n, 4.0 * u - 1.0); },
                                    0.0, 0.5) / 0.5;
    EXPECT_NEAR(c[static_cast<std::size_t>(n)], ref, 1e-10) << "degree " << n;
  }
}

TEST(Posterior, FlatLikelihoodReturnsPrior) {
  const PriorModel prior({MarginalDistribution::lognormal(1.0, 0.3), MarginalDistribution::gaussian(2.0, 0.5)});
  SseTree tree(2);
  tree.node(0).expansion = constant_expansion(tree.node(0).box, 1.0);
  EXPECT_DOUBLE_EQ(evidence(tree), 1.0);
  EXPECT_NEAR(posterior_expectation(tree, prior, QoI::coordinate(0)), 1.0, 1e-10);
  EXPECT_NEAR(posterior_expectation(tree, prior, QoI::coordinate(1)), 2.0, 1e-10);
  EXPECT_NEAR(posterior_expectation(tree, prior, QoI::centered_square(1, 2.0)), 0.25, 1e-10);
  const std::vector<double> axis{0.5, 1.0, 1.5};
  const auto g = posterior_marginal(tree, prior, {0}, {axis});
  for (std::size_t k = 0; k < axis.size(); ++k) EXPECT_NEAR(g.density[k], prior.marginal(0).pdf(axis[k]), 1e-14);
  Point x(2);
  x << 1.1, 1.9;
  EXPECT_NEAR(posterior_pdf(tree, prior, x), prior.pdf(x), 1e-15);
  x[0] = -1.0;
  EXPECT_EQ(posterior_pdf(tree, prior, x), 0.0);
}

TEST(Posterior, ConjugateEvidenceOneDimension) {
  const PriorModel prior({MarginalDistribution::gaussian(0.0, 1.0)});
  const LikelihoodModel lik(std::make_shared<IdentityModel>(1), GaussianDiscrepancy::scalar(1.0, 1),
                            {Eigen::VectorXd::Constant(1, 1.0)});
  RunConfig cfg;
  cfg.n_ref = 30;
  cfg.n_ed = 300;
  const auto r = run_adaptive_ssle(lik, prior, cfg);
  const double z = std::exp(-0.25) / std::sqrt(4.0 * std::numbers::pi);
  EXPECT_NEAR(z, 0.21970, 5e-6);
  EXPECT_NEAR(evidence(r.tree) / z, 1.0, 5e-3);
}

TEST(Posterior, MomentsEqualQuadratureOfTheTree) {
  const PriorModel prior({MarginalDistribution::uniform(-1.0, 2.0)});
  const LikelihoodModel lik = synthetic_peaked_likelihood(1, Eigen::VectorXd::Constant(1, 0.7), 0.25);
  RunConfig cfg;
  cfg.n_ref = 10;
  cfg.n_ed = 120;
  const auto r = run_adaptive_ssle(lik, prior, cfg);
  const auto& m = prior.marginal(0);
  const auto at = [&](double u) {
    Point p(1);
    p[0] = u;
    return evaluate_ssle(r.tree, p);
  };
  const double z = integrate_tree_1d(r.tree, at);
  const double mean = integrate_tree_1d(r.tree, [&](double u) { return m.quantile(u) * at(u); }) / z;
  const double var =
      integrate_tree_1d(r.tree, [&](double u) { return std::pow(m.quantile(u) - mean, 2) * at(u); }) / z;
  EXPECT_NEAR(evidence(r.tree), z, 1e-12);
  EXPECT_NEAR(posterior_expectation(r.tree, prior, QoI::coordinate(0)), mean, 1e-10);
  const auto s = summarize(r.tree, prior);
  EXPECT_NEAR(s.variance[0], var, 1e-10);
  EXPECT_NEAR(s.covariance(0, 0), var, 1e-10);
}

TEST(Posterior, MarginalIntegratesToOneAndMatchesPdfIn1d) {
  const PriorModel prior({MarginalDistribution::gaussian(0.0, 1.0)});
  const LikelihoodModel lik = synthetic_peaked_likelihood(1, Eigen::VectorXd::Constant(1, -0.5), 0.4);
  RunConfig cfg;
  cfg.n_ref = 15;
  cfg.n_ed = 150;
  const auto r = run_adaptive_ssle(lik, prior, cfg);
  const auto axis = default_axis(prior.marginal(0), 2001, 0.999999);
  const auto g = posterior_marginal(r.tree, prior, {0}, {axis});
  EXPECT_NEAR(g.integral + g.clipped_mass, 1.0, 1e-3);
  for (std::size_t k = 0; k < axis.size(); k += 97) {
    Point x(1);
    x[0] = axis[k];
    EXPECT_NEAR(g.density[k], posterior_pdf(r.tree, prior, x), 1e-12);
  }
}

TEST(Summary, JsonUsesNullForInvalidSd) {
  PosteriorSummary s;
  s.mean = Eigen::VectorXd::Zero(1);
  s.variance = Eigen::VectorXd::Constant(1, -1.0);
  s.sd = Eigen::VectorXd::Constant(1, std::nan(""));
  s.variance_valid = {false};
  s.covariance = Eigen::MatrixXd::Zero(1, 1);
  const auto j = to_json(s);
  EXPECT_TRUE(j.at("sd")[0].is_null());
}

}  // namespace
}  // namespace ssle

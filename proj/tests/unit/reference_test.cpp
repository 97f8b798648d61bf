#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "ssle/reference.hpp"

namespace ssle {
namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  return x;
}

TEST(Aies, StandardNormalMeanWithinMonteCarloError) {
  const PriorModel prior({MarginalDistribution::gaussian(0.0, 1.0), MarginalDistribution::gaussian(0.0, 1.0)});
  const auto chain = aies_sample([&](const Point& x) { return prior.log_pdf(x); }, prior, 20, 3000, 9);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto xs = chain.coordinate(i, 600);
    double m = 0.0;
    for (double v : xs) m += v;
    m /= static_cast<double>(xs.size());
    const double ess = effective_sample_size(chain, i, 600);
    EXPECT_GT(ess, 100.0);
    EXPECT_LT(std::abs(m), 3.0 / std::sqrt(ess));
  }
  EXPECT_GT(chain.acceptance_rate, 0.3);
  EXPECT_LT(chain.acceptance_rate, 0.9);
}

TEST(Aies, DeterministicInSeedAndRejectsBadEnsembles) {
  const PriorModel prior({MarginalDistribution::uniform(0.0, 1.0)});
  const auto f = [&](const Point& x) { return prior.log_pdf(x); };
  const auto a = aies_sample(f, prior, 4, 50, 3);
  const auto b = aies_sample(f, prior, 4, 50, 3);
  EXPECT_EQ(a.states, b.states);
  EXPECT_THROW(aies_sample(f, prior, 3, 50, 3), std::invalid_argument);
  EXPECT_THROW(aies_sample(f, prior, 2, 50, 3), std::invalid_argument);
}

TEST(Kde, IntegratesToOneAndIsAffineEquivariant) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(1.0, 0.5);
  std::vector<double> s(5000);
  for (double& v : s) v = n(rng);
  const auto grid = linspace(-2.0, 4.0, 1201);
  const auto d = kde_marginal(s, grid);
  EXPECT_NEAR(d.integral(), 1.0, 1e-6);
  std::vector<double> s2(s);
  for (double& v : s2) v *= 2.0;
  std::vector<double> grid2(grid);
  for (double& v : grid2) v *= 2.0;
  const auto d2 = kde_marginal(s2, grid2);
  for (std::size_t k = 0; k < grid.size(); k += 50) EXPECT_NEAR(d2.density[k], 0.5 * d.density[k], 1e-12);
}

TEST(Kde, SilvermanBandwidthFormula) {
  std::vector<double> s(40);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = static_cast<double>(k);
  double ss = 0.0;
  for (double v : s) ss += (v - 19.5) * (v - 19.5);
  const double sd = std::sqrt(ss / 39.0);
  // Linear-interpolation quartiles of 0..39 are 9.75 and 29.25.
  const double iqr = 19.5;
  EXPECT_NEAR(silverman_bandwidth(s), 1.06 * std::min(sd, iqr / 1.34) * std::pow(40.0, -0.2), 1e-12);
  EXPECT_THROW(silverman_bandwidth({1.0, 2.0}), std::invalid_argument);
}

TEST(Jsd, KnownValues) {
  DensityGrid p{linspace(0.0, 1.0, 3), {1.0, 1.0, 1.0}};
  EXPECT_EQ(js_divergence(p, p), 0.0);
  DensityGrid a{linspace(0.0, 3.0, 4), {1.0, 1.0, 0.0, 0.0}};
  DensityGrid b{linspace(0.0, 3.0, 4), {0.0, 0.0, 1.0, 1.0}};
  const double v = js_divergence(a, b);
  EXPECT_EQ(v, js_divergence(b, a));
  EXPECT_GT(v, 0.0);
  EXPECT_LE(v, std::numbers::ln2);
}

TEST(Jsd, DisjointBoxDensitiesReachLn2) {
  const auto x = linspace(0.0, 2.0, 2001);
  DensityGrid a{x, {}};
  DensityGrid b{x, {}};
  for (double v : x) {
    a.density.push_back(v < 0.9 ? 1.0 : 0.0);
    b.density.push_back(v > 1.1 ? 1.0 : 0.0);
  }
  EXPECT_NEAR(js_divergence(a, b), std::numbers::ln2, 1e-12);
}

TEST(Oracle, FlatLikelihoodGivesPriorMoments) {
  const PriorModel prior({MarginalDistribution::gaussian(1.0, 2.0), MarginalDistribution::lognormal(1.0, 0.2)});
  const auto r = quadrature_oracle([](const Point&) { return 1.0; }, prior, {});
  EXPECT_NEAR(r.evidence, 1.0, 1e-10);
  EXPECT_NEAR(r.mean[0], 1.0, 1e-10);
  EXPECT_NEAR(r.mean[1], 1.0, 1e-10);
  EXPECT_NEAR(r.sd[1], 0.2, 1e-8);
}

TEST(Oracle, ConjugateEvidenceAndMarginal) {
  const PriorModel prior({MarginalDistribution::gaussian(0.0, 1.0)});
  const auto lik = [](const Point& x) { return std::exp(-0.5 * (1.0 - x[0]) * (1.0 - x[0])) / std::sqrt(2.0 * std::numbers::pi); };
  const auto axis = linspace(-3.0, 4.0, 701);
  const auto r = quadrature_oracle(lik, prior, {axis}, OracleOptions{20, 50});
  EXPECT_NEAR(r.evidence, std::exp(-0.25) / std::sqrt(4.0 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(r.mean[0], 0.5, 1e-10);
  EXPECT_NEAR(r.sd[0], std::sqrt(0.5), 1e-9);
  for (std::size_t k = 0; k < axis.size(); k += 70) {
    const double ref = std::exp(-(axis[k] - 0.5) * (axis[k] - 0.5)) / std::sqrt(std::numbers::pi);
    EXPECT_NEAR(r.marginals[0].density[k], ref, 1e-10);
  }
}

}  // namespace
}  // namespace ssle

#include <cmath>
#include <numbers>
#include <set>

#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include "ssle/prob.hpp"

namespace ssle {
namespace {

TEST(NormalQuantile, InvertsCdfAcrossTheRange) {
  const boost::math::normal_distribution<> n;
  for (double p : {1e-12, 1e-6, 0.01, 0.2, 0.5, 0.7, 0.99, 1 - 1e-9}) {
    EXPECT_NEAR(normal_quantile(p), boost::math::quantile(n, p), 1e-12 * std::max(1.0, std::abs(boost::math::quantile(n, p))));
  }
  EXPECT_EQ(normal_quantile(0.5), 0.0);
  EXPECT_THROW(normal_quantile(1.5), std::domain_error);
}

TEST(Marginal, LognormalMomentParameterization) {
  const auto m = MarginalDistribution::lognormal(0.8, 0.1);
  const double s2 = std::log(1.0 + 0.01 / 0.64);
  const boost::math::lognormal_distribution<> ref(std::log(0.8) - 0.5 * s2, std::sqrt(s2));
  EXPECT_NEAR(m.quantile(0.5), 0.793822, 5e-7);
  EXPECT_NEAR(m.mean(), 0.8, 1e-14);
  EXPECT_NEAR(m.sd(), 0.1, 1e-14);
  for (double x : {0.5, 0.8, 0.95, 1.05, 1.3}) {
    EXPECT_NEAR(m.pdf(x), boost::math::pdf(ref, x), 1e-12);
    EXPECT_NEAR(m.cdf(x), boost::math::cdf(ref, x), 1e-13);
  }
}

TEST(Marginal, LogSpaceParameterizationReportsMoments) {
  const auto m = MarginalDistribution::lognormal_log(0.0, 0.5);
  EXPECT_NEAR(m.param1(), std::exp(0.125), 1e-14);
  EXPECT_NEAR(m.quantile(0.5), 1.0, 1e-12);
}

TEST(Marginal, QuantileRoundTrip) {
  for (const auto& m : {MarginalDistribution::uniform(-2.0, 3.0), MarginalDistribution::gaussian(1.0, 2.0),
                        MarginalDistribution::lognormal(2.0, 0.7)}) {
    for (double u : {1e-9, 0.01, 0.3, 0.5, 0.77, 0.999}) EXPECT_NEAR(m.cdf(m.quantile(u)), u, 1e-12);
  }
}

TEST(Marginal, QuantileClampsEndpointsAndRejectsOutside) {
  const auto g = MarginalDistribution::gaussian(0.0, 1.0);
  EXPECT_TRUE(std::isfinite(g.quantile(0.0)));
  EXPECT_TRUE(std::isfinite(g.quantile(1.0)));
  EXPECT_THROW(g.quantile(-0.1), std::domain_error);
  EXPECT_THROW(g.quantile(1.1), std::domain_error);
  EXPECT_EQ(MarginalDistribution::uniform(2.0, 4.0).quantile(0.0), 2.0);
}

TEST(Prior, LogPdfIsSumOfMarginalsAndInfiniteOutsideSupport) {
  const PriorModel prior({MarginalDistribution::uniform(0.0, 1.0), MarginalDistribution::gaussian(0.0, 1.0)});
  Point x(2);
  x << 0.3, 0.5;
  EXPECT_NEAR(prior.log_pdf(x), -0.5 * std::log(2.0 * std::numbers::pi) - 0.125, 1e-14);
  x[0] = 1.5;
  EXPECT_EQ(prior.log_pdf(x), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(prior.pdf(x), 0.0);
}

TEST(QuantileBox, HalfOpenMembershipWithLowerFaceAtZero) {
  const auto unit = QuantileBox::unit(1);
  const auto [lo, hi] = unit.split(0);
  Point u(1);
  u[0] = 0.5;
  EXPECT_TRUE(lo.contains(u));
  EXPECT_FALSE(hi.contains(u));
  u[0] = 0.0;
  EXPECT_TRUE(lo.contains(u));
  u[0] = 1.0;
  EXPECT_TRUE(hi.contains(u));
  EXPECT_DOUBLE_EQ(lo.volume() + hi.volume(), 1.0);
}

TEST(Lhs, OnePointPerStratumAndDeterministic) {
  Eigen::VectorXd lo(2);
  Eigen::VectorXd hi(2);
  lo << 0.25, 0.5;
  hi << 0.75, 1.0;
  const QuantileBox box(lo, hi);
  const auto pts = sample_lhs(box, 16, 42);
  for (int d = 0; d < 2; ++d) {
    std::set<int> strata;
    for (const auto& p : pts) {
      EXPECT_TRUE(box.contains(p));
      strata.insert(static_cast<int>(std::floor((p[d] - lo[d]) / 0.5 * 16)));
    }
    EXPECT_EQ(strata.size(), 16u);
  }
  const auto again = sample_lhs(box, 16, 42);
  for (std::size_t j = 0; j < pts.size(); ++j) EXPECT_EQ(pts[j], again[j]);
  EXPECT_NE(sample_lhs(box, 16, 43)[0], pts[0]);
}

TEST(DeriveSeed, DistinctStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t l = 0; l < 8; ++l) {
    for (std::uint64_t p = 1; p < 64; ++p) seen.insert(derive_seed(1, l, p));
  }
  EXPECT_EQ(seen.size(), 8u * 63u);
  EXPECT_EQ(derive_seed(5, 2, 3), derive_seed(5, 2, 3));
}

}  // namespace
}  // namespace ssle

#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "ssle/adaptive.hpp"
#include "ssle/posterior.hpp"

namespace ssle {
namespace {

struct Bump {
  PriorModel prior{{MarginalDistribution::gaussian(0.0, 1.0), MarginalDistribution::uniform(-1.0, 1.0)}};
  LikelihoodModel lik = synthetic_peaked_likelihood(2, Eigen::Vector2d(0.4, -0.2), 0.3);
};

TEST(Adaptive, RespectsBudgetAndIsDeterministic) {
  Bump p;
  RunConfig cfg;
  cfg.n_ref = 12;
  cfg.n_ed = 150;
  cfg.seed = 3;
  const auto a = run_adaptive_ssle(p.lik, p.prior, cfg);
  EXPECT_LE(a.evaluations, cfg.n_ed);
  EXPECT_EQ(a.evaluations, a.design.size());
  const auto b = run_adaptive_ssle(p.lik, p.prior, cfg);
  EXPECT_EQ(to_json(a.tree).dump(), to_json(b.tree).dump());
}

TEST(Adaptive, ResidualsMatchRecomputation) {
  Bump p;
  RunConfig cfg;
  cfg.n_ref = 10;
  cfg.n_ed = 120;
  const auto r = run_adaptive_ssle(p.lik, p.prior, cfg);
  for (std::size_t i = 0; i < r.design.size(); ++i) {
    EXPECT_NEAR(r.design.residual[i], recompute_residual(r.tree, r.design, i), 1e-12);
  }
}

TEST(Adaptive, FittedNodesHoldExactlyNref) {
  Bump p;
  RunConfig cfg;
  cfg.n_ref = 10;
  cfg.n_ed = 100;
  const auto r = run_adaptive_ssle(p.lik, p.prior, cfg);
  for (const auto& n : r.tree.nodes()) {
    if (n.expansion) EXPECT_EQ(r.design.indices_in(n.box).size() >= cfg.n_ref, true);
  }
  EXPECT_GT(r.tree.size(), 1u);
}

double bump_evidence(double w) {
  // N(0.4; 0, 1 + w^2) times the bump mass inside the uniform prior on [-1, 1].
  const double z_gauss = std::exp(-0.5 * 0.16 / (1.0 + w * w)) / std::sqrt(2.0 * M_PI * (1.0 + w * w));
  const double z_unif = 0.25 * (std::erf(1.2 / (w * std::sqrt(2.0))) + std::erf(0.8 / (w * std::sqrt(2.0))));
  return z_gauss * z_unif;
}

TEST(Adaptive, EvidenceOfSmoothBump) {
  Bump p;
  RunConfig cfg;
  cfg.n_ref = 20;
  cfg.n_ed = 400;
  const auto ad = run_adaptive_ssle(p.lik, p.prior, cfg);
  EXPECT_NEAR(evidence(ad.tree) / bump_evidence(0.3), 1.0, 0.02);
}

TEST(Adaptive, RefinementImprovesOnSleForNarrowPeak) {
  const Bump b;
  const LikelihoodModel lik = synthetic_peaked_likelihood(2, Eigen::Vector2d(0.4, -0.2), 0.05);
  const double z_exact = bump_evidence(0.05);
  RunConfig cfg;
  cfg.n_ref = 20;
  cfg.n_ed = 400;
  const auto ad = run_adaptive_ssle(lik, b.prior, cfg);
  cfg.mode = Mode::SLE;
  const auto sle = run_sle(lik, b.prior, cfg);
  EXPECT_LT(std::abs(evidence(ad.tree) - z_exact), std::abs(sle::evidence(sle.expansion) - z_exact));
}

TEST(Static, UsesAllPointsUpFront) {
  Bump p;
  RunConfig cfg;
  cfg.n_ref = 20;
  cfg.n_ed = 200;
  cfg.mode = Mode::StaticSSLE;
  const auto r = run_method(p.lik, p.prior, cfg);
  EXPECT_EQ(r.evaluations, 200u);
  for (const auto& n : r.tree.nodes()) {
    if (n.expansion) EXPECT_GE(r.design.indices_in(n.box).size(), cfg.n_ref);
  }
}

TEST(Sle, OneNodeTreeCarriesTheGlobalExpansion) {
  Bump p;
  RunConfig cfg;
  cfg.n_ref = 10;
  cfg.n_ed = 80;
  cfg.mode = Mode::SLE;
  const auto r = run_method(p.lik, p.prior, cfg);
  ASSERT_EQ(r.tree.size(), 1u);
  const auto s = run_sle(p.lik, p.prior, cfg);
  EXPECT_EQ(evidence(r.tree), sle::evidence(s.expansion));
}

TEST(Config, Validation) {
  RunConfig cfg;
  cfg.n_ref = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_EQ(mode_from_string("static"), Mode::StaticSSLE);
  EXPECT_THROW(mode_from_string("mcmc"), std::invalid_argument);
}

}  // namespace
}  // namespace ssle

#include <cmath>

#include <gtest/gtest.h>

#include "ssle/adaptive.hpp"
#include "ssle/sse_tree.hpp"

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

TEST(Tree, ChildIdsAndUndo) {
  SseTree tree(2);
  const auto [a, b] = tree.split(0, 1);
  EXPECT_EQ(tree.node(a).id, (NodeId{1, 1}));
  EXPECT_EQ(tree.node(b).id, (NodeId{1, 2}));
  const auto [c, d] = tree.split(b, 0);
  EXPECT_EQ(tree.node(c).id, (NodeId{2, 3}));
  EXPECT_EQ(tree.node(d).id, (NodeId{2, 4}));
  EXPECT_DOUBLE_EQ(tree.node(d).prior_mass, 0.25);
  EXPECT_EQ(tree.terminals().size(), 3u);
  tree.undo_split(b);
  EXPECT_EQ(tree.size(), 3u);
  EXPECT_TRUE(tree.node(b).terminal());
}

TEST(Tree, LocateAndEvaluateSumThePath) {
  SseTree tree(1);
  tree.node(0).expansion = constant_expansion(tree.node(0).box, 1.0);
  const auto [lo, hi] = tree.split(0, 0);
  tree.node(hi).expansion = constant_expansion(tree.node(hi).box, 0.5);
  Point u(1);
  u[0] = 0.5;
  EXPECT_EQ(tree.locate(u), (std::vector<std::size_t>{0, lo}));
  EXPECT_DOUBLE_EQ(evaluate_ssle(tree, u), 1.0);
  u[0] = 0.75;
  EXPECT_DOUBLE_EQ(evaluate_ssle(tree, u), 1.5);
}

TEST(Tree, JsonRoundTrip) {
  SseTree tree(2);
  tree.node(0).expansion = constant_expansion(tree.node(0).box, 2.0);
  const auto kids = tree.split(0, 1);
  tree.split(kids.second, 0);
  const auto back = tree_from_json(to_json(tree));
  ASSERT_EQ(back.size(), tree.size());
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto j = back.find(tree.node(i).id);
    ASSERT_TRUE(j.has_value());
    EXPECT_EQ(back.node(*j).box.lower, tree.node(i).box.lower);
    EXPECT_EQ(back.node(*j).box.upper, tree.node(i).box.upper);
  }
  Point u(2);
  u << 0.3, 0.9;
  EXPECT_DOUBLE_EQ(evaluate_ssle(back, u), evaluate_ssle(tree, u));
}

TEST(ErrorEstimator, UsesParentLooTimesMass) {
  SseTree tree(1);
  const auto kids = tree.split(0, 0);
  const auto more = tree.split(kids.first, 0);
  EXPECT_DOUBLE_EQ(error_estimator(tree.node(more.first), 0.4), 0.1);
  auto own = constant_expansion(tree.node(more.first).box, 1.0);
  own.loo_absolute = 0.0;
  tree.node(more.first).expansion = own;
  EXPECT_EQ(error_estimator(tree.node(more.first), 0.4), 0.0);
}

TEST(SplitScores, HandComputedVariances) {
  // Residual 1{u_1 > 0.5} g(u) on eight points.
  const auto box = QuantileBox::unit(2);
  PointSet pts;
  std::vector<double> r;
  const double coords[8][2] = {{0.1, 0.2}, {0.3, 0.7}, {0.4, 0.4}, {0.45, 0.9},
                               {0.6, 0.1}, {0.7, 0.6}, {0.8, 0.3}, {0.95, 0.8}};
  for (const auto& c : coords) {
    Point u(2);
    u << c[0], c[1];
    pts.push_back(u);
    r.push_back(u[0] > 0.5 ? u[0] * u[0] + u[1] : 0.0);
  }
  const auto var = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
  };
  std::vector<double> expected;
  for (int d = 0; d < 2; ++d) {
    std::vector<double> a;
    std::vector<double> b;
    for (std::size_t k = 0; k < pts.size(); ++k) (pts[k][d] <= 0.5 ? a : b).push_back(r[k]);
    expected.push_back(std::abs(var(a) - var(b)));
  }
  const auto got = split_scores(box, pts, r);
  EXPECT_NEAR(got[0], expected[0], 1e-12);
  EXPECT_NEAR(got[1], expected[1], 1e-12);
  EXPECT_EQ(split_direction(box, pts, r), expected[0] >= expected[1] ? 0u : 1u);
}

}  // namespace
}  // namespace ssle

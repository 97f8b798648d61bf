#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ssle/polybasis.hpp"
#include "ssle/quadrature.hpp"

namespace ssle {
namespace {

TEST(Basis, FullTotalDegreeCount) {
  // C(M + p, p) for q = 1 and no rank limit.
  const auto b = enumerate_basis(3, {4, 1.0, 3});
  EXPECT_EQ(b.size(), 35u);
  EXPECT_TRUE(b.indices.front().is_zero());
  for (std::size_t k = 1; k < b.size(); ++k) EXPECT_TRUE(graded_less(b.indices[k - 1], b.indices[k]));
}

TEST(Basis, RankAndQNormTruncation) {
  const auto r1 = enumerate_basis(3, {3, 1.0, 1});
  EXPECT_EQ(r1.size(), 1u + 3u * 3u);
  const auto q = enumerate_basis(2, {4, 0.5, 2});
  for (const auto& a : q.indices) EXPECT_LE(a.q_norm(0.5), 4.0 + 1e-12);
  // (1,1) has 0.5-norm 4 and stays; (2,1) and (1,2) exceed it.
  EXPECT_EQ(q.size(), 1u + 2u * 4u + 1u);
}

TEST(Basis, CapThrows) { EXPECT_THROW(enumerate_basis(10, {10, 1.0, 10}, 1000), std::length_error); }

TEST(Legendre, MatchesStandardLibrary) {
  for (int n = 0; n <= 20; ++n) {
    for (double t : {-1.0, -0.7, 0.0, 0.31, 0.99, 1.0}) {
      EXPECT_NEAR(legendre_orthonormal(n, t), std::sqrt(2.0 * n + 1.0) * std::legendre(n, t), 1e-12);
    }
  }
}

TEST(Legendre, GramMatrixOnBoxIsIdentity) {
  Eigen::VectorXd lo(2);
  Eigen::VectorXd hi(2);
  lo << 0.125, 0.5;
  hi << 0.25, 0.5625;
  const QuantileBox box(lo, hi);
  const auto basis = enumerate_basis(2, {8, 1.0, 2});
  const auto& rule = gauss_legendre(9);
  PointSet pts;
  std::vector<double> w;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      Point u(2);
      u << box.midpoint(0) + 0.5 * box.width(0) * rule.nodes[i], box.midpoint(1) + 0.5 * box.width(1) * rule.nodes[j];
      pts.push_back(u);
      w.push_back(0.25 * rule.weights[i] * rule.weights[j]);
    }
  }
  const auto psi = eval_local_basis(basis, box, pts);
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  const Eigen::MatrixXd g = psi.transpose() * wv.asDiagonal() * psi;
  EXPECT_LT((g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Legendre, PointOutsideBoxThrows) {
  const auto box = QuantileBox::unit(1).split(0).first;
  Point u(1);
  u[0] = 0.75;
  EXPECT_THROW(eval_local_basis(enumerate_basis(1, {2, 1.0, 1}), box, {u}), std::out_of_range);
}

TEST(Quadrature, GaussLegendreIntegratesPolynomialsExactly) {
  const auto& r = gauss_legendre(10);
  double s = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], 18);
  EXPECT_NEAR(s, 2.0 / 19.0, 1e-14);
}

TEST(Quadrature, GradedRuleHandlesLogSingularity) {
  const auto rule = graded_rule(0.0, 1.0, 16, true, false);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::log(rule.nodes[i]);
  EXPECT_NEAR(s, -1.0, 1e-12);
}

}  // namespace
}  // namespace ssle

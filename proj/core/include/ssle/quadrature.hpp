#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace ssle {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached n-point rule; thread-safe.
const GaussLegendreRule& gauss_legendre(std::size_t n);

/// Integral of f over [a, b] with an n-point rule.
double integrate_gl(const std::function<double(double)>& f, double a, double b, std::size_t n);

/// Integral of f over [a, b] split into `panels` equal panels of n points each.
double integrate_composite_gl(const std::function<double(double)>& f, double a, double b,
                              std::size_t n, std::size_t panels);

/// Nodes and weights (weights sum to b - a) of a composite rule on [a, b].
/// Panels are graded geometrically towards each end flagged singular, so
/// integrands with logarithmic-type blow-up at those ends converge.
struct ComposedRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
ComposedRule graded_rule(double a, double b, std::size_t n, bool singular_left,
                         bool singular_right);

}  // namespace ssle

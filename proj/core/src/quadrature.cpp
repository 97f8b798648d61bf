#include "ssle/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace ssle {

namespace {

GaussLegendreRule build_rule(std::size_t n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jd = static_cast<double>(j);
        p1 = ((2.0 * jd - 1.0) * z * p2 - (jd - 1.0) * p3) / jd;
      }
      pp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15) break;
    }
    // Recompute the derivative at the converged root.
    {
      double p1 = 1.0;
      double p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jd = static_cast<double>(j);
        p1 = ((2.0 * jd - 1.0) * z * p2 - (jd - 1.0) * p3) / jd;
      }
      pp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussLegendreRule& gauss_legendre(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<GaussLegendreRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussLegendreRule>(build_rule(n));
  return *slot;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b, std::size_t n) {
  const auto& rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * s;
}

double integrate_composite_gl(const std::function<double(double)>& f, double a, double b,
                              std::size_t n, std::size_t panels) {
  if (panels == 0) throw std::invalid_argument("integrate_composite_gl: panels must be >= 1");
  const double h = (b - a) / static_cast<double>(panels);
  double s = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    s += integrate_gl(f, a + h * static_cast<double>(p), a + h * static_cast<double>(p + 1), n);
  }
  return s;
}

ComposedRule graded_rule(double a, double b, std::size_t n, bool singular_left,
                         bool singular_right) {
  const auto& rule = gauss_legendre(n);
  ComposedRule out;
  auto add_panel = [&](double lo, double hi) {
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (std::size_t i = 0; i < n; ++i) {
      out.nodes.push_back(mid + half * rule.nodes[i]);
      out.weights.push_back(half * rule.weights[i]);
    }
  };
  // Geometric panels with ratio 1/4, refined down to ~1e-17 of the width.
  constexpr int kLevels = 28;
  constexpr double kRatio = 0.25;
  auto graded_left = [&](double lo, double hi) {
    double edge = hi;
    double span = hi - lo;
    for (int k = 0; k < kLevels; ++k) {
      span *= kRatio;
      add_panel(lo + span, edge);
      edge = lo + span;
    }
    add_panel(lo, edge);
  };
  auto graded_right = [&](double lo, double hi) {
    double edge = lo;
    double span = hi - lo;
    for (int k = 0; k < kLevels; ++k) {
      span *= kRatio;
      add_panel(edge, hi - span);
      edge = hi - span;
    }
    add_panel(edge, hi);
  };
  if (singular_left && singular_right) {
    const double mid = 0.5 * (a + b);
    graded_left(a, mid);
    graded_right(mid, b);
  } else if (singular_left) {
    graded_left(a, b);
  } else if (singular_right) {
    graded_right(a, b);
  } else {
    add_panel(a, b);
  }
  return out;
}

}  // namespace ssle

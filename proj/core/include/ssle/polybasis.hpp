#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ssle/prob.hpp"

namespace ssle {

/// Polynomial degree per input dimension.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::size_t dim) : alpha_(dim, 0) {}
  explicit MultiIndex(std::vector<int> alpha);

  std::size_t dim() const { return alpha_.size(); }
  int operator[](std::size_t i) const { return alpha_[i]; }
  void set(std::size_t i, int degree);
  const std::vector<int>& values() const { return alpha_; }

  int total_degree() const;
  std::size_t nonzeros() const;
  bool is_zero() const { return nonzeros() == 0; }
  /// (sum alpha_i^q)^(1/q); q in (0, 1].
  double q_norm(double q) const;

  /// Graded order: total degree first, then larger leading entries first.
  friend bool graded_less(const MultiIndex& a, const MultiIndex& b);
  auto operator<=>(const MultiIndex&) const = default;

  std::string str() const;

 private:
  std::vector<int> alpha_;
};

bool graded_less(const MultiIndex& a, const MultiIndex& b);

struct TruncationSpec {
  int max_degree = 1;
  double q_norm = 1.0;
  int rank = 1;

  void validate() const;
};

/// Ordered, duplicate-free set of multi-indices starting with the zero index.
struct BasisSet {
  std::size_t dim = 0;
  std::vector<MultiIndex> indices;

  std::size_t size() const { return indices.size(); }
  int max_degree() const;
  /// Highest degree used in dimension i.
  int max_degree(std::size_t i) const;
};

/// All multi-indices with ||alpha||_q <= p and at most r non-zero entries, in
/// graded order. Throws std::length_error when more than `cap` would be produced.
BasisSet enumerate_basis(std::size_t dim, const TruncationSpec& spec,
                         std::size_t cap = static_cast<std::size_t>(-1));

/// Legendre polynomial of degree n, orthonormal for the uniform density on
/// [-1, 1]: sqrt(2n + 1) * P_n(t).
double legendre_orthonormal(int n, double t);

/// Fills out[0..n_max] with the orthonormal Legendre values at t.
void legendre_orthonormal_all(int n_max, double t, double* out);

/// Affine map of u_i from [lower_i, upper_i] onto [-1, 1].
inline double to_reference(const QuantileBox& box, std::size_t i, double u) {
  const auto k = static_cast<Eigen::Index>(i);
  return 2.0 * (u - box.lower[k]) / (box.upper[k] - box.lower[k]) - 1.0;
}

/// Row j, column a: product over dimensions of L_{alpha_i}(t_i(u_j)).
/// Throws std::out_of_range if a point lies outside the box.
Eigen::MatrixXd eval_local_basis(const BasisSet& basis, const QuantileBox& box,
                                 const PointSet& points);

/// Per-point univariate Legendre tables: table[i](j, n) = L_n(t_i(u_j)).
std::vector<Eigen::MatrixXd> legendre_tables(const QuantileBox& box, const PointSet& points,
                                             int n_max);

}  // namespace ssle

#include "ssle/polybasis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ssle {

MultiIndex::MultiIndex(std::vector<int> alpha) : alpha_(std::move(alpha)) {
  for (int a : alpha_) {
    if (a < 0) throw std::invalid_argument("MultiIndex entries must be non-negative");
  }
}

void MultiIndex::set(std::size_t i, int degree) {
  if (degree < 0) throw std::invalid_argument("MultiIndex entries must be non-negative");
  alpha_.at(i) = degree;
}

int MultiIndex::total_degree() const {
  int s = 0;
  for (int a : alpha_) s += a;
  return s;
}

std::size_t MultiIndex::nonzeros() const {
  return static_cast<std::size_t>(std::count_if(alpha_.begin(), alpha_.end(),
                                                [](int a) { return a > 0; }));
}

double MultiIndex::q_norm(double q) const {
  double s = 0.0;
  for (int a : alpha_) {
    if (a > 0) s += std::pow(static_cast<double>(a), q);
  }
  return s > 0.0 ? std::pow(s, 1.0 / q) : 0.0;
}

bool graded_less(const MultiIndex& a, const MultiIndex& b) {
  const int da = a.total_degree();
  const int db = b.total_degree();
  if (da != db) return da < db;
  return a.values() > b.values();
}

std::string MultiIndex::str() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < alpha_.size(); ++i) os << (i ? "," : "") << alpha_[i];
  os << ')';
  return os.str();
}

void TruncationSpec::validate() const {
  if (max_degree < 0) throw std::invalid_argument("TruncationSpec: max_degree must be >= 0");
  if (!(q_norm > 0.0 && q_norm <= 1.0)) {
    throw std::invalid_argument("TruncationSpec: q_norm must lie in (0, 1]");
  }
  if (rank < 1) throw std::invalid_argument("TruncationSpec: rank must be >= 1");
}

int BasisSet::max_degree() const {
  int m = 0;
  for (const auto& a : indices) {
    for (int v : a.values()) m = std::max(m, v);
  }
  return m;
}

int BasisSet::max_degree(std::size_t i) const {
  int m = 0;
  for (const auto& a : indices) m = std::max(m, a[i]);
  return m;
}

namespace {

void enumerate_rec(std::size_t dim, std::size_t pos, const TruncationSpec& spec, double budget,
                   std::size_t used, MultiIndex& current, std::vector<MultiIndex>& out,
                   std::size_t cap) {
  if (pos == dim) {
    out.push_back(current);
    if (out.size() > cap) {
      throw std::length_error("candidate basis exceeds " + std::to_string(cap) +
                              " terms; reduce the maximum degree or q-norm");
    }
    return;
  }
  enumerate_rec(dim, pos + 1, spec, budget, used, current, out, cap);
  if (used >= static_cast<std::size_t>(spec.rank)) return;
  for (int a = 1; a <= spec.max_degree; ++a) {
    const double cost = std::pow(static_cast<double>(a), spec.q_norm);
    if (cost > budget) break;
    current.set(pos, a);
    enumerate_rec(dim, pos + 1, spec, budget - cost, used + 1, current, out, cap);
  }
  current.set(pos, 0);
}

}  // namespace

BasisSet enumerate_basis(std::size_t dim, const TruncationSpec& spec, std::size_t cap) {
  spec.validate();
  if (dim == 0) throw std::invalid_argument("enumerate_basis: dimension must be >= 1");
  BasisSet basis;
  basis.dim = dim;
  // Relative slack absorbs round-off in sums like 1^q + 1^q = 2^q * ...
  const double budget = std::pow(static_cast<double>(spec.max_degree), spec.q_norm) * (1.0 + 1e-12);
  MultiIndex current(dim);
  enumerate_rec(dim, 0, spec, budget, 0, current, basis.indices, cap);
  std::sort(basis.indices.begin(), basis.indices.end(), graded_less);
  return basis;
}

double legendre_orthonormal(int n, double t) {
  if (n < 0) throw std::invalid_argument("legendre_orthonormal: negative degree");
  if (n == 0) return 1.0;
  double p0 = 1.0;
  double p1 = t;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt(2.0 * n + 1.0) * p1;
}

void legendre_orthonormal_all(int n_max, double t, double* out) {
  out[0] = 1.0;
  if (n_max == 0) return;
  double p0 = 1.0;
  double p1 = t;
  out[1] = std::sqrt(3.0) * t;
  for (int k = 2; k <= n_max; ++k) {
    const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
    out[k] = std::sqrt(2.0 * k + 1.0) * p2;
  }
}

std::vector<Eigen::MatrixXd> legendre_tables(const QuantileBox& box, const PointSet& points,
                                             int n_max) {
  const std::size_t m = box.dim();
  const auto k = static_cast<Eigen::Index>(points.size());
  std::vector<Eigen::MatrixXd> tables(m, Eigen::MatrixXd(k, n_max + 1));
  std::vector<double> buf(static_cast<std::size_t>(n_max) + 1);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Point& u = points[static_cast<std::size_t>(j)];
    if (!box.contains(u)) {
      throw std::out_of_range("eval_local_basis: point outside the subdomain box");
    }
    for (std::size_t i = 0; i < m; ++i) {
      legendre_orthonormal_all(n_max, to_reference(box, i, u[static_cast<Eigen::Index>(i)]),
                               buf.data());
      for (int n = 0; n <= n_max; ++n) tables[i](j, n) = buf[static_cast<std::size_t>(n)];
    }
  }
  return tables;
}

Eigen::MatrixXd eval_local_basis(const BasisSet& basis, const QuantileBox& box,
                                 const PointSet& points) {
  if (basis.dim != box.dim()) throw std::invalid_argument("eval_local_basis: dimension mismatch");
  const auto tables = legendre_tables(box, points, basis.max_degree());
  const auto k = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd psi(k, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t a = 0; a < basis.size(); ++a) {
    auto col = psi.col(static_cast<Eigen::Index>(a));
    col.setOnes();
    const auto& alpha = basis.indices[a];
    for (std::size_t i = 0; i < basis.dim; ++i) {
      if (alpha[i] > 0) col.array() *= tables[i].col(alpha[i]).array();
    }
  }
  return psi;
}

}  // namespace ssle

#include "ssle/prob.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace ssle {

namespace {

constexpr double kClampLow = 1e-15;
constexpr double kClampHigh = 1.0 - 1e-15;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Acklam's rational approximation of the probit, |rel. error| < 1.15e-9.
double probit_rational(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double normal_log_pdf(double z) { return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi); }

void check_u(double u) {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw std::domain_error("quantile argument outside [0,1]: " + std::to_string(u));
  }
}

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::Uniform:
      return "uniform";
    case Family::Gaussian:
      return "gaussian";
    case Family::Lognormal:
      return "lognormal";
  }
  return "unknown";
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    throw std::domain_error("normal_quantile: p outside [0,1]");
  }
  double x = probit_rational(p);
  // Newton step on the tail that keeps the residual well conditioned.
  if (p <= 0.5) {
    const double err = normal_cdf(x) - p;
    x -= err / std::exp(normal_log_pdf(x));
  } else {
    const double err = 0.5 * std::erfc(x / std::numbers::sqrt2) - (1.0 - p);
    x += err / std::exp(normal_log_pdf(x));
  }
  return x;
}

MarginalDistribution::MarginalDistribution(Family family, double p1, double p2)
    : family_(family), p1_(p1), p2_(p2) {}

MarginalDistribution MarginalDistribution::uniform(double lower, double upper) {
  if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw std::invalid_argument("uniform marginal requires finite lower < upper");
  }
  return {Family::Uniform, lower, upper};
}

MarginalDistribution MarginalDistribution::gaussian(double mean, double sd) {
  if (!(sd > 0.0) || !std::isfinite(mean) || !std::isfinite(sd)) {
    throw std::invalid_argument("gaussian marginal requires sd > 0");
  }
  return {Family::Gaussian, mean, sd};
}

MarginalDistribution MarginalDistribution::lognormal(double mean, double sd) {
  if (!(mean > 0.0) || !(sd > 0.0) || !std::isfinite(mean) || !std::isfinite(sd)) {
    throw std::invalid_argument("lognormal marginal requires mean > 0 and sd > 0");
  }
  MarginalDistribution m{Family::Lognormal, mean, sd};
  const double s2 = std::log1p((sd * sd) / (mean * mean));
  m.sigma_log_ = std::sqrt(s2);
  m.mu_log_ = std::log(mean) - 0.5 * s2;
  return m;
}

MarginalDistribution MarginalDistribution::lognormal_log(double mu_log, double sigma_log) {
  if (!(sigma_log > 0.0) || !std::isfinite(mu_log) || !std::isfinite(sigma_log)) {
    throw std::invalid_argument("lognormal marginal requires sigma_log > 0");
  }
  const double s2 = sigma_log * sigma_log;
  const double mean = std::exp(mu_log + 0.5 * s2);
  const double sd = mean * std::sqrt(std::expm1(s2));
  MarginalDistribution m{Family::Lognormal, mean, sd};
  m.mu_log_ = mu_log;
  m.sigma_log_ = sigma_log;
  return m;
}

double MarginalDistribution::log_pdf(double x) const {
  switch (family_) {
    case Family::Uniform:
      return (x >= p1_ && x <= p2_) ? -std::log(p2_ - p1_) : -kInf;
    case Family::Gaussian:
      return normal_log_pdf((x - p1_) / p2_) - std::log(p2_);
    case Family::Lognormal: {
      if (!(x > 0.0)) return -kInf;
      const double z = (std::log(x) - mu_log_) / sigma_log_;
      return normal_log_pdf(z) - std::log(sigma_log_ * x);
    }
  }
  return -kInf;
}

double MarginalDistribution::pdf(double x) const { return std::exp(log_pdf(x)); }

double MarginalDistribution::cdf(double x) const {
  switch (family_) {
    case Family::Uniform:
      return std::clamp((x - p1_) / (p2_ - p1_), 0.0, 1.0);
    case Family::Gaussian:
      return normal_cdf((x - p1_) / p2_);
    case Family::Lognormal:
      return x > 0.0 ? normal_cdf((std::log(x) - mu_log_) / sigma_log_) : 0.0;
  }
  return 0.0;
}

double MarginalDistribution::quantile(double u) const {
  check_u(u);
  if (family_ == Family::Uniform) return p1_ + u * (p2_ - p1_);
  const double uc = std::clamp(u, kClampLow, kClampHigh);
  const double z = normal_quantile(uc);
  if (family_ == Family::Gaussian) return p1_ + p2_ * z;
  return std::exp(mu_log_ + sigma_log_ * z);
}

double MarginalDistribution::mean() const {
  return family_ == Family::Uniform ? 0.5 * (p1_ + p2_) : p1_;
}

double MarginalDistribution::sd() const {
  return family_ == Family::Uniform ? (p2_ - p1_) / std::sqrt(12.0) : p2_;
}

std::pair<double, double> MarginalDistribution::support() const {
  switch (family_) {
    case Family::Uniform:
      return {p1_, p2_};
    case Family::Gaussian:
      return {-kInf, kInf};
    case Family::Lognormal:
      return {0.0, kInf};
  }
  return {-kInf, kInf};
}

PriorModel::PriorModel(std::vector<MarginalDistribution> marginals)
    : marginals_(std::move(marginals)) {
  if (marginals_.empty()) throw std::invalid_argument("prior needs at least one marginal");
}

Point PriorModel::to_physical(const Point& u) const {
  if (static_cast<std::size_t>(u.size()) != dim()) {
    throw std::invalid_argument("to_physical: dimension mismatch");
  }
  Point x(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) x[i] = marginals_[i].quantile(u[i]);
  return x;
}

Point PriorModel::to_quantile(const Point& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) {
    throw std::invalid_argument("to_quantile: dimension mismatch");
  }
  Point u(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) u[i] = marginals_[i].cdf(x[i]);
  return u;
}

double PriorModel::log_pdf(const Point& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) {
    throw std::invalid_argument("log_pdf: dimension mismatch");
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double li = marginals_[i].log_pdf(x[i]);
    if (li == -kInf) return -kInf;
    s += li;
  }
  return s;
}

double PriorModel::pdf(const Point& x) const { return std::exp(log_pdf(x)); }

QuantileBox::QuantileBox(Eigen::VectorXd lo, Eigen::VectorXd hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw std::invalid_argument("QuantileBox: bound vectors must be non-empty and aligned");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] >= 0.0 && upper[i] <= 1.0 && lower[i] < upper[i])) {
      throw std::invalid_argument("QuantileBox: need 0 <= lower < upper <= 1 in every dimension");
    }
  }
}

QuantileBox QuantileBox::unit(std::size_t dim) {
  return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim)),
          Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dim))};
}

double QuantileBox::volume() const { return (upper - lower).prod(); }

bool QuantileBox::contains_coordinate(std::size_t i, double ui) const {
  const double lo = lower[static_cast<Eigen::Index>(i)];
  const double hi = upper[static_cast<Eigen::Index>(i)];
  return ui <= hi && (ui > lo || (lo == 0.0 && ui == 0.0));
}

bool QuantileBox::contains(const Point& u) const {
  if (u.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!contains_coordinate(static_cast<std::size_t>(i), u[i])) return false;
  }
  return true;
}

std::pair<QuantileBox, QuantileBox> QuantileBox::split(std::size_t d) const {
  if (d >= dim()) throw std::out_of_range("QuantileBox::split: dimension out of range");
  const double mid = midpoint(d);
  QuantileBox lo = *this;
  QuantileBox hi = *this;
  lo.upper[static_cast<Eigen::Index>(d)] = mid;
  hi.lower[static_cast<Eigen::Index>(d)] = mid;
  if (!(lo.upper[d] > lo.lower[d]) || !(hi.upper[d] > hi.lower[d])) {
    throw std::runtime_error("QuantileBox::split: box too thin to halve in floating point");
  }
  return {std::move(lo), std::move(hi)};
}

Point quantile_transform(const PriorModel& prior, const Point& u) { return prior.to_physical(u); }

double log_pdf(const PriorModel& prior, const Point& x) { return prior.log_pdf(x); }

PointSet sample_lhs(const QuantileBox& box, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_lhs: n must be >= 1");
  if (!(box.volume() > 0.0)) throw std::invalid_argument("sample_lhs: degenerate box");
  const std::size_t m = box.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  PointSet points(n, Point(static_cast<Eigen::Index>(m)));
  std::vector<std::size_t> strata(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < m; ++i) {
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    std::shuffle(strata.begin(), strata.end(), rng);
    const double lo = box.lower[static_cast<Eigen::Index>(i)];
    const double w = box.width(i);
    for (std::size_t j = 0; j < n; ++j) {
      // Open jitter keeps points off stratum faces.
      double jitter = unif(rng);
      if (jitter == 0.0) jitter = 0.5;
      double v = lo + w * (static_cast<double>(strata[j]) + jitter) * inv_n;
      if (v <= lo) v = std::nextafter(lo, 1.0);
      points[j][static_cast<Eigen::Index>(i)] = std::min(v, box.upper[static_cast<Eigen::Index>(i)]);
    }
  }
  return points;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

}  // namespace ssle

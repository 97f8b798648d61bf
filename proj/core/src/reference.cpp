#include "ssle/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ssle/parallel.hpp"
#include "ssle/quadrature.hpp"

namespace ssle {

Point Chain::state(std::size_t walker, std::size_t step) const {
  return states.col(static_cast<Eigen::Index>(step * walkers + walker));
}

std::vector<double> Chain::coordinate(std::size_t i, std::size_t burn_in) const {
  std::vector<double> out;
  if (burn_in >= steps) return out;
  out.reserve((steps - burn_in) * walkers);
  for (std::size_t c = burn_in * walkers; c < steps * walkers; ++c) {
    out.push_back(states(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
  }
  return out;
}

void Chain::write_csv(std::ostream& os) const {
  const auto old_precision = os.precision(17);
  os << "walker,step";
  for (std::size_t i = 0; i < dim; ++i) os << ",x" << i;
  os << ",log_posterior\n";
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t w = 0; w < walkers; ++w) {
      const auto c = static_cast<Eigen::Index>(s * walkers + w);
      os << w << ',' << s;
      for (std::size_t i = 0; i < dim; ++i) os << ',' << states(static_cast<Eigen::Index>(i), c);
      os << ',' << log_posterior[static_cast<std::size_t>(c)] << '\n';
    }
  }
  os.precision(old_precision);
}

Chain aies_sample(const LogDensity& log_posterior, const PriorModel& prior, std::size_t walkers,
                  std::size_t steps, std::uint64_t seed, double stretch) {
  const std::size_t m = prior.dim();
  if (m == 0) throw std::invalid_argument("aies_sample: prior has no dimensions");
  if (walkers % 2 != 0 || walkers < 2 * m + 2) {
    throw std::invalid_argument("aies_sample: walkers must be even and at least 2M + 2");
  }
  if (steps == 0) throw std::invalid_argument("aies_sample: steps must be >= 1");
  if (!(stretch > 1.0)) throw std::invalid_argument("aies_sample: stretch parameter must exceed 1");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<Point> x(walkers);
  std::vector<double> lp(walkers);
  for (std::size_t w = 0; w < walkers; ++w) {
    for (int attempt = 0;; ++attempt) {
      Point u(static_cast<Eigen::Index>(m));
      for (std::size_t i = 0; i < m; ++i) u[static_cast<Eigen::Index>(i)] = unif(rng);
      x[w] = prior.to_physical(u);
      lp[w] = log_posterior(x[w]);
      if (std::isfinite(lp[w])) break;
      if (attempt >= 10000) {
        throw std::invalid_argument("aies_sample: log posterior is not finite at any prior draw");
      }
    }
  }
  bool degenerate = true;
  for (std::size_t w = 1; w < walkers && degenerate; ++w) degenerate = x[w] == x[0];
  if (degenerate) throw std::invalid_argument("aies_sample: all walkers share one state");

  Chain chain;
  chain.walkers = walkers;
  chain.steps = steps;
  chain.dim = m;
  chain.states.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(walkers * steps));
  chain.log_posterior.resize(walkers * steps);

  const std::size_t half = walkers / 2;
  std::vector<Point> proposal(half);
  std::vector<double> proposal_lp(half);
  std::vector<double> log_z(half);
  std::vector<double> log_u(half);
  std::size_t accepted = 0;
  const double a = stretch;
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t h = 0; h < 2; ++h) {
      const std::size_t own = h * half;
      const std::size_t other = (1 - h) * half;
      for (std::size_t k = 0; k < half; ++k) {
        const std::size_t j = other + static_cast<std::size_t>(unif(rng) * static_cast<double>(half)) % half;
        const double r = unif(rng);
        const double z = std::pow((a - 1.0) * r + 1.0, 2) / a;
        log_z[k] = std::log(z);
        log_u[k] = std::log(unif(rng));
        proposal[k] = x[j] + z * (x[own + k] - x[j]);
      }
      parallel_for(half, [&](std::size_t k) { proposal_lp[k] = log_posterior(proposal[k]); }, 4);
      for (std::size_t k = 0; k < half; ++k) {
        const double ratio = static_cast<double>(m - 1) * log_z[k] + proposal_lp[k] - lp[own + k];
        if (std::isfinite(proposal_lp[k]) && log_u[k] < ratio) {
          x[own + k] = proposal[k];
          lp[own + k] = proposal_lp[k];
          ++accepted;
        }
      }
    }
    for (std::size_t w = 0; w < walkers; ++w) {
      const std::size_t c = s * walkers + w;
      chain.states.col(static_cast<Eigen::Index>(c)) = x[w];
      chain.log_posterior[c] = lp[w];
    }
  }
  chain.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(walkers * steps);
  return chain;
}

double integrated_autocorr_time(const Chain& chain, std::size_t i, std::size_t burn_in) {
  if (burn_in >= chain.steps) throw std::invalid_argument("autocorrelation: burn-in covers the chain");
  const std::size_t n = chain.steps - burn_in;
  if (n < 2) return 1.0;
  // Per-walker centered series.
  std::vector<std::vector<double>> series(chain.walkers, std::vector<double>(n));
  for (std::size_t w = 0; w < chain.walkers; ++w) {
    double mean = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = chain.states(static_cast<Eigen::Index>(i),
                                    static_cast<Eigen::Index>((burn_in + t) * chain.walkers + w));
      series[w][t] = v;
      mean += v;
    }
    mean /= static_cast<double>(n);
    for (double& v : series[w]) v -= mean;
  }
  const auto acf = [&](std::size_t lag) {
    double s = 0.0;
    for (const auto& x : series) {
      for (std::size_t t = 0; t + lag < n; ++t) s += x[t] * x[t + lag];
    }
    return s / static_cast<double>(chain.walkers * n);
  };
  const double c0 = acf(0);
  if (!(c0 > 0.0)) return 1.0;
  double tau = 1.0;
  for (std::size_t lag = 1; lag < n; ++lag) {
    tau += 2.0 * acf(lag) / c0;
    if (static_cast<double>(lag) >= 5.0 * tau) break;
  }
  return std::max(tau, 1.0);
}

double effective_sample_size(const Chain& chain, std::size_t i, std::size_t burn_in) {
  const double n = static_cast<double>((chain.steps - burn_in) * chain.walkers);
  return n / integrated_autocorr_time(chain, i, burn_in);
}

double DensityGrid::integral() const {
  if (x.size() != density.size()) throw std::invalid_argument("DensityGrid: size mismatch");
  double s = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) {
    s += 0.5 * (x[k] - x[k - 1]) * (density[k] + density[k - 1]);
  }
  return s;
}

namespace {

double quantile_sorted(const std::vector<double>& v, double p) {
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("density grid is empty");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw std::invalid_argument("density grid must be strictly ascending");
  }
}

}  // namespace

double silverman_bandwidth(const std::vector<double>& samples) {
  if (samples.size() < 30) throw std::invalid_argument("kde: need at least 30 samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw std::invalid_argument("kde: samples have zero variance");
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 1.06 * spread * std::pow(n, -0.2);
}

DensityGrid kde_marginal(const std::vector<double>& samples, const std::vector<double>& grid) {
  check_grid(grid);
  const double h = silverman_bandwidth(samples);
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double norm = 1.0 / (static_cast<double>(sorted.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  DensityGrid out;
  out.x = grid;
  out.density.assign(grid.size(), 0.0);
  // Kernel contributions beyond 9 bandwidths are below 1e-17 relative.
  const double cutoff = 9.0 * h;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), grid[g] - cutoff);
    const auto last = std::upper_bound(sorted.begin(), sorted.end(), grid[g] + cutoff);
    double s = 0.0;
    for (auto it = first; it != last; ++it) {
      const double z = (grid[g] - *it) / h;
      s += std::exp(-0.5 * z * z);
    }
    out.density[g] = s * norm;
  }
  return out;
}

double js_divergence(const DensityGrid& p, const DensityGrid& q) {
  if (p.x.size() != q.x.size() || p.density.size() != p.x.size() || q.density.size() != q.x.size()) {
    throw std::invalid_argument("js_divergence: grid mismatch");
  }
  for (std::size_t k = 0; k < p.x.size(); ++k) {
    if (std::abs(p.x[k] - q.x[k]) > 1e-12 * std::max(1.0, std::abs(p.x[k]))) {
      throw std::invalid_argument("js_divergence: grid mismatch");
    }
  }
  if (p.x.size() < 2) throw std::invalid_argument("js_divergence: grid needs at least two points");
  const double ip = p.integral();
  const double iq = q.integral();
  if (!(ip > 0.0) || !(iq > 0.0)) throw std::invalid_argument("js_divergence: density integrates to zero");
  const auto term = [](double a, double sum) { return a > 0.0 ? a * std::log(2.0 * a / sum) : 0.0; };
  std::vector<double> f(p.x.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double a = std::max(p.density[k], 0.0) / ip;
    const double b = std::max(q.density[k], 0.0) / iq;
    const double sum = a + b;
    f[k] = 0.5 * term(a, sum) + 0.5 * term(b, sum);
  }
  double s = 0.0;
  for (std::size_t k = 1; k < f.size(); ++k) s += 0.5 * (p.x[k] - p.x[k - 1]) * (f[k] + f[k - 1]);
  return std::clamp(s, 0.0, std::numbers::ln2);
}

double eta_error(const std::vector<DensityGrid>& approx, const std::vector<DensityGrid>& reference) {
  if (approx.size() != reference.size() || approx.empty()) {
    throw std::invalid_argument("eta_error: dimension count mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < approx.size(); ++i) s += js_divergence(approx[i], reference[i]);
  return s / static_cast<double>(approx.size());
}

OracleResult quadrature_oracle(const std::function<double(const Point&)>& likelihood,
                               const PriorModel& prior,
                               const std::vector<std::vector<double>>& marginal_axes,
                               const OracleOptions& options) {
  const std::size_t m = prior.dim();
  if (m == 0 || m > 3) throw std::invalid_argument("quadrature_oracle: supports 1 <= M <= 3");
  if (!marginal_axes.empty() && marginal_axes.size() != m) {
    throw std::invalid_argument("quadrature_oracle: one marginal axis per dimension");
  }
  // Composite rule on [0, 1] in quantile space; end panels of unbounded
  // marginals are graded towards the singular quantile.
  const auto& rule = gauss_legendre(options.nodes_per_panel);
  const double hpan = 1.0 / static_cast<double>(options.panels);
  std::vector<std::vector<double>> weights(m);
  std::vector<std::vector<double>> phys(m);
  std::vector<std::size_t> sizes(m);
  for (std::size_t i = 0; i < m; ++i) {
    const bool graded = options.graded_ends && !prior.marginal(i).bounded();
    std::vector<double> nodes;
    auto add = [&](const ComposedRule& r) {
      nodes.insert(nodes.end(), r.nodes.begin(), r.nodes.end());
      weights[i].insert(weights[i].end(), r.weights.begin(), r.weights.end());
    };
    for (std::size_t p = 0; p < options.panels; ++p) {
      const double lo = hpan * static_cast<double>(p);
      const double hi = hpan * static_cast<double>(p + 1);
      const bool left = graded && p == 0;
      const bool right = graded && p + 1 == options.panels;
      if (left || right) {
        add(graded_rule(lo, hi, options.nodes_per_panel, left, right));
        continue;
      }
      for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        nodes.push_back(lo + 0.5 * hpan * (rule.nodes[k] + 1.0));
        weights[i].push_back(0.5 * hpan * rule.weights[k]);
      }
    }
    sizes[i] = nodes.size();
    phys[i].resize(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) phys[i][k] = prior.marginal(i).quantile(nodes[k]);
  }

  std::size_t total = 1;
  for (std::size_t i = 0; i < m; ++i) total *= sizes[i];
  double z = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  Eigen::VectorXd s2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  Point x(static_cast<Eigen::Index>(m));
  for (std::size_t flat = 0; flat < total; ++flat) {
    double w = 1.0;
    std::size_t rem = flat;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t k = rem % sizes[i];
      rem /= sizes[i];
      w *= weights[i][k];
      x[static_cast<Eigen::Index>(i)] = phys[i][k];
    }
    const double f = w * likelihood(x);
    z += f;
    s1 += f * x;
    s2 += f * x.cwiseProduct(x);
  }
  OracleResult out;
  out.evidence = z;
  out.mean = s1 / z;
  out.sd = (s2 / z - out.mean.cwiseProduct(out.mean)).cwiseMax(0.0).cwiseSqrt();

  for (std::size_t i = 0; i < marginal_axes.size(); ++i) {
    DensityGrid g;
    g.x = marginal_axes[i];
    g.density.assign(g.x.size(), 0.0);
    const std::size_t rest = total / sizes[i];
    for (std::size_t a = 0; a < g.x.size(); ++a) {
      const double pdf = prior.marginal(i).pdf(g.x[a]);
      if (!(pdf > 0.0)) continue;
      double acc = 0.0;
      for (std::size_t flat = 0; flat < rest; ++flat) {
        double w = 1.0;
        std::size_t r = flat;
        for (std::size_t d = 0; d < m; ++d) {
          if (d == i) {
            x[static_cast<Eigen::Index>(d)] = g.x[a];
            continue;
          }
          const std::size_t k = r % sizes[d];
          r /= sizes[d];
          w *= weights[d][k];
          x[static_cast<Eigen::Index>(d)] = phys[d][k];
        }
        acc += w * likelihood(x);
      }
      g.density[a] = pdf * acc / z;
    }
    out.marginals.push_back(std::move(g));
  }
  return out;
}

}  // namespace ssle

#include <random>

#include <benchmark/benchmark.h>

#include "ssle/adaptive.hpp"
#include "ssle/models.hpp"
#include "ssle/polybasis.hpp"
#include "ssle/posterior.hpp"
#include "ssle/reference.hpp"
#include "ssle/sparse_regression.hpp"

namespace {

using namespace ssle;

void BM_EvalLocalBasis(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const auto basis = enumerate_basis(dim, {10, 0.7, 2});
  const auto box = QuantileBox::unit(dim);
  const auto pts = sample_lhs(box, 1000, 1);
  for (auto _ : state) benchmark::DoNotOptimize(eval_local_basis(basis, box, pts));
  state.counters["terms"] = static_cast<double>(basis.size());
}
BENCHMARK(BM_EvalLocalBasis)->Arg(1)->Arg(2)->Arg(6)->Unit(benchmark::kMicrosecond);

void BM_LarsPath(benchmark::State& state) {
  const auto k = state.range(0);
  const auto p = state.range(1);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  Eigen::MatrixXd x(k, p);
  x.col(0).setOnes();
  for (Eigen::Index j = 1; j < p; ++j) {
    for (Eigen::Index i = 0; i < k; ++i) x(i, j) = n(rng);
  }
  Eigen::VectorXd y = x.col(1) + 0.3 * x.col(5);
  for (Eigen::Index i = 0; i < k; ++i) y[i] += 0.01 * n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(lars_path(x, y, static_cast<std::size_t>(std::min(k - 2, p - 1))));
}
BENCHMARK(BM_LarsPath)->Args({100, 50})->Args({1000, 300})->Unit(benchmark::kMillisecond);

void BM_FitSparsePce1d(benchmark::State& state) {
  const auto box = QuantileBox::unit(1);
  const auto pts = sample_lhs(box, static_cast<std::size_t>(state.range(0)), 3);
  Eigen::VectorXd y(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) y[static_cast<Eigen::Index>(i)] = std::exp(-20.0 * std::pow(pts[i][0] - 0.4, 2));
  const AdaptivityConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(fit_sparse_pce(pts, y, box, cfg));
}
BENCHMARK(BM_FitSparsePce1d)->Arg(10)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_AdaptiveOscillator(benchmark::State& state) {
  const PriorModel prior({MarginalDistribution::lognormal(0.8, 0.1)});
  std::vector<Eigen::VectorXd> data;
  for (double v : {9.01, 8.67, 8.84, 9.22, 8.54}) data.push_back(Eigen::VectorXd::Constant(1, v));
  const LikelihoodModel lik(std::make_shared<OscillatorModel>(), GaussianDiscrepancy::scalar(0.2, 1), data);
  RunConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(run_adaptive_ssle(lik, prior, cfg));
}
BENCHMARK(BM_AdaptiveOscillator)->Unit(benchmark::kMillisecond);

void BM_SummarizeConjugate(benchmark::State& state) {
  const PriorModel prior({MarginalDistribution::gaussian(0.0, 1.0), MarginalDistribution::gaussian(0.0, 1.0)});
  const auto lik = synthetic_peaked_likelihood(2, Eigen::Vector2d(1.0, -0.5), 0.5);
  RunConfig cfg;
  cfg.n_ref = 50;
  cfg.n_ed = 500;
  const auto r = run_adaptive_ssle(lik, prior, cfg);
  SummaryOptions opts;
  opts.marginals = {{{0}, {}}, {{1}, {}}};
  for (auto _ : state) benchmark::DoNotOptimize(summarize(r.tree, prior, opts));
  state.counters["nodes"] = static_cast<double>(r.tree.size());
}
BENCHMARK(BM_SummarizeConjugate)->Unit(benchmark::kMillisecond);

void BM_DiffusionForward(benchmark::State& state) {
  const DiffusionModel model(kl_expansion(1.0 / 3.0, 1.0, 400, 10));
  Eigen::VectorXd xi = Eigen::VectorXd::LinSpaced(10, -1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(model.evaluate(xi));
}
BENCHMARK(BM_DiffusionForward)->Unit(benchmark::kMicrosecond);

void BM_KdeMarginal(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  std::vector<double> s(static_cast<std::size_t>(state.range(0)));
  for (double& v : s) v = n(rng);
  std::vector<double> grid(512);
  for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = -4.0 + 8.0 * static_cast<double>(k) / 511.0;
  for (auto _ : state) benchmark::DoNotOptimize(kde_marginal(s, grid));
}
BENCHMARK(BM_KdeMarginal)->Arg(10000)->Arg(200000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

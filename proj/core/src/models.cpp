#include "ssle/models.hpp"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "ssle/parallel.hpp"
#include "ssle/quadrature.hpp"

namespace ssle {

std::vector<Eigen::VectorXd> ForwardModel::evaluate_batch(const PointSet& xs) const {
  std::vector<Eigen::VectorXd> out(xs.size());
  parallel_for(xs.size(), [&](std::size_t i) { out[i] = evaluate(xs[i]); }, 16);
  return out;
}

double oscillator_frf(double x, double mass, double omega, double damping) {
  const double mw2 = mass * omega * omega;
  const double co = damping * omega;
  return mw2 / std::sqrt((x - mw2) * (x - mw2) + co * co);
}

OscillatorModel::OscillatorModel(double mass, double omega, double damping)
    : mass_(mass), omega_(omega), damping_(damping) {
  if (!(mass > 0.0) || !(omega > 0.0) || !(damping > 0.0)) {
    throw std::invalid_argument("oscillator: mass, omega and damping must be positive");
  }
}

Eigen::VectorXd OscillatorModel::evaluate(const Point& x) const {
  Eigen::VectorXd out(1);
  out[0] = oscillator_frf(x[0], mass_, omega_, damping_);
  return out;
}

// ---------------------------------------------------------------------------
// Karhunen-Loeve

Eigen::VectorXd KLBasis::scaled_functions_at(double s) const {
  const Eigen::Index n = grid.size();
  Eigen::VectorXd kernel(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    kernel[j] = variance * std::exp(-std::abs(s - grid[j]) / corr_length) / static_cast<double>(n);
  }
  // e_k(s) = (1/lambda_k) int rho(s, t) e_k(t) dt, so sqrt(lambda_k) e_k(s)
  // = (kernel . e_k) / sqrt(lambda_k).
  Eigen::VectorXd out = grid_functions.transpose() * kernel;
  for (Eigen::Index k = 0; k < out.size(); ++k) out[k] /= std::sqrt(eigenvalues[k]);
  return out;
}

std::size_t KLBasis::terms_for_fraction(double fraction) const {
  const double total = all_eigenvalues.sum();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < all_eigenvalues.size(); ++k) {
    acc += all_eigenvalues[k];
    if (acc >= fraction * total) return static_cast<std::size_t>(k + 1);
  }
  return static_cast<std::size_t>(all_eigenvalues.size());
}

KLBasis kl_expansion(double corr_length, double variance, std::size_t resolution,
                     std::size_t terms) {
  if (!(corr_length > 0.0) || !(variance > 0.0)) {
    throw std::invalid_argument("kl_expansion: correlation length and variance must be positive");
  }
  if (terms == 0 || terms > resolution) {
    throw std::invalid_argument("kl_expansion: need 1 <= terms <= resolution");
  }
  const auto n = static_cast<Eigen::Index>(resolution);
  KLBasis kl;
  kl.corr_length = corr_length;
  kl.variance = variance;
  kl.grid.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) kl.grid[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      k(i, j) = variance * std::exp(-std::abs(kl.grid[i] - kl.grid[j]) / corr_length) /
                static_cast<double>(n);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k);
  if (solver.info() != Eigen::Success) throw std::runtime_error("kl_expansion: eigensolver failed");
  kl.all_eigenvalues = solver.eigenvalues().reverse();
  const auto m = static_cast<Eigen::Index>(terms);
  if (!(kl.all_eigenvalues[m - 1] > 0.0)) {
    throw std::invalid_argument("kl_expansion: fewer positive eigenvalues than requested terms");
  }
  kl.eigenvalues = kl.all_eigenvalues.head(m);
  kl.grid_functions.resize(n, m);
  const double scale = std::sqrt(static_cast<double>(n));
  for (Eigen::Index c = 0; c < m; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(n - 1 - c) * scale;
    if (v[0] < 0.0) v = -v;
    kl.grid_functions.col(c) = v;
  }
  return kl;
}

double exponential_kernel_first_eigenvalue(double corr_length, double variance, double length) {
  const double c = 1.0 / corr_length;
  const double half = 0.5 * length;
  // Even mode: c - w tan(w * half) = 0 with w in (0, pi / (2 half)).
  double lo = 0.0;
  double hi = std::numbers::pi / (2.0 * half);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (c - mid * std::tan(mid * half) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double w = 0.5 * (lo + hi);
  return variance * 2.0 * c / (w * w + c * c);
}

double diffusion_u1(const Eigen::VectorXd& xi, const KLBasis& kl, std::size_t nodes) {
  if (static_cast<std::size_t>(xi.size()) != kl.terms()) {
    throw std::invalid_argument("diffusion_u1: coefficient count does not match the KL basis");
  }
  const auto log_kappa = [&](double s) { return 10.0 + 3.0 * kl.scaled_functions_at(s).dot(xi); };
  const double kappa1 = std::exp(log_kappa(1.0));
  return integrate_gl(
      [&](double s) { return (kappa1 + 1.0 - s) * std::exp(-log_kappa(s)); }, 0.0, 1.0, nodes);
}

DiffusionModel::DiffusionModel(KLBasis kl, std::size_t nodes) : kl_(std::move(kl)) {
  const auto& rule = gauss_legendre(nodes);
  nodes_.resize(nodes);
  weights_.resize(nodes);
  phi_.resize(static_cast<Eigen::Index>(nodes), static_cast<Eigen::Index>(kl_.terms()));
  for (std::size_t i = 0; i < nodes; ++i) {
    nodes_[i] = 0.5 * (rule.nodes[i] + 1.0);
    weights_[i] = 0.5 * rule.weights[i];
    phi_.row(static_cast<Eigen::Index>(i)) = kl_.scaled_functions_at(nodes_[i]).transpose();
  }
  phi_end_ = kl_.scaled_functions_at(1.0);
}

Eigen::VectorXd DiffusionModel::evaluate(const Point& x) const {
  if (static_cast<std::size_t>(x.size()) != kl_.terms()) {
    throw std::invalid_argument("diffusion: input length does not match the KL basis");
  }
  const double kappa1 = std::exp(10.0 + 3.0 * phi_end_.dot(x));
  const Eigen::VectorXd g = phi_ * x;
  double s = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    s += weights_[i] * (kappa1 + 1.0 - nodes_[i]) * std::exp(-10.0 - 3.0 * g[static_cast<Eigen::Index>(i)]);
  }
  Eigen::VectorXd out(1);
  out[0] = s;
  return out;
}

// ---------------------------------------------------------------------------
// Subprocess protocol

SubprocessModel::SubprocessModel(std::vector<std::string> argv, std::size_t input_dim,
                                 std::size_t output_dim)
    : argv_(std::move(argv)), input_dim_(input_dim), output_dim_(output_dim) {
  if (argv_.empty()) throw std::invalid_argument("subprocess: empty command");
  if (output_dim_ == 0) throw std::invalid_argument("subprocess: output dimension must be >= 1");
}

Eigen::VectorXd SubprocessModel::evaluate(const Point& x) const {
  return evaluate_batch(PointSet{x}).front();
}

std::vector<Eigen::VectorXd> SubprocessModel::evaluate_batch(const PointSet& xs) const {
  if (xs.empty()) return {};
  int to_child[2];
  int from_child[2];
  if (pipe(to_child) != 0 || pipe(from_child) != 0) {
    throw LikelihoodError("subprocess: pipe() failed", xs.front());
  }
  const pid_t pid = fork();
  if (pid < 0) throw LikelihoodError("subprocess: fork() failed", xs.front());
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    std::vector<char*> args;
    for (const auto& a : argv_) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);

  std::ostringstream payload;
  payload.precision(17);
  for (const auto& x : xs) {
    for (Eigen::Index i = 0; i < x.size(); ++i) payload << (i ? "," : "") << x[i];
    payload << '\n';
  }
  const std::string text = payload.str();
  // Write from a separate thread so a child that streams output while
  // reading cannot deadlock on full pipes.
  std::thread writer([fd = to_child[1], &text] {
    std::signal(SIGPIPE, SIG_IGN);
    std::size_t off = 0;
    while (off < text.size()) {
      const ssize_t w = write(fd, text.data() + off, text.size() - off);
      if (w < 0) {
        if (errno == EINTR) continue;
        break;
      }
      off += static_cast<std::size_t>(w);
    }
    close(fd);
  });

  std::string received;
  char buf[4096];
  for (;;) {
    const ssize_t r = read(from_child[0], buf, sizeof buf);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) break;
    received.append(buf, static_cast<std::size_t>(r));
  }
  close(from_child[0]);
  writer.join();
  int status = 0;
  waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw LikelihoodError("subprocess: model command failed", xs.front());
  }

  std::vector<Eigen::VectorXd> out;
  out.reserve(xs.size());
  std::istringstream lines(received);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const std::size_t row = out.size();
    if (row >= xs.size()) throw LikelihoodError("subprocess: too many output rows", xs.back());
    Eigen::VectorXd y(static_cast<Eigen::Index>(output_dim_));
    std::istringstream cells(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(cells, cell, ',')) {
      if (c >= output_dim_) throw LikelihoodError("subprocess: too many output columns", xs[row]);
      try {
        y[static_cast<Eigen::Index>(c)] = std::stod(cell);
      } catch (const std::exception&) {
        throw LikelihoodError("subprocess: unparsable output '" + cell + "'", xs[row]);
      }
      ++c;
    }
    if (c != output_dim_) throw LikelihoodError("subprocess: too few output columns", xs[row]);
    out.push_back(std::move(y));
  }
  if (out.size() != xs.size()) {
    throw LikelihoodError("subprocess: missing output rows", xs[out.size()]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Discrepancy and likelihood

GaussianDiscrepancy GaussianDiscrepancy::scalar(double sigma, std::size_t dim) {
  if (!(sigma > 0.0)) throw std::invalid_argument("discrepancy: sigma must be positive");
  return diagonal(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim), sigma));
}

GaussianDiscrepancy GaussianDiscrepancy::diagonal(const Eigen::VectorXd& sigmas) {
  for (Eigen::Index i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > 0.0)) throw std::invalid_argument("discrepancy: sigma must be positive");
  }
  return full(sigmas.array().square().matrix().asDiagonal());
}

GaussianDiscrepancy GaussianDiscrepancy::full(const Eigen::MatrixXd& cov) {
  if (cov.rows() == 0 || cov.rows() != cov.cols()) {
    throw std::invalid_argument("discrepancy: covariance must be a non-empty square matrix");
  }
  if (!cov.isApprox(cov.transpose(), 1e-12)) {
    throw std::invalid_argument("discrepancy: covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("discrepancy: covariance is not positive definite");
  }
  GaussianDiscrepancy d;
  d.cov_ = cov;
  d.chol_ = llt.matrixL();
  const double log_det = 2.0 * d.chol_.diagonal().array().log().sum();
  d.log_norm_ = -0.5 * (static_cast<double>(cov.rows()) * std::log(2.0 * std::numbers::pi) + log_det);
  return d;
}

double GaussianDiscrepancy::log_density(const Eigen::VectorXd& residual) const {
  if (residual.size() != chol_.rows()) throw std::invalid_argument("discrepancy: size mismatch");
  const Eigen::VectorXd z = chol_.triangularView<Eigen::Lower>().solve(residual);
  return log_norm_ - 0.5 * z.squaredNorm();
}

LikelihoodModel::LikelihoodModel(std::shared_ptr<const ForwardModel> model,
                                 GaussianDiscrepancy discrepancy, std::vector<Eigen::VectorXd> data)
    : model_(std::move(model)), discrepancy_(std::move(discrepancy)), data_(std::move(data)) {
  if (!model_) throw std::invalid_argument("likelihood: missing forward model");
  if (data_.empty()) throw std::invalid_argument("likelihood: no observations");
  if (discrepancy_.dim() != model_->output_dim()) {
    throw std::invalid_argument("likelihood: discrepancy dimension does not match model output");
  }
  for (const auto& y : data_) {
    if (static_cast<std::size_t>(y.size()) != model_->output_dim()) {
      throw std::invalid_argument("likelihood: observation length does not match model output");
    }
  }
}

LikelihoodModel::LikelihoodModel(const LikelihoodModel& other)
    : model_(other.model_), discrepancy_(other.discrepancy_), data_(other.data_),
      counter_(other.counter_.load()) {}

double LikelihoodModel::log_from_output(const Eigen::VectorXd& output) const {
  double s = 0.0;
  for (const auto& y : data_) s += discrepancy_.log_density(y - output);
  return s;
}

double LikelihoodModel::log_likelihood(const Point& x) const {
  return log_likelihood_batch(PointSet{x}).front();
}

double LikelihoodModel::evaluate(const Point& x) const { return std::exp(log_likelihood(x)); }

std::vector<double> LikelihoodModel::log_likelihood_batch(const PointSet& xs) const {
  const std::size_t in_dim = model_->input_dim();
  for (const auto& x : xs) {
    if (in_dim != 0 && static_cast<std::size_t>(x.size()) != in_dim) {
      throw LikelihoodError("likelihood: input length does not match the model", x);
    }
  }
  counter_.fetch_add(xs.size());
  std::vector<Eigen::VectorXd> outputs;
  try {
    outputs = model_->evaluate_batch(xs);
  } catch (const LikelihoodError&) {
    throw;
  } catch (const std::exception& e) {
    throw LikelihoodError(std::string("likelihood: ") + e.what(), xs.empty() ? Point() : xs.front());
  }
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!outputs[i].allFinite()) {
      throw LikelihoodError("likelihood: model returned a non-finite output", xs[i]);
    }
    out[i] = log_from_output(outputs[i]);
  }
  return out;
}

std::vector<double> LikelihoodModel::evaluate_batch(const PointSet& xs) const {
  auto out = log_likelihood_batch(xs);
  for (double& v : out) v = std::exp(v);
  return out;
}

LikelihoodModel synthetic_peaked_likelihood(std::size_t m, const Eigen::VectorXd& center,
                                            double width) {
  if (!(width > 0.0)) throw std::invalid_argument("synthetic likelihood: width must be positive");
  if (static_cast<std::size_t>(center.size()) != m) {
    throw std::invalid_argument("synthetic likelihood: center length must equal the dimension");
  }
  return LikelihoodModel(std::make_shared<IdentityModel>(m), GaussianDiscrepancy::scalar(width, m),
                         {center});
}

}  // namespace ssle

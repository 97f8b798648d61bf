#include "ssle/app.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <unistd.h>

namespace ssle {

namespace {

using nlohmann::json;

/// JSON cursor that remembers its path for error messages.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return *j_; }
  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(path_, message); }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }
  Node at(const std::string& key) const {
    expect_object();
    if (!j_->contains(key)) throw ConfigError(child_path(key), "missing required field");
    return Node(j_->at(key), child_path(key));
  }
  std::optional<Node> find(const std::string& key) const {
    expect_object();
    if (!j_->contains(key) || j_->at(key).is_null()) return std::nullopt;
    return Node(j_->at(key), child_path(key));
  }
  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }
  Node operator[](std::size_t i) const {
    return Node(j_->at(i), path_ + "[" + std::to_string(i) + "]");
  }
  void allow_only(std::initializer_list<const char*> keys) const {
    expect_object();
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (!allowed.count(it.key())) throw ConfigError(child_path(it.key()), "unknown field");
    }
  }

  double number() const {
    if (!j_->is_number()) fail("expected a number");
    const double v = j_->get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }
  std::int64_t integer() const {
    if (!j_->is_number_integer() && !j_->is_number_unsigned()) fail("expected an integer");
    return j_->get<std::int64_t>();
  }
  std::size_t count(std::int64_t min) const {
    const auto v = integer();
    if (v < min) fail("must be >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
  }
  std::string string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }
  bool boolean() const {
    if (!j_->is_boolean()) fail("expected true or false");
    return j_->get<bool>();
  }
  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].number());
    return out;
  }

 private:
  void expect_object() const {
    if (!j_->is_object()) fail("expected an object");
  }
  std::string child_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* j_;
  std::string path_;
};

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

MarginalDistribution parse_marginal(const Node& n) {
  n.allow_only({"family", "params", "parameterization"});
  const std::string family = n.at("family").string();
  const Node params = n.at("params");
  if (params.size() != 2) params.fail("expected two parameters");
  const double a = params[0].number();
  const double b = params[1].number();
  try {
    if (family == "uniform") return MarginalDistribution::uniform(a, b);
    if (family == "gaussian") return MarginalDistribution::gaussian(a, b);
    if (family == "lognormal") {
      std::string form = "moments";
      if (auto p = n.find("parameterization")) form = p->string();
      if (form == "moments") return MarginalDistribution::lognormal(a, b);
      if (form == "log") return MarginalDistribution::lognormal_log(a, b);
      n.at("parameterization").fail("expected \"moments\" or \"log\"");
    }
  } catch (const std::invalid_argument& e) {
    params.fail(e.what());
  }
  n.at("family").fail("unknown family '" + family + "' (expected uniform, gaussian or lognormal)");
}

std::vector<Eigen::VectorXd> parse_data(const Node& n, std::size_t out_dim) {
  std::vector<Eigen::VectorXd> data;
  if (n.size() == 0) n.fail("at least one observation is required");
  for (std::size_t i = 0; i < n.size(); ++i) {
    const Node obs = n[i];
    Eigen::VectorXd y;
    if (obs.raw().is_array()) {
      y = to_vector(obs.numbers());
    } else {
      y = Eigen::VectorXd::Constant(1, obs.number());
    }
    if (static_cast<std::size_t>(y.size()) != out_dim) {
      obs.fail("observation length " + std::to_string(y.size()) + " does not match model output " +
               std::to_string(out_dim));
    }
    data.push_back(std::move(y));
  }
  return data;
}

GaussianDiscrepancy parse_discrepancy(const Node& lik, std::size_t out_dim) {
  if (auto cov = lik.find("covariance")) {
    Eigen::MatrixXd c(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(out_dim));
    if (cov->size() != out_dim) cov->fail("expected a " + std::to_string(out_dim) + "x" + std::to_string(out_dim) + " matrix");
    for (std::size_t r = 0; r < out_dim; ++r) {
      const auto row = (*cov)[r].numbers();
      if (row.size() != out_dim) (*cov)[r].fail("wrong row length");
      for (std::size_t k = 0; k < out_dim; ++k) c(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = row[k];
    }
    try {
      return GaussianDiscrepancy::full(c);
    } catch (const std::invalid_argument& e) {
      cov->fail(e.what());
    }
  }
  const Node sigma = lik.at("sigma");
  try {
    if (sigma.raw().is_array()) {
      const auto s = sigma.numbers();
      if (s.size() != out_dim) sigma.fail("expected " + std::to_string(out_dim) + " values");
      return GaussianDiscrepancy::diagonal(to_vector(s));
    }
    return GaussianDiscrepancy::scalar(sigma.number(), out_dim);
  } catch (const std::invalid_argument& e) {
    sigma.fail(e.what());
  }
}

std::shared_ptr<const LikelihoodModel> parse_likelihood(const Node& lik, std::size_t dim) {
  lik.allow_only({"model", "data", "sigma", "covariance", "options"});
  const std::string model = lik.at("model").string();
  const std::optional<Node> opts = lik.find("options");
  const auto opt_number = [&](const char* key, double fallback) {
    if (!opts) return fallback;
    if (auto v = opts->find(key)) return v->number();
    return fallback;
  };
  const auto opt_count = [&](const char* key, std::size_t fallback) {
    if (!opts) return fallback;
    if (auto v = opts->find(key)) return v->count(1);
    return fallback;
  };

  std::shared_ptr<const ForwardModel> forward;
  if (model == "synthetic") {
    if (!opts) lik.at("options");
    opts->allow_only({"center", "width"});
    const auto center = opts->at("center").numbers();
    if (center.size() != dim) opts->at("center").fail("expected " + std::to_string(dim) + " values");
    const double width = opts->at("width").number();
    if (!(width > 0.0)) opts->at("width").fail("must be positive");
    return std::make_shared<const LikelihoodModel>(synthetic_peaked_likelihood(dim, to_vector(center), width));
  }
  if (model == "oscillator") {
    if (dim != 1) lik.at("model").fail("oscillator takes exactly one parameter");
    if (opts) opts->allow_only({"mass", "omega", "damping"});
    try {
      forward = std::make_shared<OscillatorModel>(opt_number("mass", 1.0), opt_number("omega", 1.0),
                                                  opt_number("damping", 0.1));
    } catch (const std::invalid_argument& e) {
      opts->fail(e.what());
    }
  } else if (model == "identity") {
    forward = std::make_shared<IdentityModel>(dim);
  } else if (model == "diffusion") {
    if (opts) opts->allow_only({"resolution", "corr_length", "variance", "quadrature_nodes"});
    const std::size_t resolution = opt_count("resolution", 400);
    if (resolution < dim) opts->at("resolution").fail("must be at least the number of parameters");
    const double corr = opt_number("corr_length", 1.0 / 3.0);
    const double var = opt_number("variance", 1.0);
    if (!(corr > 0.0) || !(var > 0.0)) lik.at("options").fail("corr_length and variance must be positive");
    forward = std::make_shared<DiffusionModel>(kl_expansion(corr, var, resolution, dim),
                                               opt_count("quadrature_nodes", 512));
  } else if (model == "subprocess") {
    if (!opts) lik.at("options");
    opts->allow_only({"command", "output_dim"});
    const Node cmd = opts->at("command");
    std::vector<std::string> argv;
    for (std::size_t i = 0; i < cmd.size(); ++i) argv.push_back(cmd[i].string());
    if (argv.empty()) cmd.fail("command must not be empty");
    forward = std::make_shared<SubprocessModel>(argv, dim, opts->at("output_dim").count(1));
  } else {
    lik.at("model").fail("unknown model '" + model +
                         "' (expected oscillator, identity, diffusion, synthetic or subprocess)");
  }
  const std::size_t out_dim = forward->output_dim();
  auto data = parse_data(lik.at("data"), out_dim);
  auto disc = parse_discrepancy(lik, out_dim);
  return std::make_shared<const LikelihoodModel>(forward, std::move(disc), std::move(data));
}

Mode parse_mode(const Node& n) {
  try {
    return mode_from_string(n.string());
  } catch (const std::invalid_argument& e) {
    n.fail(e.what());
  }
}

RunConfig parse_method(const Node& m) {
  m.allow_only({"mode", "N_ref", "N_ED", "seed", "adaptivity", "track_moments"});
  RunConfig cfg;
  if (auto v = m.find("mode")) cfg.mode = parse_mode(*v);
  cfg.n_ref = m.at("N_ref").count(2);
  cfg.n_ed = m.at("N_ED").count(1);
  if (cfg.n_ed < cfg.n_ref) m.at("N_ED").fail("must be >= N_ref");
  if (auto v = m.find("seed")) cfg.seed = static_cast<std::uint64_t>(v->count(0));
  if (auto v = m.find("track_moments")) cfg.track_moments = v->boolean();
  if (auto a = m.find("adaptivity")) {
    a->allow_only({"p_max", "q_grid", "rank", "patience", "max_candidates"});
    auto& ad = cfg.adaptivity;
    if (auto v = a->find("p_max")) ad.p_max = static_cast<int>(v->count(0));
    if (auto v = a->find("rank")) ad.rank = static_cast<int>(v->count(1));
    if (auto v = a->find("patience")) ad.patience = static_cast<int>(v->count(1));
    if (auto v = a->find("max_candidates")) ad.max_candidates = v->count(1);
    if (auto v = a->find("q_grid")) {
      if (v->size() == 0) v->fail("must not be empty");
      ad.q_grid.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        const double q = (*v)[i].number();
        if (!(q > 0.0 && q <= 1.0)) (*v)[i].fail("q-norm must lie in (0, 1]");
        if (i > 0 && !(q > ad.q_grid.back())) (*v)[i].fail("q_grid must be strictly ascending");
        ad.q_grid.push_back(q);
      }
    }
  }
  return cfg;
}

ReferenceConfig parse_reference(const Node& r) {
  r.allow_only({"type", "walkers", "steps", "burn_in", "seed", "nodes_per_panel", "panels", "mode"});
  ReferenceConfig ref;
  const std::string type = r.at("type").string();
  if (type == "oracle") {
    ref.type = ReferenceConfig::Type::Oracle;
  } else if (type == "mcmc") {
    ref.type = ReferenceConfig::Type::Mcmc;
  } else if (type == "method") {
    ref.type = ReferenceConfig::Type::Method;
  } else {
    r.at("type").fail("expected oracle, mcmc or method");
  }
  if (auto v = r.find("walkers")) ref.walkers = v->count(2);
  if (auto v = r.find("steps")) ref.steps = v->count(1);
  if (auto v = r.find("burn_in")) ref.burn_in = v->count(0);
  if (ref.burn_in >= ref.steps) r.at("burn_in").fail("must be smaller than steps");
  if (auto v = r.find("seed")) ref.seed = static_cast<std::uint64_t>(v->count(0));
  if (auto v = r.find("nodes_per_panel")) ref.oracle.nodes_per_panel = v->count(1);
  if (auto v = r.find("panels")) ref.oracle.panels = v->count(1);
  if (auto v = r.find("mode")) ref.mode = parse_mode(*v);
  if (ref.walkers % 2 != 0) r.at("walkers").fail("must be even");
  return ref;
}

std::vector<double> parse_grid(const Node& g, const MarginalDistribution& marginal) {
  if (g.raw().is_array()) {
    auto values = g.numbers();
    for (std::size_t k = 1; k < values.size(); ++k) {
      if (!(values[k] > values[k - 1])) g[k].fail("grid values must be strictly ascending");
    }
    if (values.empty()) g.fail("grid must not be empty");
    return values;
  }
  g.allow_only({"points", "lower", "upper", "mass", "values"});
  if (auto v = g.find("values")) return parse_grid(*v, marginal);
  const std::size_t n = g.has("points") ? g.at("points").count(2) : 512;
  double mass = 0.9999;
  if (auto v = g.find("mass")) {
    mass = v->number();
    if (!(mass > 0.0 && mass < 1.0)) v->fail("must lie in (0, 1)");
  }
  auto axis = default_axis(marginal, n, mass);
  double lo = axis.front();
  double hi = axis.back();
  if (auto v = g.find("lower")) lo = v->number();
  if (auto v = g.find("upper")) hi = v->number();
  if (!(hi > lo)) g.fail("upper must exceed lower");
  for (std::size_t k = 0; k < n; ++k) {
    axis[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  return axis;
}

MarginalRequest parse_marginal_request(const Node& n, const PriorModel& prior) {
  MarginalRequest req;
  std::optional<Node> dims;
  std::optional<Node> grid;
  if (n.raw().is_array()) {
    if (n.size() == 0 || n.size() > 2) n.fail("expected [dims] or [dims, grid]");
    dims = n[0];
    if (n.size() == 2) grid = n[1];
  } else {
    n.allow_only({"dims", "grid"});
    dims = n.at("dims");
    grid = n.find("grid");
  }
  if (dims->size() == 0) dims->fail("at least one dimension is required");
  for (std::size_t k = 0; k < dims->size(); ++k) {
    const std::size_t d = (*dims)[k].count(0);
    if (d >= prior.dim()) (*dims)[k].fail("dimension out of range");
    for (std::size_t e : req.dims) {
      if (e == d) (*dims)[k].fail("repeated dimension");
    }
    req.dims.push_back(d);
  }
  req.axes.resize(req.dims.size());
  if (grid) {
    // One grid spec shared by all dims, or one per dim.
    const bool per_dim = grid->raw().is_array() && !grid->raw().empty() && !grid->raw().front().is_number();
    for (std::size_t k = 0; k < req.dims.size(); ++k) {
      if (per_dim) {
        if (grid->size() != req.dims.size()) grid->fail("expected one grid per dimension");
        req.axes[k] = parse_grid((*grid)[k], prior.marginal(req.dims[k]));
      } else {
        req.axes[k] = parse_grid(*grid, prior.marginal(req.dims[k]));
      }
    }
  }
  return req;
}

std::string marginal_file_name(const std::vector<std::size_t>& dims) {
  std::string name = "marginal";
  for (std::size_t d : dims) name += "_" + std::to_string(d);
  return name + ".csv";
}

std::string design_csv(const ExperimentalDesign& d, std::size_t dim) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < dim; ++i) os << "u" << i << ',';
  for (std::size_t i = 0; i < dim; ++i) os << "x" << i << ',';
  os << "likelihood,residual\n";
  for (std::size_t k = 0; k < d.size(); ++k) {
    for (std::size_t i = 0; i < dim; ++i) os << d.points_u[k][static_cast<Eigen::Index>(i)] << ',';
    for (std::size_t i = 0; i < dim; ++i) os << d.points_x[k][static_cast<Eigen::Index>(i)] << ',';
    os << d.likelihood[k] << ',' << d.residual[k] << '\n';
  }
  return os.str();
}

std::size_t tree_depth(const SseTree& tree) {
  int depth = 0;
  for (const auto& n : tree.nodes()) depth = std::max(depth, n.id.level);
  return static_cast<std::size_t>(depth);
}

}  // namespace

AppConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  const Node top(root, "");
  top.allow_only({"prior", "likelihood", "method", "reference", "outputs", "compare"});
  AppConfig cfg;
  cfg.text = text;

  const Node prior = top.at("prior");
  if (prior.size() == 0) prior.fail("at least one marginal is required");
  std::vector<MarginalDistribution> marginals;
  for (std::size_t i = 0; i < prior.size(); ++i) marginals.push_back(parse_marginal(prior[i]));
  cfg.prior = PriorModel(std::move(marginals));

  cfg.likelihood = parse_likelihood(top.at("likelihood"), cfg.prior.dim());
  cfg.method = parse_method(top.at("method"));
  if (auto r = top.find("reference")) cfg.reference = parse_reference(*r);
  if (auto o = top.find("outputs")) {
    o->allow_only({"dir", "marginals"});
    if (auto d = o->find("dir")) cfg.outputs.dir = d->string();
    if (auto m = o->find("marginals")) {
      for (std::size_t i = 0; i < m->size(); ++i) {
        cfg.outputs.marginals.push_back(parse_marginal_request((*m)[i], cfg.prior));
      }
    }
  }
  if (auto c = top.find("compare")) {
    c->allow_only({"modes", "seeds"});
    if (auto m = c->find("modes")) {
      for (std::size_t i = 0; i < m->size(); ++i) cfg.compare.modes.push_back(parse_mode((*m)[i]));
    }
    if (auto s = c->find("seeds")) {
      for (std::size_t i = 0; i < s->size(); ++i) {
        cfg.compare.seeds.push_back(static_cast<std::uint64_t>((*s)[i].count(0)));
      }
    }
  }
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<file>", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::vector<double>> comparison_axes(const AppConfig& cfg) {
  std::vector<std::vector<double>> axes(cfg.prior.dim());
  for (const auto& req : cfg.outputs.marginals) {
    if (req.dims.size() == 1 && !req.axes[0].empty()) axes[req.dims[0]] = req.axes[0];
  }
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i].empty()) axes[i] = default_axis(cfg.prior.marginal(i));
  }
  return axes;
}

std::vector<DensityGrid> method_marginals(const SseTree& tree, const PriorModel& prior,
                                          const std::vector<std::vector<double>>& axes) {
  std::vector<DensityGrid> out;
  const bool positive = evidence(tree) > 0.0;
  for (std::size_t i = 0; i < prior.dim(); ++i) {
    DensityGrid g;
    g.x = axes.at(i);
    if (positive) {
      g.density = posterior_marginal(tree, prior, {i}, {axes[i]}).density;
    } else {
      g.density.assign(g.x.size(), 0.0);
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<DensityGrid> reference_marginals(const AppConfig& cfg, const ReferenceConfig& ref) {
  const auto axes = comparison_axes(cfg);
  const LikelihoodModel lik(*cfg.likelihood);
  switch (ref.type) {
    case ReferenceConfig::Type::Oracle: {
      if (cfg.prior.dim() > 3) throw ConfigError("reference.type", "the quadrature oracle supports at most 3 dimensions");
      return quadrature_oracle([&](const Point& x) { return lik.evaluate(x); }, cfg.prior, axes, ref.oracle)
          .marginals;
    }
    case ReferenceConfig::Type::Mcmc: {
      const auto log_post = [&](const Point& x) {
        const double lp = cfg.prior.log_pdf(x);
        if (!std::isfinite(lp)) return lp;
        return lp + lik.log_likelihood(x);
      };
      const Chain chain = aies_sample(log_post, cfg.prior, ref.walkers, ref.steps, ref.seed);
      const std::size_t burn = ref.burn_in > 0 ? ref.burn_in : ref.steps / 5;
      std::vector<DensityGrid> out;
      for (std::size_t i = 0; i < cfg.prior.dim(); ++i) out.push_back(kde_marginal(chain.coordinate(i, burn), axes[i]));
      return out;
    }
    case ReferenceConfig::Type::Method: {
      RunConfig rc = cfg.method;
      rc.mode = ref.mode;
      rc.seed = ref.seed;
      rc.track_moments = false;
      const auto result = run_method(lik, cfg.prior, rc);
      return method_marginals(result.tree, cfg.prior, axes);
    }
  }
  return {};
}

RunOutcome run_command(const AppConfig& cfg, const std::filesystem::path& dir) {
  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome out;
  out.result = run_method(*cfg.likelihood, cfg.prior, cfg.method);
  const auto& tree = out.result.tree;

  SummaryOptions opts;
  opts.marginals = cfg.outputs.marginals;
  if (opts.marginals.empty()) {
    for (std::size_t i = 0; i < cfg.prior.dim(); ++i) opts.marginals.push_back({{i}, {}});
  }
  out.summary = summarize(tree, cfg.prior, opts);

  json summary = to_json(out.summary);
  summary["method"] = {{"mode", to_string(cfg.method.mode)},
                       {"N_ref", cfg.method.n_ref},
                       {"N_ED", cfg.method.n_ed},
                       {"seed", cfg.method.seed},
                       {"evaluations", out.result.evaluations},
                       {"nodes", tree.size()},
                       {"expansions", std::count_if(tree.nodes().begin(), tree.nodes().end(),
                                                    [](const SseNode& n) { return n.expansion.has_value(); })},
                       {"terminals", tree.terminals().size()},
                       {"depth", tree_depth(tree)}};
  if (cfg.reference) {
    const auto axes = comparison_axes(cfg);
    const auto ref = reference_marginals(cfg, *cfg.reference);
    const auto approx = method_marginals(tree, cfg.prior, axes);
    std::vector<double> jsd;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      jsd.push_back(out.summary.evidence_positive ? js_divergence(approx[i], ref[i]) : std::numbers::ln2);
    }
    double eta = 0.0;
    for (double v : jsd) eta += v;
    summary["comparison"] = {{"jsd", jsd}, {"eta", eta / static_cast<double>(jsd.size())}};
  }

  const auto emit = [&](const std::string& name, const std::string& content) {
    write_atomic(dir / name, content);
    out.files.push_back(dir / name);
  };
  emit("summary.json", summary.dump(2) + "\n");
  emit("tree.json", to_json(tree).dump(1) + "\n");
  {
    std::ostringstream os;
    out.result.trace.write_csv(os, cfg.prior.dim());
    emit("trace.csv", os.str());
  }
  emit("design.csv", design_csv(out.result.design, cfg.prior.dim()));
  for (const auto& g : out.summary.marginals) emit(marginal_file_name(g.dims), marginal_csv(g));
  emit("config.json", cfg.text);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json files = json::array();
  for (const auto& f : out.files) files.push_back(f.filename().string());
  files.push_back("metadata.json");
  const json metadata = {{"seed", cfg.method.seed},
                         {"method", to_string(cfg.method.mode)},
                         {"budget", cfg.method.n_ed},
                         {"budget_used", out.result.evaluations},
                         {"wall_time_s", wall},
                         {"files", files},
                         {"config_text", cfg.text}};
  write_atomic(dir / "metadata.json", metadata.dump(2) + "\n");
  out.files.push_back(dir / "metadata.json");
  return out;
}

json compare_command(const AppConfig& cfg, const std::filesystem::path& dir) {
  if (!cfg.reference) throw ConfigError("reference", "compare requires a reference block");
  const auto axes = comparison_axes(cfg);
  const auto ref = reference_marginals(cfg, *cfg.reference);
  const std::vector<Mode> modes = cfg.compare.modes.empty() ? std::vector<Mode>{cfg.method.mode} : cfg.compare.modes;
  const std::vector<std::uint64_t> seeds =
      cfg.compare.seeds.empty() ? std::vector<std::uint64_t>{cfg.method.seed} : cfg.compare.seeds;
  const std::size_t m = cfg.prior.dim();

  std::ostringstream csv;
  csv.precision(12);
  csv << "mode,seed,evaluations,evidence";
  for (std::size_t i = 0; i < m; ++i) csv << ",jsd_" << i;
  csv << ",eta\n";
  json rows = json::array();
  json means = json::object();
  for (Mode mode : modes) {
    double sum = 0.0;
    for (std::uint64_t seed : seeds) {
      RunConfig rc = cfg.method;
      rc.mode = mode;
      rc.seed = seed;
      rc.track_moments = false;
      const LikelihoodModel lik(*cfg.likelihood);
      const auto result = run_method(lik, cfg.prior, rc);
      const double z = evidence(result.tree);
      const auto approx = method_marginals(result.tree, cfg.prior, axes);
      std::vector<double> jsd;
      for (std::size_t i = 0; i < m; ++i) {
        jsd.push_back(z > 0.0 ? js_divergence(approx[i], ref[i]) : std::numbers::ln2);
      }
      double eta = 0.0;
      for (double v : jsd) eta += v;
      eta /= static_cast<double>(m);
      sum += eta;
      csv << to_string(mode) << ',' << seed << ',' << result.evaluations << ',' << z;
      for (double v : jsd) csv << ',' << v;
      csv << ',' << eta << '\n';
      rows.push_back({{"mode", to_string(mode)},
                      {"seed", seed},
                      {"evaluations", result.evaluations},
                      {"evidence", z},
                      {"jsd", jsd},
                      {"eta", eta}});
    }
    means[to_string(mode)] = sum / static_cast<double>(seeds.size());
  }
  const json report = {{"rows", rows}, {"mean_eta", means}};
  write_atomic(dir / "compare.csv", csv.str());
  write_atomic(dir / "compare.json", report.dump(2) + "\n");
  return report;
}

}  // namespace ssle

#include "msmc/bench.hpp"

#include <fmt/format.h>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <type_traits>

#include "msmc/errors.hpp"
#include "msmc/oracle.hpp"
#include "msmc/parallel.hpp"

namespace msmc::bench {

namespace pt = boost::property_tree;

namespace {

std::string g17(double x) { return fmt::format("{:.17g}", x); }

template <class T>
T parse_number(const std::string& key, const std::string& raw) {
  if constexpr (std::is_unsigned_v<T>) {
    if (!raw.empty() && raw.front() == '-') {
      throw ConfigError(fmt::format("{}: '{}' must not be negative", key, raw));
    }
  }
  std::istringstream in(raw);
  T v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw ConfigError(fmt::format("{}: cannot read '{}'", key, raw));
  }
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& raw) {
  std::vector<std::string> parts;
  boost::split(parts, raw, boost::is_any_of(", "), boost::token_compress_on);
  std::vector<T> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (!p.empty()) {
      out.push_back(parse_number<T>(key, p));
    }
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) {
        throw ConfigError(fmt::format("key '{}' is outside any section", section));
      }
      for (const auto& [key, value] : body) {
        known_.insert(section + "." + key);
      }
    }
  }

  std::optional<std::string> raw(const std::string& path) {
    used_.insert(path);
    if (const auto v = tree_.get_optional<std::string>(path)) {
      auto s = *v;
      boost::trim(s);
      return s;
    }
    return std::nullopt;
  }

  template <class T>
  void read(const std::string& path, T& into) {
    if (const auto v = raw(path)) {
      if constexpr (std::is_same_v<T, std::string>) {
        into = *v;
      } else {
        into = parse_number<T>(path, *v);
      }
    }
  }

  template <class T>
  void read(const std::string& path, std::optional<T>& into) {
    if (const auto v = raw(path)) {
      into = parse_number<T>(path, *v);
    }
  }

  void reject_unknown() const {
    for (const auto& k : known_) {
      if (!used_.contains(k)) {
        throw ConfigError(fmt::format("unknown setting '{}'", k));
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> known_;
  std::set<std::string> used_;
};

void require_positive(const std::string& name, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(fmt::format("{} must be positive, got {}", name, v));
  }
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
  }
  ExperimentConfig c;
  c.hash = fnv1a(text);
  Reader r(tree);

  r.read("experiment.seed", c.seed);
  if (const auto v = r.raw("experiment.particles")) {
    c.particles = parse_list<std::size_t>("experiment.particles", *v);
  }
  r.read("experiment.replicates", c.replicates);
  r.read("experiment.step", c.step);
  r.read("experiment.phi", c.phi);
  r.read("experiment.output", c.output);
  r.read("experiment.grid_points", c.grid_points);
  r.read("experiment.threads", c.threads);

  r.read("model.preset", c.preset);
  r.read("model.a", c.ssm.a);
  r.read("model.sigma_x", c.ssm.sigma_x);
  r.read("model.c", c.ssm.c);
  r.read("model.sigma_y", c.ssm.sigma_y);
  r.read("model.m0", c.ssm.m0);
  r.read("model.s0", c.ssm.s0);
  r.read("model.horizon", c.horizon);
  r.read("model.data_seed", c.data_seed);
  if (const auto v = r.raw("model.observations")) {
    c.ssm.y = parse_list<double>("model.observations", *v);
  }

  r.read("filter.method", c.method);
  r.read("filter.proposal", c.proposal);
  r.read("filter.affine_slope", c.affine_slope);
  r.read("filter.affine_intercept", c.affine_intercept);
  r.read("filter.affine_sd", c.affine_sd);
  r.read("filter.aux", c.aux);
  r.read("filter.aux_inflation", c.aux_inflation);

  r.read("abc.y_obs", c.abc_y_obs);
  r.read("abc.stages", c.abc_stages);
  r.read("abc.rw_sd", c.abc_rw_sd);
  if (const auto v = r.raw("abc.epsilons")) {
    c.abc_epsilons = parse_list<double>("abc.epsilons", *v);
  }
  r.reject_unknown();

  if (c.replicates < 1) {
    throw ConfigError("experiment.replicates must be at least 1");
  }
  for (const auto n : c.particles) {
    if (n == 0) {
      throw ConfigError("experiment.particles entries must be positive");
    }
  }
  if (c.grid_points < 3) {
    throw ConfigError("experiment.grid_points must be at least 3");
  }
  if (c.preset != "fixture" && c.preset != "lgssm" && c.preset != "simulated") {
    throw ConfigError(fmt::format("model.preset '{}' is not fixture, lgssm or simulated", c.preset));
  }
  if (c.preset == "fixture" && !c.ssm.y.empty()) {
    throw ConfigError("model.observations needs preset = lgssm");
  }
  c.ssm.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

std::uint64_t ExperimentConfig::require_seed() const {
  if (!seed) {
    throw ConfigError("experiment.seed is required (or pass --seed)");
  }
  return *seed;
}

const std::vector<std::size_t>& ExperimentConfig::require_particles() const {
  if (particles.empty()) {
    throw ConfigError("experiment.particles is required");
  }
  return particles;
}

zoo::LinearGaussianSSM ExperimentConfig::model_ssm() const {
  if (preset == "fixture") {
    return zoo::fixture();
  }
  if (preset == "simulated") {
    auto s = ssm;
    s.y = zoo::simulate(ssm, horizon, probkit::SeededStream(data_seed, 0)).y;
    return s;
  }
  return ssm;
}

model::TestFunction test_function_by_name(const std::string& name) {
  if (name == "identity") {
    return model::phi_identity();
  }
  if (name == "square") {
    return model::phi_square();
  }
  if (name == "one") {
    return model::phi_constant(1.0);
  }
  if (name == "zero") {
    auto f = model::phi_constant(0.0);
    f.name = "zero";
    return f;
  }
  if (name == "smoothed_indicator") {
    return model::phi_smoothed_indicator(0.5, 0.3);
  }
  throw ConfigError(fmt::format("unknown test function '{}'", name));
}

model::TestFunction ExperimentConfig::test_function() const { return test_function_by_name(phi); }

zoo::Proposal ExperimentConfig::make_proposal() const {
  if (proposal == "bootstrap") {
    return zoo::bootstrap_proposal();
  }
  if (proposal == "locally_optimal") {
    return zoo::locally_optimal_proposal();
  }
  if (proposal == "observation") {
    return zoo::observation_proposal();
  }
  if (proposal == "affine") {
    require_positive("filter.affine_sd", affine_sd);
    return zoo::affine_proposal(affine_slope, affine_intercept, affine_sd);
  }
  throw ConfigError(fmt::format("unknown proposal '{}'", proposal));
}

zoo::AuxApprox ExperimentConfig::make_aux() const {
  if (aux == "unit") {
    return zoo::aux_unit();
  }
  if (aux == "exact") {
    return zoo::aux_exact();
  }
  if (aux == "inflated") {
    require_positive("filter.aux_inflation", aux_inflation);
    return zoo::aux_inflated(aux_inflation);
  }
  throw ConfigError(fmt::format("unknown auxiliary approximation '{}'", aux));
}

zoo::AbcProblem ExperimentConfig::abc_problem() const {
  require_positive("abc.rw_sd", abc_rw_sd);
  auto p = zoo::gaussian_toy_abc(abc_y_obs, abc_stages, abc_rw_sd);
  if (!abc_epsilons.empty()) {
    p.epsilons = abc_epsilons;
  }
  p.validate();
  return p;
}

std::string csv_preamble(std::uint64_t config_hash, std::uint64_t seed) {
  return fmt::format("# msmc_bench {} config={:016x} seed={}\n", kToolVersion, config_hash, seed);
}

FilterSetup make_filter(const std::string& method, const zoo::LinearGaussianSSM& ssm, const zoo::Proposal& proposal,
                        const zoo::AuxApprox& aux) {
  if (method == "mpf") {
    return {"mpf", zoo::make_mpf(ssm, proposal), engines::WeightMode::marginal, {}};
  }
  if (method == "pf") {
    return {"pf", zoo::make_mpf(ssm, proposal), engines::WeightMode::ancestor, {}};
  }
  if (method == "bpf") {
    return {"bpf", zoo::make_bpf(ssm), engines::WeightMode::marginal, {}};
  }
  if (method == "ipf") {
    return {"ipf", zoo::make_ipf(ssm, proposal), engines::WeightMode::marginal, {}};
  }
  if (method == "mapf") {
    auto m = zoo::make_mapf(ssm, proposal, aux);
    engines::RunHooks hooks;
    hooks.estimate_log_correction = m.inferential_log_weight;
    return {"mapf", std::move(m.model), engines::WeightMode::marginal, std::move(hooks)};
  }
  throw ConfigError(fmt::format("unknown filter method '{}'", method));
}

std::vector<double> step_estimates(const FilterSetup& setup, const model::TestFunction& phi, std::size_t step,
                                   std::size_t particles, std::size_t replicates, probkit::SeededStream stream,
                                   unsigned threads) {
  if (step > setup.model.horizon()) {
    throw ConfigError(fmt::format("step {} is past the horizon {}", step, setup.model.horizon()));
  }
  const bool corrected = static_cast<bool>(setup.hooks.estimate_log_correction);
  std::vector<double> out(replicates);
  probkit::parallel_chunks(replicates, 1, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      engines::SmcRunner runner(setup.model, {.particles = particles}, {phi}, stream.split(r), setup.mode,
                                setup.hooks);
      model::StepRecord rec;
      for (std::size_t k = 0; k <= step; ++k) {
        rec = runner.step();
      }
      out[r] = corrected ? rec.corrected[0] : rec.pre[0];
    }
  });
  return out;
}

double gaussian_expectation(const model::TestFunction& phi, double mean, double var) {
  if (var == 0.0) {
    return phi.fn(model::StateView{&mean, 1});
  }
  const auto grid = probkit::Grid1D::uniform(-12.0, 12.0, 481);
  const double sd = std::sqrt(var);
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = mean + sd * grid.point(i);
    s += grid.weight(i) * std::exp(probkit::normal_log_pdf(grid.point(i), 0.0, 1.0)) *
         phi.fn(model::StateView{&x, 1});
  }
  return s;
}

ConvergenceResult convergence_study(const FilterSetup& setup, const model::TestFunction& phi, std::size_t step,
                                    double truth, std::span<const std::size_t> particles, std::size_t replicates,
                                    probkit::SeededStream stream, unsigned threads) {
  if (replicates < 2) {
    throw ConfigError("convergence needs at least two replicates");
  }
  ConvergenceResult out;
  out.method = setup.name;
  const auto r = static_cast<double>(replicates);
  std::vector<std::pair<double, double>> rmse_pts;
  std::vector<std::pair<double, double>> bias_pts;
  for (const auto n : particles) {
    const auto est = step_estimates(setup, phi, step, n, replicates, stream.split(n), threads);
    double se = 0.0;
    double sse = 0.0;
    for (const double e : est) {
      se += e - truth;
      sse += (e - truth) * (e - truth);
    }
    const double bias = se / r;
    const double mse = sse / r;
    double var_err = 0.0;
    double var_sq = 0.0;
    for (const double e : est) {
      const double d = e - truth;
      var_err += (d - bias) * (d - bias);
      var_sq += (d * d - mse) * (d * d - mse);
    }
    var_err /= r - 1.0;
    var_sq /= r - 1.0;
    ConvergenceRow row;
    row.particles = n;
    row.replicates = replicates;
    row.rmse = std::sqrt(mse);
    row.rmse_se = row.rmse > 0.0 ? std::sqrt(var_sq / r) / (2.0 * row.rmse) : 0.0;
    row.mean_bias = bias;
    row.bias_se = std::sqrt(var_err / r);
    out.rows.push_back(row);
    rmse_pts.emplace_back(static_cast<double>(n), row.rmse);
    bias_pts.emplace_back(static_cast<double>(n), std::abs(bias));
  }
  if (particles.size() >= 2) {
    out.rmse_slope = probkit::fit_loglog_slope(rmse_pts).slope;
    out.bias_slope = probkit::fit_loglog_slope(bias_pts).slope;
  }
  return out;
}

void ConvergenceResult::write_csv(std::ostream& out) const {
  out << "method,N,replicates,rmse,rmse_se,mean_bias,bias_se\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{}\n", method, r.particles, r.replicates, g17(r.rmse), g17(r.rmse_se),
                       g17(r.mean_bias), g17(r.bias_se));
  }
  if (rmse_slope && bias_slope) {
    out << fmt::format("slope,,,{},,{},\n", g17(*rmse_slope), g17(*bias_slope));
  }
}

LogZResult logz_study(const FilterSetup& setup, double log_z, std::size_t particles, std::size_t replicates,
                      probkit::SeededStream stream, unsigned threads) {
  if (replicates < 2) {
    throw ConfigError("logz needs at least two replicates");
  }
  LogZResult out;
  out.log_z = log_z;
  out.log_z_hat.resize(replicates);
  probkit::parallel_chunks(replicates, 1, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      engines::SmcRunner runner(setup.model, {.particles = particles}, {}, stream.split(r), setup.mode);
      out.log_z_hat[r] = runner.finish().log_z();
    }
  });
  const auto rr = static_cast<double>(replicates);
  for (const double l : out.log_z_hat) {
    out.ratio_mean += std::exp(l - log_z);
  }
  out.ratio_mean /= rr;
  double ss = 0.0;
  for (const double l : out.log_z_hat) {
    const double d = std::exp(l - log_z) - out.ratio_mean;
    ss += d * d;
  }
  out.ratio_se = std::sqrt(ss / (rr - 1.0) / rr);
  out.pass = std::abs(out.ratio_mean - 1.0) <= 3.0 * out.ratio_se;
  return out;
}

void LogZResult::write_csv(std::ostream& out) const {
  out << "replicate,log_zhat\n";
  for (std::size_t r = 0; r < log_z_hat.size(); ++r) {
    out << fmt::format("{},{}\n", r, g17(log_z_hat[r]));
  }
  out << fmt::format("# log_z={} ratio_mean={} se={} verdict={}\n", g17(log_z), g17(ratio_mean), g17(ratio_se),
                     pass ? "pass" : "fail");
  out << fmt::format("summary,{},{},{}\n", g17(ratio_mean), g17(ratio_se), pass ? "pass" : "fail");
}

AbcResult abc_study(const zoo::AbcProblem& problem, std::size_t particles, std::size_t replicates,
                    probkit::SeededStream stream, unsigned threads) {
  if (replicates < 2) {
    throw ConfigError("abc needs at least two replicates");
  }
  const auto m = zoo::make_abc(problem);
  const std::vector<model::TestFunction> fns{{"theta", [](model::StateView x) { return x[0]; }},
                                             {"theta2", [](model::StateView x) { return x[0] * x[0]; }}};
  const std::size_t stages = problem.epsilons.size();
  std::vector<std::vector<double>> means(stages, std::vector<double>(replicates));
  std::vector<std::vector<double>> vars(stages, std::vector<double>(replicates));
  std::vector<std::vector<double>> ess(stages, std::vector<double>(replicates));
  probkit::parallel_chunks(replicates, 1, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto t = engines::run_msmc(m, {.particles = particles}, fns, stream.split(r));
      for (std::size_t s = 0; s < stages; ++s) {
        const auto& rec = t.steps[s];
        means[s][r] = rec.pre[0];
        vars[s][r] = rec.pre[1] - rec.pre[0] * rec.pre[0];
        ess[s][r] = rec.ess;
      }
    }
  });
  const auto rr = static_cast<double>(replicates);
  const auto summarize = [rr](const std::vector<double>& v) {
    double m = 0.0;
    for (const double x : v) {
      m += x;
    }
    m /= rr;
    double ss = 0.0;
    for (const double x : v) {
      ss += (x - m) * (x - m);
    }
    return std::pair{m, std::sqrt(ss / (rr - 1.0) / rr)};
  };
  AbcResult out;
  for (std::size_t s = 0; s < stages; ++s) {
    AbcStageRow row;
    row.stage = s;
    row.epsilon = problem.epsilons[s];
    std::tie(row.mean, row.mean_se) = summarize(means[s]);
    std::tie(row.var, row.var_se) = summarize(vars[s]);
    row.ess = summarize(ess[s]).first;
    out.stages.push_back(row);
  }
  out.exact = zoo::gaussian_toy_pseudo_posterior(problem.y_obs, problem.epsilons.back());
  const auto& last = out.stages.back();
  out.pass = std::abs(last.mean - out.exact.mean) <= 3.0 * last.mean_se &&
             std::abs(last.var - out.exact.var) <= 3.0 * last.var_se;
  return out;
}

void AbcResult::write_csv(std::ostream& out) const {
  out << "stage,epsilon,mean,mean_se,var,var_se,ess\n";
  for (const auto& s : stages) {
    out << fmt::format("{},{},{},{},{},{},{}\n", s.stage, g17(s.epsilon), g17(s.mean), g17(s.mean_se), g17(s.var),
                       g17(s.var_se), g17(s.ess));
  }
  out << fmt::format("exact,{},{},,{},,\n", g17(stages.back().epsilon), g17(exact.mean), g17(exact.var));
}

std::vector<Prop5Row> prop5_study(const zoo::LinearGaussianSSM& ssm, const zoo::Proposal& proposal,
                                  std::size_t step, std::size_t particles, std::size_t replicates,
                                  std::span<const model::TestFunction> phis, probkit::SeededStream stream,
                                  std::size_t grid_points, unsigned threads) {
  if (step == 0 || step > ssm.horizon()) {
    throw ConfigError(fmt::format("prop5 needs 1 <= step <= {}", ssm.horizon()));
  }
  const auto m = zoo::make_mpf(ssm, proposal);
  engines::SmcRunner runner(m, {.particles = particles}, {}, stream.split(0), engines::WeightMode::marginal);
  for (std::size_t k = 0; k < step; ++k) {
    runner.step();
  }
  const auto frozen = runner.weighted();
  const auto grid = oracle::lgssm_grid(ssm, grid_points);
  std::vector<Prop5Row> rows;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    Prop5Row row;
    row.phi = phis[i].name;
    row.step = step;
    row.replicates = replicates;
    row.result = engines::check_conditional_expectation(frozen, m, step, phis[i], replicates, stream.split(1, i), grid,
                                                        {.particles = 1, .threads = threads});
    row.pass = std::abs(row.result.z()) <= 4.0;
    rows.push_back(row);
  }
  return rows;
}

void write_prop5_csv(std::ostream& out, std::span<const Prop5Row> rows) {
  out << "phi,step,replicates,mc_mean,mc_se,exact,z,verdict\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{}\n", r.phi, r.step, r.replicates, g17(r.result.mc_mean),
                       g17(r.result.mc_se), g17(r.result.exact), g17(r.result.z()), r.pass ? "pass" : "fail");
  }
}

}  // namespace msmc::bench

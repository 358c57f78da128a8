#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msmc/engines.hpp"
#include "msmc/model.hpp"
#include "msmc/ssm.hpp"
#include "msmc/zoo.hpp"

/// Experiment drivers behind the msmc_bench tool: config loading, replicate
/// studies and their CSV layouts.
namespace msmc::bench {

inline constexpr const char* kToolVersion = "1.0.0";

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// INI settings. Sections: [experiment], [model], [filter], [abc].
struct ExperimentConfig {
  std::optional<std::uint64_t> seed;
  std::vector<std::size_t> particles;
  std::size_t replicates = 1;
  std::optional<std::size_t> step;  ///< defaults to the horizon
  std::string phi = "identity";
  std::string output;
  std::size_t grid_points = 2001;
  unsigned threads = 1;

  std::string preset = "fixture";  ///< fixture | lgssm | simulated
  zoo::LinearGaussianSSM ssm;
  std::size_t horizon = 10;
  std::uint64_t data_seed = zoo::kFixtureSeed;

  std::string method = "mpf";  ///< mpf | bpf | ipf | mapf | pf
  std::string proposal = "locally_optimal";
  double affine_slope = 1.0;
  double affine_intercept = 0.0;
  double affine_sd = 1.0;
  std::string aux = "exact";  ///< unit | exact | inflated
  double aux_inflation = 2.0;

  double abc_y_obs = 0.0;
  std::size_t abc_stages = 10;
  double abc_rw_sd = 1.0;
  std::vector<double> abc_epsilons;  ///< overrides the toy schedule when set

  std::uint64_t hash = 0;  ///< FNV-1a of the config text

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);

  [[nodiscard]] std::uint64_t require_seed() const;
  [[nodiscard]] const std::vector<std::size_t>& require_particles() const;
  /// The data set implied by the [model] section.
  [[nodiscard]] zoo::LinearGaussianSSM model_ssm() const;
  [[nodiscard]] model::TestFunction test_function() const;
  [[nodiscard]] zoo::Proposal make_proposal() const;
  [[nodiscard]] zoo::AuxApprox make_aux() const;
  [[nodiscard]] zoo::AbcProblem abc_problem() const;
};

model::TestFunction test_function_by_name(const std::string& name);

/// `# msmc_bench <version> config=<hash> seed=<seed>`.
std::string csv_preamble(std::uint64_t config_hash, std::uint64_t seed);

/// A runnable filter: the model, the weight mode, and the MAPF correction.
struct FilterSetup {
  std::string name;
  model::MarginalModel model;
  engines::WeightMode mode = engines::WeightMode::marginal;
  engines::RunHooks hooks;
};

FilterSetup make_filter(const std::string& method, const zoo::LinearGaussianSSM& ssm, const zoo::Proposal& proposal,
                        const zoo::AuxApprox& aux);

/// Step-`step` estimate of phi per replicate (the corrected estimate when the
/// setup carries one); replicate r uses stream.split(r).
std::vector<double> step_estimates(const FilterSetup& setup, const model::TestFunction& phi, std::size_t step,
                                   std::size_t particles, std::size_t replicates, probkit::SeededStream stream,
                                   unsigned threads = 1);

/// E[phi(X)], X ~ N(mean, var), by trapezoid nodes on +-12 sd.
double gaussian_expectation(const model::TestFunction& phi, double mean, double var);

struct ConvergenceRow {
  std::size_t particles = 0;
  std::size_t replicates = 0;
  double rmse = 0.0;
  double rmse_se = 0.0;
  double mean_bias = 0.0;
  double bias_se = 0.0;
};

struct ConvergenceResult {
  std::string method;
  std::vector<ConvergenceRow> rows;
  std::optional<double> rmse_slope;
  std::optional<double> bias_slope;

  /// Header `method,N,replicates,rmse,rmse_se,mean_bias,bias_se`; with two
  /// or more N a footer row `slope,,,<rmse slope>,,<bias slope>,`.
  void write_csv(std::ostream& out) const;
};

/// For each N, R replicates with streams stream.split(N).split(r).
ConvergenceResult convergence_study(const FilterSetup& setup, const model::TestFunction& phi, std::size_t step,
                                    double truth, std::span<const std::size_t> particles, std::size_t replicates,
                                    probkit::SeededStream stream, unsigned threads = 1);

struct LogZResult {
  std::vector<double> log_z_hat;
  double log_z = 0.0;
  double ratio_mean = 0.0;  ///< mean of Zhat / Z
  double ratio_se = 0.0;
  bool pass = false;  ///< |ratio_mean - 1| <= 3 se

  /// Header `replicate,log_zhat`, then `# ratio_mean=..., se=..., verdict=...` and a
  /// `summary,<ratio_mean>,<se>,<verdict>` footer row.
  void write_csv(std::ostream& out) const;
};

LogZResult logz_study(const FilterSetup& setup, double log_z, std::size_t particles, std::size_t replicates,
                      probkit::SeededStream stream, unsigned threads = 1);

struct AbcStageRow {
  std::size_t stage = 0;
  double epsilon = 0.0;
  double mean = 0.0;
  double mean_se = 0.0;
  double var = 0.0;
  double var_se = 0.0;
  double ess = 0.0;  ///< average over replicates
};

struct AbcResult {
  std::vector<AbcStageRow> stages;
  zoo::GaussianMoments exact;  ///< pseudo-posterior at the final epsilon (Gaussian toy only)
  bool pass = false;           ///< final mean and var within 3 se of `exact`

  /// Header `stage,epsilon,mean,mean_se,var,var_se,ess`, then an `exact` row.
  void write_csv(std::ostream& out) const;
};

/// The Gaussian toy with R replicates at N particles; se across replicates.
AbcResult abc_study(const zoo::AbcProblem& problem, std::size_t particles, std::size_t replicates,
                    probkit::SeededStream stream, unsigned threads = 1);

struct Prop5Row {
  std::string phi;
  std::size_t step = 0;
  std::size_t replicates = 0;
  engines::ConditionalExpectation result;
  bool pass = false;  ///< |z| <= 4
};

/// Freezes the weighted MPF cloud at step - 1 (N particles) and compares the
/// Monte Carlo and quadrature sides for each phi.
std::vector<Prop5Row> prop5_study(const zoo::LinearGaussianSSM& ssm, const zoo::Proposal& proposal,
                                  std::size_t step, std::size_t particles, std::size_t replicates,
                                  std::span<const model::TestFunction> phis, probkit::SeededStream stream,
                                  std::size_t grid_points = 2001, unsigned threads = 1);

/// Header `phi,step,replicates,mc_mean,mc_se,exact,z,verdict`.
void write_prop5_csv(std::ostream& out, std::span<const Prop5Row> rows);

}  // namespace msmc::bench

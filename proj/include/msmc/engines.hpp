#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "msmc/model.hpp"

/// Marginal SMC (mixture weights against the retained weighted cloud) and
/// standard SMC (weights at each particle's own ancestor), sharing one
/// always-resample schedule.
namespace msmc::engines {

using model::FilterTrace;
using model::MarginalModel;
using model::ParticleCloud;
using model::Positions;
using model::StateView;
using model::StepRecord;
using model::TestFunction;

struct EngineConfig {
  std::size_t particles = 0;
  bool resample_every_step = true;  ///< only `true` is supported
  bool record_pre_and_post = true;  ///< when false, `post` estimates are left empty
  std::size_t chunk_size = 64;      ///< query particles per block of the O(N^2) loop
  unsigned threads = 1;

  /// Throws ConfigError on N == 0, chunk_size == 0 or a disabled resampling schedule.
  void validate() const;
};

struct ResampleOutcome {
  std::vector<std::size_t> ancestors;
};

/// `count` i.i.d. categorical draws, returned in ascending index order.
/// Throws ConfigError unless the weights are nonnegative and sum to one.
ResampleOutcome multinomial_draw(std::span<const double> weights, std::size_t count, probkit::SeededStream stream);

/// N = weights.size() draws.
ResampleOutcome multinomial_resample(std::span<const double> weights, probkit::SeededStream stream);

/// log G_n^N at each of `x` against the weighted cloud `prev`; for n == 0 the
/// exact log G_0 and `prev` is ignored. Throws ExtinctionError if a mixture
/// denominator vanishes.
std::vector<double> compute_marginal_log_weights(const ParticleCloud& prev, const Positions& x,
                                                 const MarginalModel& model, std::size_t n,
                                                 const EngineConfig& cfg = {.particles = 1});

/// log U_n(a, x) + log k_n(a, x) - log m_n(a, x) at the given ancestor.
double ancestor_log_weight(const model::StepSpec& step, StateView ancestor, StateView x);

enum class WeightMode { marginal, ancestor };

struct RunHooks {
  /// Extra log-weight applied on top of the pre-resampling weights for the
  /// `corrected` estimates of each step (MAPF inferential weights).
  std::function<double(std::size_t n, StateView x)> estimate_log_correction;
  /// Sees every weighted cloud before it is resampled.
  std::function<void(const ParticleCloud&)> on_weighted;
};

/// Step-by-step driver. Keeps both the weighted cloud {X_n, W_n} (needed by the
/// next marginal weights) and the resampled cloud {X~_n} (start of the next
/// mutation).
class SmcRunner {
 public:
  SmcRunner(const MarginalModel& model, EngineConfig cfg, std::vector<TestFunction> test_fns,
            probkit::SeededStream stream, WeightMode mode, RunHooks hooks = {});

  /// Mutate, weight, record, resample. Throws ConfigError past the horizon.
  StepRecord step();
  [[nodiscard]] bool done() const { return next_ > model_->horizon(); }
  [[nodiscard]] std::size_t next_step() const { return next_; }
  [[nodiscard]] const ParticleCloud& weighted() const { return weighted_; }
  [[nodiscard]] const Positions& resampled() const { return resampled_; }
  [[nodiscard]] std::span<const double> normalized_log_weights() const { return normalized_log_weights_; }

  /// Runs every remaining step.
  FilterTrace finish();

 private:
  const MarginalModel* model_;
  EngineConfig cfg_;
  std::vector<TestFunction> test_fns_;
  probkit::SeededStream stream_;
  WeightMode mode_;
  RunHooks hooks_;
  std::size_t next_ = 0;
  double cumulative_log_z_ = 0.0;
  ParticleCloud weighted_;
  std::vector<double> normalized_log_weights_;
  Positions resampled_;
  FilterTrace trace_;
};

FilterTrace run_msmc(const MarginalModel& model, const EngineConfig& cfg, std::span<const TestFunction> test_fns,
                     probkit::SeededStream stream, const RunHooks& hooks = {});

FilterTrace run_standard_smc(const MarginalModel& model, const EngineConfig& cfg,
                             std::span<const TestFunction> test_fns, probkit::SeededStream stream,
                             const RunHooks& hooks = {});

struct ConditionalExpectation {
  double mc_mean = 0.0;
  double mc_se = 0.0;
  double exact = 0.0;
  /// (mc_mean - exact) / mc_se; 0 when both sides agree exactly.
  [[nodiscard]] double z() const;
};

/// Monte Carlo vs quadrature for E[eta_n^N(G_n^N phi) | F_{n-1}] with the
/// weighted cloud `fixed_prev` frozen; the exact side is
/// sum_i W_i int k_n(X_i, x) U_n(X_i, x) phi(x) dx on `grid`. 1-D only.
ConditionalExpectation check_conditional_expectation(const ParticleCloud& fixed_prev, const MarginalModel& model,
                                                     std::size_t n, const TestFunction& phi, std::size_t replicates,
                                                     probkit::SeededStream stream, const probkit::Grid1D& grid,
                                                     const EngineConfig& cfg = {.particles = 1});

/// Substream tags.
inline constexpr std::uint64_t kMutateStream = 1;
inline constexpr std::uint64_t kResampleStream = 2;

}  // namespace msmc::engines

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msmc/probkit.hpp"

/// The abstract target sequence (kernels K_n, proposals M_n, potentials U_n)
/// and the particle data model both engines operate on.
namespace msmc::model {

using StateView = std::span<const double>;

/// N states of a fixed dimension, stored row-major.
class Positions {
 public:
  Positions() = default;
  Positions(std::size_t count, std::size_t dim) : dim_{dim}, data_(count * dim, 0.0) {}
  /// 1-D positions from plain values.
  static Positions from_values(std::vector<double> values);

  [[nodiscard]] std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] bool empty() const { return data_.empty(); }
  [[nodiscard]] StateView operator[](std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  [[nodiscard]] std::span<double> mut(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  /// Flat storage; for 1-D states this is the list of positions.
  [[nodiscard]] std::span<const double> flat() const { return data_; }
  [[nodiscard]] std::span<double> flat() { return data_; }
  /// Positions picked by index, in order.
  [[nodiscard]] Positions gather(std::span<const std::size_t> indices) const;

  friend bool operator==(const Positions&, const Positions&) = default;

 private:
  std::size_t dim_ = 1;
  std::vector<double> data_;
};

/// x | x' ~ N(slope * x' + intercept, sd^2) in one dimension.
struct AffineGaussian {
  double slope = 0.0;
  double intercept = 0.0;
  double sd = 1.0;
};

/// A Markov kernel given by a log-density (w.r.t. a dominating measure the
/// model author fixes) and a sampler. At time 0 the `prev` argument is ignored.
class DensityKernel {
 public:
  virtual ~DensityKernel() = default;

  [[nodiscard]] virtual double log_density(StateView prev, StateView x) const = 0;
  virtual void sample(probkit::SeededStream& stream, StateView prev, std::span<double> out) const = 0;

  /// out[j] = log_density(prev[j], x). Override for speed.
  virtual void log_density_from(const Positions& prev, StateView x, std::span<double> out) const;

  /// True when the density does not depend on `prev`.
  [[nodiscard]] virtual bool prev_free() const { return false; }
  /// Closed form used by the engine's fused mixture loop, when available.
  [[nodiscard]] virtual std::optional<AffineGaussian> affine_gaussian() const { return std::nullopt; }
  [[nodiscard]] virtual std::size_t dim() const { return 1; }
};

/// Nonnegative potential U(x', x), handled in log form.
///
/// A separable potential factors as log U(x', x) = log_current(x) + log_prev(x');
/// the engine then pulls the current factor out of the mixture sums.
class Potential {
 public:
  virtual ~Potential() = default;

  [[nodiscard]] virtual double log_value(StateView prev, StateView x) const = 0;
  [[nodiscard]] virtual bool prev_free() const { return false; }
  [[nodiscard]] virtual bool separable() const { return prev_free(); }
  [[nodiscard]] virtual double log_current(StateView x) const;
  [[nodiscard]] virtual double log_prev(StateView /*prev*/) const { return 0.0; }
  /// Declared sup of U (not log), if the model author knows one.
  [[nodiscard]] virtual std::optional<double> upper_bound() const { return std::nullopt; }
};

class ParticleCloud;

/// Replaces the generic mixture-ratio weight for models whose kernel densities
/// are not evaluable but whose ratio simplifies analytically (ABC).
class WeightRule {
 public:
  virtual ~WeightRule() = default;
  /// log G_n^N(x) against the weighted cloud `prev` (normalized log-weights).
  [[nodiscard]] virtual double log_weight(const Positions& prev, std::span<const double> prev_log_weights, StateView x,
                                          std::span<double> scratch) const = 0;
  /// log G_0(x).
  [[nodiscard]] virtual double log_weight_initial(StateView x) const = 0;
};

/// One time step: proposal M_n, kernel K_n, potential U_n.
struct StepSpec {
  std::shared_ptr<const DensityKernel> proposal;
  std::shared_ptr<const DensityKernel> kernel;
  std::shared_ptr<const Potential> potential;
  std::shared_ptr<const WeightRule> weight_rule;

  /// M_n and K_n are the same kernel object.
  [[nodiscard]] bool proposal_is_kernel() const { return proposal == kernel; }
};

/// Immutable bundle (M_n, K_n, U_n), n = 0..T, defining one target sequence.
class MarginalModel {
 public:
  MarginalModel(std::size_t dim, std::vector<StepSpec> steps, std::string name = {});

  [[nodiscard]] std::size_t horizon() const { return steps_.size() - 1; }
  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] const StepSpec& step(std::size_t n) const;
  [[nodiscard]] const std::string& name() const { return name_; }

 private:
  std::size_t dim_;
  std::vector<StepSpec> steps_;
  std::string name_;
};

/// Particles with log-weights at step n, plus the running log normalizing
/// constant sum_p [logsumexp(log G_p^N) - ln N].
class ParticleCloud {
 public:
  ParticleCloud() = default;
  ParticleCloud(Positions positions, std::vector<double> log_weights, std::size_t step = 0,
                double cumulative_log_z = 0.0);

  /// Equally weighted cloud.
  static ParticleCloud uniform(Positions positions, std::size_t step = 0, double cumulative_log_z = 0.0);

  [[nodiscard]] std::size_t size() const { return positions_.size(); }
  [[nodiscard]] const Positions& positions() const { return positions_; }
  [[nodiscard]] std::span<const double> log_weights() const { return log_weights_; }
  [[nodiscard]] std::size_t step() const { return step_; }
  [[nodiscard]] double cumulative_log_z() const { return cumulative_log_z_; }
  /// Normalized weights; throws ExtinctionError if every weight is zero.
  [[nodiscard]] probkit::NormalizedWeights normalized() const { return probkit::normalize_log_weights(log_weights_); }

 private:
  Positions positions_;
  std::vector<double> log_weights_;
  std::size_t step_ = 0;
  double cumulative_log_z_ = 0.0;
};

/// Named test function phi.
struct TestFunction {
  std::string name;
  std::function<double(StateView)> fn;
};

TestFunction phi_identity();
TestFunction phi_square();
TestFunction phi_constant(double c);
/// Logistic step of width `width` centered at `at`.
TestFunction phi_smoothed_indicator(double at, double width);

/// One record per step.
struct StepRecord {
  std::size_t step = 0;
  std::vector<double> pre;        ///< Psi_{G_n^N}(eta_n^N)(phi): weighted, before resampling
  std::vector<double> post;       ///< hat eta_n^N(phi): after resampling
  std::vector<double> corrected;  ///< pre-resampling estimates under an extra reweighting (MAPF)
  double ess = 0.0;
  double log_increment = 0.0;  ///< log eta_n^N(G_n^N)
  double cumulative_log_z = 0.0;
  double wall_seconds = 0.0;
};

struct FilterTrace {
  std::vector<std::string> names;
  std::vector<StepRecord> steps;

  [[nodiscard]] double log_z() const { return steps.empty() ? 0.0 : steps.back().cumulative_log_z; }
  /// Equality of every numeric field except wall time.
  [[nodiscard]] bool same_values(const FilterTrace& other) const;
};

/// sum_i W_i phi(X_i).
double weighted_estimate(const ParticleCloud& cloud, const std::function<double(StateView)>& phi);

struct ValidationCheck {
  std::string name;
  std::size_t step = 0;
  bool passed = true;
  double worst = 0.0;
  std::string detail;
};

struct ValidationReport {
  bool passed = true;
  std::vector<ValidationCheck> checks;
  [[nodiscard]] const ValidationCheck* first_failure() const;
};

/// Checks kernel normalization on the grid, that U * dK/dM is finite wherever
/// U * K has mass (grid and sampled points), that sampled weights are
/// positive, declared upper bounds on U, and the prev-free tags. 1-D only.
ValidationReport validate_model(const MarginalModel& model, const probkit::Grid1D& grid, std::uint64_t seed = 7);

// Ready-made kernels and potentials.

/// Affine-Gaussian kernel; prev-free when slope == 0.
class GaussianKernel final : public DensityKernel {
 public:
  explicit GaussianKernel(AffineGaussian form);
  GaussianKernel(double slope, double intercept, double sd) : GaussianKernel(AffineGaussian{slope, intercept, sd}) {}

  [[nodiscard]] double log_density(StateView prev, StateView x) const override;
  void sample(probkit::SeededStream& stream, StateView prev, std::span<double> out) const override;
  void log_density_from(const Positions& prev, StateView x, std::span<double> out) const override;
  [[nodiscard]] bool prev_free() const override { return form_.slope == 0.0; }
  [[nodiscard]] std::optional<AffineGaussian> affine_gaussian() const override { return form_; }
  [[nodiscard]] const AffineGaussian& form() const { return form_; }

 private:
  AffineGaussian form_;
  double log_norm_;
};

/// Kernel from user callables; never prev-free unless declared.
class FunctionKernel final : public DensityKernel {
 public:
  using LogDensityFn = std::function<double(StateView, StateView)>;
  using SamplerFn = std::function<void(probkit::SeededStream&, StateView, std::span<double>)>;

  FunctionKernel(LogDensityFn log_density, SamplerFn sampler, bool prev_free = false, std::size_t dim = 1)
      : log_density_{std::move(log_density)}, sampler_{std::move(sampler)}, prev_free_{prev_free}, dim_{dim} {}

  [[nodiscard]] double log_density(StateView prev, StateView x) const override { return log_density_(prev, x); }
  void sample(probkit::SeededStream& stream, StateView prev, std::span<double> out) const override {
    sampler_(stream, prev, out);
  }
  [[nodiscard]] bool prev_free() const override { return prev_free_; }
  [[nodiscard]] std::size_t dim() const override { return dim_; }

 private:
  LogDensityFn log_density_;
  SamplerFn sampler_;
  bool prev_free_;
  std::size_t dim_;
};

/// U == 1.
class UnitPotential final : public Potential {
 public:
  [[nodiscard]] double log_value(StateView, StateView) const override { return 0.0; }
  [[nodiscard]] bool prev_free() const override { return true; }
  [[nodiscard]] double log_current(StateView) const override { return 0.0; }
  [[nodiscard]] std::optional<double> upper_bound() const override { return 1.0; }
};

/// U(x', x) = u(x) from a callable.
class CurrentPotential final : public Potential {
 public:
  explicit CurrentPotential(std::function<double(StateView)> log_u, std::optional<double> bound = std::nullopt)
      : log_u_{std::move(log_u)}, bound_{bound} {}
  [[nodiscard]] double log_value(StateView, StateView x) const override { return log_u_(x); }
  [[nodiscard]] bool prev_free() const override { return true; }
  [[nodiscard]] double log_current(StateView x) const override { return log_u_(x); }
  [[nodiscard]] std::optional<double> upper_bound() const override { return bound_; }

 private:
  std::function<double(StateView)> log_u_;
  std::optional<double> bound_;
};

/// General U(x', x) from a callable.
class PairPotential final : public Potential {
 public:
  explicit PairPotential(std::function<double(StateView, StateView)> log_u, std::optional<double> bound = std::nullopt)
      : log_u_{std::move(log_u)}, bound_{bound} {}
  [[nodiscard]] double log_value(StateView prev, StateView x) const override { return log_u_(prev, x); }
  [[nodiscard]] std::optional<double> upper_bound() const override { return bound_; }

 private:
  std::function<double(StateView, StateView)> log_u_;
  std::optional<double> bound_;
};

}  // namespace msmc::model

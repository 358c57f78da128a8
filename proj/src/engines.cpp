#include "msmc/engines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "msmc/parallel.hpp"

namespace msmc::engines {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log sum_j exp(c_j + log kernel(X_j, x)) for fixed coefficients c_j.
class LogMixture {
 public:
  LogMixture() = default;
  LogMixture(const model::DensityKernel& kernel, const Positions& prev, std::vector<double> coeffs)
      : kernel_{&kernel}, prev_{&prev}, a_{std::move(coeffs)} {
    max_a_ = *std::max_element(a_.begin(), a_.end());
    if (!(max_a_ > -kInf)) {
      throw ExtinctionError("mixture has no component with positive weight");
    }
    for (double& v : a_) {
      v -= max_a_;
    }
    if (const auto g = kernel.affine_gaussian(); g && prev.dim() == 1) {
      gaussian_ = true;
      inv_sd_ = 1.0 / g->sd;
      log_norm_ = -std::log(g->sd) - 0.91893853320467274178;
      mu_.resize(prev.size());
      const auto p = prev.flat();
      for (std::size_t j = 0; j < p.size(); ++j) {
        mu_[j] = g->slope * p[j] + g->intercept;
      }
    }
  }

  double operator()(StateView x, std::span<double> scratch) const {
    if (gaussian_) {
      return max_a_ + log_norm_ + probkit::gaussian_mixture_log_sum(a_, mu_, x[0], inv_sd_, scratch);
    }
    kernel_->log_density_from(*prev_, x, scratch);
    return max_a_ + probkit::log_sum_exp_pairs(a_, scratch.first(a_.size()), scratch);
  }

  [[nodiscard]] bool full_support() const { return gaussian_; }

 private:
  const model::DensityKernel* kernel_ = nullptr;
  const Positions* prev_ = nullptr;
  std::vector<double> a_;
  double max_a_ = 0.0;
  bool gaussian_ = false;
  std::vector<double> mu_;
  double inv_sd_ = 1.0;
  double log_norm_ = 0.0;
};

// Evaluates log G_n^N(x) against a fixed weighted cloud.
class MarginalWeight {
 public:
  MarginalWeight(const model::StepSpec& step, const Positions& prev, std::span<const double> lw, std::size_t n)
      : step_{&step}, prev_{&prev}, lw_{lw}, n_{n} {
    if (step.weight_rule || prev.size() == 1) {
      return;
    }
    const auto& u = *step.potential;
    if (u.separable()) {
      std::vector<double> c(lw.begin(), lw.end());
      if (!u.prev_free()) {
        for (std::size_t j = 0; j < c.size(); ++j) {
          c[j] += u.log_prev(prev[j]);
        }
      }
      numerator_ = LogMixture(*step.kernel, prev, std::move(c));
    }
    if (step.proposal->prev_free()) {
      denominator_ = Denominator::prev_free;
    } else if (step.proposal_is_kernel() && u.prev_free()) {
      denominator_ = Denominator::same_as_numerator;
    } else {
      denominator_ = Denominator::mixture;
      proposal_mix_ = LogMixture(*step.proposal, prev, std::vector<double>(lw.begin(), lw.end()));
    }
  }

  double operator()(StateView x, std::span<double> s1, std::span<double> s2) const {
    const auto& step = *step_;
    const auto& prev = *prev_;
    if (step.weight_rule) {
      return step.weight_rule->log_weight(prev, lw_, x, s1);
    }
    if (prev.size() == 1) {
      return ancestor_log_weight(step, prev[0], x);
    }
    const auto& u = *step.potential;
    if (!u.separable()) {
      step.kernel->log_density_from(prev, x, s1);
      for (std::size_t j = 0; j < prev.size(); ++j) {
        s1[j] += lw_[j] + u.log_value(prev[j], x);
      }
      const double num = probkit::fast_log_sum_exp(s1.first(prev.size()));
      return num - denominator(x, s2);
    }
    const double cur = u.log_current(x);
    if (denominator_ == Denominator::same_as_numerator) {
      if (numerator_.full_support()) {
        return cur + 0.0;
      }
      const double l = numerator_(x, s1);
      check_denominator(l);
      return cur + (l - l);
    }
    const double num = numerator_(x, s1);
    return cur + (num - denominator(x, s2));
  }

 private:
  enum class Denominator { prev_free, same_as_numerator, mixture };

  double denominator(StateView x, std::span<double> scratch) const {
    double d = 0.0;
    switch (denominator_) {
      case Denominator::prev_free:
        d = step_->proposal->log_density((*prev_)[0], x);
        break;
      case Denominator::same_as_numerator:
      case Denominator::mixture:
        d = proposal_mix_(x, scratch);
        break;
    }
    check_denominator(d);
    return d;
  }

  void check_denominator(double d) const {
    if (!(d > -kInf)) {
      throw ExtinctionError(fmt::format("proposal mixture density vanished at step {}", n_));
    }
  }

  const model::StepSpec* step_;
  const Positions* prev_;
  std::span<const double> lw_;
  std::size_t n_;
  LogMixture numerator_;
  LogMixture proposal_mix_;
  Denominator denominator_ = Denominator::mixture;
};

std::vector<double> initial_log_weights(const model::StepSpec& step, const Positions& x, const EngineConfig& cfg) {
  std::vector<double> out(x.size());
  const std::vector<double> dummy(x.dim(), 0.0);
  probkit::parallel_chunks(x.size(), cfg.chunk_size, cfg.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      out[i] = step.weight_rule ? step.weight_rule->log_weight_initial(x[i]) : ancestor_log_weight(step, dummy, x[i]);
    }
  });
  return out;
}

std::vector<double> marginal_log_weights(const model::StepSpec& step, const Positions& prev,
                                         std::span<const double> lw, const Positions& x, std::size_t n,
                                         const EngineConfig& cfg) {
  const MarginalWeight weight(step, prev, lw, n);
  std::vector<double> out(x.size());
  probkit::parallel_chunks(x.size(), cfg.chunk_size, cfg.threads, [&](std::size_t b, std::size_t e) {
    std::vector<double> s1(prev.size());
    std::vector<double> s2(prev.size());
    for (std::size_t i = b; i < e; ++i) {
      out[i] = weight(x[i], s1, s2);
    }
  });
  return out;
}

}  // namespace

void EngineConfig::validate() const {
  if (particles == 0) {
    throw ConfigError("particle count N must be at least 1");
  }
  if (chunk_size == 0) {
    throw ConfigError("chunk_size must be at least 1");
  }
  if (!resample_every_step) {
    throw ConfigError("only the resample-every-step schedule is supported");
  }
}

ResampleOutcome multinomial_draw(std::span<const double> weights, std::size_t count, probkit::SeededStream stream) {
  if (weights.empty()) {
    throw ConfigError("multinomial_draw: empty weight vector");
  }
  double total = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (!(weights[j] >= 0.0) || !std::isfinite(weights[j])) {
      throw ConfigError("multinomial_draw: weights must be finite and nonnegative");
    }
    total += weights[j];
    if (weights[j] > 0.0) {
      last_positive = j;
    }
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError(fmt::format("multinomial_draw: weights sum to {}, not 1", total));
  }
  // Sorted uniforms from normalized exponential spacings, then one merge pass
  // against the cumulative weights.
  std::vector<double> spacing(count + 1);
  double acc = 0.0;
  for (double& s : spacing) {
    acc += stream.exponential();
    s = acc;
  }
  ResampleOutcome out;
  out.ancestors.resize(count);
  std::size_t j = 0;
  double cum = weights[0];
  for (std::size_t k = 0; k < count; ++k) {
    const double u = spacing[k] / acc;
    while (u > cum && j < last_positive) {
      ++j;
      cum += weights[j];
    }
    out.ancestors[k] = j;
  }
  return out;
}

ResampleOutcome multinomial_resample(std::span<const double> weights, probkit::SeededStream stream) {
  return multinomial_draw(weights, weights.size(), stream);
}

double ancestor_log_weight(const model::StepSpec& step, StateView ancestor, StateView x) {
  if (step.weight_rule) {
    throw ConfigError("per-ancestor weights need evaluable kernel densities");
  }
  const auto& u = *step.potential;
  const double lk = step.kernel->log_density(ancestor, x);
  const double lm = step.proposal->log_density(ancestor, x);
  if (u.prev_free()) {
    return u.log_current(x) + (lk - lm);
  }
  if (u.separable()) {
    return u.log_current(x) + ((u.log_prev(ancestor) + lk) - lm);
  }
  return (u.log_value(ancestor, x) + lk) - lm;
}

std::vector<double> compute_marginal_log_weights(const ParticleCloud& prev, const Positions& x,
                                                 const MarginalModel& model, std::size_t n, const EngineConfig& cfg) {
  const auto& step = model.step(n);
  if (n == 0) {
    return initial_log_weights(step, x, cfg);
  }
  const auto w = prev.normalized();
  return marginal_log_weights(step, prev.positions(), w.log_weights, x, n, cfg);
}

SmcRunner::SmcRunner(const MarginalModel& model, EngineConfig cfg, std::vector<TestFunction> test_fns,
                     probkit::SeededStream stream, WeightMode mode, RunHooks hooks)
    : model_{&model},
      cfg_{cfg},
      test_fns_{std::move(test_fns)},
      stream_{stream},
      mode_{mode},
      hooks_{std::move(hooks)} {
  cfg_.validate();
  for (const auto& f : test_fns_) {
    trace_.names.push_back(f.name);
  }
}

StepRecord SmcRunner::step() {
  if (done()) {
    throw ConfigError(fmt::format("step {} is past the model horizon {}", next_, model_->horizon()));
  }
  const auto started = std::chrono::steady_clock::now();
  const std::size_t n = next_;
  const std::size_t count = cfg_.particles;
  const auto& spec = model_->step(n);

  Positions x(count, model_->dim());
  const std::vector<double> dummy(model_->dim(), 0.0);
  probkit::parallel_chunks(count, cfg_.chunk_size, cfg_.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto s = stream_.split(kMutateStream, n, i);
      spec.proposal->sample(s, n == 0 ? StateView{dummy} : resampled_[i], x.mut(i));
    }
  });

  std::vector<double> log_w;
  if (n == 0) {
    log_w = initial_log_weights(spec, x, cfg_);
  } else if (mode_ == WeightMode::marginal) {
    log_w = marginal_log_weights(spec, weighted_.positions(), normalized_log_weights_, x, n, cfg_);
  } else {
    log_w.resize(count);
    probkit::parallel_chunks(count, cfg_.chunk_size, cfg_.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        log_w[i] = ancestor_log_weight(spec, resampled_[i], x[i]);
      }
    });
  }

  auto norm = probkit::normalize_log_weights(log_w);
  cumulative_log_z_ += norm.log_mean;

  StepRecord rec;
  rec.step = n;
  rec.log_increment = norm.log_mean;
  rec.cumulative_log_z = cumulative_log_z_;
  rec.ess = probkit::ess(norm.weights);
  for (const auto& f : test_fns_) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      s += norm.weights[i] * f.fn(x[i]);
    }
    rec.pre.push_back(s);
  }
  if (hooks_.estimate_log_correction) {
    std::vector<double> corrected(count);
    for (std::size_t i = 0; i < count; ++i) {
      corrected[i] = norm.log_weights[i] + hooks_.estimate_log_correction(n, x[i]);
    }
    const auto cw = probkit::normalize_log_weights(corrected);
    for (const auto& f : test_fns_) {
      double s = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        s += cw.weights[i] * f.fn(x[i]);
      }
      rec.corrected.push_back(s);
    }
  }

  weighted_ = ParticleCloud(std::move(x), std::move(log_w), n, cumulative_log_z_);
  if (hooks_.on_weighted) {
    hooks_.on_weighted(weighted_);
  }
  const auto outcome = multinomial_resample(norm.weights, stream_.split(kResampleStream, n));
  resampled_ = weighted_.positions().gather(outcome.ancestors);
  normalized_log_weights_ = std::move(norm.log_weights);

  if (cfg_.record_pre_and_post) {
    for (const auto& f : test_fns_) {
      double s = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        s += f.fn(resampled_[i]);
      }
      rec.post.push_back(s / static_cast<double>(count));
    }
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  ++next_;
  trace_.steps.push_back(rec);
  return rec;
}

FilterTrace SmcRunner::finish() {
  while (!done()) {
    step();
  }
  return trace_;
}

FilterTrace run_msmc(const MarginalModel& model, const EngineConfig& cfg, std::span<const TestFunction> test_fns,
                     probkit::SeededStream stream, const RunHooks& hooks) {
  SmcRunner runner(model, cfg, {test_fns.begin(), test_fns.end()}, stream, WeightMode::marginal, hooks);
  return runner.finish();
}

FilterTrace run_standard_smc(const MarginalModel& model, const EngineConfig& cfg,
                             std::span<const TestFunction> test_fns, probkit::SeededStream stream,
                             const RunHooks& hooks) {
  SmcRunner runner(model, cfg, {test_fns.begin(), test_fns.end()}, stream, WeightMode::ancestor, hooks);
  return runner.finish();
}

double ConditionalExpectation::z() const {
  const double d = mc_mean - exact;
  if (d == 0.0) {
    return 0.0;
  }
  return mc_se > 0.0 ? d / mc_se : std::copysign(kInf, d);
}

ConditionalExpectation check_conditional_expectation(const ParticleCloud& fixed_prev, const MarginalModel& model,
                                                     std::size_t n, const TestFunction& phi, std::size_t replicates,
                                                     probkit::SeededStream stream, const probkit::Grid1D& grid,
                                                     const EngineConfig& cfg) {
  if (grid.size() == 0) {
    throw ConfigError("check_conditional_expectation needs a quadrature grid");
  }
  if (model.dim() != 1) {
    throw ConfigError("check_conditional_expectation needs a 1-D model");
  }
  if (n == 0) {
    throw ConfigError("check_conditional_expectation needs n >= 1");
  }
  if (replicates < 2) {
    throw ConfigError("check_conditional_expectation needs at least two replicates");
  }
  const auto& spec = model.step(n);
  const auto& prev = fixed_prev.positions();
  const auto w = fixed_prev.normalized();
  const std::size_t count = prev.size();

  std::vector<double> values(replicates);
  const EngineConfig inner{.particles = count, .chunk_size = cfg.chunk_size, .threads = 1};
  probkit::parallel_chunks(replicates, 1, cfg.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t m = b; m < e; ++m) {
      const auto anc = multinomial_resample(w.weights, stream.split(m, kResampleStream));
      Positions x(count, 1);
      for (std::size_t i = 0; i < count; ++i) {
        auto s = stream.split(m, kMutateStream, i);
        spec.proposal->sample(s, prev[anc.ancestors[i]], x.mut(i));
      }
      const auto lg = marginal_log_weights(spec, prev, w.log_weights, x, n, inner);
      double acc = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        acc += std::exp(lg[i]) * phi.fn(x[i]);
      }
      values[m] = acc / static_cast<double>(count);
    }
  });

  ConditionalExpectation out;
  const auto r = static_cast<double>(replicates);
  for (const double v : values) {
    out.mc_mean += v;
  }
  out.mc_mean /= r;
  double ss = 0.0;
  for (const double v : values) {
    ss += (v - out.mc_mean) * (v - out.mc_mean);
  }
  out.mc_se = std::sqrt(ss / (r - 1.0) / r);

  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < count; ++i) {
    if (w.weights[i] == 0.0) {
      continue;
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double xg = grid.point(g);
      const StateView xv{&xg, 1};
      f[g] = std::exp(spec.kernel->log_density(prev[i], xv) + spec.potential->log_value(prev[i], xv)) * phi.fn(xv);
    }
    out.exact += w.weights[i] * probkit::trapezoid_integrate(f, grid);
  }
  return out;
}

}  // namespace msmc::engines

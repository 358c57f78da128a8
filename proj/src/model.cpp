#include "msmc/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

namespace msmc::model {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHalfLog2Pi = 0.91893853320467274178;

}  // namespace

Positions Positions::from_values(std::vector<double> values) {
  Positions p;
  p.dim_ = 1;
  p.data_ = std::move(values);
  return p;
}

Positions Positions::gather(std::span<const std::size_t> indices) const {
  Positions out(indices.size(), dim_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = (*this)[indices[i]];
    std::copy(src.begin(), src.end(), out.mut(i).begin());
  }
  return out;
}

void DensityKernel::log_density_from(const Positions& prev, StateView x, std::span<double> out) const {
  for (std::size_t j = 0; j < prev.size(); ++j) {
    out[j] = log_density(prev[j], x);
  }
}

double Potential::log_current(StateView x) const {
  if (!prev_free()) {
    throw ConfigError("Potential::log_current called on a potential that is not separable");
  }
  return log_value({}, x);
}

MarginalModel::MarginalModel(std::size_t dim, std::vector<StepSpec> steps, std::string name)
    : dim_{dim}, steps_{std::move(steps)}, name_{std::move(name)} {
  if (steps_.empty()) {
    throw ConfigError("MarginalModel needs at least the time-0 step");
  }
  if (dim_ == 0) {
    throw ConfigError("MarginalModel state dimension must be positive");
  }
  for (std::size_t n = 0; n < steps_.size(); ++n) {
    const auto& s = steps_[n];
    if (!s.proposal || !s.kernel || !s.potential) {
      throw ConfigError(fmt::format("MarginalModel step {} is missing M, K or U", n));
    }
  }
}

const StepSpec& MarginalModel::step(std::size_t n) const {
  if (n >= steps_.size()) {
    throw ConfigError(fmt::format("step {} beyond horizon {}", n, horizon()));
  }
  return steps_[n];
}

ParticleCloud::ParticleCloud(Positions positions, std::vector<double> log_weights, std::size_t step,
                             double cumulative_log_z)
    : positions_{std::move(positions)},
      log_weights_{std::move(log_weights)},
      step_{step},
      cumulative_log_z_{cumulative_log_z} {
  if (positions_.size() != log_weights_.size() || positions_.size() == 0) {
    throw ConfigError("ParticleCloud needs N >= 1 positions and as many log-weights");
  }
}

ParticleCloud ParticleCloud::uniform(Positions positions, std::size_t step, double cumulative_log_z) {
  const std::size_t n = positions.size();
  return {std::move(positions), std::vector<double>(n, 0.0), step, cumulative_log_z};
}

TestFunction phi_identity() {
  return {"identity", [](StateView x) { return x[0]; }};
}

TestFunction phi_square() {
  return {"square", [](StateView x) { return x[0] * x[0]; }};
}

TestFunction phi_constant(double c) {
  return {c == 1.0 ? std::string{"one"} : fmt::format("const_{}", c), [c](StateView) { return c; }};
}

TestFunction phi_smoothed_indicator(double at, double width) {
  return {"smoothed_indicator", [at, width](StateView x) { return 1.0 / (1.0 + std::exp(-(x[0] - at) / width)); }};
}

bool FilterTrace::same_values(const FilterTrace& other) const {
  if (names != other.names || steps.size() != other.steps.size()) {
    return false;
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& a = steps[i];
    const auto& b = other.steps[i];
    if (a.step != b.step || a.pre != b.pre || a.post != b.post || a.corrected != b.corrected || a.ess != b.ess ||
        a.log_increment != b.log_increment || a.cumulative_log_z != b.cumulative_log_z) {
      return false;
    }
  }
  return true;
}

double weighted_estimate(const ParticleCloud& cloud, const std::function<double(StateView)>& phi) {
  const auto w = cloud.normalized();
  double s = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    s += w.weights[i] * phi(cloud.positions()[i]);
  }
  return s;
}

const ValidationCheck* ValidationReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.passed) {
      return &c;
    }
  }
  return nullptr;
}

namespace {

// Previous-state probes in the central part of the grid.
std::vector<double> probe_points(const probkit::Grid1D& grid, std::size_t n) {
  if (n == 0) {
    return {0.5 * (grid.lo() + grid.hi())};
  }
  std::vector<double> out;
  for (const double q : {0.4, 0.45, 0.5, 0.55, 0.6}) {
    out.push_back(grid.lo() + q * (grid.hi() - grid.lo()));
  }
  return out;
}

double worst_normalization_error(const DensityKernel& k, const probkit::Grid1D& grid, std::span<const double> probes) {
  double worst = 0.0;
  std::vector<double> vals(grid.size());
  for (const double p : probes) {
    const StateView prev{&p, 1};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double x = grid.point(i);
      vals[i] = std::exp(k.log_density(prev, StateView{&x, 1}));
    }
    const double err = std::abs(probkit::trapezoid_integrate(vals, grid) - 1.0);
    worst = std::max(worst, std::isnan(err) ? kInf : err);
  }
  return worst;
}

}  // namespace

ValidationReport validate_model(const MarginalModel& model, const probkit::Grid1D& grid, std::uint64_t seed) {
  ValidationReport report;
  const auto add = [&report](ValidationCheck c) {
    report.passed = report.passed && c.passed;
    report.checks.push_back(std::move(c));
  };
  if (model.dim() != 1) {
    add({"dimension", 0, false, static_cast<double>(model.dim()), "validation needs a 1-D state space"});
    return report;
  }
  constexpr double kNormTol = 1e-6;
  constexpr std::size_t kSamplesPerProbe = 200;
  const probkit::SeededStream root(seed, 0);

  for (std::size_t n = 0; n <= model.horizon(); ++n) {
    const auto& s = model.step(n);
    const auto probes = probe_points(grid, n);

    const double k_err = worst_normalization_error(*s.kernel, grid, probes);
    add({"kernel_normalization", n, k_err <= kNormTol, k_err, "max |integral of K_n(x', .) - 1| over probes"});
    if (!s.proposal_is_kernel()) {
      const double m_err = worst_normalization_error(*s.proposal, grid, probes);
      add({"proposal_normalization", n, m_err <= kNormTol, m_err, "max |integral of M_n(x', .) - 1| over probes"});
    }

    // U * dK/dM must be finite wherever U * K has mass.
    double worst_ratio = -kInf;
    std::size_t unbounded = 0;
    double max_u = 0.0;
    for (const double p : probes) {
      const StateView prev{&p, 1};
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.point(i);
        const StateView xv{&x, 1};
        const double lu = s.potential->log_value(prev, xv);
        const double lk = s.kernel->log_density(prev, xv);
        max_u = std::max(max_u, std::exp(lu));
        if (lu + lk == -kInf) {
          continue;
        }
        const double r = lu + lk - s.proposal->log_density(prev, xv);
        if (!std::isfinite(r)) {
          ++unbounded;
        } else {
          worst_ratio = std::max(worst_ratio, r);
        }
      }
    }
    add({"weight_bounded", n, unbounded == 0, unbounded == 0 ? worst_ratio : kInf,
         unbounded == 0 ? "max log(U dK/dM) on grid"
                        : fmt::format("{} grid points where U K > 0 but M has no density", unbounded)});

    if (const auto bound = s.potential->upper_bound()) {
      add({"potential_bound", n, max_u <= *bound * (1.0 + 1e-12), max_u, fmt::format("declared bound {}", *bound)});
    }

    // Positivity of U dK/dM at points the proposal actually produces.
    std::size_t zero_weights = 0;
    double min_log_weight = kInf;
    for (std::size_t pi = 0; pi < probes.size(); ++pi) {
      const StateView prev{&probes[pi], 1};
      for (std::size_t k = 0; k < kSamplesPerProbe; ++k) {
        auto stream = root.split(n, pi, k);
        double x = 0.0;
        s.proposal->sample(stream, prev, std::span<double>{&x, 1});
        const StateView xv{&x, 1};
        const double lw =
            s.potential->log_value(prev, xv) + s.kernel->log_density(prev, xv) - s.proposal->log_density(prev, xv);
        if (!(lw > -kInf)) {
          ++zero_weights;
        } else {
          min_log_weight = std::min(min_log_weight, lw);
        }
      }
    }
    add({"weight_positive", n, zero_weights == 0, zero_weights == 0 ? min_log_weight : -kInf,
         zero_weights == 0 ? "min log(U dK/dM) over proposal samples"
                           : fmt::format("{} proposal samples with zero weight", zero_weights)});

    // Spot-check the structure tags.
    if (n > 0) {
      double drift = 0.0;
      auto stream = root.split(n, 1000);
      const double span = grid.hi() - grid.lo();
      for (int t = 0; t < 25; ++t) {
        const double x = grid.lo() + 0.25 * span + 0.5 * span * stream.uniform();
        const double p1 = grid.lo() + 0.25 * span + 0.5 * span * stream.uniform();
        const double p2 = grid.lo() + 0.25 * span + 0.5 * span * stream.uniform();
        const StateView xv{&x, 1};
        const StateView a{&p1, 1};
        const StateView b{&p2, 1};
        const auto diff = [](double u, double v) { return std::abs(u - v) / (1.0 + std::abs(u)); };
        if (s.potential->prev_free()) {
          drift = std::max(drift, diff(s.potential->log_value(a, xv), s.potential->log_value(b, xv)));
        }
        if (s.potential->separable()) {
          drift = std::max(drift, diff(s.potential->log_value(a, xv),
                                       s.potential->log_current(xv) + s.potential->log_prev(a)));
        }
        if (s.proposal->prev_free()) {
          drift = std::max(drift, diff(s.proposal->log_density(a, xv), s.proposal->log_density(b, xv)));
        }
        if (s.kernel->prev_free()) {
          drift = std::max(drift, diff(s.kernel->log_density(a, xv), s.kernel->log_density(b, xv)));
        }
      }
      add({"structure_tags", n, drift <= 1e-12, drift, "max relative change of tagged prev-free log values"});
    }
  }
  return report;
}

GaussianKernel::GaussianKernel(AffineGaussian form) : form_{form}, log_norm_{0.0} {
  if (!(form_.sd > 0.0) || !std::isfinite(form_.sd)) {
    throw ConfigError("GaussianKernel needs a positive finite standard deviation");
  }
  log_norm_ = -std::log(form_.sd) - kHalfLog2Pi;
}

double GaussianKernel::log_density(StateView prev, StateView x) const {
  const double mean = form_.slope == 0.0 ? form_.intercept : form_.slope * prev[0] + form_.intercept;
  const double z = (x[0] - mean) / form_.sd;
  return -0.5 * z * z + log_norm_;
}

void GaussianKernel::sample(probkit::SeededStream& stream, StateView prev, std::span<double> out) const {
  const double mean = form_.slope == 0.0 ? form_.intercept : form_.slope * prev[0] + form_.intercept;
  out[0] = mean + form_.sd * stream.normal();
}

void GaussianKernel::log_density_from(const Positions& prev, StateView x, std::span<double> out) const {
  const auto p = prev.flat();
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double z = (x[0] - (form_.slope * p[j] + form_.intercept)) / form_.sd;
    out[j] = -0.5 * z * z + log_norm_;
  }
}

}  // namespace msmc::model

#include "msmc/zoo.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "msmc/oracle.hpp"

namespace msmc::zoo {

namespace {

using model::GaussianKernel;
using model::Potential;

class ObservationPotential final : public Potential {
 public:
  ObservationPotential(const LinearGaussianSSM& ssm, std::size_t n)
      : y_{ssm.obs(n)}, c_{ssm.c}, sd_{ssm.sigma_y} {}
  [[nodiscard]] double log_value(StateView, StateView x) const override { return log_current(x); }
  [[nodiscard]] bool prev_free() const override { return true; }
  [[nodiscard]] double log_current(StateView x) const override { return probkit::normal_log_pdf(y_, c_ * x[0], sd_); }
  [[nodiscard]] std::optional<double> upper_bound() const override {
    return 1.0 / (sd_ * std::sqrt(2.0 * std::numbers::pi));
  }

 private:
  double y_;
  double c_;
  double sd_;
};

// g(y_n | x) p~(y_{n+1} | x) / p~(y_n | x'), with the g factor absent at n = 0
// and p~(y_{T+1} | .) == 1.
class AuxPotential final : public Potential {
 public:
  AuxPotential(const LinearGaussianSSM& ssm, std::size_t n, AuxApprox aux) : ssm_{ssm}, n_{n}, aux_{std::move(aux)} {}

  [[nodiscard]] double log_value(StateView prev, StateView x) const override {
    return log_current(x) + log_prev(prev);
  }
  [[nodiscard]] bool prev_free() const override { return n_ == 0; }
  [[nodiscard]] bool separable() const override { return true; }
  [[nodiscard]] double log_current(StateView x) const override {
    const double g = n_ == 0 ? 0.0 : log_observation(ssm_, n_, x[0]);
    const double ahead = n_ < ssm_.horizon() ? aux_.log_p_tilde(ssm_, n_, x[0]) : 0.0;
    return g + ahead;
  }
  [[nodiscard]] double log_prev(StateView prev) const override {
    return n_ == 0 ? 0.0 : -aux_.log_p_tilde(ssm_, n_ - 1, prev[0]);
  }

 private:
  LinearGaussianSSM ssm_;
  std::size_t n_;
  AuxApprox aux_;
};

std::shared_ptr<GaussianKernel> locally_optimal(const LinearGaussianSSM& ssm, std::size_t n) {
  const double qx = ssm.sigma_x * ssm.sigma_x;
  const double ry = ssm.sigma_y * ssm.sigma_y;
  const double p = 1.0 / (1.0 / qx + ssm.c * ssm.c / ry);
  return std::make_shared<GaussianKernel>(p * ssm.a / qx, p * ssm.c * ssm.obs(n) / ry, std::sqrt(p));
}

class AbcJointKernel final : public DensityKernel {
 public:
  AbcJointKernel(KernelPtr theta_kernel, std::function<double(probkit::SeededStream&, double)> simulator,
                 bool prev_free)
      : theta_{std::move(theta_kernel)}, simulator_{std::move(simulator)}, prev_free_{prev_free} {}

  [[nodiscard]] double log_density(StateView, StateView) const override {
    throw IntractableDensityError("the ABC simulator has no evaluable density");
  }
  void sample(probkit::SeededStream& stream, StateView prev, std::span<double> out) const override {
    double theta = 0.0;
    theta_->sample(stream, prev.empty() ? prev : prev.first(1), std::span<double>{&theta, 1});
    out[0] = theta;
    out[1] = simulator_(stream, theta);
  }
  [[nodiscard]] bool prev_free() const override { return prev_free_; }
  [[nodiscard]] std::size_t dim() const override { return 2; }

 private:
  KernelPtr theta_;
  std::function<double(probkit::SeededStream&, double)> simulator_;
  bool prev_free_;
};

class AbcPotential final : public Potential {
 public:
  AbcPotential(const AbcProblem& p, double eps) : kernel_{p.log_distance_kernel}, y_obs_{p.y_obs}, eps_{eps} {}
  [[nodiscard]] double log_value(StateView, StateView x) const override { return log_current(x); }
  [[nodiscard]] bool prev_free() const override { return true; }
  [[nodiscard]] double log_current(StateView x) const override { return kernel_(y_obs_, x[1], eps_); }

 private:
  std::function<double(double, double, double)> kernel_;
  double y_obs_;
  double eps_;
};

// log pi_eps(y_obs | y) + log p(theta) - log sum_i W_i q(theta | theta_i): the
// simulator density cancels between numerator and denominator.
class AbcWeight final : public model::WeightRule {
 public:
  AbcWeight(std::shared_ptr<const AbcPotential> u, KernelPtr prior, KernelPtr q)
      : u_{std::move(u)}, prior_{std::move(prior)}, q_{std::move(q)} {}

  [[nodiscard]] double log_weight(const model::Positions& prev, std::span<const double> lw, StateView x,
                                  std::span<double> scratch) const override {
    const double lu = u_->log_current(x);
    if (q_ == prior_) {
      return lu;
    }
    const StateView theta = x.first(1);
    if (q_->prev_free()) {
      return lu + (prior_->log_density(theta, theta) - q_->log_density(theta, theta));
    }
    for (std::size_t j = 0; j < prev.size(); ++j) {
      scratch[j] = lw[j] + q_->log_density(prev[j].first(1), theta);
    }
    const double den = probkit::fast_log_sum_exp(scratch.first(prev.size()));
    if (!(den > -std::numeric_limits<double>::infinity())) {
      throw ExtinctionError("ABC proposal mixture vanished");
    }
    return lu + (prior_->log_density(theta, theta) - den);
  }

  [[nodiscard]] double log_weight_initial(StateView x) const override { return u_->log_current(x); }

 private:
  std::shared_ptr<const AbcPotential> u_;
  KernelPtr prior_;
  KernelPtr q_;
};

}  // namespace

KernelPtr transition_kernel(const LinearGaussianSSM& ssm, std::size_t n) {
  if (n == 0) {
    return std::make_shared<GaussianKernel>(0.0, ssm.m0, ssm.s0);
  }
  return std::make_shared<GaussianKernel>(ssm.a, 0.0, ssm.sigma_x);
}

double log_observation(const LinearGaussianSSM& ssm, std::size_t n, double x) {
  return probkit::normal_log_pdf(ssm.obs(n), ssm.c * x, ssm.sigma_y);
}

Proposal bootstrap_proposal() {
  return {"bootstrap", [](const LinearGaussianSSM&, std::size_t, const KernelPtr& f) { return f; }};
}

Proposal locally_optimal_proposal() {
  return {"locally_optimal", [](const LinearGaussianSSM& ssm, std::size_t n, const KernelPtr& f) -> KernelPtr {
            if (n == 0) {
              return f;
            }
            return locally_optimal(ssm, n);
          }};
}

Proposal affine_proposal(double alpha, double beta, double sd) {
  return {fmt::format("affine({},{},{})", alpha, beta, sd),
          [alpha, beta, sd](const LinearGaussianSSM&, std::size_t n, const KernelPtr& f) -> KernelPtr {
            if (n == 0) {
              return f;
            }
            return std::make_shared<GaussianKernel>(alpha, beta, sd);
          }};
}

Proposal observation_proposal() {
  return {"observation", [](const LinearGaussianSSM& ssm, std::size_t n, const KernelPtr& f) -> KernelPtr {
            if (n == 0) {
              return f;
            }
            const auto kt = oracle::kalman_filter(ssm.truncated(n));
            const auto& s = kt.steps[n];
            return std::make_shared<GaussianKernel>(0.0, s.filt_mean, std::sqrt(s.pred_var));
          }};
}

MarginalModel make_mpf(const LinearGaussianSSM& ssm, const Proposal& q) {
  ssm.validate();
  std::vector<model::StepSpec> steps;
  const KernelPtr f0 = transition_kernel(ssm, 0);
  steps.push_back({q.at(ssm, 0, f0), f0, std::make_shared<model::UnitPotential>(), nullptr});
  const KernelPtr f = transition_kernel(ssm, 1);
  for (std::size_t n = 1; n <= ssm.horizon(); ++n) {
    steps.push_back({q.at(ssm, n, f), f, std::make_shared<ObservationPotential>(ssm, n), nullptr});
  }
  return MarginalModel(1, std::move(steps), "mpf/" + q.name);
}

MarginalModel make_bpf(const LinearGaussianSSM& ssm) { return make_mpf(ssm, bootstrap_proposal()); }

MarginalModel make_ipf(const LinearGaussianSSM& ssm, const Proposal& q) {
  auto m = make_mpf(ssm, q);
  for (std::size_t n = 1; n <= m.horizon(); ++n) {
    if (!m.step(n).proposal->prev_free()) {
      throw ConfigError(fmt::format("IPF proposal at step {} depends on the previous state", n));
    }
  }
  return m;
}

AuxApprox aux_unit() {
  return {"unit", [](const LinearGaussianSSM&, std::size_t, double) { return 0.0; }, true};
}

AuxApprox aux_exact() { return aux_inflated(1.0); }

AuxApprox aux_inflated(double inflation) {
  if (!(inflation > 0.0)) {
    throw ConfigError("aux_inflated needs a positive inflation factor");
  }
  return {inflation == 1.0 ? std::string{"exact"} : fmt::format("inflated({})", inflation),
          [inflation](const LinearGaussianSSM& ssm, std::size_t n, double x) {
            const double v = inflation * (ssm.c * ssm.c * ssm.sigma_x * ssm.sigma_x + ssm.sigma_y * ssm.sigma_y);
            return probkit::normal_log_pdf(ssm.obs(n + 1), ssm.c * ssm.a * x, std::sqrt(v));
          },
          false};
}

MapfModel make_mapf(const LinearGaussianSSM& ssm, const Proposal& q, const AuxApprox& aux) {
  ssm.validate();
  std::vector<model::StepSpec> steps;
  const KernelPtr f0 = transition_kernel(ssm, 0);
  steps.push_back({q.at(ssm, 0, f0), f0, std::make_shared<AuxPotential>(ssm, 0, aux), nullptr});
  const KernelPtr f = transition_kernel(ssm, 1);
  for (std::size_t n = 1; n <= ssm.horizon(); ++n) {
    steps.push_back({q.at(ssm, n, f), f, std::make_shared<AuxPotential>(ssm, n, aux), nullptr});
  }
  auto correction = [ssm, aux](std::size_t n, StateView x) {
    return n < ssm.horizon() ? -aux.log_p_tilde(ssm, n, x[0]) : 0.0;
  };
  return {MarginalModel(1, std::move(steps), "mapf/" + q.name + "/" + aux.name), std::move(correction)};
}

void AbcProblem::validate() const {
  if (!prior || !simulator || !log_distance_kernel || !proposal) {
    throw ConfigError("AbcProblem is missing a component");
  }
  if (!prior->prev_free()) {
    throw ConfigError("ABC prior must not depend on the previous state");
  }
  if (epsilons.empty()) {
    throw ConfigError("ABC epsilon schedule is empty");
  }
  for (std::size_t n = 1; n < epsilons.size(); ++n) {
    if (!(epsilons[n] < epsilons[n - 1])) {
      throw ConfigError("ABC epsilon schedule must be strictly decreasing");
    }
  }
  if (!(epsilons.back() >= 0.0)) {
    throw ConfigError("ABC epsilons must be nonnegative");
  }
}

AbcProblem gaussian_toy_abc(double y_obs, std::size_t steps, double rw_sd) {
  AbcProblem p;
  p.prior = std::make_shared<GaussianKernel>(0.0, 0.0, 1.0);
  p.simulator = [](probkit::SeededStream& s, double theta) { return theta + s.normal(); };
  for (std::size_t n = 0; n < steps; ++n) {
    p.epsilons.push_back(2.0 * std::pow(0.75, static_cast<double>(n)));
  }
  p.log_distance_kernel = [](double yo, double y, double eps) { return probkit::normal_log_pdf(yo, y, eps); };
  const auto rw = std::make_shared<GaussianKernel>(1.0, 0.0, rw_sd);
  p.proposal = [rw](std::size_t) { return rw; };
  p.y_obs = y_obs;
  return p;
}

GaussianMoments gaussian_toy_pseudo_posterior(double y_obs, double eps) {
  const double e2 = eps * eps;
  return {y_obs / (2.0 + e2), (1.0 + e2) / (2.0 + e2)};
}

MarginalModel make_abc(const AbcProblem& problem) {
  problem.validate();
  std::vector<model::StepSpec> steps;
  const auto joint = std::make_shared<AbcJointKernel>(problem.prior, problem.simulator, true);
  for (std::size_t n = 0; n < problem.epsilons.size(); ++n) {
    auto u = std::make_shared<AbcPotential>(problem, problem.epsilons[n]);
    if (n == 0) {
      steps.push_back({joint, joint, u, std::make_shared<AbcWeight>(u, problem.prior, problem.prior)});
      continue;
    }
    const KernelPtr q = problem.proposal(n);
    const KernelPtr move =
        q == problem.prior ? KernelPtr{joint} : std::make_shared<AbcJointKernel>(q, problem.simulator, q->prev_free());
    steps.push_back({move, joint, u, std::make_shared<AbcWeight>(u, problem.prior, q)});
  }
  return MarginalModel(2, std::move(steps), "abc");
}

}  // namespace msmc::zoo

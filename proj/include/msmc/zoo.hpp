#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "msmc/model.hpp"
#include "msmc/ssm.hpp"

/// Marginal models for the named filters: MPF, BPF, MAPF, IPF and ABC-SMC.
namespace msmc::zoo {

using model::DensityKernel;
using model::MarginalModel;
using model::StateView;
using KernelPtr = std::shared_ptr<const DensityKernel>;

/// q_n for n = 0..T. Receives the transition kernel f_n so that the bootstrap
/// choice can return that very object (engines then detect M_n == K_n).
struct Proposal {
  std::string name;
  std::function<KernelPtr(const LinearGaussianSSM&, std::size_t n, const KernelPtr& f_n)> at;
};

/// q_n = f_n.
Proposal bootstrap_proposal();
/// q_n(x | x') propto f(x | x') g(y_n | x); q_0 = f_0.
Proposal locally_optimal_proposal();
/// x' -> N(alpha x' + beta, sd^2) at every n >= 1; q_0 = f_0.
Proposal affine_proposal(double alpha, double beta, double sd);
/// x'-free Gaussian with the Kalman filtering mean and the predictive variance
/// at n; q_0 = f_0.
Proposal observation_proposal();

/// f_0 = N(m0, s0^2) at n = 0, else N(a x', sigma_x^2).
KernelPtr transition_kernel(const LinearGaussianSSM& ssm, std::size_t n);
/// log g(y_n | x).
double log_observation(const LinearGaussianSSM& ssm, std::size_t n, double x);

/// U_n = g(y_n | x) (U_0 = 1), K_n = f_n, M_n = q_n.
MarginalModel make_mpf(const LinearGaussianSSM& ssm, const Proposal& q);
MarginalModel make_bpf(const LinearGaussianSSM& ssm);
/// make_mpf after checking every q_n (n >= 1) ignores x'.
MarginalModel make_ipf(const LinearGaussianSSM& ssm, const Proposal& q);

/// log p~(y_{n+1} | x_n); called with n = 0..T-1.
struct AuxApprox {
  std::string name;
  std::function<double(const LinearGaussianSSM&, std::size_t n, double x)> log_p_tilde;
  bool unit = false;  ///< p~ == 1
};

AuxApprox aux_unit();
/// p(y_{n+1} | x_n) = N(y; c a x, c^2 sigma_x^2 + sigma_y^2).
AuxApprox aux_exact();
/// The exact predictive with its variance multiplied by `inflation`.
AuxApprox aux_inflated(double inflation);

struct MapfModel {
  MarginalModel model;
  /// log w~_n(x) = -log p~(y_{n+1} | x) (0 at n = T).
  std::function<double(std::size_t n, StateView x)> inferential_log_weight;
};

/// U_0 = p~(y_1 | x), U_n = g(y_n | x) p~(y_{n+1} | x) / p~(y_n | x'), K = f, M = q.
MapfModel make_mapf(const LinearGaussianSSM& ssm, const Proposal& q, const AuxApprox& aux);

/// ABC with state (theta, y).
struct AbcProblem {
  KernelPtr prior;  ///< over theta; must ignore x'
  std::function<double(probkit::SeededStream&, double theta)> simulator;
  std::vector<double> epsilons;  ///< strictly decreasing
  std::function<double(double y_obs, double y, double eps)> log_distance_kernel;
  std::function<KernelPtr(std::size_t n)> proposal;  ///< q_n(theta | theta') for n >= 1
  double y_obs = 0.0;

  void validate() const;
};

/// Prior N(0, 1), y | theta ~ N(theta, 1), Gaussian pi_eps with sd eps,
/// eps_n = 2 * 0.75^n for n < steps, random-walk proposal with sd `rw_sd`.
AbcProblem gaussian_toy_abc(double y_obs, std::size_t steps = 10, double rw_sd = 1.0);

struct GaussianMoments {
  double mean = 0.0;
  double var = 0.0;
};

/// theta | y_obs under the toy with kernel width eps: N(y/(2+e^2), (1+e^2)/(2+e^2)).
GaussianMoments gaussian_toy_pseudo_posterior(double y_obs, double eps);

/// K_n draws theta from the prior and y from the simulator, M_n moves theta
/// with q_n and simulates y; neither density is ever evaluated.
MarginalModel make_abc(const AbcProblem& problem);

}  // namespace msmc::zoo

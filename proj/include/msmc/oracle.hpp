#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "msmc/model.hpp"
#include "msmc/probkit.hpp"
#include "msmc/ssm.hpp"

/// Exact references: Kalman filter and RTS smoother for the linear-Gaussian
/// model, and a brute-force grid filter for any 1-D marginal model.
namespace msmc::oracle {

struct KalmanStep {
  double pred_mean = 0.0;  ///< p(x_n | y_{1:n-1}); the prior at n = 0
  double pred_var = 0.0;
  double filt_mean = 0.0;  ///< p(x_n | y_{1:n}); the prior at n = 0
  double filt_var = 0.0;
  double smooth_mean = 0.0;  ///< p(x_n | y_{1:T})
  double smooth_var = 0.0;
  double log_lik = 0.0;  ///< log p(y_n | y_{1:n-1}); 0 at n = 0
};

struct KalmanTrace {
  std::vector<KalmanStep> steps;  ///< n = 0..T
  double log_z = 0.0;             ///< log p(y_{1:T})
};

KalmanTrace kalman_filter(const zoo::LinearGaussianSSM& ssm);

/// p(x_n | x_k, y_{k+1:n}) = N(slope * x_k + intercept, var), n >= k.
struct ConditionalGaussian {
  double slope = 1.0;
  double intercept = 0.0;
  double var = 0.0;
};

/// Kalman recursion started from the point mass at x_k.
ConditionalGaussian conditional_forward(const zoo::LinearGaussianSSM& ssm, std::size_t k, std::size_t n);

/// Grid spanning mean +- half_width sd of every predictive, filtering and
/// smoothed Kalman marginal.
probkit::Grid1D lgssm_grid(const zoo::LinearGaussianSSM& ssm, std::size_t count = 2001, double half_width = 8.0);

/// A density tabulated on a grid, in log form.
struct GridDensity {
  probkit::Grid1D grid;
  std::vector<double> log_values;
  bool normalized = false;

  [[nodiscard]] std::vector<double> density() const;
  [[nodiscard]] double integral() const;
  /// int f(x) p(x) dx for tabulated f.
  [[nodiscard]] double expect(std::span<const double> f) const;
  [[nodiscard]] double mean() const;
  [[nodiscard]] double variance() const;
  /// Two columns `point,density`.
  void write_csv(const std::filesystem::path& path) const;
};

struct GridFilterOptions {
  double drift_tolerance = 1e-4;
  bool throw_on_drift = false;
};

struct GridFilterResult {
  std::vector<GridDensity> etahat;  ///< hat eta_n, normalized
  std::vector<GridDensity> eta;     ///< eta_n = hat eta_{n-1} M_n (M_0 at n = 0)
  std::vector<std::vector<double>> log_g;  ///< log G_n on the grid, G_n = d(gamma_n)/d(eta_n)
  std::vector<double> log_increments;      ///< log eta_n(G_n)
  double log_z = 0.0;
  double worst_drift = 0.0;  ///< max |mass of K_n, M_n pushed through the grid - 1|
  std::vector<std::string> warnings;
};

/// hat eta_n(x) propto int U_n(x', x) k_n(x', x) hat eta_{n-1}(x') dx' by nested
/// trapezoid sums; 1-D models only.
GridFilterResult grid_filter(const model::MarginalModel& model, const probkit::Grid1D& grid,
                             const GridFilterOptions& options = {});

/// G_n(x) = int U k hat eta_{n-1} / int m hat eta_{n-1} (or U_0 k_0 / m_0 at
/// n = 0). Throws ExtinctionError when the denominator underflows.
double exact_marginal_weight(const model::MarginalModel& model, const GridDensity& etahat_prev, std::size_t n,
                             double x);

/// Values of a test function on the grid points.
std::vector<double> tabulate(const model::TestFunction& phi, const probkit::Grid1D& grid);

}  // namespace msmc::oracle

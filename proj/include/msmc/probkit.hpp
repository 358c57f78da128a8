#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "msmc/errors.hpp"
#include "msmc/fast_math.hpp"
#include "msmc/rng.hpp"

/// Numerical primitives shared by the engines, oracles and variance lab.
namespace msmc::probkit {

/// log sum_i exp(v_i), shifted by the maximum. Throws ExtinctionError when
/// every entry is -inf and ConfigError on an empty input.
double log_sum_exp(std::span<const double> v);

struct NormalizedWeights {
  std::vector<double> weights;      ///< exp(v_i - logsumexp(v)), sums to one
  std::vector<double> log_weights;  ///< v_i - logsumexp(v)
  double log_mean = 0.0;            ///< logsumexp(v) - ln N
};

/// Normalizes log-weights. Throws ExtinctionError if all are -inf.
NormalizedWeights normalize_log_weights(std::span<const double> v);

/// Effective sample size 1 / sum W_i^2 of normalized weights.
double ess(std::span<const double> weights);

/// Trapezoid grid on [a, b]. Points are strictly increasing; weights are the
/// composite trapezoid weights, so sum(weights) == b - a.
class Grid1D {
 public:
  Grid1D() = default;
  /// Arbitrary strictly increasing abscissae.
  explicit Grid1D(std::vector<double> points);

  /// `count` equally spaced points on [lo, hi].
  static Grid1D uniform(double lo, double hi, std::size_t count);
  /// [center - half_width * scale, center + half_width * scale].
  static Grid1D centered(double center, double scale, std::size_t count = 2001, double half_width = 8.0);

  [[nodiscard]] std::size_t size() const { return points_.size(); }
  [[nodiscard]] std::span<const double> points() const { return points_; }
  [[nodiscard]] std::span<const double> weights() const { return weights_; }
  [[nodiscard]] double point(std::size_t i) const { return points_[i]; }
  [[nodiscard]] double weight(std::size_t i) const { return weights_[i]; }
  [[nodiscard]] double lo() const { return points_.front(); }
  [[nodiscard]] double hi() const { return points_.back(); }
  /// Largest spacing between consecutive points.
  [[nodiscard]] double max_spacing() const;
  /// Index of the grid point nearest to x.
  [[nodiscard]] std::size_t nearest(double x) const;

 private:
  std::vector<double> points_;
  std::vector<double> weights_;
};

/// sum_i w_i f_i. Exact for functions that are piecewise linear on the grid.
double trapezoid_integrate(std::span<const double> f_values, const Grid1D& grid);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares of ln(err) on ln(n).
LogLogFit fit_loglog_slope(std::span<const std::pair<double, double>> pairs);

/// Standard normal log-density shifted and scaled.
double normal_log_pdf(double x, double mean, double sd);

}  // namespace msmc::probkit

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "msmc/rng.hpp"

namespace msmc::zoo {

/// x_0 ~ N(m0, s0^2), x_n = a x_{n-1} + sigma_x e_n, y_n = c x_n + sigma_y d_n,
/// observed at n = 1..T.
struct LinearGaussianSSM {
  double a = 0.9;
  double sigma_x = 1.0;
  double c = 1.0;
  double sigma_y = 1.0;
  double m0 = 0.0;
  double s0 = 1.0;
  std::vector<double> y;  ///< y[n - 1] holds y_n

  [[nodiscard]] std::size_t horizon() const { return y.size(); }
  [[nodiscard]] double obs(std::size_t n) const { return y.at(n - 1); }
  /// Same model with only y_1..y_n kept.
  [[nodiscard]] LinearGaussianSSM truncated(std::size_t n) const;
  /// Throws ConfigError on nonpositive standard deviations or non-finite values.
  void validate() const;
};

struct SimulatedPath {
  std::vector<double> x;  ///< x_0..x_T
  std::vector<double> y;  ///< y_1..y_T
};

/// Draws a latent path and observations from `params` (its own y is ignored).
SimulatedPath simulate(const LinearGaussianSSM& params, std::size_t horizon, probkit::SeededStream stream);

inline constexpr std::uint64_t kFixtureSeed = 1729;
inline constexpr std::size_t kFixtureHorizon = 10;

/// a = 0.9, sigma_x = 1, c = 1, sigma_y = 1, m0 = 0, s0 = 1, T = 10, with
/// observations simulated once from kFixtureSeed.
LinearGaussianSSM fixture();

}  // namespace msmc::zoo

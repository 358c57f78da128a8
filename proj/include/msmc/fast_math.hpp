#pragma once

#include <bit>
#include <cstdint>
#include <limits>
#include <span>

namespace msmc::probkit {

/// exp(x) for x <= 0, branch-free so the compiler can vectorize loops over it
/// (selects are written as bit masks; GCC turns ternaries here into branches).
///
/// Cody-Waite reduction to |r| <= ln2/2 followed by a degree-12 Taylor
/// polynomial; relative error is a few ulp. Inputs below -708 flush to zero,
/// which is harmless wherever the largest term of a sum has been shifted to 0.
inline double exp_nonpositive(double x) {
  constexpr double kLog2e = 1.4426950408889634;
  constexpr double kLn2Hi = 0.6931471803691238;
  constexpr double kLn2Lo = 1.9082149292705877e-10;
  constexpr double kShifter = 6755399441055744.0;  // 2^52 + 2^51
  constexpr double kFloor = -708.0;

  const std::uint64_t keep = -static_cast<std::uint64_t>(x >= kFloor);
  const double xc = std::bit_cast<double>((std::bit_cast<std::uint64_t>(x) & keep) |
                                          (std::bit_cast<std::uint64_t>(kFloor) & ~keep));
  const double t = xc * kLog2e + kShifter;
  const double k = t - kShifter;
  const double r = (xc - k * kLn2Hi) - k * kLn2Lo;

  double p = 1.0 / 479001600.0;
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;

  const std::int64_t ki = std::bit_cast<std::int64_t>(t) - std::bit_cast<std::int64_t>(kShifter);
  const double scale = std::bit_cast<double>(static_cast<std::uint64_t>(ki + 1023) << 52);
  return std::bit_cast<double>(std::bit_cast<std::uint64_t>(p * scale) & keep);
}

/// log sum_j exp(a[j] + b[j]) in a fixed left-to-right order. `scratch` must
/// hold at least a.size() entries. Returns -inf when every term is -inf.
double log_sum_exp_pairs(std::span<const double> a, std::span<const double> b, std::span<double> scratch);

/// log sum_j exp(t[j]) using the vectorized exponential; fixed order.
double fast_log_sum_exp(std::span<const double> t);

/// log sum_j exp(a[j] - (x - mu[j])^2 * inv_sd^2 / 2) for a[j] <= 0, in one
/// fused pass (the a[j] are expected to be shifted by their maximum). Falls
/// back to a max-shifted second pass when x is far from every component.
/// `scratch` must hold a.size() entries.
double gaussian_mixture_log_sum(std::span<const double> a, std::span<const double> mu, double x, double inv_sd,
                                std::span<double> scratch);

}  // namespace msmc::probkit

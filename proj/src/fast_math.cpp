#include "msmc/fast_math.hpp"

#include <algorithm>
#include <cmath>

namespace msmc::probkit {

namespace {

constexpr std::size_t kLanes = 8;

// Both reductions keep kLanes interleaved partial results combined in a fixed
// order, so the result does not depend on how the loop is vectorized.
double max_of(std::span<const double> t) {
  const std::size_t n = t.size();
  const std::size_t body = n - n % kLanes;
  double lane[kLanes];
  for (auto& l : lane) {
    l = -std::numeric_limits<double>::infinity();
  }
  for (std::size_t j = 0; j < body; j += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      lane[l] = std::max(lane[l], t[j + l]);
    }
  }
  double m = -std::numeric_limits<double>::infinity();
  for (const double l : lane) {
    m = std::max(m, l);
  }
  for (std::size_t j = body; j < n; ++j) {
    m = std::max(m, t[j]);
  }
  return m;
}

double shifted_sum(std::span<const double> t, double shift) {
  const std::size_t n = t.size();
  const std::size_t body = n - n % kLanes;
  double lane[kLanes] = {};
  for (std::size_t j = 0; j < body; j += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      lane[l] += exp_nonpositive(t[j + l] - shift);
    }
  }
  double s = 0.0;
  for (const double l : lane) {
    s += l;
  }
  for (std::size_t j = body; j < n; ++j) {
    s += exp_nonpositive(t[j] - shift);
  }
  return s;
}

}  // namespace

double fast_log_sum_exp(std::span<const double> t) {
  const double m = max_of(t);
  if (!std::isfinite(m)) {
    return m;
  }
  return m + std::log(shifted_sum(t, m));
}

double log_sum_exp_pairs(std::span<const double> a, std::span<const double> b, std::span<double> scratch) {
  const std::size_t n = a.size();
  double* out = scratch.data();
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = a[j] + b[j];
  }
  return fast_log_sum_exp({out, n});
}

double gaussian_mixture_log_sum(std::span<const double> a, std::span<const double> mu, double x, double inv_sd,
                                std::span<double> scratch) {
  const std::size_t n = a.size();
  const std::size_t body = n - n % kLanes;
  const double h = -0.5 * inv_sd * inv_sd;
  double lane[kLanes] = {};
  for (std::size_t j = 0; j < body; j += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const double d = x - mu[j + l];
      lane[l] += exp_nonpositive(a[j + l] + h * d * d);
    }
  }
  double s = 0.0;
  for (const double l : lane) {
    s += l;
  }
  for (std::size_t j = body; j < n; ++j) {
    const double d = x - mu[j];
    s += exp_nonpositive(a[j] + h * d * d);
  }
  if (s > 1e-200) {
    return std::log(s);
  }
  // Far from every component: shift by the actual maximum instead.
  double* t = scratch.data();
  for (std::size_t j = 0; j < n; ++j) {
    const double d = x - mu[j];
    t[j] = a[j] + h * d * d;
  }
  return fast_log_sum_exp({t, n});
}

}  // namespace msmc::probkit

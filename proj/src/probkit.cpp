#include "msmc/probkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace msmc::probkit {

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) {
    throw ConfigError("log_sum_exp: empty input");
  }
  const double m = *std::max_element(v.begin(), v.end());
  if (m == -std::numeric_limits<double>::infinity()) {
    throw ExtinctionError("log_sum_exp: every term is -inf");
  }
  if (std::isnan(m) || m == std::numeric_limits<double>::infinity()) {
    return m;
  }
  double s = 0.0;
  for (const double x : v) {
    s += std::exp(x - m);
  }
  return m + std::log(s);
}

NormalizedWeights normalize_log_weights(std::span<const double> v) {
  if (v.empty()) {
    throw ConfigError("normalize_log_weights: empty input");
  }
  double lse = 0.0;
  try {
    lse = log_sum_exp(v);
  } catch (const ExtinctionError&) {
    throw ExtinctionError("particle system extinct: all weights are zero");
  }
  if (!std::isfinite(lse)) {
    throw ExtinctionError("normalize_log_weights: non-finite log-weight total");
  }
  NormalizedWeights out;
  out.weights.resize(v.size());
  out.log_weights.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.log_weights[i] = v[i] - lse;
    out.weights[i] = std::exp(out.log_weights[i]);
  }
  out.log_mean = lse - std::log(static_cast<double>(v.size()));
  return out;
}

double ess(std::span<const double> weights) {
  double s2 = 0.0;
  for (const double w : weights) {
    s2 += w * w;
  }
  return 1.0 / s2;
}

Grid1D::Grid1D(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw ConfigError("Grid1D needs at least two points");
  }
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i] > points_[i - 1])) {
      throw ConfigError("Grid1D points must be strictly increasing");
    }
  }
  weights_.assign(points_.size(), 0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double h = points_[i] - points_[i - 1];
    weights_[i - 1] += 0.5 * h;
    weights_[i] += 0.5 * h;
  }
}

Grid1D Grid1D::uniform(double lo, double hi, std::size_t count) {
  if (count < 2 || !(hi > lo)) {
    throw ConfigError("Grid1D::uniform needs count >= 2 and hi > lo");
  }
  std::vector<double> pts(count);
  const double h = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    pts[i] = lo + h * static_cast<double>(i);
  }
  pts.back() = hi;
  return Grid1D(std::move(pts));
}

Grid1D Grid1D::centered(double center, double scale, std::size_t count, double half_width) {
  if (!(scale > 0.0)) {
    throw ConfigError("Grid1D::centered needs a positive scale");
  }
  return uniform(center - half_width * scale, center + half_width * scale, count);
}

double Grid1D::max_spacing() const {
  double h = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    h = std::max(h, points_[i] - points_[i - 1]);
  }
  return h;
}

std::size_t Grid1D::nearest(double x) const {
  const auto it = std::lower_bound(points_.begin(), points_.end(), x);
  if (it == points_.begin()) {
    return 0;
  }
  if (it == points_.end()) {
    return points_.size() - 1;
  }
  const auto hi = static_cast<std::size_t>(it - points_.begin());
  return (x - points_[hi - 1] <= points_[hi] - x) ? hi - 1 : hi;
}

double trapezoid_integrate(std::span<const double> f_values, const Grid1D& grid) {
  if (f_values.size() != grid.size()) {
    throw ConfigError("trapezoid_integrate: value count does not match grid size");
  }
  const auto w = grid.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < f_values.size(); ++i) {
    s += w[i] * f_values[i];
  }
  return s;
}

LogLogFit fit_loglog_slope(std::span<const std::pair<double, double>> pairs) {
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& [n, err] : pairs) {
    if (!(n > 0.0) || !(err > 0.0)) {
      throw ConfigError("fit_loglog_slope: n and err must be positive");
    }
    lx.push_back(std::log(n));
    ly.push_back(std::log(err));
  }
  const auto k = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) {
    throw ConfigError("fit_loglog_slope: need at least two distinct n values");
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

double normal_log_pdf(double x, double mean, double sd) {
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kHalfLog2Pi;
}

}  // namespace msmc::probkit

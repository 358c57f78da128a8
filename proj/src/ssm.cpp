#include "msmc/ssm.hpp"

#include <cmath>

#include "msmc/errors.hpp"

namespace msmc::zoo {

LinearGaussianSSM LinearGaussianSSM::truncated(std::size_t n) const {
  if (n > y.size()) {
    throw ConfigError("truncated: n exceeds the number of observations");
  }
  LinearGaussianSSM out = *this;
  out.y.resize(n);
  return out;
}

void LinearGaussianSSM::validate() const {
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0) || !(s0 > 0.0)) {
    throw ConfigError("LinearGaussianSSM needs sigma_x, sigma_y and s0 > 0");
  }
  for (const double v : {a, c, m0, sigma_x, sigma_y, s0}) {
    if (!std::isfinite(v)) {
      throw ConfigError("LinearGaussianSSM parameters must be finite");
    }
  }
  for (const double v : y) {
    if (!std::isfinite(v)) {
      throw ConfigError("LinearGaussianSSM observations must be finite");
    }
  }
}

SimulatedPath simulate(const LinearGaussianSSM& params, std::size_t horizon, probkit::SeededStream stream) {
  params.validate();
  SimulatedPath out;
  out.x.push_back(params.m0 + params.s0 * stream.normal());
  for (std::size_t n = 1; n <= horizon; ++n) {
    const double x = params.a * out.x.back() + params.sigma_x * stream.normal();
    out.x.push_back(x);
    out.y.push_back(params.c * x + params.sigma_y * stream.normal());
  }
  return out;
}

LinearGaussianSSM fixture() {
  LinearGaussianSSM ssm;
  ssm.y = simulate(ssm, kFixtureHorizon, probkit::SeededStream(kFixtureSeed, 0)).y;
  return ssm;
}

}  // namespace msmc::zoo

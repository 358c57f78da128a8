#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "msmc/model.hpp"

namespace {

using namespace msmc;
using namespace msmc::model;

ParticleCloud cloud_of(std::vector<double> xs, std::vector<double> log_w) {
  return {Positions::from_values(std::move(xs)), std::move(log_w)};
}

TEST(WeightedEstimate, Examples) {
  const auto uniform = ParticleCloud::uniform(Positions::from_values({1.0, -2.0, 7.0}));
  EXPECT_DOUBLE_EQ(weighted_estimate(uniform, [](StateView) { return 3.5; }), 3.5);

  const double ninf = -std::numeric_limits<double>::infinity();
  const auto one_hot = cloud_of({1.0, -2.0, 7.0}, {ninf, 0.0, ninf});
  EXPECT_DOUBLE_EQ(weighted_estimate(one_hot, [](StateView x) { return x[0] * x[0]; }), 4.0);

  const auto two = cloud_of({0.0, 4.0}, {std::log(0.25), std::log(0.75)});
  EXPECT_NEAR(weighted_estimate(two, phi_identity().fn), 3.0, 1e-15);
}

TEST(WeightedEstimate, LinearShiftInvariantAndNormalized) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd(0.0, 3.0);
  std::vector<double> xs(300);
  std::vector<double> lw(300);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = nd(gen);
    lw[i] = nd(gen);
  }
  const auto c = cloud_of(xs, lw);
  EXPECT_NEAR(weighted_estimate(c, phi_constant(1.0).fn), 1.0, 1e-12);
  const double a = weighted_estimate(c, phi_identity().fn);
  const double b = weighted_estimate(c, phi_square().fn);
  EXPECT_NEAR(weighted_estimate(c, [](StateView x) { return 2.0 * x[0] - 0.5 * x[0] * x[0]; }), 2.0 * a - 0.5 * b,
              1e-11 * (1.0 + std::abs(b)));
  std::vector<double> shifted = lw;
  for (double& v : shifted) {
    v += 123.0;
  }
  EXPECT_NEAR(weighted_estimate(cloud_of(xs, shifted), phi_identity().fn), a, 1e-12);
}

TEST(WeightedEstimate, UniformCloudIsPlainMean) {
  const auto c = ParticleCloud::uniform(Positions::from_values({1.0, 2.0, 6.0, -1.0}));
  EXPECT_NEAR(weighted_estimate(c, phi_identity().fn), 2.0, 1e-15);
}

TEST(Positions, GatherAndDims) {
  Positions p(3, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    p.mut(i)[0] = static_cast<double>(i);
    p.mut(i)[1] = 10.0 * static_cast<double>(i);
  }
  const std::vector<std::size_t> idx{2, 2, 0};
  const auto g = p.gather(idx);
  EXPECT_EQ(g.size(), 3u);
  EXPECT_EQ(g.dim(), 2u);
  EXPECT_EQ(g[0][1], 20.0);
  EXPECT_EQ(g[2][0], 0.0);
}

TEST(ParticleCloud, RejectsLengthMismatch) {
  EXPECT_THROW(cloud_of({1.0, 2.0}, {0.0}), ConfigError);
  EXPECT_THROW(cloud_of({}, {}), ConfigError);
}

TEST(MarginalModel, RejectsMissingMembers) {
  auto k = std::make_shared<GaussianKernel>(0.0, 0.0, 1.0);
  EXPECT_THROW(MarginalModel(1, {}), ConfigError);
  EXPECT_THROW(MarginalModel(1, {StepSpec{k, k, nullptr, nullptr}}), ConfigError);
  const MarginalModel m(1, {StepSpec{k, k, std::make_shared<UnitPotential>(), nullptr}});
  EXPECT_EQ(m.horizon(), 0u);
  EXPECT_THROW(static_cast<void>(m.step(1)), ConfigError);
}

TEST(GaussianKernel, DensityAndBatchAgree) {
  const GaussianKernel k(0.9, 0.3, 1.7);
  const auto prev = Positions::from_values({-1.0, 0.0, 2.5});
  const double x = 0.4;
  std::vector<double> out(3);
  k.log_density_from(prev, StateView{&x, 1}, out);
  for (std::size_t j = 0; j < 3; ++j) {
    const double mean = 0.9 * prev[j][0] + 0.3;
    const double ref = -0.5 * std::pow((x - mean) / 1.7, 2) - std::log(1.7 * std::sqrt(2.0 * std::numbers::pi));
    EXPECT_NEAR(out[j], ref, 1e-14);
    EXPECT_EQ(out[j], k.log_density(prev[j], StateView{&x, 1}));
  }
  EXPECT_THROW(GaussianKernel(1.0, 0.0, 0.0), ConfigError);
}

// A small random-walk-with-observation model built only from model-core parts.
MarginalModel gaussian_model(std::shared_ptr<const DensityKernel> proposal_n,
                             std::shared_ptr<const Potential> potential_n) {
  auto k0 = std::make_shared<GaussianKernel>(0.0, 0.0, 1.0);
  auto k = std::make_shared<GaussianKernel>(0.9, 0.0, 1.0);
  auto g0 = std::make_shared<CurrentPotential>(
      [](StateView x) { return probkit::normal_log_pdf(0.5, x[0], 1.0); }, 1.0 / std::sqrt(2.0 * std::numbers::pi));
  std::vector<StepSpec> steps{{k0, k0, g0, nullptr}};
  steps.push_back({proposal_n ? proposal_n : k, k, potential_n ? potential_n : g0, nullptr});
  steps.push_back({proposal_n ? proposal_n : k, k, potential_n ? potential_n : g0, nullptr});
  return MarginalModel(1, std::move(steps));
}

TEST(ValidateModel, GaussianModelPasses) {
  const auto grid = probkit::Grid1D::centered(0.0, 1.0, 2001, 12.0);
  const auto report = validate_model(gaussian_model(std::make_shared<GaussianKernel>(0.6, 0.2, 1.2), nullptr), grid);
  for (const auto& c : report.checks) {
    EXPECT_TRUE(c.passed) << c.name << " step " << c.step << ": " << c.detail << " worst " << c.worst;
  }
  EXPECT_TRUE(report.passed);
}

TEST(ValidateModel, NarrowProposalFlagsUnboundedRatio) {
  // Uniform on [-1, 1]: K has mass where M has no density.
  auto narrow = std::make_shared<FunctionKernel>(
      [](StateView, StateView x) {
        return std::abs(x[0]) <= 1.0 ? std::log(0.5) : -std::numeric_limits<double>::infinity();
      },
      [](probkit::SeededStream& s, StateView, std::span<double> out) { out[0] = 2.0 * s.uniform() - 1.0; }, true);
  const auto grid = probkit::Grid1D::centered(0.0, 1.0, 2001, 12.0);
  const auto report = validate_model(gaussian_model(narrow, nullptr), grid);
  EXPECT_FALSE(report.passed);
  bool flagged = false;
  for (const auto& c : report.checks) {
    if (c.name == "weight_bounded" && c.step > 0) {
      EXPECT_FALSE(c.passed);
      EXPECT_EQ(c.worst, std::numeric_limits<double>::infinity());
      flagged = true;
    }
  }
  EXPECT_TRUE(flagged);
}

TEST(ValidateModel, VanishingPotentialFlagsPositivity) {
  auto zero_right = std::make_shared<CurrentPotential>(
      [](StateView x) { return x[0] > 0.0 ? -std::numeric_limits<double>::infinity() : 0.0; }, 1.0);
  const auto grid = probkit::Grid1D::centered(0.0, 1.0, 2001, 12.0);
  const auto report = validate_model(gaussian_model(nullptr, zero_right), grid);
  EXPECT_FALSE(report.passed);
  const auto* bad = report.first_failure();
  ASSERT_NE(bad, nullptr);
  EXPECT_EQ(bad->name, "weight_positive");
}

TEST(ValidateModel, DeclaredBoundViolation) {
  auto big = std::make_shared<CurrentPotential>([](StateView) { return std::log(3.0); }, 2.0);
  const auto grid = probkit::Grid1D::centered(0.0, 1.0, 801, 12.0);
  const auto report = validate_model(gaussian_model(nullptr, big), grid);
  EXPECT_FALSE(report.passed);
  EXPECT_EQ(report.first_failure()->name, "potential_bound");
}

TEST(ValidateModel, MislabelledPrevFreeTag) {
  // Claims to ignore x' but does not.
  auto liar = std::make_shared<FunctionKernel>(
      [](StateView prev, StateView x) { return probkit::normal_log_pdf(x[0], 0.5 * prev[0], 1.0); },
      [](probkit::SeededStream& s, StateView prev, std::span<double> out) { out[0] = 0.5 * prev[0] + s.normal(); },
      true);
  const auto grid = probkit::Grid1D::centered(0.0, 1.0, 801, 12.0);
  const auto report = validate_model(gaussian_model(liar, nullptr), grid);
  EXPECT_FALSE(report.passed);
  EXPECT_EQ(report.first_failure()->name, "structure_tags");
}

TEST(ValidateModel, LeakyKernelFailsNormalization) {
  auto leaky = std::make_shared<FunctionKernel>(
      [](StateView, StateView x) { return probkit::normal_log_pdf(x[0], 0.0, 1.0) + std::log(0.9); },
      [](probkit::SeededStream& s, StateView, std::span<double> out) { out[0] = s.normal(); }, true);
  const auto grid = probkit::Grid1D::centered(0.0, 1.0, 801, 12.0);
  const auto report = validate_model(gaussian_model(leaky, nullptr), grid);
  EXPECT_FALSE(report.passed);
  EXPECT_EQ(report.first_failure()->name, "proposal_normalization");
  EXPECT_NEAR(report.first_failure()->worst, 0.1, 1e-6);
}

TEST(FilterTrace, SameValuesIgnoresWallTime) {
  FilterTrace a;
  a.names = {"identity"};
  a.steps.push_back({.step = 0, .pre = {1.0}, .post = {2.0}, .wall_seconds = 0.1});
  FilterTrace b = a;
  b.steps[0].wall_seconds = 9.0;
  EXPECT_TRUE(a.same_values(b));
  b.steps[0].pre[0] = std::nextafter(1.0, 2.0);
  EXPECT_FALSE(a.same_values(b));
}

}  // namespace

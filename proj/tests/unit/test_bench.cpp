#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "msmc/bench.hpp"
#include "msmc/errors.hpp"
#include "msmc/oracle.hpp"

namespace {

using namespace msmc;
using bench::ExperimentConfig;

constexpr const char* kMinimal = R"(
[experiment]
seed = 42
particles = 25, 50,100
replicates = 3

[model]
preset = fixture
)";

TEST(Config, ParsesSectionsAndLists) {
  const auto c = ExperimentConfig::parse(kMinimal);
  EXPECT_EQ(c.require_seed(), 42u);
  EXPECT_EQ(c.require_particles(), (std::vector<std::size_t>{25, 50, 100}));
  EXPECT_EQ(c.replicates, 3u);
  EXPECT_FALSE(c.step.has_value());
  EXPECT_EQ(c.model_ssm().y, zoo::fixture().y);
}

TEST(Config, SeedAndParticlesHaveNoDefaults) {
  const auto c = ExperimentConfig::parse("[model]\npreset = fixture\n");
  EXPECT_THROW((void)c.require_seed(), ConfigError);
  EXPECT_THROW((void)c.require_particles(), ConfigError);
}

TEST(Config, RejectsBadInput) {
  const char* bad[] = {
      "[experiment]\nseed = 1\nparticels = 10\n",
      "[experiment]\nreplicates = 0\n",
      "[experiment]\nparticles = 10, 0\n",
      "[experiment]\nseed = -3\n",
      "[experiment]\nseed = 1x\n",
      "seed = 1\n",
      "[model]\npreset = banana\n",
      "[model]\nsigma_x = -1\n",
      "[model]\nobservations = 1, 2\n",
      "[experiment]\ngrid_points = 2\n",
  };
  for (const char* text : bad) {
    EXPECT_THROW((void)ExperimentConfig::parse(text), ConfigError) << text;
  }
  const auto c = ExperimentConfig::parse("[filter]\nproposal = psychic\nmethod = smc2\naux = oracle\n");
  EXPECT_THROW((void)c.make_proposal(), ConfigError);
  EXPECT_THROW((void)c.make_aux(), ConfigError);
  EXPECT_THROW((void)bench::make_filter(c.method, zoo::fixture(), zoo::bootstrap_proposal(), zoo::aux_unit()),
               ConfigError);
  EXPECT_THROW((void)bench::test_function_by_name("cube"), ConfigError);
  EXPECT_THROW((void)ExperimentConfig::load("/nonexistent/x.ini"), ConfigError);
}

TEST(Config, ExplicitObservations) {
  const auto c = ExperimentConfig::parse("[model]\npreset = lgssm\na = 0.5\nobservations = 1.5, -0.25\n");
  const auto ssm = c.model_ssm();
  EXPECT_EQ(ssm.y, (std::vector<double>{1.5, -0.25}));
  EXPECT_EQ(ssm.a, 0.5);
}

TEST(Config, SimulatedPresetUsesDataSeed) {
  const auto c = ExperimentConfig::parse("[model]\npreset = simulated\nhorizon = 4\ndata_seed = 1729\n");
  const auto y = c.model_ssm().y;
  ASSERT_EQ(y.size(), 4u);
  const auto f = zoo::fixture().y;
  EXPECT_TRUE(std::equal(y.begin(), y.end(), f.begin()));
}

TEST(Preamble, CarriesVersionHashAndSeed) {
  const auto a = ExperimentConfig::parse(kMinimal);
  const auto b = ExperimentConfig::parse(std::string(kMinimal) + "\n");
  EXPECT_NE(a.hash, b.hash);
  EXPECT_EQ(bench::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(bench::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(bench::csv_preamble(0xabcULL, 7), "# msmc_bench 1.0.0 config=0000000000000abc seed=7\n");
}

TEST(GaussianExpectation, MatchesMoments) {
  EXPECT_NEAR(bench::gaussian_expectation(model::phi_identity(), 1.3, 0.7), 1.3, 1e-10);
  EXPECT_NEAR(bench::gaussian_expectation(model::phi_square(), 1.3, 0.7), 1.3 * 1.3 + 0.7, 1e-10);
}

TEST(StepEstimates, IndependentOfThreadCount) {
  const auto setup = bench::make_filter("mpf", zoo::fixture(), zoo::locally_optimal_proposal(), zoo::aux_unit());
  const probkit::SeededStream s(3, 0);
  const auto one = bench::step_estimates(setup, model::phi_identity(), 4, 64, 6, s, 1);
  const auto three = bench::step_estimates(setup, model::phi_identity(), 4, 64, 6, s, 3);
  EXPECT_EQ(one, three);
}

TEST(Convergence, SingleNHasNoSlopeRow) {
  const auto ssm = zoo::fixture();
  const auto setup = bench::make_filter("bpf", ssm, zoo::bootstrap_proposal(), zoo::aux_unit());
  const auto truth = oracle::kalman_filter(ssm).steps[10].filt_mean;
  const std::vector<std::size_t> one{32};
  const auto r1 = bench::convergence_study(setup, model::phi_identity(), 10, truth, one, 4,
                                           probkit::SeededStream(1, 0));
  EXPECT_FALSE(r1.rmse_slope.has_value());
  std::ostringstream out1;
  r1.write_csv(out1);
  EXPECT_EQ(out1.str().find("slope"), std::string::npos);
  EXPECT_EQ(out1.str().rfind("method,N,replicates,rmse,rmse_se,mean_bias,bias_se\n", 0), 0u);

  const std::vector<std::size_t> two{32, 64};
  const auto r2 = bench::convergence_study(setup, model::phi_identity(), 10, truth, two, 4,
                                           probkit::SeededStream(1, 0));
  ASSERT_TRUE(r2.rmse_slope.has_value());
  std::ostringstream out2;
  r2.write_csv(out2);
  EXPECT_NE(out2.str().find("\nslope,"), std::string::npos);
  // The N = 32 row reuses the same streams in both studies.
  EXPECT_EQ(r1.rows[0].rmse, r2.rows[0].rmse);
}

TEST(LogZ, PerfectProposalAtTimeZeroIsExact) {
  auto ssm = zoo::fixture();
  ssm.y.clear();
  const auto setup = bench::make_filter("mpf", ssm, zoo::locally_optimal_proposal(), zoo::aux_unit());
  const auto res = bench::logz_study(setup, oracle::kalman_filter(ssm).log_z, 16, 5, probkit::SeededStream(2, 0));
  for (const double l : res.log_z_hat) {
    EXPECT_EQ(l, 0.0);
  }
  EXPECT_EQ(res.ratio_mean, 1.0);
  EXPECT_EQ(res.ratio_se, 0.0);
  EXPECT_TRUE(res.pass);
}

TEST(Abc, HugeEpsilonGivesPrior) {
  auto c = ExperimentConfig::parse("[abc]\ny_obs = 1.0\nepsilons = 1e6\n");
  const auto res = bench::abc_study(c.abc_problem(), 2048, 40, probkit::SeededStream(4, 0));
  ASSERT_EQ(res.stages.size(), 1u);
  EXPECT_NEAR(res.exact.mean, 0.0, 1e-11);
  EXPECT_NEAR(res.exact.var, 1.0, 1e-11);
  const auto& last = res.stages.back();
  EXPECT_LE(std::abs(last.mean), 3.0 * last.mean_se);
  EXPECT_LE(std::abs(last.var - 1.0), 3.0 * last.var_se);
}

TEST(Abc, ZeroObservationIsSymmetric) {
  const auto c = ExperimentConfig::parse("[abc]\ny_obs = 0\nstages = 4\n");
  const auto res = bench::abc_study(c.abc_problem(), 1024, 40, probkit::SeededStream(5, 0));
  ASSERT_EQ(res.stages.size(), 4u);
  EXPECT_EQ(res.exact.mean, 0.0);
  EXPECT_LE(std::abs(res.stages.back().mean), 3.0 * res.stages.back().mean_se);
  std::ostringstream out;
  res.write_csv(out);
  EXPECT_EQ(out.str().rfind("stage,epsilon,mean,mean_se,var,var_se,ess\n", 0), 0u);
}

TEST(ConditionalExpectation, ConstantFunctions) {
  const std::vector<model::TestFunction> phis{bench::test_function_by_name("zero"),
                                              bench::test_function_by_name("one")};
  const auto rows = bench::prop5_study(zoo::fixture(), zoo::bootstrap_proposal(), 3, 50, 500, phis,
                                       probkit::SeededStream(6, 0));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].result.mc_mean, 0.0);
  EXPECT_EQ(rows[0].result.exact, 0.0);
  EXPECT_TRUE(rows[0].pass);
  EXPECT_GT(rows[1].result.exact, 0.0);
  EXPECT_TRUE(rows[1].pass);
  std::ostringstream out;
  bench::write_prop5_csv(out, rows);
  EXPECT_EQ(out.str().rfind("phi,step,replicates,mc_mean,mc_se,exact,z,verdict\n", 0), 0u);
}

}  // namespace

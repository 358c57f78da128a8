#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "msmc/parallel.hpp"
#include "msmc/probkit.hpp"

namespace {

using namespace msmc;
using namespace msmc::probkit;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

TEST(LogSumExp, Examples) {
  EXPECT_NEAR(log_sum_exp(std::vector{0.0, 0.0}), std::numbers::ln2, 1e-15);
  EXPECT_NEAR(log_sum_exp(std::vector{-1000.0, -1000.0}), -1000.0 + std::numbers::ln2, 1e-12);
  EXPECT_NEAR(log_sum_exp(std::vector{std::log(1.0), std::log(3.0)}), std::log(4.0), 1e-15);
}

TEST(LogSumExp, RejectsEmptyAndAllZero) {
  EXPECT_THROW(log_sum_exp(std::vector<double>{}), ConfigError);
  EXPECT_THROW(log_sum_exp(std::vector{kNegInf, kNegInf}), ExtinctionError);
}

TEST(LogSumExp, ShiftInvariance) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd(0.0, 5.0);
  std::uniform_real_distribution<double> ud(-1e6, 1e6);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(1 + t % 37);
    for (double& x : v) {
      x = nd(gen);
    }
    const double c = ud(gen);
    std::vector<double> w = v;
    for (double& x : w) {
      x += c;
    }
    // Relative to |c|: adding c to each entry already rounds at ulp(c).
    EXPECT_NEAR(log_sum_exp(w) - c, log_sum_exp(v), 1e-12 * std::max(1.0, std::abs(c)));
  }
}

TEST(FastLogSumExp, AgreesWithReference) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd(0.0, 30.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(1 + t * 13);
    for (double& x : v) {
      x = nd(gen);
    }
    EXPECT_NEAR(fast_log_sum_exp(v), log_sum_exp(v), 1e-13 * (1.0 + std::abs(log_sum_exp(v))));
  }
  EXPECT_EQ(fast_log_sum_exp(std::vector{kNegInf, kNegInf}), kNegInf);
  EXPECT_EQ(fast_log_sum_exp(std::vector{0.25}), 0.25);
}

TEST(FastExp, RelativeErrorAcrossRange) {
  double worst = 0.0;
  for (double x = -700.0; x <= 0.0; x += 0.0137) {
    worst = std::max(worst, std::abs(exp_nonpositive(x) / std::exp(x) - 1.0));
  }
  EXPECT_LT(worst, 2e-15);
  EXPECT_EQ(exp_nonpositive(0.0), 1.0);
  EXPECT_EQ(exp_nonpositive(-800.0), 0.0);
  EXPECT_EQ(exp_nonpositive(kNegInf), 0.0);
}

TEST(GaussianMixtureLogSum, MatchesDirectSum) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd(0.0, 2.0);
  const std::size_t n = 203;
  std::vector<double> a(n);
  std::vector<double> mu(n);
  std::vector<double> scratch(n);
  for (std::size_t j = 0; j < n; ++j) {
    a[j] = -std::abs(nd(gen));
    mu[j] = nd(gen);
  }
  const double inv_sd = 1.0 / 0.7;
  for (const double x : {-3.0, 0.0, 1.5, 40.0, -400.0}) {
    std::vector<double> t(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double z = (x - mu[j]) * inv_sd;
      t[j] = a[j] - 0.5 * z * z;
    }
    const double ref = log_sum_exp(t);
    EXPECT_NEAR(gaussian_mixture_log_sum(a, mu, x, inv_sd, scratch), ref, 1e-12 * (1.0 + std::abs(ref))) << x;
  }
}

TEST(NormalizeLogWeights, Examples) {
  auto r = normalize_log_weights(std::vector{0.0, 0.0});
  EXPECT_DOUBLE_EQ(r.weights[0], 0.5);
  EXPECT_DOUBLE_EQ(r.weights[1], 0.5);
  EXPECT_DOUBLE_EQ(r.log_mean, 0.0);

  r = normalize_log_weights(std::vector{std::log(1.0), std::log(3.0)});
  EXPECT_NEAR(r.weights[0], 0.25, 1e-15);
  EXPECT_NEAR(r.weights[1], 0.75, 1e-15);
  EXPECT_NEAR(r.log_mean, std::numbers::ln2, 1e-15);

  r = normalize_log_weights(std::vector{-5.0, -5.0, -5.0, -5.0});
  for (const double w : r.weights) {
    EXPECT_DOUBLE_EQ(w, 0.25);
  }
  EXPECT_NEAR(r.log_mean, -5.0, 1e-15);
}

TEST(NormalizeLogWeights, ExtinctionIsAnError) {
  EXPECT_THROW(normalize_log_weights(std::vector{kNegInf, kNegInf, kNegInf}), ExtinctionError);
}

TEST(NormalizeLogWeights, SumsToOneAndPermutes) {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> nd(0.0, 50.0);
  std::vector<double> v(500);
  for (double& x : v) {
    x = nd(gen);
  }
  const auto r = normalize_log_weights(v);
  double s = 0.0;
  for (const double w : r.weights) {
    s += w;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);

  std::vector<std::size_t> perm(v.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    perm[i] = i;
  }
  std::shuffle(perm.begin(), perm.end(), gen);
  std::vector<double> pv(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    pv[i] = v[perm[i]];
  }
  const auto pr = normalize_log_weights(pv);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_NEAR(pr.weights[i], r.weights[perm[i]], 1e-15);
  }
}

TEST(Ess, Examples) {
  EXPECT_DOUBLE_EQ(ess(std::vector<double>(8, 0.125)), 8.0);
  EXPECT_DOUBLE_EQ(ess(std::vector{0.0, 1.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(ess(std::vector{0.5, 0.5, 0.0, 0.0}), 2.0);
}

TEST(Ess, Bounds) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(1 + t);
    for (double& x : v) {
      x = nd(gen);
    }
    const double e = ess(normalize_log_weights(v).weights);
    EXPECT_GE(e, 1.0 - 1e-12);
    EXPECT_LE(e, static_cast<double>(v.size()) + 1e-9);
  }
}

TEST(Grid, Invariants) {
  const auto g = Grid1D::uniform(-1.5, 2.5, 77);
  double total = 0.0;
  for (const double w : g.weights()) {
    EXPECT_GT(w, 0.0);
    total += w;
  }
  EXPECT_NEAR(total, 4.0, 1e-12);
  EXPECT_THROW(Grid1D(std::vector{0.0, 1.0, 1.0}), ConfigError);
  EXPECT_THROW(Grid1D(std::vector{0.0}), ConfigError);
  EXPECT_EQ(g.nearest(-10.0), 0u);
  EXPECT_EQ(g.nearest(10.0), 76u);
}

TEST(Trapezoid, Examples) {
  for (const std::size_t count : {2u, 3u, 101u}) {
    const auto g = Grid1D::uniform(0.0, 2.0, count);
    EXPECT_NEAR(trapezoid_integrate(std::vector<double>(count, 1.0), g), 2.0, 1e-14);
  }
  const auto g = Grid1D::uniform(0.0, 1.0, 11);
  std::vector<double> f(g.points().begin(), g.points().end());
  EXPECT_NEAR(trapezoid_integrate(f, g), 0.5, 1e-15);
  EXPECT_THROW(trapezoid_integrate(std::vector<double>(3, 1.0), g), ConfigError);
}

TEST(Trapezoid, StandardNormalConvergesUnderRefinement) {
  const auto integrate = [](std::size_t count) {
    const auto g = Grid1D::centered(0.0, 1.0, count);
    std::vector<double> f(count);
    for (std::size_t i = 0; i < count; ++i) {
      f[i] = std::exp(normal_log_pdf(g.point(i), 0.0, 1.0));
    }
    return trapezoid_integrate(f, g);
  };
  const double fine = integrate(20001);
  EXPECT_NEAR(integrate(2001), fine, 1e-8);
  EXPECT_NEAR(fine, 1.0, 1e-8);
}

TEST(Trapezoid, LinearAndMonotone) {
  const auto g = Grid1D::uniform(-2.0, 3.0, 51);
  std::vector<double> f(51);
  std::vector<double> h(51);
  for (std::size_t i = 0; i < 51; ++i) {
    f[i] = std::sin(g.point(i)) + 2.0;
    h[i] = g.point(i) * g.point(i);
  }
  std::vector<double> comb(51);
  for (std::size_t i = 0; i < 51; ++i) {
    comb[i] = 2.0 * f[i] - 3.0 * h[i];
  }
  EXPECT_NEAR(trapezoid_integrate(comb, g), 2.0 * trapezoid_integrate(f, g) - 3.0 * trapezoid_integrate(h, g), 1e-12);
  EXPECT_GE(trapezoid_integrate(f, g), 0.0);
}

TEST(LogLogSlope, Examples) {
  const std::vector<std::pair<double, double>> a{{100, 0.1}, {400, 0.05}, {1600, 0.025}};
  EXPECT_NEAR(fit_loglog_slope(a).slope, -0.5, 1e-14);
  const std::vector<std::pair<double, double>> b{{10, 3}, {100, 0.3}};
  EXPECT_NEAR(fit_loglog_slope(b).slope, -1.0, 1e-14);
  const std::vector<std::pair<double, double>> c{{10, 2}, {20, 2}, {40, 2}};
  EXPECT_NEAR(fit_loglog_slope(c).slope, 0.0, 1e-14);
}

TEST(LogLogSlope, Errors) {
  const std::vector<std::pair<double, double>> same{{10, 1}, {10, 2}};
  EXPECT_THROW(fit_loglog_slope(same), ConfigError);
  const std::vector<std::pair<double, double>> neg{{10, 1}, {20, -2}};
  EXPECT_THROW(fit_loglog_slope(neg), ConfigError);
}

TEST(SeededStream, PhiloxKnownAnswer) {
  // Philox4x32-10 with zero key and zero counter.
  SeededStream s(0, 0);
  const std::uint64_t first = s();
  const std::uint64_t second = s();
  EXPECT_EQ(static_cast<std::uint32_t>(first), 0x6627e8d5u);
  EXPECT_EQ(static_cast<std::uint32_t>(first >> 32), 0xe169c58du);
  EXPECT_EQ(static_cast<std::uint32_t>(second), 0xbc57ac4cu);
  EXPECT_EQ(static_cast<std::uint32_t>(second >> 32), 0x9b00dbd8u);
}

TEST(SeededStream, EqualKeysGiveEqualSequences) {
  SeededStream a(42, 7);
  SeededStream b(42, 7);
  SeededStream c(42, 8);
  int differ = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a();
    EXPECT_EQ(va, b());
    differ += va != c() ? 1 : 0;
  }
  EXPECT_GT(differ, 990);
  EXPECT_EQ(SeededStream(1, 2).split(3, 4)(), SeededStream(1, 2).split(3, 4)());
  EXPECT_NE(SeededStream(1, 2).split(3, 4)(), SeededStream(1, 2).split(4, 3)());
}

TEST(SeededStream, NormalMoments) {
  SeededStream s(9, 1);
  const int n = 200000;
  double m1 = 0.0;
  double m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    m1 += z;
    m2 += z * z;
  }
  m1 /= n;
  m2 /= n;
  EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(ParallelChunks, CoversRangeOnceAndRethrows) {
  std::vector<int> hits(1003, 0);
  parallel_chunks(hits.size(), 17, 4, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      ++hits[i];
    }
  });
  EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  EXPECT_THROW(parallel_chunks(100, 10, 3,
                               [](std::size_t b, std::size_t) {
                                 if (b == 50) {
                                   throw ExtinctionError("boom");
                                 }
                               }),
               ExtinctionError);
}

}  // namespace

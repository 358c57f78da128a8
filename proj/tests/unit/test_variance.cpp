#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "msmc/oracle.hpp"
#include "msmc/variance.hpp"
#include "msmc/zoo.hpp"

namespace {

using namespace msmc;
using namespace msmc::variance;

double rel(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

const zoo::LinearGaussianSSM& fx() {
  static const auto s = zoo::fixture();
  return s;
}

const probkit::Grid1D& fx_grid() {
  static const auto g = oracle::lgssm_grid(fx());
  return g;
}

std::vector<model::TestFunction> catalogue() {
  return {model::phi_identity(), model::phi_square(), model::phi_smoothed_indicator(0.5, 0.3)};
}

TEST(Gamma, UnitPotentialPreservesConstants) {
  const auto k = std::make_shared<model::GaussianKernel>(1.0, 0.0, 0.7);
  const auto u = std::make_shared<model::UnitPotential>();
  model::MarginalModel rw(1, {{k, k, u, nullptr}, {k, k, u, nullptr}}, "rw");
  const auto grid = probkit::Grid1D::uniform(-15.0, 15.0, 1501);
  const std::vector<double> one(grid.size(), 1.0);
  const auto g = gamma_apply(rw, one, 1, grid);
  for (std::size_t i = 500; i <= 1000; ++i) {
    EXPECT_NEAR(g[i], 1.0, 1e-9);
  }
  const std::vector<double> zero(grid.size(), 0.0);
  for (const double v : gamma_apply(rw, zero, 1, grid)) {
    EXPECT_EQ(v, 0.0);
  }
  EXPECT_THROW(gamma_apply(rw, std::vector<double>(7, 1.0), 1, grid), ConfigError);
  EXPECT_THROW(gamma_apply(rw, one, 0, grid), ConfigError);
}

// Gamma_{k:n}(phi)(x_k) = p(y_{k+1:n} | x_k) E[phi(x_n) | x_k, y_{k+1:n}] for the
// bootstrap model: a Kalman filter started from the point mass gives both.
struct PointMassForecast {
  double log_lik;
  double mean;
};

PointMassForecast from_point(const zoo::LinearGaussianSSM& ssm, std::size_t k, std::size_t n, double xk) {
  zoo::LinearGaussianSSM s = ssm;
  s.y.assign(ssm.y.begin() + static_cast<std::ptrdiff_t>(k), ssm.y.begin() + static_cast<std::ptrdiff_t>(n));
  s.m0 = xk;
  s.s0 = 1e-12;
  const auto kt = oracle::kalman_filter(s);
  return {kt.log_z, kt.steps.back().filt_mean};
}

TEST(Gamma, CompositionMatchesClosedFormForecast) {
  const auto& ssm = fx();
  const auto m = zoo::make_bpf(ssm);
  const GridContext ctx(m, fx_grid());
  const auto values = oracle::tabulate(model::phi_identity(), fx_grid());
  const auto table = build_gamma_table(ctx, values, 4);
  EXPECT_EQ(table.phi[4], values);
  for (const std::size_t k : {2u, 3u}) {
    for (const double x : {-1.0, 0.4, 2.2}) {
      const auto i = fx_grid().nearest(x);
      const auto ref = from_point(ssm, k, 4, fx_grid().point(i));
      const double lik = std::exp(ref.log_lik);
      EXPECT_NEAR(table.one[k][i], lik, 1e-7 * lik) << k;
      EXPECT_NEAR(table.phi[k][i], lik * ref.mean, 1e-7 * lik * (1.0 + std::abs(ref.mean))) << k;
    }
  }
}

TEST(Gamma, NestedQuadratureTwoSteps) {
  // Direct double sum over (x_{q-1}, x_q) against composition.
  const auto& ssm = fx();
  const auto m = zoo::make_mpf(ssm, zoo::locally_optimal_proposal());
  const auto grid = probkit::Grid1D::uniform(-6.0, 8.0, 301);
  std::vector<double> phi(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    phi[i] = std::sin(grid.point(i));
  }
  const auto composed = gamma_apply(m, gamma_apply(m, phi, 3, grid), 2, grid);
  const auto& s2 = m.step(2);
  const auto& s3 = m.step(3);
  const auto ev = [](const model::StepSpec& s, double a, double b) {
    return std::exp(s.kernel->log_density({&a, 1}, {&b, 1}) + s.potential->log_value({&a, 1}, {&b, 1}));
  };
  for (const std::size_t i : {80u, 150u, 220u}) {
    const double x1 = grid.point(i);
    double direct = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double x2 = grid.point(j);
      double inner = 0.0;
      for (std::size_t l = 0; l < grid.size(); ++l) {
        inner += grid.weight(l) * ev(s3, x2, grid.point(l)) * phi[l];
      }
      direct += grid.weight(j) * ev(s2, x1, x2) * inner;
    }
    EXPECT_NEAR(composed[i], direct, 1e-6 * (1e-3 + std::abs(direct)));
  }
}

TEST(Recursion, PerfectInitialProposalGivesPlainVariance) {
  auto ssm = fx().truncated(0);
  const auto m = zoo::make_bpf(ssm);
  const auto grid = oracle::lgssm_grid(ssm);
  const auto r = clt_variance_recursion(m, grid, model::phi_identity(), 0);
  EXPECT_NEAR(r.vbar[0], ssm.s0 * ssm.s0, 1e-9);
  EXPECT_NEAR(r.v[0], 2.0 * ssm.s0 * ssm.s0, 1e-9);
}

TEST(Recursion, ConstantsHaveNoVariance) {
  const auto m = zoo::make_mpf(fx(), zoo::locally_optimal_proposal());
  const auto r = clt_variance_recursion(m, fx_grid(), model::phi_constant(2.5), 4);
  for (std::size_t k = 0; k <= 4; ++k) {
    EXPECT_NEAR(r.vbar[k], 0.0, 1e-12);
    EXPECT_NEAR(r.v[k], 0.0, 1e-12);
  }
  EXPECT_NEAR(closed_form_variance(m, fx_grid(), model::phi_constant(2.5), 4), 0.0, 1e-12);
}

TEST(Recursion, MatchesClosedFormAcrossCatalogue) {
  for (const auto& q : {zoo::bootstrap_proposal(), zoo::locally_optimal_proposal(), zoo::observation_proposal()}) {
    const auto m = zoo::make_mpf(fx(), q);
    const GridContext ctx(m, fx_grid());
    for (const auto& phi : catalogue()) {
      const auto values = oracle::tabulate(phi, fx_grid());
      const auto r = clt_variance_recursion(ctx, values, 5);
      for (std::size_t n = 0; n <= 5; ++n) {
        const double cf = closed_form_variance(ctx, values, n);
        EXPECT_LT(rel(r.vbar[n], cf), 1e-6) << q.name << " " << phi.name << " n=" << n;
        EXPECT_GE(r.v[n], r.vbar[n]);
        EXPECT_GE(r.vbar[n], 0.0);
        std::vector<double> sq(values.size());
        for (std::size_t i = 0; i < sq.size(); ++i) {
          sq[i] = values[i] * values[i];
        }
        const double mean = ctx.etahat_expect(n, values);
        EXPECT_NEAR(r.v[n] - r.vbar[n], ctx.etahat_expect(n, sq) - mean * mean, 1e-9 * (1.0 + r.v[n]));
      }
    }
  }
}

TEST(MpfDisplay, MatchesGeneralMachinery) {
  for (const auto& q : {zoo::bootstrap_proposal(), zoo::locally_optimal_proposal(), zoo::observation_proposal(),
                        zoo::affine_proposal(0.5, 0.3, 1.5)}) {
    const auto m = zoo::make_mpf(fx(), q);
    const GridContext ctx(m, fx_grid());
    for (const auto& phi : catalogue()) {
      const auto values = oracle::tabulate(phi, fx_grid());
      for (const std::size_t n : {0u, 1u, 3u, 5u}) {
        const auto c1 = mpf_variance_cor1(fx(), q, phi, n);
        ASSERT_EQ(c1.terms.size(), n + 1);
        EXPECT_LT(rel(c1.total, closed_form_variance(ctx, values, n)), 1e-5) << q.name << " " << phi.name << " " << n;
      }
    }
  }
}

TEST(MpfDisplay, ConstantIsZero) {
  const auto c = mpf_variance_cor1(fx(), zoo::locally_optimal_proposal(), model::phi_constant(3.0), 6);
  EXPECT_NEAR(c.total, 0.0, 1e-20);
  EXPECT_NEAR(c.filter_variance, 0.0, 1e-20);
}

TEST(MpfDisplay, BootstrapEqualsPathForm) {
  for (const auto& phi : catalogue()) {
    const auto a = mpf_variance_cor1(fx(), zoo::bootstrap_proposal(), phi, 6);
    const auto b = pf_variance_quadrature(fx(), zoo::bootstrap_proposal(), phi, 6);
    for (std::size_t k = 0; k <= 6; ++k) {
      EXPECT_LT(rel(a.terms[k], b.terms[k]), 1e-9) << phi.name << " k=" << k;
    }
  }
}

TEST(MpfDisplay, MarginalNeverWorseThanPath) {
  for (const auto& q : {zoo::locally_optimal_proposal(), zoo::observation_proposal(),
                        zoo::affine_proposal(0.5, 0.3, 1.5)}) {
    const auto a = mpf_variance_cor1(fx(), q, model::phi_identity(), 10);
    const auto b = pf_variance_quadrature(fx(), q, model::phi_identity(), 10);
    EXPECT_EQ(a.terms[0], b.terms[0]);
    for (std::size_t k = 1; k <= 10; ++k) {
      EXPECT_LE(a.terms[k], b.terms[k] * (1.0 + 1e-12)) << q.name << " k=" << k;
    }
    EXPECT_LT(a.total, b.total) << q.name;
  }
}

TEST(MapfDisplay, UnitApproximationIsMpfDisplay) {
  const auto q = zoo::locally_optimal_proposal();
  for (const auto& phi : catalogue()) {
    const auto a = mapf_variance_cor2(fx(), q, zoo::aux_unit(), phi, 4);
    const auto b = mpf_variance_cor1(fx(), q, phi, 4);
    EXPECT_EQ(a.terms, b.terms);
    EXPECT_EQ(a.total, b.total);
  }
  EXPECT_NEAR(mapf_variance_cor2(fx(), q, zoo::aux_inflated(2.0), model::phi_constant(1.0), 4).total, 0.0, 1e-20);
}

TEST(MapfDisplay, FullyAdaptedCollapsesOntoFaApf) {
  for (const auto& phi : catalogue()) {
    for (const std::size_t n : {0u, 2u, 5u}) {
      const auto a = mapf_variance_cor2(fx(), zoo::locally_optimal_proposal(), zoo::aux_exact(), phi, n);
      const auto b = fa_apf_variance(fx(), phi, n);
      EXPECT_LT(rel(a.total, b.total), 1e-9) << phi.name << " " << n;
    }
  }
}

TEST(MapfDisplay, MatchesClosedFormOnAuxiliaryModel) {
  for (const auto& aux : {zoo::aux_exact(), zoo::aux_inflated(3.0)}) {
    for (const auto& q : {zoo::locally_optimal_proposal(), zoo::bootstrap_proposal()}) {
      for (const std::size_t n : {1u, 4u}) {
        const auto phi = model::phi_identity();
        const double a = mapf_variance_cor2(fx(), q, aux, phi, n).total;
        const double b = mapf_variance_closed_form(fx(), q, aux, phi, n, fx_grid());
        EXPECT_LT(rel(a, b), 1e-5) << aux.name << " " << q.name << " " << n;
      }
    }
  }
}

TEST(Empirical, Examples) {
  const std::vector<double> flat(10, 0.25);
  const auto z = empirical_asymptotic_variance(flat, 100);
  EXPECT_EQ(z.value, 0.0);
  EXPECT_EQ(z.se, 0.0);
  EXPECT_THROW(empirical_asymptotic_variance(std::vector<double>{1.0}, 5), ConfigError);

  // Means of N standard normals have N * var = 1.
  const std::size_t n = 64;
  const std::size_t r = 2000;
  probkit::SeededStream s(12, 0);
  std::vector<double> est(r);
  for (auto& e : est) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += s.normal();
    }
    e = sum / static_cast<double>(n);
  }
  const auto v = empirical_asymptotic_variance(est, n);
  EXPECT_NEAR(v.value, 1.0, 3.0 * v.se);
  // Normal data: se ~ sqrt(2 / R).
  EXPECT_NEAR(v.se, std::sqrt(2.0 / r), 0.2 * std::sqrt(2.0 / r));
}

TEST(Compare, BootstrapIsTied) {
  const auto rep = compare_variances(fx(), zoo::bootstrap_proposal(), model::phi_identity(), 3,
                                     {.particles = 64, .replicates = 40}, probkit::SeededStream(8, 0));
  EXPECT_EQ(rep.verdict, Verdict::tied);
  EXPECT_EQ(rep.difference, 0.0);
  std::ostringstream csv;
  rep.write_csv(csv);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "method,step,phi,particles,replicates,vbar,v,se,verdict");
}

TEST(Compare, ConstantIsTied) {
  const auto rep = compare_variances(fx(), zoo::locally_optimal_proposal(), model::phi_constant(1.0), 3,
                                     {.particles = 64, .replicates = 20}, probkit::SeededStream(8, 1));
  EXPECT_EQ(rep.verdict, Verdict::tied);
  EXPECT_NEAR(rep.rows[2].vbar, 0.0, 1e-20);
  EXPECT_NEAR(rep.rows[3].vbar, 0.0, 1e-20);
}

}  // namespace

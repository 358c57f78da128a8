#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "msmc/model.hpp"
#include "msmc/oracle.hpp"
#include "msmc/probkit.hpp"
#include "msmc/ssm.hpp"
#include "msmc/zoo.hpp"

/// Asymptotic variances of MSMC estimates: the CLT recursion and the Gamma
/// closed form on a grid, the specialised linear-Gaussian integrals, and
/// empirical N * var from replicate runs.
namespace msmc::variance {

/// Gamma_q(phi)(x) = int K_q(x, dx') U_q(x, x') phi(x'), as a dense trapezoid
/// matrix on the grid.
class GammaOperator {
 public:
  GammaOperator(const model::MarginalModel& model, std::size_t q, const probkit::Grid1D& grid);

  [[nodiscard]] std::size_t step() const { return step_; }
  [[nodiscard]] std::vector<double> apply(std::span<const double> phi) const;

 private:
  std::size_t step_;
  std::size_t size_;
  std::vector<double> matrix_;  // row i = x_{q-1}, column j = x_q
};

std::vector<double> gamma_apply(const model::MarginalModel& model, std::span<const double> phi_values,
                                std::size_t q, const probkit::Grid1D& grid);

/// Everything the grid-based variance formulas need; the grid filter runs once.
/// Drift beyond the tolerance raises QuadratureError.
struct GridContext {
  GridContext(const model::MarginalModel& model, probkit::Grid1D grid, double drift_tolerance = 1e-4);

  const model::MarginalModel* model;
  probkit::Grid1D grid;
  oracle::GridFilterResult filter;

  /// E_{eta_n}[G_n^k f] by trapezoid sums.
  [[nodiscard]] double eta_moment(std::size_t n, std::span<const double> f, int g_power) const;
  /// hat eta_n(f).
  [[nodiscard]] double etahat_expect(std::size_t n, std::span<const double> f) const;
};

/// Gamma_{k:n}(phi) and Gamma_{k:n}(1) for k = 0..n; entry n is (phi, 1).
struct GammaTable {
  std::vector<std::vector<double>> phi;
  std::vector<std::vector<double>> one;
};

GammaTable build_gamma_table(const GridContext& ctx, std::span<const double> phi_values, std::size_t n);

struct CltVariances {
  std::vector<double> vbar;  ///< pre-resampling, k = 0..n
  std::vector<double> v;     ///< post-resampling
};

/// The CLT recursion, carried out over grid-valued test functions.
CltVariances clt_variance_recursion(const GridContext& ctx, std::span<const double> phi_values, std::size_t n);
CltVariances clt_variance_recursion(const model::MarginalModel& model, const probkit::Grid1D& grid,
                                    const model::TestFunction& phi, std::size_t n);

/// bar V_n(phi) = sum_k eta_k[(G_k [Gamma_{k:n} phi - hat eta_n(phi) Gamma_{k:n} 1])^2] prod_{j>=k} eta_j(G_j)^-2.
double closed_form_variance(const GridContext& ctx, std::span<const double> phi_values, std::size_t n);
double closed_form_variance(const model::MarginalModel& model, const probkit::Grid1D& grid,
                            const model::TestFunction& phi, std::size_t n);

/// A variance split into its per-step contributions sigma_{n,k}, k = 0..n.
struct VarianceTerms {
  std::vector<double> terms;
  double total = 0.0;
  double filter_variance = 0.0;  ///< var of phi(x_n) under p(x_n | y_{1:n})

  /// Post-resampling counterpart: total + filter_variance.
  [[nodiscard]] double post() const { return total + filter_variance; }
};

/// Linear-Gaussian MPF variance from smoothed marginals, conditional Kalman
/// forecasts and the proposal mixture q_k * p(x_{k-1} | y_{1:k-1}).
VarianceTerms mpf_variance_cor1(const zoo::LinearGaussianSSM& ssm, const zoo::Proposal& proposal,
                                const model::TestFunction& phi, std::size_t n);

/// As mpf_variance_cor1 with the proposal mixed against the auxiliary filter
/// p~(y_k | x) p(x | y_{1:k-1}) instead.
VarianceTerms mapf_variance_cor2(const zoo::LinearGaussianSSM& ssm, const zoo::Proposal& proposal,
                                 const zoo::AuxApprox& aux, const model::TestFunction& phi, std::size_t n);

/// bar V_n of the auxiliary model applied to hat w_n (phi - pi_n(phi)), where
/// hat w_n is the inferential weight normalised under hat eta_n.
double mapf_variance_closed_form(const zoo::LinearGaussianSSM& ssm, const zoo::Proposal& proposal,
                                 const zoo::AuxApprox& aux, const model::TestFunction& phi, std::size_t n,
                                 const probkit::Grid1D& grid);

/// Fully adapted APF: smoothed over filtered marginals, and var_{pi_n}(phi) at k = n.
VarianceTerms fa_apf_variance(const zoo::LinearGaussianSSM& ssm, const model::TestFunction& phi, std::size_t n);

/// Standard PF with the same proposals. The path integrals over x_{0:k}
/// reduce to (x_{k-1}, x_k) because the past given x_{k-1} integrates to one.
VarianceTerms pf_variance_quadrature(const zoo::LinearGaussianSSM& ssm, const zoo::Proposal& proposal,
                                     const model::TestFunction& phi, std::size_t n);

struct EmpiricalVariance {
  double value = 0.0;  ///< N * unbiased sample variance
  double se = 0.0;
  std::size_t replicates = 0;
};

/// se from the large-sample variance of s^2 with the sample fourth central moment.
EmpiricalVariance empirical_asymptotic_variance(std::span<const double> estimates, std::size_t particles);

/// ordered: PF - MPF > 2 pooled se; tied: |PF - MPF| < 2 pooled se.
enum class Verdict { ordered, tied, reversed };
std::string to_string(Verdict v);

struct ReportRow {
  std::string method;
  std::size_t step = 0;
  std::string phi;
  std::size_t particles = 0;   ///< 0 for quadrature rows
  std::size_t replicates = 0;  ///< 0 for quadrature rows
  double vbar = 0.0;
  double v = 0.0;  ///< NaN when not defined
  double se = 0.0;
};

struct VarianceReport {
  std::vector<ReportRow> rows;
  double difference = 0.0;  ///< empirical PF - MPF
  double pooled_se = 0.0;
  Verdict verdict = Verdict::tied;

  /// Header `method,step,phi,particles,replicates,vbar,v,se,verdict`.
  void write_csv(std::ostream& out) const;
  [[nodiscard]] std::string text() const;
};

struct CompareOptions {
  std::size_t particles = 1024;
  std::size_t replicates = 100;
  unsigned threads = 1;
};

/// R runs of MPF and of the standard PF with the same proposal and the same
/// per-replicate streams, plus the quadrature values for both.
VarianceReport compare_variances(const zoo::LinearGaussianSSM& ssm, const zoo::Proposal& proposal,
                                 const model::TestFunction& phi, std::size_t n, const CompareOptions& options,
                                 probkit::SeededStream stream);

/// Step-n pre-resampling estimates of `phi` over R replicates; replicate r
/// uses stream.split(r). `standard` selects the ancestor-weight engine.
std::vector<double> replicate_estimates(const model::MarginalModel& model, const model::TestFunction& phi,
                                        std::size_t n, std::size_t particles, std::size_t replicates,
                                        probkit::SeededStream stream, bool standard, unsigned threads = 1);

}  // namespace msmc::variance

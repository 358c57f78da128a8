#include "msmc/variance.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>

#include "msmc/engines.hpp"
#include "msmc/errors.hpp"
#include "msmc/fast_math.hpp"
#include "msmc/parallel.hpp"

namespace msmc::variance {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ln(double x) { return std::log(x); }

void require_size(std::span<const double> f, const probkit::Grid1D& grid) {
  if (f.size() != grid.size()) {
    throw ConfigError(fmt::format("test function has {} values on a grid of {}", f.size(), grid.size()));
  }
}

/// Trapezoid nodes for E[f(Z)], Z ~ N(0, 1).
struct NormalNodes {
  std::vector<double> z;
  std::vector<double> w;

  NormalNodes() {
    const auto grid = probkit::Grid1D::uniform(-12.0, 12.0, 481);
    z.assign(grid.points().begin(), grid.points().end());
    w.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      w[i] = grid.weight(i) * std::exp(probkit::normal_log_pdf(z[i], 0.0, 1.0));
    }
  }
};

const NormalNodes& nodes() {
  static const NormalNodes n;
  return n;
}

double call(const model::TestFunction& phi, double x) { return phi.fn(model::StateView{&x, 1}); }

double kernel_log_density(const model::DensityKernel& k, double prev, double x) {
  return k.log_density(model::StateView{&prev, 1}, model::StateView{&x, 1});
}

/// Gaussian quantities shared by the linear-Gaussian displays.
struct LgssmPieces {
  zoo::LinearGaussianSSM ssm;
  oracle::KalmanTrace kt;
  std::size_t n;
  double phi_bar = 0.0;
  double filter_variance = 0.0;

  LgssmPieces(const zoo::LinearGaussianSSM& full, const model::TestFunction& phi, std::size_t step)
      : ssm(full.truncated(step)), kt(oracle::kalman_filter(ssm)), n(step) {
    const auto& f = kt.steps[n];
    const auto& nd = nodes();
    const double sd = std::sqrt(f.filt_var);
    for (std::size_t i = 0; i < nd.z.size(); ++i) {
      phi_bar += nd.w[i] * call(phi, f.filt_mean + sd * nd.z[i]);
    }
    for (std::size_t i = 0; i < nd.z.size(); ++i) {
      const double d = call(phi, f.filt_mean + sd * nd.z[i]) - phi_bar;
      filter_variance += nd.w[i] * d * d;
    }
  }

  /// int p(x_n | y_{k+1:n}, x_k) [phi(x_n) - phi_bar] dx_n.
  [[nodiscard]] double centered_forecast(const model::TestFunction& phi, const oracle::ConditionalGaussian& cg,
                                         double xk) const {
    const double m = cg.slope * xk + cg.intercept;
    if (cg.var == 0.0) {
      return call(phi, m) - phi_bar;
    }
    const auto& nd = nodes();
    const double sd = std::sqrt(cg.var);
    double s = 0.0;
    for (std::size_t i = 0; i < nd.z.size(); ++i) {
      s += nd.w[i] * call(phi, m + sd * nd.z[i]);
    }
    return s - phi_bar;
  }

  /// sum over k of int p(x_k | y_{1:n})^2 / D_k(x_k) h_k(x_k)^2 dx_k, written
  /// as an expectation under the smoothed marginal.
  template <class LogDenominator>
  VarianceTerms marginal_terms(const model::TestFunction& phi, LogDenominator&& log_den) const {
    VarianceTerms out;
    out.filter_variance = filter_variance;
    const auto& nd = nodes();
    for (std::size_t k = 0; k <= n; ++k) {
      const auto& st = kt.steps[k];
      const double sd = std::sqrt(st.smooth_var);
      const auto cg = oracle::conditional_forward(ssm, k, n);
      double s = 0.0;
      for (std::size_t i = 0; i < nd.z.size(); ++i) {
        const double x = st.smooth_mean + sd * nd.z[i];
        const double h = centered_forecast(phi, cg, x);
        if (h == 0.0) {
          continue;
        }
        const double lp = probkit::normal_log_pdf(x, st.smooth_mean, sd);
        s += nd.w[i] * std::exp(lp - log_den(k, x)) * h * h;
      }
      out.terms.push_back(s);
      out.total += s;
    }
    return out;
  }
};

std::vector<zoo::KernelPtr> proposal_kernels(const zoo::LinearGaussianSSM& ssm, const zoo::Proposal& q,
                                             std::size_t n) {
  std::vector<zoo::KernelPtr> out;
  for (std::size_t k = 0; k <= n; ++k) {
    out.push_back(q.at(ssm, k, zoo::transition_kernel(ssm, k)));
  }
  return out;
}

/// log int q_k(x | x') p(x' | y_{1:k-1}) dx' (q_0 itself at k = 0).
double log_proposal_mixture(const oracle::KalmanTrace& kt, const std::vector<zoo::KernelPtr>& qs, std::size_t k,
                            double x) {
  const auto& q = *qs[k];
  if (k == 0) {
    return kernel_log_density(q, 0.0, x);
  }
  const auto& prev = kt.steps[k - 1];
  if (const auto ag = q.affine_gaussian()) {
    const double m = ag->slope * prev.filt_mean + ag->intercept;
    const double v = ag->slope * ag->slope * prev.filt_var + ag->sd * ag->sd;
    return probkit::normal_log_pdf(x, m, std::sqrt(v));
  }
  const auto& nd = nodes();
  const double sd = std::sqrt(prev.filt_var);
  std::vector<double> t(nd.z.size());
  for (std::size_t i = 0; i < nd.z.size(); ++i) {
    t[i] = ln(nd.w[i]) + kernel_log_density(q, prev.filt_mean + sd * nd.z[i], x);
  }
  return probkit::log_sum_exp(t);
}

double sum_log_increments(const oracle::GridFilterResult& f, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t j = from; j <= to; ++j) {
    s += f.log_increments[j];
  }
  return s;
}

}  // namespace

GammaOperator::GammaOperator(const model::MarginalModel& model, std::size_t q, const probkit::Grid1D& grid)
    : step_{q}, size_{grid.size()}, matrix_(grid.size() * grid.size()) {
  if (model.dim() != 1) {
    throw ConfigError("Gamma operators need a 1-D model");
  }
  if (q == 0 || q > model.horizon()) {
    throw ConfigError(fmt::format("Gamma_q needs 1 <= q <= {}, got {}", model.horizon(), q));
  }
  const auto& s = model.step(q);
  if (s.weight_rule) {
    throw ConfigError("Gamma operators need evaluable kernel densities");
  }
  const auto points = model::Positions::from_values({grid.points().begin(), grid.points().end()});
  const auto& u = *s.potential;
  std::vector<double> lp(size_, 0.0);
  if (u.separable() && !u.prev_free()) {
    for (std::size_t i = 0; i < size_; ++i) {
      lp[i] = u.log_prev(points[i]);
    }
  }
  std::vector<double> lk(size_);
  for (std::size_t j = 0; j < size_; ++j) {
    const auto x = points[j];
    s.kernel->log_density_from(points, x, lk);
    const double w = grid.weight(j);
    if (u.separable()) {
      const double cur = u.prev_free() ? u.log_value(points[0], x) : u.log_current(x);
      for (std::size_t i = 0; i < size_; ++i) {
        matrix_[i * size_ + j] = w * std::exp(lk[i] + cur + lp[i]);
      }
    } else {
      for (std::size_t i = 0; i < size_; ++i) {
        matrix_[i * size_ + j] = w * std::exp(lk[i] + u.log_value(points[i], x));
      }
    }
  }
}

std::vector<double> GammaOperator::apply(std::span<const double> phi) const {
  if (phi.size() != size_) {
    throw ConfigError(fmt::format("test function has {} values on a grid of {}", phi.size(), size_));
  }
  std::vector<double> out(size_);
  for (std::size_t i = 0; i < size_; ++i) {
    const double* row = matrix_.data() + i * size_;
    double s = 0.0;
    for (std::size_t j = 0; j < size_; ++j) {
      s += row[j] * phi[j];
    }
    out[i] = s;
  }
  return out;
}

std::vector<double> gamma_apply(const model::MarginalModel& model, std::span<const double> phi_values,
                                std::size_t q, const probkit::Grid1D& grid) {
  require_size(phi_values, grid);
  return GammaOperator(model, q, grid).apply(phi_values);
}

GridContext::GridContext(const model::MarginalModel& m, probkit::Grid1D g, double drift_tolerance)
    : model(&m),
      grid(std::move(g)),
      filter(oracle::grid_filter(m, grid, {.drift_tolerance = drift_tolerance, .throw_on_drift = true})) {}

double GridContext::eta_moment(std::size_t n, std::span<const double> f, int g_power) const {
  require_size(f, grid);
  const auto& le = filter.eta[n].log_values;
  const auto& lg = filter.log_g[n];
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (f[i] == 0.0 || (g_power > 0 && lg[i] == -kInf)) {
      continue;
    }
    const double l = le[i] + g_power * lg[i];
    if (!std::isfinite(l) && l != -kInf) {
      throw QuadratureError(fmt::format("eta_{} vanishes where the target does not (x = {})", n, grid.point(i)));
    }
    s += grid.weight(i) * std::exp(l) * f[i];
  }
  return s;
}

double GridContext::etahat_expect(std::size_t n, std::span<const double> f) const {
  require_size(f, grid);
  return filter.etahat[n].expect(f);
}

GammaTable build_gamma_table(const GridContext& ctx, std::span<const double> phi_values, std::size_t n) {
  require_size(phi_values, ctx.grid);
  GammaTable t;
  t.phi.resize(n + 1);
  t.one.resize(n + 1);
  t.phi[n].assign(phi_values.begin(), phi_values.end());
  t.one[n].assign(ctx.grid.size(), 1.0);
  for (std::size_t k = n; k-- > 0;) {
    const GammaOperator g(*ctx.model, k + 1, ctx.grid);
    t.phi[k] = g.apply(t.phi[k + 1]);
    t.one[k] = g.apply(t.one[k + 1]);
  }
  return t;
}

CltVariances clt_variance_recursion(const GridContext& ctx, std::span<const double> phi_values, std::size_t n) {
  require_size(phi_values, ctx.grid);
  if (n > ctx.model->horizon()) {
    throw ConfigError("variance step past the horizon");
  }
  const std::size_t size = ctx.grid.size();
  // Targets m = q..n each carry the test function of bar V_q reached so far.
  std::vector<std::vector<double>> psi(n + 1);
  std::vector<double> vbar(n + 1, 0.0);
  std::vector<double> centered(size);
  std::vector<double> sq(size);
  for (std::size_t q = n + 1; q-- > 0;) {
    psi[q].assign(phi_values.begin(), phi_values.end());
    std::optional<GammaOperator> gamma;
    if (q > 0) {
      gamma.emplace(*ctx.model, q, ctx.grid);
    }
    for (std::size_t m = q; m <= n; ++m) {
      const double c = ctx.etahat_expect(q, psi[m]);
      for (std::size_t i = 0; i < size; ++i) {
        centered[i] = psi[m][i] - c;
        sq[i] = centered[i] * centered[i];
      }
      const double m1 = ctx.eta_moment(q, centered, 1);
      const double m2 = ctx.eta_moment(q, sq, 2);
      vbar[m] += (m2 - m1 * m1) * std::exp(-2.0 * sum_log_increments(ctx.filter, q, m));
      if (gamma) {
        psi[m] = gamma->apply(centered);
      }
    }
  }
  CltVariances out;
  out.vbar = vbar;
  for (std::size_t m = 0; m <= n; ++m) {
    std::vector<double> sqphi(size);
    for (std::size_t i = 0; i < size; ++i) {
      sqphi[i] = phi_values[i] * phi_values[i];
    }
    const double mean = ctx.etahat_expect(m, phi_values);
    out.v.push_back(std::max(0.0, ctx.etahat_expect(m, sqphi) - mean * mean) + vbar[m]);
  }
  return out;
}

CltVariances clt_variance_recursion(const model::MarginalModel& model, const probkit::Grid1D& grid,
                                    const model::TestFunction& phi, std::size_t n) {
  const GridContext ctx(model, grid);
  return clt_variance_recursion(ctx, oracle::tabulate(phi, grid), n);
}

double closed_form_variance(const GridContext& ctx, std::span<const double> phi_values, std::size_t n) {
  if (n > ctx.model->horizon()) {
    throw ConfigError("variance step past the horizon");
  }
  const auto table = build_gamma_table(ctx, phi_values, n);
  const double c = ctx.etahat_expect(n, phi_values);
  const std::size_t size = ctx.grid.size();
  std::vector<double> sq(size);
  double total = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    for (std::size_t i = 0; i < size; ++i) {
      const double d = table.phi[k][i] - c * table.one[k][i];
      sq[i] = d * d;
    }
    total += ctx.eta_moment(k, sq, 2) * std::exp(-2.0 * sum_log_increments(ctx.filter, k, n));
  }
  return total;
}

double closed_form_variance(const model::MarginalModel& model, const probkit::Grid1D& grid,
                            const model::TestFunction& phi, std::size_t n) {
  const GridContext ctx(model, grid);
  return closed_form_variance(ctx, oracle::tabulate(phi, grid), n);
}

VarianceTerms mpf_variance_cor1(const zoo::LinearGaussianSSM& ssm, const zoo::Proposal& proposal,
                                const model::TestFunction& phi, std::size_t n) {
  const LgssmPieces pieces(ssm, phi, n);
  const auto qs = proposal_kernels(pieces.ssm, proposal, n);
  return pieces.marginal_terms(
      phi, [&](std::size_t k, double x) { return log_proposal_mixture(pieces.kt, qs, k, x); });
}

VarianceTerms mapf_variance_cor2(const zoo::LinearGaussianSSM& ssm, const zoo::Proposal& proposal,
                                 const zoo::AuxApprox& aux, const model::TestFunction& phi, std::size_t n) {
  if (aux.unit) {
    return mpf_variance_cor1(ssm, proposal, phi, n);
  }
  const LgssmPieces pieces(ssm, phi, n);
  const auto qs = proposal_kernels(pieces.ssm, proposal, n);
  const auto& nd = nodes();
  // hat eta_{k-1} propto p~(y_k | x') p(x' | y_{1:k-1}) on nodes around the filter.
  std::vector<std::vector<double>> xs(n + 1);
  std::vector<std::vector<double>> lw(n + 1);
  for (std::size_t k = 1; k <= n; ++k) {
    const auto& prev = pieces.kt.steps[k - 1];
    const double sd = std::sqrt(prev.filt_var);
    for (std::size_t i = 0; i < nd.z.size(); ++i) {
      const double xp = prev.filt_mean + sd * nd.z[i];
      xs[k].push_back(xp);
      lw[k].push_back(ln(nd.w[i]) + aux.log_p_tilde(ssm, k - 1, xp));
    }
    const double norm = probkit::log_sum_exp(lw[k]);
    for (double& v : lw[k]) {
      v -= norm;
    }
  }
  std::vector<double> t(nd.z.size());
  return pieces.marginal_terms(phi, [&](std::size_t k, double x) {
    if (k == 0) {
      return kernel_log_density(*qs[0], 0.0, x);
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = lw[k][i] + kernel_log_density(*qs[k], xs[k][i], x);
    }
    return probkit::log_sum_exp(t);
  });
}

double mapf_variance_closed_form(const zoo::LinearGaussianSSM& ssm, const zoo::Proposal& proposal,
                                 const zoo::AuxApprox& aux, const model::TestFunction& phi, std::size_t n,
                                 const probkit::Grid1D& grid) {
  const auto mapf = zoo::make_mapf(ssm, proposal, aux);
  const GridContext ctx(mapf.model, grid);
  const std::size_t size = grid.size();
  std::vector<double> w(size);
  for (std::size_t i = 0; i < size; ++i) {
    const double x = grid.point(i);
    w[i] = std::exp(mapf.inferential_log_weight(n, model::StateView{&x, 1}));
  }
  const double wn = ctx.etahat_expect(n, w);
  const auto values = oracle::tabulate(phi, grid);
  std::vector<double> wphi(size);
  for (std::size_t i = 0; i < size; ++i) {
    w[i] /= wn;
    wphi[i] = w[i] * values[i];
  }
  const double phi_bar = ctx.etahat_expect(n, wphi);
  std::vector<double> psi(size);
  for (std::size_t i = 0; i < size; ++i) {
    psi[i] = w[i] * (values[i] - phi_bar);
  }
  return closed_form_variance(ctx, psi, n);
}

VarianceTerms fa_apf_variance(const zoo::LinearGaussianSSM& ssm, const model::TestFunction& phi, std::size_t n) {
  const LgssmPieces pieces(ssm, phi, n);
  const auto f0 = zoo::transition_kernel(pieces.ssm, 0);
  return pieces.marginal_terms(phi, [&](std::size_t k, double x) {
    if (k == 0) {
      return kernel_log_density(*f0, 0.0, x);
    }
    const auto& s = pieces.kt.steps[k];
    return probkit::normal_log_pdf(x, s.filt_mean, std::sqrt(s.filt_var));
  });
}

VarianceTerms pf_variance_quadrature(const zoo::LinearGaussianSSM& ssm, const zoo::Proposal& proposal,
                                     const model::TestFunction& phi, std::size_t n) {
  const LgssmPieces pieces(ssm, phi, n);
  const auto qs = proposal_kernels(pieces.ssm, proposal, n);
  const auto& nd = nodes();
  const auto& kt = pieces.kt;
  VarianceTerms out;
  out.filter_variance = pieces.filter_variance;
  for (std::size_t k = 0; k <= n; ++k) {
    const auto& st = kt.steps[k];
    const double sd = std::sqrt(st.smooth_var);
    const auto cg = oracle::conditional_forward(pieces.ssm, k, n);
    double s = 0.0;
    for (std::size_t i = 0; i < nd.z.size(); ++i) {
      const double x = st.smooth_mean + sd * nd.z[i];
      const double h = pieces.centered_forecast(phi, cg, x);
      if (h == 0.0) {
        continue;
      }
      const double lp = probkit::normal_log_pdf(x, st.smooth_mean, sd);
      double ratio = 0.0;
      if (k == 0) {
        ratio = std::exp(lp - kernel_log_density(*qs[0], 0.0, x));
      } else {
        // x_{k-1} | x_k, y_{1:k-1}: backward kernel of the filter at k - 1.
        const auto& prev = kt.steps[k - 1];
        const double gain = prev.filt_var * ssm.a / st.pred_var;
        const double bm = prev.filt_mean + gain * (x - st.pred_mean);
        const double bsd = std::sqrt(prev.filt_var - gain * gain * st.pred_var);
        const double fsd = std::sqrt(prev.filt_var);
        for (std::size_t j = 0; j < nd.z.size(); ++j) {
          const double xp = bm + bsd * nd.z[j];
          const double lb = probkit::normal_log_pdf(xp, bm, bsd);
          const double lf = probkit::normal_log_pdf(xp, prev.filt_mean, fsd);
          ratio += nd.w[j] * std::exp(lp + lb - lf - kernel_log_density(*qs[k], xp, x));
        }
      }
      s += nd.w[i] * ratio * h * h;
    }
    out.terms.push_back(s);
    out.total += s;
  }
  return out;
}

EmpiricalVariance empirical_asymptotic_variance(std::span<const double> estimates, std::size_t particles) {
  const std::size_t r = estimates.size();
  if (r < 2) {
    throw ConfigError("empirical variance needs at least two replicates");
  }
  const double rr = static_cast<double>(r);
  double mean = 0.0;
  for (const double e : estimates) {
    mean += e;
  }
  mean /= rr;
  double m2 = 0.0;
  double m4 = 0.0;
  for (const double e : estimates) {
    const double d = (e - mean) * (e - mean);
    m2 += d;
    m4 += d * d;
  }
  const double s2 = m2 / (rr - 1.0);
  m4 /= rr;
  const double var_s2 = std::max(0.0, (m4 - s2 * s2 * (rr - 3.0) / (rr - 1.0)) / rr);
  const double scale = static_cast<double>(particles);
  return {scale * s2, scale * std::sqrt(var_s2), r};
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::ordered:
      return "ordered";
    case Verdict::tied:
      return "tied";
    case Verdict::reversed:
      return "reversed";
  }
  return "reversed";
}

namespace {

std::string num(double x) { return std::isnan(x) ? std::string{} : fmt::format("{:.17g}", x); }

}  // namespace

void VarianceReport::write_csv(std::ostream& out) const {
  out << "method,step,phi,particles,replicates,vbar,v,se,verdict\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},\n", r.method, r.step, r.phi, r.particles, r.replicates, num(r.vbar),
                       num(r.v), num(r.se));
  }
  if (!rows.empty()) {
    out << fmt::format("pf_minus_mpf,{},{},{},{},{},,{},{}\n", rows.front().step, rows.front().phi,
                       rows.back().particles, rows.back().replicates, num(difference), num(pooled_se),
                       to_string(verdict));
  }
}

std::string VarianceReport::text() const {
  std::string s;
  for (const auto& r : rows) {
    s += fmt::format("{:<16} n={} phi={} vbar={:.6g}", r.method, r.step, r.phi, r.vbar);
    if (!std::isnan(r.v)) {
      s += fmt::format(" v={:.6g}", r.v);
    }
    if (r.replicates > 0) {
      s += fmt::format(" se={:.3g} (N={}, R={})", r.se, r.particles, r.replicates);
    }
    s += '\n';
  }
  s += fmt::format("PF - MPF = {:.6g} (pooled se {:.3g}): {}\n", difference, pooled_se, to_string(verdict));
  return s;
}

std::vector<double> replicate_estimates(const model::MarginalModel& model, const model::TestFunction& phi,
                                        std::size_t n, std::size_t particles, std::size_t replicates,
                                        probkit::SeededStream stream, bool standard, unsigned threads) {
  if (n > model.horizon()) {
    throw ConfigError("estimate step past the horizon");
  }
  std::vector<double> out(replicates);
  const auto mode = standard ? engines::WeightMode::ancestor : engines::WeightMode::marginal;
  probkit::parallel_chunks(replicates, 1, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      engines::SmcRunner runner(model, {.particles = particles}, {phi}, stream.split(r), mode);
      model::StepRecord rec;
      for (std::size_t k = 0; k <= n; ++k) {
        rec = runner.step();
      }
      out[r] = rec.pre[0];
    }
  });
  return out;
}

VarianceReport compare_variances(const zoo::LinearGaussianSSM& ssm, const zoo::Proposal& proposal,
                                 const model::TestFunction& phi, std::size_t n, const CompareOptions& options,
                                 probkit::SeededStream stream) {
  const auto short_ssm = ssm.truncated(n);
  const auto m = zoo::make_mpf(short_ssm, proposal);
  VarianceReport rep;
  const auto cor1 = mpf_variance_cor1(ssm, proposal, phi, n);
  const auto pfq = pf_variance_quadrature(ssm, proposal, phi, n);
  rep.rows.push_back({"mpf_quadrature", n, phi.name, 0, 0, cor1.total, cor1.post(), 0.0});
  rep.rows.push_back({"pf_quadrature", n, phi.name, 0, 0, pfq.total, pfq.post(), 0.0});

  const auto mpf_est =
      replicate_estimates(m, phi, n, options.particles, options.replicates, stream, false, options.threads);
  const auto pf_est =
      replicate_estimates(m, phi, n, options.particles, options.replicates, stream, true, options.threads);
  const auto em = empirical_asymptotic_variance(mpf_est, options.particles);
  const auto ep = empirical_asymptotic_variance(pf_est, options.particles);
  rep.rows.push_back({"mpf_empirical", n, phi.name, options.particles, em.replicates, em.value, kNaN, em.se});
  rep.rows.push_back({"pf_empirical", n, phi.name, options.particles, ep.replicates, ep.value, kNaN, ep.se});

  rep.difference = ep.value - em.value;
  rep.pooled_se = std::hypot(em.se, ep.se);
  if (mpf_est == pf_est || std::abs(rep.difference) < 2.0 * rep.pooled_se) {
    rep.verdict = Verdict::tied;
  } else if (rep.difference > 2.0 * rep.pooled_se) {
    rep.verdict = Verdict::ordered;
  } else {
    rep.verdict = Verdict::reversed;
  }
  return rep;
}

}  // namespace msmc::variance

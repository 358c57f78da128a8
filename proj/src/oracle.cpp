#include "msmc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

namespace msmc::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_trapezoid(std::span<const double> log_f, const probkit::Grid1D& grid) {
  std::vector<double> t(log_f.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = log_f[i] + std::log(grid.weight(i));
  }
  return probkit::fast_log_sum_exp(t);
}

}  // namespace

KalmanTrace kalman_filter(const zoo::LinearGaussianSSM& ssm) {
  ssm.validate();
  const std::size_t horizon = ssm.horizon();
  KalmanTrace out;
  out.steps.resize(horizon + 1);
  auto& s0 = out.steps[0];
  s0.pred_mean = s0.filt_mean = ssm.m0;
  s0.pred_var = s0.filt_var = ssm.s0 * ssm.s0;
  const double qx = ssm.sigma_x * ssm.sigma_x;
  const double ry = ssm.sigma_y * ssm.sigma_y;
  for (std::size_t n = 1; n <= horizon; ++n) {
    const auto& prev = out.steps[n - 1];
    auto& s = out.steps[n];
    s.pred_mean = ssm.a * prev.filt_mean;
    s.pred_var = ssm.a * ssm.a * prev.filt_var + qx;
    const double innov_var = ssm.c * ssm.c * s.pred_var + ry;
    const double resid = ssm.obs(n) - ssm.c * s.pred_mean;
    s.log_lik = probkit::normal_log_pdf(ssm.obs(n), ssm.c * s.pred_mean, std::sqrt(innov_var));
    const double gain = s.pred_var * ssm.c / innov_var;
    s.filt_mean = s.pred_mean + gain * resid;
    s.filt_var = s.pred_var * ry / innov_var;
    out.log_z += s.log_lik;
  }
  auto& last = out.steps[horizon];
  last.smooth_mean = last.filt_mean;
  last.smooth_var = last.filt_var;
  for (std::size_t k = horizon; k-- > 0;) {
    auto& s = out.steps[k];
    const auto& next = out.steps[k + 1];
    const double j = s.filt_var * ssm.a / next.pred_var;
    s.smooth_mean = s.filt_mean + j * (next.smooth_mean - next.pred_mean);
    s.smooth_var = s.filt_var + j * j * (next.smooth_var - next.pred_var);
  }
  return out;
}

ConditionalGaussian conditional_forward(const zoo::LinearGaussianSSM& ssm, std::size_t k, std::size_t n) {
  if (n < k || n > ssm.horizon()) {
    throw ConfigError("conditional_forward needs k <= n <= T");
  }
  ConditionalGaussian g;
  const double qx = ssm.sigma_x * ssm.sigma_x;
  const double ry = ssm.sigma_y * ssm.sigma_y;
  for (std::size_t t = k + 1; t <= n; ++t) {
    g.slope *= ssm.a;
    g.intercept *= ssm.a;
    const double pv = ssm.a * ssm.a * g.var + qx;
    const double innov = ssm.c * ssm.c * pv + ry;
    const double keep = ry / innov;  // 1 - gain * c
    const double gain = pv * ssm.c / innov;
    g.slope *= keep;
    g.intercept = keep * g.intercept + gain * ssm.obs(t);
    g.var = pv * keep;
  }
  return g;
}

probkit::Grid1D lgssm_grid(const zoo::LinearGaussianSSM& ssm, std::size_t count, double half_width) {
  const auto kt = kalman_filter(ssm);
  double lo = kInf;
  double hi = -kInf;
  for (const auto& s : kt.steps) {
    for (const auto& [m, v] : {std::pair{s.pred_mean, s.pred_var}, std::pair{s.filt_mean, s.filt_var},
                               std::pair{s.smooth_mean, s.smooth_var}}) {
      lo = std::min(lo, m - half_width * std::sqrt(v));
      hi = std::max(hi, m + half_width * std::sqrt(v));
    }
  }
  return probkit::Grid1D::uniform(lo, hi, count);
}

std::vector<double> GridDensity::density() const {
  std::vector<double> out(log_values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(log_values[i]);
  }
  return out;
}

double GridDensity::integral() const { return probkit::trapezoid_integrate(density(), grid); }

double GridDensity::expect(std::span<const double> f) const {
  const auto p = density();
  std::vector<double> fp(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    fp[i] = f[i] * p[i];
  }
  return probkit::trapezoid_integrate(fp, grid);
}

double GridDensity::mean() const {
  return expect(std::vector<double>(grid.points().begin(), grid.points().end())) / integral();
}

double GridDensity::variance() const {
  const double m = mean();
  std::vector<double> d(grid.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = (grid.point(i) - m) * (grid.point(i) - m);
  }
  return expect(d) / integral();
}

void GridDensity::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError(fmt::format("cannot write {}", path.string()));
  }
  out << "point,density\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out << fmt::format("{:.17g},{:.17g}\n", grid.point(i), std::exp(log_values[i]));
  }
}

std::vector<double> tabulate(const model::TestFunction& phi, const probkit::Grid1D& grid) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.point(i);
    out[i] = phi.fn(model::StateView{&x, 1});
  }
  return out;
}

GridFilterResult grid_filter(const model::MarginalModel& model, const probkit::Grid1D& grid,
                             const GridFilterOptions& options) {
  if (model.dim() != 1) {
    throw ConfigError("grid_filter needs a 1-D model");
  }
  const std::size_t size = grid.size();
  const auto points = model::Positions::from_values({grid.points().begin(), grid.points().end()});
  GridFilterResult out;

  const auto note_drift = [&](double drift, std::size_t n, const char* what) {
    out.worst_drift = std::max(out.worst_drift, drift);
    if (drift > options.drift_tolerance) {
      const auto msg = fmt::format("step {}: {} mass on the grid is off by {:.3g}", n, what, drift);
      if (options.throw_on_drift) {
        throw QuadratureError(msg);
      }
      out.warnings.push_back(msg);
    }
  };

  std::vector<double> log_gamma(size);
  std::vector<double> log_eta(size);
  std::vector<double> log_kpush(size);
  const double dummy = 0.0;
  const model::StateView none{&dummy, 1};

  for (std::size_t n = 0; n <= model.horizon(); ++n) {
    const auto& s = model.step(n);
    if (s.weight_rule) {
      throw ConfigError("grid_filter needs evaluable kernel densities");
    }
    if (n == 0) {
      for (std::size_t i = 0; i < size; ++i) {
        const auto x = points[i];
        log_kpush[i] = s.kernel->log_density(none, x);
        log_gamma[i] = s.potential->log_value(none, x) + log_kpush[i];
        log_eta[i] = s.proposal->log_density(none, x);
      }
    } else {
      const auto& prev = out.etahat.back();
      std::vector<double> c(size);
      for (std::size_t j = 0; j < size; ++j) {
        c[j] = std::log(grid.weight(j)) + prev.log_values[j];
      }
      std::vector<double> lp(size, 0.0);
      const bool separable = s.potential->separable();
      if (separable) {
        for (std::size_t j = 0; j < size; ++j) {
          lp[j] = s.potential->log_prev(points[j]);
        }
      }
      std::vector<double> lk(size);
      std::vector<double> lm(size);
      std::vector<double> t(size);
      for (std::size_t i = 0; i < size; ++i) {
        const auto x = points[i];
        s.kernel->log_density_from(points, x, lk);
        s.proposal->log_density_from(points, x, lm);
        for (std::size_t j = 0; j < size; ++j) {
          t[j] = c[j] + lk[j];
        }
        log_kpush[i] = probkit::fast_log_sum_exp(t);
        if (separable) {
          const double cur = s.potential->log_current(x);
          for (std::size_t j = 0; j < size; ++j) {
            t[j] = c[j] + lp[j] + lk[j];
          }
          log_gamma[i] = cur + probkit::fast_log_sum_exp(t);
        } else {
          for (std::size_t j = 0; j < size; ++j) {
            t[j] = c[j] + s.potential->log_value(points[j], x) + lk[j];
          }
          log_gamma[i] = probkit::fast_log_sum_exp(t);
        }
        for (std::size_t j = 0; j < size; ++j) {
          t[j] = c[j] + lm[j];
        }
        log_eta[i] = probkit::fast_log_sum_exp(t);
      }
    }
    note_drift(std::abs(std::exp(log_trapezoid(log_kpush, grid)) - 1.0), n, "K_n");
    note_drift(std::abs(std::exp(log_trapezoid(log_eta, grid)) - 1.0), n, "M_n");

    const double inc = log_trapezoid(log_gamma, grid);
    if (!std::isfinite(inc)) {
      throw ExtinctionError(fmt::format("grid_filter: no mass left at step {}", n));
    }
    GridDensity etahat{grid, log_gamma, true};
    for (double& v : etahat.log_values) {
      v -= inc;
    }
    std::vector<double> lg(size);
    for (std::size_t i = 0; i < size; ++i) {
      lg[i] = (log_gamma[i] == -kInf) ? -kInf : log_gamma[i] - log_eta[i];
    }
    out.log_increments.push_back(inc);
    out.log_z += inc;
    out.etahat.push_back(std::move(etahat));
    out.eta.push_back(GridDensity{grid, log_eta, false});
    out.log_g.push_back(std::move(lg));
  }
  return out;
}

double exact_marginal_weight(const model::MarginalModel& model, const GridDensity& etahat_prev, std::size_t n,
                             double x) {
  const auto& s = model.step(n);
  const model::StateView xv{&x, 1};
  if (n == 0) {
    const double dummy = 0.0;
    const model::StateView none{&dummy, 1};
    return std::exp(s.potential->log_value(none, xv) + s.kernel->log_density(none, xv) -
                    s.proposal->log_density(none, xv));
  }
  const auto& grid = etahat_prev.grid;
  std::vector<double> num(grid.size());
  std::vector<double> den(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double xp = grid.point(j);
    const model::StateView pv{&xp, 1};
    const double base = std::log(grid.weight(j)) + etahat_prev.log_values[j];
    num[j] = base + s.potential->log_value(pv, xv) + s.kernel->log_density(pv, xv);
    den[j] = base + s.proposal->log_density(pv, xv);
  }
  const double d = probkit::fast_log_sum_exp(den);
  if (!(d > -kInf)) {
    throw ExtinctionError(fmt::format("exact_marginal_weight: proposal mixture vanished at x = {}", x));
  }
  return std::exp(probkit::fast_log_sum_exp(num) - d);
}

}  // namespace msmc::oracle

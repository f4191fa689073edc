#include "csbp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "csbp/errors.hpp"
#include "csbp/semigroup.hpp"

namespace csbp {

namespace {

std::string time_label(const std::string& prefix, double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_t=%g", prefix.c_str(), t);
  return buf;
}

void require_nonempty(const Ensemble& ensemble) {
  if (ensemble.empty()) throw DomainError("ensemble is empty");
}

double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  const double upper = xs[mid];
  if (xs.size() % 2 == 1) return upper;
  const double lower = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double pairing(const PathRecord& path, std::size_t k, const Vector& f) {
  double s = 0.0;
  for (std::size_t j = 0; j < path.K; ++j) s += f(static_cast<Eigen::Index>(j)) * path.coord(k, j);
  return s;
}

}  // namespace

double additive_martingale(const PathRecord& path, const SpectralData& spec, std::size_t k) {
  return std::exp(-spec.Lambda * path.t_grid[k]) * pairing(path, k, spec.h);
}

SampleStats sup_power_mean(const Ensemble& ensemble, const SpectralData& spec, double t, double p) {
  require_nonempty(ensemble);
  std::vector<double> sups(ensemble.size());
  for (std::size_t n = 0; n < ensemble.size(); ++n) {
    const auto& path = ensemble[n];
    const std::size_t last = path.index_of(t);
    double s = 0.0;
    for (std::size_t k = 0; k <= last; ++k) s = std::max(s, additive_martingale(path, spec, k));
    sups[n] = std::pow(s, p);
  }
  return sample_stats(sups);
}

Report martingale_report(const Ensemble& ensemble, const SpectralData& spec,
                         const std::vector<double>& t_grid, double p) {
  require_nonempty(ensemble);
  const double w0 = additive_martingale(ensemble.front(), spec, 0);
  Report r;
  r.name = "martingale";
  r.estimate = w0;
  r.n_samples = static_cast<std::int64_t>(ensemble.size());
  r.add("W0", w0);
  r.add("p", p);
  for (double t : t_grid) {
    std::vector<double> w(ensemble.size());
    for (std::size_t n = 0; n < ensemble.size(); ++n) {
      w[n] = additive_martingale(ensemble[n], spec, ensemble[n].index_of(t));
    }
    const SampleStats st = sample_stats(w);
    r.checks.push_back(mc_check(time_label("mean_W", t), st.mean, st.std_error, w0, st.n));
    const SampleStats sup = sup_power_mean(ensemble, spec, t, p);
    r.add(time_label("sup_W^p_mean", t), sup.mean);
    r.add(time_label("sup_W^p_se", t), sup.std_error);
  }
  r.evaluate();
  return r;
}

LlnReport lln_report(const Ensemble& ensemble, const SpectralData& spec,
                     const std::vector<double>& t_grid, const Vector& f, const LlnOptions& opts) {
  require_nonempty(ensemble);
  if (t_grid.empty()) throw DomainError("lln_report needs a time grid");
  const double T = *std::max_element(t_grid.begin(), t_grid.end());
  const std::size_t K = spec.K();
  const double w0 = additive_martingale(ensemble.front(), spec, 0);
  const double delta = opts.survival_fraction * w0;

  std::vector<std::size_t> survivors;
  for (std::size_t n = 0; n < ensemble.size(); ++n) {
    if (additive_martingale(ensemble[n], spec, ensemble[n].index_of(T)) > delta) survivors.push_back(n);
  }
  if (survivors.size() < opts.min_survivors) {
    throw DegenerateError("only " + std::to_string(survivors.size()) +
                          " surviving paths; need at least " + std::to_string(opts.min_survivors));
  }

  LlnReport out;
  Report& r = out.report;
  r.name = "lln";
  r.n_samples = static_cast<std::int64_t>(survivors.size());
  r.estimate = static_cast<double>(survivors.size()) / static_cast<double>(ensemble.size());
  r.add("T", T);
  r.add("delta", delta);
  r.add("survivors", static_cast<double>(survivors.size()));

  // (a) cross-sectional regression
  const double fh = f.dot(spec.h_hat);
  const double scale = std::exp(-spec.Lambda * T);
  std::vector<double> ys, zs;
  for (std::size_t n : survivors) {
    const auto& path = ensemble[n];
    const std::size_t k = path.index_of(T);
    ys.push_back(scale * pairing(path, k, f));
    zs.push_back(fh * additive_martingale(path, spec, k));
  }
  const SampleStats sy = sample_stats(ys);
  const SampleStats sz = sample_stats(zs);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < ys.size(); ++k) {
    sxy += (zs[k] - sz.mean) * (ys[k] - sy.mean);
    sxx += (zs[k] - sz.mean) * (zs[k] - sz.mean);
    syy += (ys[k] - sy.mean) * (ys[k] - sy.mean);
  }
  Report reg;
  if (sxx <= 1e-300 * std::max(1.0, sz.mean * sz.mean)) {
    // No spread in W_T (deterministic model): compare the means instead. At
    // finite T they differ by O(e^{-gap T}), so the ratio tolerance applies.
    reg = mc_check("regression_slope", sy.mean / sz.mean, 0.0, 1.0, static_cast<std::int64_t>(ys.size()));
    reg.abs_tol = opts.ratio_tolerance;
    reg.evaluate();
    reg.add("degenerate_regression", 1.0);
  } else {
    const double slope = sxy / sxx;
    const double intercept = sy.mean - slope * sz.mean;
    double rss = 0.0, meat = 0.0;
    for (std::size_t k = 0; k < ys.size(); ++k) {
      const double e = ys[k] - intercept - slope * zs[k];
      const double dz = zs[k] - sz.mean;
      rss += e * e;
      meat += dz * dz * e * e;
    }
    const double ols_se = std::sqrt(rss / static_cast<double>(ys.size() - 2) / sxx);
    const double robust_se = std::sqrt(meat) / sxx;
    reg = mc_check("regression_slope", slope, robust_se, 1.0, static_cast<std::int64_t>(ys.size()));
    reg.add("ols_se", ols_se);
    reg.add("intercept", intercept);
    reg.add("correlation", syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 1.0);
  }
  r.checks.push_back(reg);

  // (b) median type ratios at T
  const double hat_total = spec.h_hat.sum();
  std::vector<double> targets(K);
  for (std::size_t i = 0; i < K; ++i) targets[i] = spec.h_hat(static_cast<Eigen::Index>(i)) / hat_total;
  for (std::size_t i = 0; i < K; ++i) {
    std::vector<double> ratios;
    ratios.reserve(survivors.size());
    for (std::size_t n : survivors) {
      const auto& path = ensemble[n];
      const std::size_t k = path.index_of(T);
      double total = 0.0;
      for (std::size_t j = 0; j < K; ++j) total += path.coord(k, j);
      ratios.push_back(path.coord(k, i) / total);
    }
    Report c;
    c.name = "median_ratio_type_" + std::to_string(i + 1);
    c.estimate = median(std::move(ratios));
    c.oracle = targets[i];
    c.se_multiplier = 0.0;
    c.abs_tol = opts.ratio_tolerance * targets[i];
    c.n_samples = static_cast<std::int64_t>(survivors.size());
    c.add("relative_error", std::abs(c.estimate - targets[i]) / targets[i]);
    r.checks.push_back(c);
  }

  // (c) trajectories and late-window deviation
  std::vector<double> late_devs;
  late_devs.reserve(survivors.size());
  for (std::size_t n : survivors) {
    const auto& path = ensemble[n];
    RatioTrajectory traj;
    traj.path = n;
    for (double t : t_grid) {
      const std::size_t k = path.index_of(t);
      double total = 0.0;
      for (std::size_t j = 0; j < K; ++j) total += path.coord(k, j);
      traj.t.push_back(t);
      for (std::size_t j = 0; j < K; ++j) {
        traj.ratios.push_back(total > 0.0 ? path.coord(k, j) / total
                                          : std::numeric_limits<double>::quiet_NaN());
      }
    }
    out.trajectories.push_back(std::move(traj));

    double worst = 0.0;
    const std::size_t end = path.index_of(T);
    for (std::size_t k = 0; k <= end; ++k) {
      if (path.t_grid[k] < 0.8 * T - 1e-12) continue;
      double total = 0.0;
      for (std::size_t j = 0; j < K; ++j) total += path.coord(k, j);
      if (total <= 0.0) {
        worst = std::numeric_limits<double>::infinity();
        break;
      }
      for (std::size_t j = 0; j < K; ++j) worst = std::max(worst, std::abs(path.coord(k, j) / total - targets[j]));
    }
    late_devs.push_back(worst);
  }
  r.add("late_window_median_deviation", median(std::move(late_devs)));
  r.evaluate();
  return out;
}

Report variance_report(const Ensemble& ensemble, const ModelConfig& cfg, const Vector& f, double T) {
  require_nonempty(ensemble);
  std::vector<double> xs(ensemble.size());
  for (std::size_t n = 0; n < ensemble.size(); ++n) {
    xs[n] = pairing(ensemble[n], ensemble[n].index_of(T), f);
  }
  const SampleStats st = sample_stats(xs);
  double m4 = 0.0;
  for (double x : xs) m4 += std::pow(x - st.mean, 4);
  m4 /= static_cast<double>(xs.size());
  const double var_se = std::sqrt(std::max(0.0, m4 - st.variance * st.variance) / static_cast<double>(xs.size()));
  const double oracle = second_moment(cfg, f, T, cfg.mu0);
  Report r = mc_check("variance", st.variance, var_se, oracle, st.n);
  r.add("T", T);
  r.add("mean", st.mean);
  return r;
}

Report laplace_report(const Ensemble& ensemble, const ModelConfig& cfg, const Vector& f, double T) {
  require_nonempty(ensemble);
  if ((f.array() < 0.0).any()) throw DomainError("laplace_report needs f >= 0");
  std::vector<double> xs(ensemble.size());
  for (std::size_t n = 0; n < ensemble.size(); ++n) {
    xs[n] = std::exp(-pairing(ensemble[n], ensemble[n].index_of(T), f));
  }
  const SampleStats st = sample_stats(xs);
  const double dt = std::min(0.01, T / 100.0);
  const OdeSolution ode = solve_log_laplace(cfg, f, T, dt);
  const double oracle = std::exp(-cfg.mu0.dot(ode.final()));
  Report r = mc_check("laplace", st.mean, st.std_error, oracle, st.n);
  r.add("T", T);
  r.add("ode_step", ode.step);
  r.add("ode_halving_error", ode.halving_error);
  return r;
}

Report jump_rate_report(const Ensemble& ensemble, const ModelConfig& cfg, double T) {
  require_nonempty(ensemble);
  for (const auto& path : ensemble) {
    if (std::abs(path.t_grid.back() - T) > 1e-9 * std::max(1.0, T)) {
      throw DomainError("jump counts cover the whole path; T must equal the simulated horizon");
    }
  }
  std::vector<double> counts(ensemble.size());
  for (std::size_t n = 0; n < ensemble.size(); ++n) counts[n] = static_cast<double>(ensemble[n].jump_count);
  const SampleStats st = sample_stats(counts);
  const double oracle = expected_jump_count(cfg, T, cfg.mu0);
  Report r = mc_check("jump_count", st.mean, st.std_error, oracle, st.n);
  r.add("T", T);
  return r;
}

}  // namespace csbp

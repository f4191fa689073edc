#pragma once

#include <cstddef>
#include <vector>

#include "csbp/linalg.hpp"
#include "csbp/model.hpp"
#include "csbp/report.hpp"
#include "csbp/simulator.hpp"
#include "csbp/spectral.hpp"

namespace csbp {

using Ensemble = std::vector<PathRecord>;

/// W_t = e^{-Lambda t} <h, X_t> for one path at recorded index k.
double additive_martingale(const PathRecord& path, const SpectralData& spec, std::size_t k);

/// Mean over paths of sup_{s <= t} W_s^p on the recorded grid.
SampleStats sup_power_mean(const Ensemble& ensemble, const SpectralData& spec, double t, double p);

/// Tests E[W_t] = <h, mu0> at each grid time (3 SE) and records the mean
/// running supremum of W^p up to each grid time as metadata.
Report martingale_report(const Ensemble& ensemble, const SpectralData& spec,
                         const std::vector<double>& t_grid, double p = 2.0);

/// Ratio trajectories X^{(i)}_t / sum_j X^{(j)}_t of one surviving path.
struct RatioTrajectory {
  std::size_t path = 0;
  std::vector<double> t;
  std::vector<double> ratios;  ///< row-major, t.size() x K; NaN where the path is empty
};

struct LlnReport {
  Report report;
  std::vector<RatioTrajectory> trajectories;
};

struct LlnOptions {
  /// Survival filter on W_T as a fraction of <h, mu0>.
  double survival_fraction = 1e-3;
  /// Relative tolerance of the median type-ratio test.
  double ratio_tolerance = 0.05;
  /// Fewer survivors than this raise DegenerateError.
  std::size_t min_survivors = 100;
};

/// Law-of-large-numbers diagnostics at T = max(t_grid) over paths with
/// W_T > delta:
///  (a) OLS slope of e^{-Lambda T} <f, X_T> on (f . h_hat) W_T, tested = 1 at 3 SE
///      (when W_T has no spread, the ratio of means within the ratio tolerance);
///  (b) median of X^{(i)}_T / sum_j X^{(j)}_T against h_hat_i / sum_j h_hat_j
///      within the relative ratio tolerance;
///  (c) per-path ratio trajectories on t_grid, plus the median over paths of
///      the late-window deviation sup_{t in [0.8T, T]} max_i |ratio_i - target_i|.
LlnReport lln_report(const Ensemble& ensemble, const SpectralData& spec,
                     const std::vector<double>& t_grid, const Vector& f,
                     const LlnOptions& opts = {});

/// Ensemble variance of <f, X_T> against second_moment(), SE by the delta
/// method on the fourth central moment.
Report variance_report(const Ensemble& ensemble, const ModelConfig& cfg, const Vector& f, double T);

/// mean e^{-<f, X_T>} against e^{-mu0 . V_T f}.
Report laplace_report(const Ensemble& ensemble, const ModelConfig& cfg, const Vector& f, double T);

/// Mean number of discrete jumps on [0, T] against expected_jump_count().
Report jump_rate_report(const Ensemble& ensemble, const ModelConfig& cfg, double T);

}  // namespace csbp

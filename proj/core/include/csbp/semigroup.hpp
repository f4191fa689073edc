#pragma once

#include <string>
#include <vector>

#include "csbp/linalg.hpp"
#include "csbp/model.hpp"
#include "csbp/spectral.hpp"

namespace csbp {

/// Trajectory of the log-Laplace flow t -> V_t f on a fixed grid.
struct OdeSolution {
  std::vector<double> t_grid;
  std::vector<Vector> V;  ///< clamped at 0; V.front() == f
  double step = 0.0;
  std::string method = "rk4";
  /// Grid values that came out negative and were clamped.
  int clamp_count = 0;
  /// Sup-norm difference at T between this solve and one with half the step,
  /// divided by max(1, |V_T|_inf).
  double halving_error = 0.0;

  const Vector& final() const { return V.back(); }
};

/// Solves dV/dt = -psi(., V), V_0 = f, with classical RK4 on a fixed grid and
/// checks it by step halving. Throws StepError if the halved solve differs
/// by more than 1e-6 at T (relative once |V_T| exceeds 1); DomainError if f has a negative entry or
/// dt > T/10.
OdeSolution solve_log_laplace(const ModelConfig& cfg, const Vector& f, double T, double dt);

/// (V_dt - V_{dt/2}) / (V_{dt/2} - V_{dt/4}) at T in sup norm; ~16 for RK4.
double richardson_ratio(const ModelConfig& cfg, const Vector& f, double T, double dt);

/// Mean semigroup P_T f from Picard iteration of the Feynman-Kac form
///   P_t f(i) = e^{-a_i t} f(i) + int_0^t e^{-a_i (t-s)} sum_j eta_ij P_s f(j) ds
/// with trapezoidal time quadrature on a grid of step dt. Throws
/// NoConvergence after 10 * ceil(e^{c0 T}) sweeps.
Vector mean_via_picard(const ModelConfig& cfg, const Vector& f, double T, double dt);

/// Var <f, X_T> under P_mu0:
///   int_0^T mu0^T M(s) [2 b (M(T-s)f)^2 + int (y . M(T-s)f)^2 Gamma(dy)] ds
/// by composite Simpson with step doubling. Throws QuadratureError if the
/// rule has not settled to 1e-10 (relative) at 2^14 intervals.
double second_moment(const ModelConfig& cfg, const Vector& f, double T, const Vector& mu0);

/// Expected number of simulated (discrete) jumps on [0, T]:
///   int_0^T sum_i (mu0^T M(s))_i rate_i ds.
double expected_jump_count(const ModelConfig& cfg, double T, const Vector& mu0);

}  // namespace csbp

#pragma once

#include <cstdint>
#include <vector>

#include "csbp/linalg.hpp"
#include "csbp/model.hpp"
#include "csbp/report.hpp"
#include "csbp/spectral.hpp"

namespace csbp {

/// The auxiliary (spine) process for a finite type space.
///
/// With no spatial motion, the h-transformed motion is constant; the
/// e_q-curtailment kills it at rate q(i) = sum_j eta_ij h_j / h_i, and each
/// killing is undone by a revival drawn from kappa(i, .). Piecing the copies
/// together gives a plain continuous-time Markov chain with generator G.
struct SpineGenerator {
  Vector q;
  Matrix kappa;  ///< row-stochastic
  Matrix G;      ///< G_ij = q_i kappa_ij (i != j), G_ii = -q_i (1 - kappa_ii)

  std::size_t K() const { return static_cast<std::size_t>(q.size()); }
};

struct HoldingInterval {
  double start = 0.0;
  double end = 0.0;
  std::size_t type = 0;
};

/// kappa(i, j) = h_j eta_ij / sum_l eta_il h_l when row i of eta is nonzero,
/// otherwise kappa(i, .) = delta_i.
SpineGenerator spine_generator(const ModelConfig& cfg, const SpectralData& spec);

/// Holding intervals of one spine trajectory on [0, T] started at i0.
std::vector<HoldingInterval> simulate_spine(const SpineGenerator& gen, std::size_t i0, double T,
                                            std::uint64_t seed);

/// Type occupied at time t by the trajectory `intervals`.
std::size_t spine_state_at(const std::vector<HoldingInterval>& intervals, double t);

/// Sup-norm residual of e^{tG} f against e^{-Lambda t} H^{-1} M(t) H f.
double many_to_one_identity_residual(const SpectralData& spec, const Matrix& A,
                                     const SpineGenerator& gen, const Vector& f, double t);

/// Compares the first-moment ratio (M(t)(f h))_{i0} / (M(t) h)_{i0} with a
/// Monte Carlo estimate of E_{i0}[f(spine_t)] over N spine paths, and checks
/// the exact identity against e^{tG} f to 1e-10.
Report many_to_one_gap(const ModelConfig& cfg, const SpectralData& spec,
                       const SpineGenerator& gen, const Vector& f, double t, std::size_t i0,
                       std::size_t N, std::uint64_t seed);

/// rho^T G = 0 with rho = h h_hat (tolerance 1e-12) and rho^T e^{tG} = rho^T
/// at t = 1 and t = 10.
Report stationary_check(const SpineGenerator& gen, const SpectralData& spec);

/// Occupation fractions of one long spine run on [0, T] against rho, with
/// batch-means standard errors.
Report occupation_report(const SpineGenerator& gen, const SpectralData& spec, std::size_t i0,
                         double T, std::uint64_t seed, std::size_t batches = 50);

}  // namespace csbp

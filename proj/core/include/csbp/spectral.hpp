#pragma once

#include <optional>
#include <vector>

#include "csbp/linalg.hpp"
#include "csbp/model.hpp"
#include "csbp/report.hpp"

namespace csbp {

/// Perron-Frobenius triple of the drift matrix A, normalized so that
/// h.h = 1 and h.h_hat = 1. `Lambda` is the principal eigenvalue (the
/// growth rate; lambda_1 = -Lambda).
struct SpectralData {
  double Lambda = 0.0;
  Vector h;
  Vector h_hat;
  /// Lambda minus the largest real part of the rest of the spectrum.
  /// Absent for K = 1.
  std::optional<double> gap;

  std::size_t K() const { return static_cast<std::size_t>(h.size()); }
  /// Invariant measure of the spine, rho_i = h_i * h_hat_i.
  Vector rho() const { return h.cwiseProduct(h_hat); }
};

/// A_ij = -a_i delta_ij + eta_ij.
Matrix drift_matrix(const ModelConfig& cfg);

/// Above this size the eigen-triple comes from power iteration.
inline constexpr Eigen::Index kDenseEigenLimit = 64;

/// Principal eigen-triple of A. Throws IrreducibilityError if the positive
/// off-diagonal pattern is not strongly connected and ConvergenceError if
/// the eigen-residual exceeds 1e-10 (relative).
SpectralData perron_frobenius(const Matrix& A);

/// M(t) = e^{tA}; throws DomainError for t < 0.
Matrix mean_matrix(const Matrix& A, double t);

/// Normalized kernel e^{-Lambda t} M(t)_ij / (h_i h_hat_j) with respect to rho.
double tilde_p(const SpectralData& spec, const Matrix& A, double t, std::size_t i, std::size_t j);
/// All entries of the normalized kernel at time t.
Matrix tilde_p_matrix(const SpectralData& spec, const Matrix& A, double t);

struct MixingProfile {
  std::vector<double> t;
  std::vector<double> deviation;  ///< max_{i,j} |tilde_p(t,i,j) - 1|
  /// Envelope constant C with deviation(t) ~ C e^{-gap t}; 0 when K = 1.
  double C = 0.0;
  double gap = 0.0;
};

/// Sup-deviation of the normalized kernel from 1 along an increasing grid of
/// positive times. C is fitted as the largest deviation(t) e^{gap t} among
/// grid points with 1 <= gap t <= 8 (the whole grid if none qualify).
MixingProfile mixing_profile(const SpectralData& spec, const Matrix& A,
                             const std::vector<double>& t_grid);

/// Checks the profile against its envelope: deviation(t) <= 2 C e^{-gap t}
/// wherever gap t >= 1 and the bound exceeds 1e-12, and deviation(t) < 1e-6
/// wherever gap t > 16.
Report mixing_report(const MixingProfile& profile);

/// Relative residuals |M(t) h - e^{Lambda t} h| / |e^{Lambda t} h| and the
/// same for h_hat^T M(t), each checked against `tol`.
Report eigen_identity_report(const SpectralData& spec, const Matrix& A,
                             const std::vector<double>& times, double tol = 1e-9);

/// c0 = max_i sum_j eta_ij + max_i max(-a_i, 0), the growth bound of the mean semigroup.
double growth_bound(const ModelConfig& cfg);

}  // namespace csbp

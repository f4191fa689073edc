#include "csbp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>

#include "csbp/errors.hpp"

namespace csbp {

namespace {

constexpr double kResidualTol = 1e-10;

Eigen::Index principal_index(const Eigen::VectorXcd& values) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < values.size(); ++k) {
    if (values(k).real() > values(best).real()) best = k;
  }
  return best;
}

// Principal eigenvector of A from a dense real Schur based solve.
Vector dense_principal_vector(const Matrix& A, double& lambda, std::optional<double>& gap) {
  Eigen::EigenSolver<Matrix> es(A, true);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed");
  const Eigen::VectorXcd values = es.eigenvalues();
  const Eigen::Index p = principal_index(values);
  lambda = values(p).real();
  if (values.size() > 1) {
    double second = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < values.size(); ++k) {
      if (k != p) second = std::max(second, values(k).real());
    }
    gap = lambda - second;
  }
  Vector v = es.eigenvectors().col(p).real();
  if (v.sum() < 0.0) v = -v;
  return v;
}

// Power iteration on the nonnegative shift A + sI.
Vector power_principal_vector(const Matrix& A, double& lambda) {
  const Eigen::Index n = A.rows();
  const double shift = std::max(0.0, -A.diagonal().minCoeff()) + 1.0;
  const Matrix B = A + shift * Matrix::Identity(n, n);
  Vector v = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  for (int it = 0; it < 100000; ++it) {
    Vector w = B * v;
    w.normalize();
    const double change = (w - v).lpNorm<Eigen::Infinity>();
    v = w;
    if (change < 1e-15) break;
  }
  lambda = v.dot(A * v) / v.dot(v);
  return v;
}

double relative_residual(const Matrix& A, const Vector& v, double lambda) {
  const double scale = std::max({norm_inf(A), std::abs(lambda), 1e-300}) * v.lpNorm<Eigen::Infinity>();
  return (A * v - lambda * v).lpNorm<Eigen::Infinity>() / scale;
}

}  // namespace

Matrix drift_matrix(const ModelConfig& cfg) {
  Matrix A = cfg.eta;
  A.diagonal() -= cfg.a;
  return A;
}

double growth_bound(const ModelConfig& cfg) {
  const double gamma_one = cfg.eta.rowwise().sum().maxCoeff();
  const double a_minus = (-cfg.a).cwiseMax(0.0).maxCoeff();
  return gamma_one + a_minus;
}

SpectralData perron_frobenius(const Matrix& A) {
  if (A.rows() != A.cols() || A.rows() == 0) throw DomainError("drift matrix must be square and nonempty");
  if (!strongly_connected(A)) {
    throw IrreducibilityError("off-diagonal part of the drift matrix is not irreducible");
  }
  const Eigen::Index n = A.rows();
  SpectralData out;
  if (n == 1) {
    out.Lambda = A(0, 0);
    out.h = Vector::Ones(1);
    out.h_hat = Vector::Ones(1);
    return out;
  }

  double lambda_right = 0.0;
  double lambda_left = 0.0;
  Vector h, h_hat;
  if (n <= kDenseEigenLimit) {
    std::optional<double> unused;
    h = dense_principal_vector(A, lambda_right, out.gap);
    h_hat = dense_principal_vector(A.transpose(), lambda_left, unused);
  } else {
    h = power_principal_vector(A, lambda_right);
    h_hat = power_principal_vector(A.transpose(), lambda_left);
    Eigen::EigenSolver<Matrix> es(A, false);
    const Eigen::VectorXcd values = es.eigenvalues();
    const Eigen::Index p = principal_index(values);
    double second = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < values.size(); ++k) {
      if (k != p) second = std::max(second, values(k).real());
    }
    out.gap = values(p).real() - second;
  }
  out.Lambda = lambda_right;

  h /= h.norm();
  h_hat /= h.dot(h_hat);
  out.h = h;
  out.h_hat = h_hat;

  if (!(h.array() > 0.0).all() || !(h_hat.array() > 0.0).all()) {
    throw ConvergenceError("principal eigenvectors are not strictly positive");
  }
  const double r_right = relative_residual(A, h, out.Lambda);
  const double r_left = relative_residual(A.transpose(), h_hat, out.Lambda);
  if (!(r_right <= kResidualTol) || !(r_left <= kResidualTol)) {
    throw ConvergenceError("eigen-residual " + std::to_string(std::max(r_right, r_left)) +
                           " exceeds 1e-10");
  }
  if (out.gap && *out.gap < 0.0) out.gap = 0.0;
  return out;
}

Matrix mean_matrix(const Matrix& A, double t) {
  if (!(t >= 0.0)) throw DomainError("mean_matrix needs t >= 0");
  if (t == 0.0) return Matrix::Identity(A.rows(), A.cols());
  return expm(t * A);
}

Matrix tilde_p_matrix(const SpectralData& spec, const Matrix& A, double t) {
  if (!(t > 0.0)) throw DomainError("tilde_p needs t > 0");
  // Scale inside the exponential so large Lambda t does not overflow M(t).
  const Eigen::Index n = A.rows();
  const Matrix scaled = expm(t * (A - spec.Lambda * Matrix::Identity(n, n)));
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = scaled(i, j) / (spec.h(i) * spec.h_hat(j));
  }
  return out;
}

double tilde_p(const SpectralData& spec, const Matrix& A, double t, std::size_t i, std::size_t j) {
  return tilde_p_matrix(spec, A, t)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

MixingProfile mixing_profile(const SpectralData& spec, const Matrix& A,
                             const std::vector<double>& t_grid) {
  MixingProfile out;
  out.gap = spec.gap.value_or(0.0);
  for (double t : t_grid) {
    if (!(t > 0.0)) throw DomainError("mixing_profile needs strictly positive times");
    const Matrix p = tilde_p_matrix(spec, A, t);
    out.t.push_back(t);
    out.deviation.push_back((p.array() - 1.0).abs().maxCoeff());
  }
  if (!spec.gap) return out;

  double C = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < out.t.size(); ++k) {
    const double gt = out.gap * out.t[k];
    if (gt >= 1.0 && gt <= 8.0) {
      C = std::max(C, out.deviation[k] * std::exp(gt));
      any = true;
    }
  }
  if (!any) {
    for (std::size_t k = 0; k < out.t.size(); ++k) {
      C = std::max(C, out.deviation[k] * std::exp(out.gap * out.t[k]));
    }
  }
  out.C = C;
  return out;
}

Report mixing_report(const MixingProfile& profile) {
  Report r;
  r.name = "mixing";
  r.estimate = profile.deviation.empty() ? 0.0 : profile.deviation.back();
  r.n_samples = static_cast<std::int64_t>(profile.t.size());
  r.add("C", profile.C);
  r.add("gap", profile.gap);
  for (std::size_t k = 0; k < profile.t.size(); ++k) {
    const double t = profile.t[k];
    const double dev = profile.deviation[k];
    const double gt = profile.gap * t;
    char label[64];
    if (profile.gap == 0.0) {
      // K = 1: the kernel is identically 1
      std::snprintf(label, sizeof label, "exact_t=%g", t);
      Report c;
      c.name = label;
      c.estimate = dev;
      c.oracle = 0.0;
      c.se_multiplier = 0.0;
      c.abs_tol = 1e-12;
      c.n_samples = 1;
      r.checks.push_back(c);
      continue;
    }
    const double bound = 2.0 * profile.C * std::exp(-gt);
    if (gt >= 1.0 && bound > 1e-12) {
      std::snprintf(label, sizeof label, "envelope_t=%g", t);
      Report c;
      c.name = label;
      c.estimate = dev;
      c.oracle = 0.0;
      c.se_multiplier = 0.0;
      c.abs_tol = bound;
      c.n_samples = 1;
      r.checks.push_back(c);
    }
    if (gt > 16.0) {
      std::snprintf(label, sizeof label, "below_1e-6_t=%g", t);
      Report c;
      c.name = label;
      c.estimate = dev;
      c.oracle = 0.0;
      c.se_multiplier = 0.0;
      c.abs_tol = 1e-6;
      c.n_samples = 1;
      r.checks.push_back(c);
    }
  }
  r.evaluate();
  return r;
}

Report eigen_identity_report(const SpectralData& spec, const Matrix& A,
                             const std::vector<double>& times, double tol) {
  Report r;
  r.name = "eigen_identity";
  r.estimate = spec.Lambda;
  r.n_samples = static_cast<std::int64_t>(times.size());
  for (double t : times) {
    const Matrix M = mean_matrix(A, t);
    const double growth = std::exp(spec.Lambda * t);
    const Vector right = growth * spec.h;
    const Vector left = growth * spec.h_hat;
    char label[64];
    Report c;
    c.oracle = 0.0;
    c.se_multiplier = 0.0;
    c.abs_tol = tol;
    c.n_samples = 1;
    std::snprintf(label, sizeof label, "right_t=%g", t);
    c.name = label;
    c.estimate = (M * spec.h - right).norm() / right.norm();
    r.checks.push_back(c);
    std::snprintf(label, sizeof label, "left_t=%g", t);
    c.name = label;
    c.estimate = (M.transpose() * spec.h_hat - left).norm() / left.norm();
    r.checks.push_back(c);
  }
  r.evaluate();
  return r;
}

}  // namespace csbp

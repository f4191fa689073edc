#include "csbp/semigroup.hpp"

#include <cmath>
#include <functional>

#include "csbp/errors.hpp"

namespace csbp {

namespace {

Vector psi_vector(const ModelConfig& cfg, const Vector& u) {
  Vector out(u.size());
  for (std::size_t i = 0; i < cfg.K(); ++i) out(static_cast<Eigen::Index>(i)) = psi_unchecked(cfg, i, u);
  return out;
}

long step_count(double T, double dt) {
  return std::max(1L, std::lround(T / dt));
}

// RK4 on [0, T] with n equal steps; optional sink for every grid value.
Vector rk4(const ModelConfig& cfg, const Vector& f, double T, long n,
           const std::function<void(double, const Vector&)>& sink = {}) {
  const double h = T / static_cast<double>(n);
  Vector v = f;
  if (sink) sink(0.0, v);
  for (long k = 0; k < n; ++k) {
    const Vector k1 = -psi_vector(cfg, v);
    const Vector k2 = -psi_vector(cfg, v + 0.5 * h * k1);
    const Vector k3 = -psi_vector(cfg, v + 0.5 * h * k2);
    const Vector k4 = -psi_vector(cfg, v + h * k3);
    v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (sink) sink(static_cast<double>(k + 1) * h, v);
  }
  return v;
}

void check_ode_inputs(const ModelConfig& cfg, const Vector& f, double T, double dt) {
  if (static_cast<std::size_t>(f.size()) != cfg.K()) throw DomainError("f has wrong dimension");
  if ((f.array() < 0.0).any()) throw DomainError("log-Laplace flow needs f >= 0");
  if (!(T > 0.0)) throw DomainError("horizon must be positive");
  if (!(dt > 0.0) || dt > T / 10.0 * (1.0 + 1e-12)) throw DomainError("need 0 < dt <= T/10");
}

// Composite Simpson over [0, T] for s -> integrand(row mu0^T M(s), column M(T-s) g0).
double simpson_bilinear(const Matrix& A, double T, const Vector& mu0, const Vector& g0,
                        const std::function<double(const Vector&, const Vector&)>& integrand) {
  double previous = 0.0;
  for (long n = 16; n <= (1L << 14); n *= 2) {
    const double h = T / static_cast<double>(n);
    const Matrix E = expm(h * A);
    std::vector<Vector> right(static_cast<std::size_t>(n + 1));
    right[static_cast<std::size_t>(n)] = g0;
    for (long k = n - 1; k >= 0; --k) right[static_cast<std::size_t>(k)] = E * right[static_cast<std::size_t>(k + 1)];
    Vector left = mu0;
    double sum = 0.0;
    for (long k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      sum += w * integrand(left, right[static_cast<std::size_t>(k)]);
      left = E.transpose() * left;
    }
    const double value = sum * h / 3.0;
    if (n > 16 && std::abs(value - previous) <= 1e-10 * std::abs(value) + 1e-300) return value;
    previous = value;
  }
  throw QuadratureError("Simpson rule did not settle within 2^14 intervals");
}

}  // namespace

OdeSolution solve_log_laplace(const ModelConfig& cfg, const Vector& f, double T, double dt) {
  check_ode_inputs(cfg, f, T, dt);
  const long n = step_count(T, dt);
  OdeSolution sol;
  sol.step = T / static_cast<double>(n);
  sol.t_grid.reserve(static_cast<std::size_t>(n + 1));
  sol.V.reserve(static_cast<std::size_t>(n + 1));
  const Vector end = rk4(cfg, f, T, n, [&](double t, const Vector& v) {
    sol.t_grid.push_back(t);
    if ((v.array() < 0.0).any()) ++sol.clamp_count;
    sol.V.push_back(v.cwiseMax(0.0));
  });
  const Vector half = rk4(cfg, f, T, 2 * n);
  sol.halving_error = (end - half).lpNorm<Eigen::Infinity>() / std::max(1.0, end.lpNorm<Eigen::Infinity>());
  if (!(sol.halving_error <= 1e-6)) {
    throw StepError("step halving changed V_T by " + std::to_string(sol.halving_error) +
                    " (> 1e-6); reduce dt");
  }
  return sol;
}

double richardson_ratio(const ModelConfig& cfg, const Vector& f, double T, double dt) {
  check_ode_inputs(cfg, f, T, dt);
  const long n = step_count(T, dt);
  const Vector v1 = rk4(cfg, f, T, n);
  const Vector v2 = rk4(cfg, f, T, 2 * n);
  const Vector v4 = rk4(cfg, f, T, 4 * n);
  return (v1 - v2).lpNorm<Eigen::Infinity>() / (v2 - v4).lpNorm<Eigen::Infinity>();
}

Vector mean_via_picard(const ModelConfig& cfg, const Vector& f, double T, double dt) {
  if (static_cast<std::size_t>(f.size()) != cfg.K()) throw DomainError("f has wrong dimension");
  if (!(T >= 0.0) || !(dt > 0.0)) throw DomainError("need T >= 0 and dt > 0");
  if (T == 0.0) return f;
  const long n = step_count(T, dt);
  const double h = T / static_cast<double>(n);
  const auto N = static_cast<std::size_t>(n + 1);

  const Vector decay_step = (-cfg.a * h).array().exp();
  std::vector<Vector> free(N);
  free[0] = f;
  for (std::size_t k = 1; k < N; ++k) free[k] = free[k - 1].cwiseProduct(decay_step);

  std::vector<Vector> current = free;
  std::vector<Vector> next(N);
  const double c0 = growth_bound(cfg);
  const long max_sweeps = 10L * static_cast<long>(std::ceil(std::exp(c0 * T)));

  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    Vector integral = Vector::Zero(f.size());
    Vector g_prev = cfg.eta * current[0];
    next[0] = free[0];
    double diff = 0.0;
    double scale = 1.0;
    for (std::size_t k = 1; k < N; ++k) {
      const Vector g = cfg.eta * current[k];
      integral = (integral + 0.5 * h * g_prev).cwiseProduct(decay_step) + 0.5 * h * g;
      next[k] = free[k] + integral;
      diff = std::max(diff, (next[k] - current[k]).lpNorm<Eigen::Infinity>());
      scale = std::max(scale, next[k].lpNorm<Eigen::Infinity>());
      g_prev = g;
    }
    current.swap(next);
    if (diff < 1e-10 * scale) return current.back();
  }
  throw NoConvergence("Picard iteration of the mean equation did not converge in " +
                      std::to_string(max_sweeps) + " sweeps");
}

double second_moment(const ModelConfig& cfg, const Vector& f, double T, const Vector& mu0) {
  if ((f.array() < 0.0).any()) throw DomainError("second_moment needs f >= 0");
  if (!(T >= 0.0)) throw DomainError("horizon must be nonnegative");
  if (T == 0.0) return 0.0;
  const Matrix A = drift_matrix(cfg);
  const std::size_t K = cfg.K();
  return simpson_bilinear(A, T, mu0, f, [&](const Vector& mass, const Vector& g) {
    double total = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (mass(ii) == 0.0) continue;
      const double noise = 2.0 * cfg.b(ii) * g(ii) * g(ii) + cfg.gamma[i].quadratic_moment(g);
      total += mass(ii) * noise;
    }
    return total;
  });
}

double expected_jump_count(const ModelConfig& cfg, double T, const Vector& mu0) {
  if (!(T >= 0.0)) throw DomainError("horizon must be nonnegative");
  if (T == 0.0) return 0.0;
  const Matrix A = drift_matrix(cfg);
  Vector rates(static_cast<Eigen::Index>(cfg.K()));
  for (std::size_t i = 0; i < cfg.K(); ++i) rates(static_cast<Eigen::Index>(i)) = cfg.gamma[i].discrete_rate();
  const Vector ones = Vector::Ones(rates.size());
  return simpson_bilinear(A, T, mu0, ones,
                          [&](const Vector& mass, const Vector&) { return mass.dot(rates); });
}

}  // namespace csbp

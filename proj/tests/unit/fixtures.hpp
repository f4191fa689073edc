#pragma once

#include <cmath>
#include <random>

#include "csbp/model.hpp"

namespace csbp::testing {

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

inline JumpMeasure atom(double rate, Vector jump) {
  return JumpMeasure(FiniteAtoms{{Atom{rate, std::move(jump)}}});
}

// One-type model with no jumps.
inline ModelConfig one_type(double a, double b, double mu0 = 1.0) {
  ModelConfig cfg;
  cfg.a = vec({a});
  cfg.b = vec({b});
  cfg.eta = Matrix::Zero(1, 1);
  cfg.gamma = {JumpMeasure::none()};
  cfg.mu0 = vec({mu0});
  return cfg;
}

// Asymmetric two-type model used throughout the acceptance suite.
inline ModelConfig reference_model() {
  ModelConfig cfg;
  cfg.a = vec({-0.5, -0.2});
  cfg.b = vec({0.3, 0.3});
  cfg.eta.resize(2, 2);
  cfg.eta << 0.0, 0.3, 0.1, 0.0;
  cfg.gamma = {atom(0.5, vec({0.4, 0.4})), atom(0.2, vec({0.4, 0.4}))};
  cfg.mu0 = vec({1.0, 1.0});
  return cfg;
}

inline ModelConfig deterministic_model() {
  ModelConfig cfg = reference_model();
  cfg.b.setZero();
  cfg.gamma = {JumpMeasure::none(), JumpMeasure::none()};
  return cfg;
}

// Random irreducible K-type model: full positive eta off the diagonal,
// small atoms that respect the first-moment bound.
inline ModelConfig random_model(std::size_t K, std::mt19937_64& rng, bool with_jumps = true) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto k = static_cast<Eigen::Index>(K);
  ModelConfig cfg;
  cfg.a.resize(k);
  cfg.b.resize(k);
  cfg.eta = Matrix::Zero(k, k);
  cfg.mu0.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    cfg.a(i) = U(rng) - 0.5;
    cfg.b(i) = 0.5 * U(rng);
    cfg.mu0(i) = 0.5 + U(rng);
    for (Eigen::Index j = 0; j < k; ++j) {
      if (i != j) cfg.eta(i, j) = 0.05 + 0.4 * U(rng);
    }
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!with_jumps) {
      cfg.gamma.push_back(JumpMeasure::none());
      continue;
    }
    Vector y(k);
    double rate = 0.2 + U(rng);
    for (Eigen::Index j = 0; j < k; ++j) y(j) = 0.1 + 0.5 * U(rng);
    for (Eigen::Index j = 0; j < k; ++j) {
      if (j != i) rate = std::min(rate, 0.9 * cfg.eta(i, j) / y(j));
    }
    cfg.gamma.push_back(atom(rate, y));
  }
  return cfg;
}

}  // namespace csbp::testing

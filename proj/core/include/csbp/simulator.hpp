#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "csbp/linalg.hpp"
#include "csbp/model.hpp"

namespace csbp {

/// Jumps of one kind produced by one source type within one time step.
/// For atoms, `count` identical jumps of size `jump` arrived; power-law
/// jumps are logged one by one with count 1.
struct JumpEvent {
  double t = 0.0;  ///< start of the step in which the jumps arrived
  std::size_t source = 0;
  Vector jump;
  std::uint64_t count = 1;
};

struct PathRecord {
  std::vector<double> t_grid;
  std::vector<double> states;  ///< row-major, t_grid.size() x K
  std::size_t K = 0;
  std::vector<JumpEvent> jumps;  ///< empty unless jump logging was requested
  std::uint64_t jump_count = 0;  ///< total number of discrete jumps
  std::uint64_t seed = 0;
  std::optional<double> extinct_at;

  std::size_t size() const { return t_grid.size(); }
  Vector state(std::size_t k) const;
  double coord(std::size_t k, std::size_t j) const { return states[k * K + j]; }
  /// Index of grid time t; throws DomainError if t is not on the grid.
  std::size_t index_of(double t) const;
  Vector state_at(double t) const { return state(index_of(t)); }
};

struct SimOptions {
  /// Store every n-th step (the final time is always on the stored grid).
  long record_every = 1;
  bool log_jumps = true;
};

/// Total mass below which a path is sent to the trap at 0.
inline constexpr double kExtinctionThreshold = 1e-12;

/// One sample path on [0, T] with step dt.
///
/// Per step, starting from x >= 0 (row vectors, E_h = e^{dt A / 2}):
///   y <- x E_h                              (half drift)
///   D <- sqrt(2 b_j y_j dt) Z_j             (square-root diffusion)
///        + N_ik y_k, N_ik ~ Poisson(y_i w_k dt)   (jumps, intensity frozen at y)
///        + d_i sqrt(y_i v_i dt) Z'_i        (power law: Gaussian small jumps)
///   x <- (y - dt sum_i y_i m_i + D) E_h     (m_i = mean of Gamma_i's simulated jumps)
/// so that E[x_next] = x e^{dt A} exactly; noise is injected at the midpoint.
/// then negative coordinates are clipped to 0 and a total mass below
/// kExtinctionThreshold is absorbed at 0.
///
/// Throws ConfigError if dt > 0.01, dt |Lambda| > 0.1, T is not a multiple of
/// dt, or mu0 has no positive entry; SchemaError if the model is invalid.
PathRecord simulate_path(const ModelConfig& cfg, double T, double dt, std::uint64_t seed,
                         const SimOptions& opts = {});

/// N independent paths; path n uses derive_seed(base_seed, n). The result is
/// the same for every worker count.
std::vector<PathRecord> simulate_ensemble(const ModelConfig& cfg, double T, double dt,
                                          std::size_t N, std::uint64_t base_seed,
                                          const SimOptions& opts = {}, unsigned workers = 1);

}  // namespace csbp

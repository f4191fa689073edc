#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "csbp/linalg.hpp"
#include "csbp/report.hpp"

namespace csbp {

/// One atom of a finite jump measure: jumps of size `jump` arrive at rate
/// `rate` per unit parent mass per unit time.
struct Atom {
  double rate = 0.0;
  Vector jump;
};

struct FiniteAtoms {
  std::vector<Atom> atoms;
};

/// Density c * u^(-1-theta) du on (0, u_max], pushed forward by u -> u * direction.
/// Jumps with u > epsilon are simulated exactly; the rest are replaced by a
/// compensated Gaussian term.
struct PowerLaw {
  double c = 0.0;
  double theta = 1.5;
  Vector direction;
  double u_max = 1.0;
  double epsilon = 1e-3;
};

/// Offspring-jump measure Gamma_i of one parent type.
class JumpMeasure {
 public:
  JumpMeasure() = default;
  JumpMeasure(FiniteAtoms atoms) : repr_(std::move(atoms)) {}
  JumpMeasure(PowerLaw law) : repr_(std::move(law)) {}

  static JumpMeasure none() { return JumpMeasure(); }

  bool is_atoms() const { return std::holds_alternative<FiniteAtoms>(repr_); }
  bool is_power_law() const { return std::holds_alternative<PowerLaw>(repr_); }
  const FiniteAtoms& atoms() const { return std::get<FiniteAtoms>(repr_); }
  const PowerLaw& power_law() const { return std::get<PowerLaw>(repr_); }

  /// True when the measure carries no mass.
  bool empty() const;

  /// Integral of y_j. Infinite for a power law with a component along j.
  double first_moment(std::size_t j) const;

  /// Integral of (exp(-u.y) - 1 + u.y). Defined for any real u; the model
  /// only guarantees meaning for u >= 0.
  double compensated_laplace(const Vector& u) const;

  /// Integral of (y.g)^2, the jump contribution to the quadratic variation.
  double quadratic_moment(const Vector& g) const;

  /// Integral of (y.h)^p. Infinite for a power law when p <= theta.
  double p_moment(const Vector& h, double p) const;

  /// Total rate of the jumps that the simulator draws one by one.
  double discrete_rate() const;

  /// Integral of y over the simulated (discrete) jumps.
  Vector discrete_mean(std::size_t K) const;

  /// Integral of u^2 over the small-jump region (0, epsilon] of a power law,
  /// i.e. the variance rate of the Gaussian substitute along `direction`.
  double small_jump_variance() const;

  /// Number of types the jump vectors live in, or 0 if the measure is empty.
  std::size_t dimension() const;

  /// Invariant violations of the measure itself (source type `i`, 0-based).
  std::vector<std::string> violations(std::size_t i, std::size_t K) const;

 private:
  std::variant<FiniteAtoms, PowerLaw> repr_;
};

/// K-type branching mechanism
///   psi(i, u) = a_i u_i + b_i u_i^2 - u . eta_i + int (e^{-u.y} - 1 + u.y) Gamma_i(dy)
/// together with the initial mass vector.
struct ModelConfig {
  Vector a;
  Vector b;
  Matrix eta;
  std::vector<JumpMeasure> gamma;
  Vector mu0;

  std::size_t K() const { return static_cast<std::size_t>(a.size()); }
};

/// Every violated standing assumption, 1-based indices in the text. Empty iff
/// the model is admissible.
std::vector<std::string> validate_model(const ModelConfig& cfg);

/// Throws SchemaError listing all violations if the model is not admissible.
void require_valid(const ModelConfig& cfg);

/// psi(i, u); throws DomainError if u has a negative entry.
double evaluate_psi(const ModelConfig& cfg, std::size_t i, const Vector& u);

/// psi(i, u) without the cone check (used inside Runge-Kutta stages).
double psi_unchecked(const ModelConfig& cfg, std::size_t i, const Vector& u);

/// Reports max_i h_i^{-1} int (y.h)^p Gamma_i(dy); finite value means the
/// p-th moment condition holds for this h.
Report check_moment_conditions(const ModelConfig& cfg, double p, const Vector& h);

/// e^{-x} - 1 + x without cancellation for small x.
double compensated_exp(double x);

}  // namespace csbp

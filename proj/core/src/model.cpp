#include "csbp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "csbp/errors.hpp"
#include "csbp/quadrature.hpp"

namespace csbp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMomentSlack = 1e-12;

std::string idx(std::size_t i) { return std::to_string(i + 1); }

// int_0^{u_max} F(u) c u^{-1-theta} du for F(u) ~ u^m at 0 with m > theta.
// The substitution u = v^{1/(m - theta)} makes the integrand bounded at 0.
template <class F>
double power_law_integral(const PowerLaw& pl, double m, F&& integrand) {
  if (pl.c == 0.0) return 0.0;
  const double alpha = 1.0 / (m - pl.theta);
  const double v_max = std::pow(pl.u_max, 1.0 / alpha);
  auto g = [&](double v) {
    if (v <= 0.0) return 0.0;
    const double u = std::pow(v, alpha);
    return pl.c * alpha * integrand(u) * std::pow(v, -alpha * pl.theta - 1.0);
  };
  return integrate(g, 0.0, v_max, {.rel_tol = 1e-10, .abs_tol = 1e-300, .max_intervals = 4000})
      .value;
}

}  // namespace

double compensated_exp(double x) {
  if (std::abs(x) < 1e-3) {
    // x^2/2 - x^3/6 + x^4/24 - x^5/120
    return x * x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)));
  }
  return std::expm1(-x) + x;
}

bool JumpMeasure::empty() const {
  if (is_atoms()) {
    const auto& list = atoms().atoms;
    return std::all_of(list.begin(), list.end(), [](const Atom& a) { return a.rate == 0.0; });
  }
  return power_law().c == 0.0;
}

std::size_t JumpMeasure::dimension() const {
  if (is_atoms()) {
    const auto& list = atoms().atoms;
    return list.empty() ? 0 : static_cast<std::size_t>(list.front().jump.size());
  }
  return static_cast<std::size_t>(power_law().direction.size());
}

double JumpMeasure::first_moment(std::size_t j) const {
  if (is_atoms()) {
    double sum = 0.0;
    for (const auto& a : atoms().atoms) sum += a.rate * a.jump(static_cast<Eigen::Index>(j));
    return sum;
  }
  const auto& pl = power_law();
  if (pl.c == 0.0 || pl.direction(static_cast<Eigen::Index>(j)) == 0.0) return 0.0;
  return kInf;
}

double JumpMeasure::compensated_laplace(const Vector& u) const {
  if (is_atoms()) {
    double sum = 0.0;
    for (const auto& a : atoms().atoms) sum += a.rate * compensated_exp(u.dot(a.jump));
    return sum;
  }
  const auto& pl = power_law();
  const double s = pl.direction.dot(u);
  if (s == 0.0) return 0.0;
  return power_law_integral(pl, 2.0, [s](double x) { return compensated_exp(x * s); });
}

double JumpMeasure::quadratic_moment(const Vector& g) const {
  if (is_atoms()) {
    double sum = 0.0;
    for (const auto& a : atoms().atoms) {
      const double proj = a.jump.dot(g);
      sum += a.rate * proj * proj;
    }
    return sum;
  }
  const auto& pl = power_law();
  const double s = pl.direction.dot(g);
  if (s == 0.0) return 0.0;
  return power_law_integral(pl, 2.0, [s](double x) { return x * x * s * s; });
}

double JumpMeasure::p_moment(const Vector& h, double p) const {
  if (is_atoms()) {
    double sum = 0.0;
    for (const auto& a : atoms().atoms) sum += a.rate * std::pow(a.jump.dot(h), p);
    return sum;
  }
  const auto& pl = power_law();
  const double s = pl.direction.dot(h);
  if (pl.c == 0.0 || s == 0.0) return 0.0;
  if (p <= pl.theta) return kInf;
  return power_law_integral(pl, p, [s, p](double x) { return std::pow(x * s, p); });
}

double JumpMeasure::discrete_rate() const {
  if (is_atoms()) {
    double sum = 0.0;
    for (const auto& a : atoms().atoms) sum += a.rate;
    return sum;
  }
  const auto& pl = power_law();
  return pl.c * (std::pow(pl.epsilon, -pl.theta) - std::pow(pl.u_max, -pl.theta)) / pl.theta;
}

Vector JumpMeasure::discrete_mean(std::size_t K) const {
  Vector m = Vector::Zero(static_cast<Eigen::Index>(K));
  if (is_atoms()) {
    for (const auto& a : atoms().atoms) m += a.rate * a.jump;
    return m;
  }
  const auto& pl = power_law();
  const double mass = pl.c *
                      (std::pow(pl.epsilon, 1.0 - pl.theta) - std::pow(pl.u_max, 1.0 - pl.theta)) /
                      (pl.theta - 1.0);
  return mass * pl.direction;
}

double JumpMeasure::small_jump_variance() const {
  if (is_atoms()) return 0.0;
  const auto& pl = power_law();
  return pl.c * std::pow(pl.epsilon, 2.0 - pl.theta) / (2.0 - pl.theta);
}

std::vector<std::string> JumpMeasure::violations(std::size_t i, std::size_t K) const {
  std::vector<std::string> out;
  const std::string who = "Γ_" + idx(i);
  if (is_atoms()) {
    const auto& list = atoms().atoms;
    for (std::size_t k = 0; k < list.size(); ++k) {
      const auto& a = list[k];
      const std::string atom = who + " atom " + idx(k);
      if (static_cast<std::size_t>(a.jump.size()) != K) {
        out.push_back(atom + " has jump dimension " + std::to_string(a.jump.size()) +
                      ", expected " + std::to_string(K));
        continue;
      }
      if (!(a.rate >= 0.0) || !std::isfinite(a.rate)) out.push_back(atom + " rate must be nonnegative and finite");
      if ((a.jump.array() < 0.0).any()) out.push_back(atom + " jump has a negative entry");
      if ((a.jump.array() == 0.0).all()) out.push_back(atom + " jump is the zero vector");
    }
    return out;
  }
  const auto& pl = power_law();
  if (static_cast<std::size_t>(pl.direction.size()) != K) {
    out.push_back(who + " direction has dimension " + std::to_string(pl.direction.size()) +
                  ", expected " + std::to_string(K));
    return out;
  }
  if (!(pl.c >= 0.0)) out.push_back(who + " c must be nonnegative");
  if (!(pl.theta > 1.0 && pl.theta < 2.0)) out.push_back(who + " theta must lie in (1,2)");
  if ((pl.direction.array() < 0.0).any()) out.push_back(who + " direction has a negative entry");
  if ((pl.direction.array() == 0.0).all()) out.push_back(who + " direction is the zero vector");
  if (!(pl.u_max > 0.0)) out.push_back(who + " u_max must be positive");
  if (!(pl.epsilon > 0.0 && pl.epsilon < pl.u_max)) out.push_back(who + " epsilon must lie in (0, u_max)");
  return out;
}

std::vector<std::string> validate_model(const ModelConfig& cfg) {
  std::vector<std::string> out;
  const std::size_t K = cfg.K();
  const auto k = static_cast<Eigen::Index>(K);
  if (K == 0) {
    out.emplace_back("K must be positive");
    return out;
  }
  if (cfg.b.size() != k) out.push_back("b has length " + std::to_string(cfg.b.size()) + ", expected " + std::to_string(K));
  if (cfg.mu0.size() != k) out.push_back("mu0 has length " + std::to_string(cfg.mu0.size()) + ", expected " + std::to_string(K));
  if (cfg.eta.rows() != k || cfg.eta.cols() != k) out.push_back("eta must be " + std::to_string(K) + "x" + std::to_string(K));
  if (cfg.gamma.size() != K) out.push_back("gamma must list " + std::to_string(K) + " measures");
  if (!out.empty()) return out;

  for (std::size_t i = 0; i < K; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (!std::isfinite(cfg.a(ii))) out.push_back("a[" + idx(i) + "] is not finite");
    if (!(cfg.b(ii) >= 0.0)) out.push_back("b[" + idx(i) + "] must be nonnegative");
    if (!(cfg.mu0(ii) >= 0.0)) out.push_back("mu0[" + idx(i) + "] must be nonnegative");
    if (cfg.eta(ii, ii) != 0.0) out.push_back("eta diagonal nonzero at " + idx(i));
    for (std::size_t j = 0; j < K; ++j) {
      if (!(cfg.eta(ii, static_cast<Eigen::Index>(j)) >= 0.0)) {
        out.push_back("eta[" + idx(i) + "][" + idx(j) + "] must be nonnegative");
      }
    }
  }

  for (std::size_t i = 0; i < K; ++i) {
    const auto& g = cfg.gamma[i];
    auto own = g.violations(i, K);
    if (!own.empty()) {
      out.insert(out.end(), own.begin(), own.end());
      continue;
    }
    for (std::size_t j = 0; j < K; ++j) {
      if (j == i) continue;
      const double m = g.first_moment(j);
      if (m > cfg.eta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) + kMomentSlack) {
        out.push_back("first moment of Γ_" + idx(i) + " in coordinate " + idx(j) +
                      " exceeds eta[" + idx(i) + "][" + idx(j) + "]");
      }
    }
  }
  return out;
}

void require_valid(const ModelConfig& cfg) {
  const auto v = validate_model(cfg);
  if (v.empty()) return;
  std::ostringstream os;
  os << "invalid model:";
  for (const auto& s : v) os << "\n  - " << s;
  throw SchemaError(os.str());
}

double psi_unchecked(const ModelConfig& cfg, std::size_t i, const Vector& u) {
  const auto ii = static_cast<Eigen::Index>(i);
  const double ui = u(ii);
  return cfg.a(ii) * ui + cfg.b(ii) * ui * ui - u.dot(cfg.eta.row(ii).transpose()) +
         cfg.gamma[i].compensated_laplace(u);
}

double evaluate_psi(const ModelConfig& cfg, std::size_t i, const Vector& u) {
  if (i >= cfg.K()) throw DomainError("type index out of range");
  if (static_cast<std::size_t>(u.size()) != cfg.K()) throw DomainError("u has wrong dimension");
  if ((u.array() < 0.0).any()) throw DomainError("psi is only defined for u >= 0");
  return psi_unchecked(cfg, i, u);
}

Report check_moment_conditions(const ModelConfig& cfg, double p, const Vector& h) {
  if (static_cast<std::size_t>(h.size()) != cfg.K() || !(h.array() > 0.0).all()) {
    throw DomainError("moment condition needs a strictly positive h of length K");
  }
  if (!(p > 1.0 && p <= 2.0)) throw DomainError("p must lie in (1,2]");
  Report r;
  r.name = "moment_condition";
  r.n_samples = static_cast<std::int64_t>(cfg.K());
  double worst = 0.0;
  for (std::size_t i = 0; i < cfg.K(); ++i) {
    const double v = cfg.gamma[i].p_moment(h, p) / h(static_cast<Eigen::Index>(i));
    r.add("type_" + idx(i), v);
    worst = std::max(worst, v);
  }
  r.estimate = worst;
  r.add("p", p);
  r.evaluate();
  return r;
}

}  // namespace csbp

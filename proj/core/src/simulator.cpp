#include "csbp/simulator.hpp"

#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "csbp/errors.hpp"
#include "csbp/rng.hpp"
#include "csbp/spectral.hpp"

namespace csbp {

namespace {

constexpr double kMaxStep = 0.01;

struct AtomSource {
  double rate;
  std::vector<double> jump;
  Vector jump_vec;
};

struct PowerLawSource {
  double rate = 0.0;           // mass above epsilon
  double small_sd_rate = 0.0;  // sqrt of small-jump variance rate
  double eps_pow = 0.0;        // epsilon^-theta
  double span = 0.0;           // epsilon^-theta - u_max^-theta
  double inv_theta = 0.0;
  std::vector<double> direction;
};

struct SourceType {
  std::vector<AtomSource> atoms;
  std::optional<PowerLawSource> power_law;
};

// Everything a step needs, precomputed once per (cfg, dt).
class Stepper {
 public:
  Stepper(const ModelConfig& cfg, double dt) : K_(cfg.K()), dt_(dt) {
    const Matrix A = drift_matrix(cfg);
    const Matrix half = expm(0.5 * dt * A);
    Matrix comp(static_cast<Eigen::Index>(K_), static_cast<Eigen::Index>(K_));
    for (std::size_t i = 0; i < K_; ++i) {
      comp.row(static_cast<Eigen::Index>(i)) = cfg.gamma[i].discrete_mean(K_).transpose();
    }
    // Half drift, noise at the midpoint state y, then x_next = E_h^T (y - dt C^T y + noise).
    // E[x_next] = E_dt^T x exactly. Both maps are stored transposed, row-major.
    const Matrix second = (Matrix::Identity(A.rows(), A.cols()) - dt * comp) * half;
    first_.resize(K_ * K_);
    second_.resize(K_ * K_);
    for (std::size_t j = 0; j < K_; ++j) {
      for (std::size_t i = 0; i < K_; ++i) {
        first_[j * K_ + i] = half(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        second_[j * K_ + i] = second(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
    increment_.resize(K_);
    diff_scale_.resize(K_);
    for (std::size_t j = 0; j < K_; ++j) diff_scale_[j] = 2.0 * cfg.b(static_cast<Eigen::Index>(j)) * dt;

    sources_.resize(K_);
    for (std::size_t i = 0; i < K_; ++i) {
      const auto& g = cfg.gamma[i];
      if (g.empty()) continue;
      if (g.is_atoms()) {
        for (const auto& a : g.atoms().atoms) {
          if (a.rate == 0.0) continue;
          sources_[i].atoms.push_back(
              {a.rate, std::vector<double>(a.jump.data(), a.jump.data() + a.jump.size()), a.jump});
        }
      } else {
        const auto& pl = g.power_law();
        PowerLawSource s;
        s.rate = g.discrete_rate();
        s.small_sd_rate = std::sqrt(g.small_jump_variance());
        s.eps_pow = std::pow(pl.epsilon, -pl.theta);
        s.span = s.eps_pow - std::pow(pl.u_max, -pl.theta);
        s.inv_theta = 1.0 / pl.theta;
        s.direction.assign(pl.direction.data(), pl.direction.data() + pl.direction.size());
        sources_[i].power_law = s;
      }
    }
  }

  // Advances x in place. Returns the number of discrete jumps.
  std::uint64_t step(std::vector<double>& x, std::vector<double>& y, double t, Engine& eng,
                     std::vector<JumpEvent>* log) {
    apply(first_, x, y);
    // Noise and jump increments at the midpoint state accumulate in `scratch`.
    std::vector<double>& scratch = increment_;
    std::fill(scratch.begin(), scratch.end(), 0.0);
    for (std::size_t j = 0; j < K_; ++j) {
      if (diff_scale_[j] > 0.0 && y[j] > 0.0) scratch[j] += std::sqrt(diff_scale_[j] * y[j]) * normal_(eng);
    }

    std::uint64_t jumps = 0;
    for (std::size_t i = 0; i < K_; ++i) {
      const double mass = y[i];
      if (mass <= 0.0) continue;
      const SourceType& src = sources_[i];
      if (src.power_law) {
        const PowerLawSource& pl = *src.power_law;
        const double small = pl.small_sd_rate * std::sqrt(mass * dt_) * normal_(eng);
        for (std::size_t j = 0; j < K_; ++j) scratch[j] += small * pl.direction[j];
        const double mean = mass * pl.rate * dt_;
        if (mean > 0.0) {
          const auto n = static_cast<std::uint64_t>(std::poisson_distribution<long long>(mean)(eng));
          for (std::uint64_t k = 0; k < n; ++k) {
            const double u = std::pow(pl.eps_pow - uniform_(eng) * pl.span, -pl.inv_theta);
            for (std::size_t j = 0; j < K_; ++j) scratch[j] += u * pl.direction[j];
            if (log) {
              Vector y(static_cast<Eigen::Index>(K_));
              for (std::size_t j = 0; j < K_; ++j) y(static_cast<Eigen::Index>(j)) = u * pl.direction[j];
              log->push_back({t, i, std::move(y), 1});
            }
          }
          jumps += n;
        }
      }
      for (const AtomSource& a : src.atoms) {
        const double mean = mass * a.rate * dt_;
        if (!(mean > 0.0)) continue;
        const auto n = static_cast<std::uint64_t>(std::poisson_distribution<long long>(mean)(eng));
        if (n == 0) continue;
        const double count = static_cast<double>(n);
        for (std::size_t j = 0; j < K_; ++j) scratch[j] += count * a.jump[j];
        if (log) log->push_back({t, i, a.jump_vec, n});
        jumps += n;
      }
    }

    apply(second_, y, x);
    apply(first_, scratch, y);
    double total = 0.0;
    for (std::size_t j = 0; j < K_; ++j) {
      x[j] += y[j];
      if (!(x[j] > 0.0)) x[j] = 0.0;
      total += x[j];
    }
    if (total < kExtinctionThreshold) std::fill(x.begin(), x.end(), 0.0);
    return jumps;
  }

  void apply(const std::vector<double>& m, const std::vector<double>& in, std::vector<double>& out) const {
    for (std::size_t j = 0; j < K_; ++j) {
      double acc = 0.0;
      const double* row = &m[j * K_];
      for (std::size_t i = 0; i < K_; ++i) acc += row[i] * in[i];
      out[j] = acc;
    }
  }

  void reset_distributions() {
    normal_.reset();
    uniform_.reset();
  }

 private:
  std::size_t K_;
  double dt_;
  std::vector<double> first_;   // E_h^T
  std::vector<double> second_;  // ((I - dt C) E_h)^T
  std::vector<double> increment_;
  std::vector<double> diff_scale_;
  std::vector<SourceType> sources_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

struct Plan {
  long steps = 0;
};

Plan check_simulation_inputs(const ModelConfig& cfg, double T, double dt, const SimOptions& opts) {
  require_valid(cfg);
  if (!(cfg.mu0.array() > 0.0).any()) throw ConfigError("mu0 needs at least one positive entry");
  if (!(T > 0.0)) throw ConfigError("horizon T must be positive");
  if (!(dt > 0.0) || dt > kMaxStep * (1.0 + 1e-12)) throw ConfigError("dt must lie in (0, 0.01]");
  const Matrix A = drift_matrix(cfg);
  double abscissa = A(0, 0);
  if (A.rows() > 1) {
    abscissa = Eigen::EigenSolver<Matrix>(A, false).eigenvalues().real().maxCoeff();
  }
  if (dt * std::abs(abscissa) > 0.1 * (1.0 + 1e-12)) {
    throw ConfigError("dt too large for the growth rate: need dt * |Lambda| <= 0.1");
  }
  const long steps = std::lround(T / dt);
  if (std::abs(static_cast<double>(steps) * dt - T) > 1e-12 * std::max(1.0, T) + 1e-9 * dt) {
    throw ConfigError("T must be a multiple of dt");
  }
  if (opts.record_every < 1 || steps % opts.record_every != 0) {
    throw ConfigError("record_every must divide the number of steps");
  }
  return {steps};
}

PathRecord run_path(Stepper& stepper, const ModelConfig& cfg, double dt, long steps,
                    std::uint64_t seed, const SimOptions& opts) {
  const std::size_t K = cfg.K();
  PathRecord rec;
  rec.K = K;
  rec.seed = seed;
  const auto stored = static_cast<std::size_t>(steps / opts.record_every + 1);
  rec.t_grid.reserve(stored);
  rec.states.reserve(stored * K);

  std::vector<double> x(cfg.mu0.data(), cfg.mu0.data() + K);
  std::vector<double> scratch(K);
  auto record = [&](long k) {
    rec.t_grid.push_back(static_cast<double>(k) * dt);
    rec.states.insert(rec.states.end(), x.begin(), x.end());
  };
  record(0);

  Engine eng(seed);
  stepper.reset_distributions();
  bool extinct = false;
  for (long k = 0; k < steps; ++k) {
    if (!extinct) {
      rec.jump_count += stepper.step(x, scratch, static_cast<double>(k) * dt, eng,
                                     opts.log_jumps ? &rec.jumps : nullptr);
      double total = 0.0;
      for (double v : x) total += v;
      if (total == 0.0) {
        extinct = true;
        rec.extinct_at = static_cast<double>(k + 1) * dt;
      }
    }
    if ((k + 1) % opts.record_every == 0) record(k + 1);
  }
  return rec;
}

}  // namespace

Vector PathRecord::state(std::size_t k) const {
  Vector v(static_cast<Eigen::Index>(K));
  for (std::size_t j = 0; j < K; ++j) v(static_cast<Eigen::Index>(j)) = states[k * K + j];
  return v;
}

std::size_t PathRecord::index_of(double t) const {
  if (t_grid.empty()) throw DomainError("empty path");
  const double spacing = t_grid.size() > 1 ? t_grid[1] - t_grid[0] : 1.0;
  const double pos = t / spacing;
  const long k = std::lround(pos);
  if (k < 0 || static_cast<std::size_t>(k) >= t_grid.size() ||
      std::abs(t_grid[static_cast<std::size_t>(k)] - t) > 1e-9 * std::max(1.0, std::abs(t))) {
    throw DomainError("time " + std::to_string(t) + " is not on the recorded grid");
  }
  return static_cast<std::size_t>(k);
}

PathRecord simulate_path(const ModelConfig& cfg, double T, double dt, std::uint64_t seed,
                         const SimOptions& opts) {
  const Plan plan = check_simulation_inputs(cfg, T, dt, opts);
  Stepper stepper(cfg, dt);
  return run_path(stepper, cfg, dt, plan.steps, seed, opts);
}

std::vector<PathRecord> simulate_ensemble(const ModelConfig& cfg, double T, double dt,
                                          std::size_t N, std::uint64_t base_seed,
                                          const SimOptions& opts, unsigned workers) {
  if (N == 0) throw ConfigError("ensemble needs N >= 1");
  const Plan plan = check_simulation_inputs(cfg, T, dt, opts);
  std::vector<PathRecord> out(N);
  workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(N)));

  auto work = [&](unsigned w) {
    Stepper stepper(cfg, dt);
    for (std::size_t n = w; n < N; n += workers) {
      out[n] = run_path(stepper, cfg, dt, plan.steps, derive_seed(base_seed, n), opts);
    }
  };
  if (workers == 1) {
    work(0);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        work(w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace csbp

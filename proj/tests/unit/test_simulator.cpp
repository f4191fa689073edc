#include <gtest/gtest.h>

#include <cmath>

#include "csbp/errors.hpp"
#include "csbp/report.hpp"
#include "csbp/rng.hpp"
#include "csbp/semigroup.hpp"
#include "csbp/simulator.hpp"
#include "csbp/spectral.hpp"
#include "fixtures.hpp"

using namespace csbp;
using namespace csbp::testing;

namespace {

bool same_path(const PathRecord& x, const PathRecord& y) {
  if (x.t_grid != y.t_grid || x.states != y.states || x.jump_count != y.jump_count) return false;
  if (x.extinct_at != y.extinct_at || x.jumps.size() != y.jumps.size()) return false;
  for (std::size_t k = 0; k < x.jumps.size(); ++k) {
    if (x.jumps[k].t != y.jumps[k].t || x.jumps[k].source != y.jumps[k].source ||
        x.jumps[k].count != y.jumps[k].count || x.jumps[k].jump != y.jumps[k].jump) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST(Rng, DeriveSeedSpreadsIndices) {
  EXPECT_NE(derive_seed(0, 0), derive_seed(0, 1));
  EXPECT_NE(derive_seed(0, 1), derive_seed(1, 0));
  EXPECT_EQ(derive_seed(42, 7), derive_seed(42, 7));
}

TEST(Simulate, SameSeedIsBitIdentical) {
  const ModelConfig cfg = reference_model();
  EXPECT_TRUE(same_path(simulate_path(cfg, 1.0, 0.005, 99), simulate_path(cfg, 1.0, 0.005, 99)));
  EXPECT_FALSE(same_path(simulate_path(cfg, 1.0, 0.005, 99), simulate_path(cfg, 1.0, 0.005, 100)));
}

TEST(Simulate, EnsembleOfOneMatchesDerivedSeed) {
  const ModelConfig cfg = reference_model();
  const auto ens = simulate_ensemble(cfg, 1.0, 0.005, 1, 5);
  ASSERT_EQ(ens.size(), 1u);
  EXPECT_TRUE(same_path(ens[0], simulate_path(cfg, 1.0, 0.005, derive_seed(5, 0))));
}

TEST(Simulate, EnsembleIndependentOfWorkers) {
  const ModelConfig cfg = reference_model();
  const auto one = simulate_ensemble(cfg, 1.0, 0.005, 100, 11, {}, 1);
  const auto three = simulate_ensemble(cfg, 1.0, 0.005, 100, 11, {}, 3);
  const auto again = simulate_ensemble(cfg, 1.0, 0.005, 100, 11, {}, 1);
  ASSERT_EQ(one.size(), three.size());
  for (std::size_t n = 0; n < one.size(); ++n) {
    EXPECT_TRUE(same_path(one[n], three[n]));
    EXPECT_TRUE(same_path(one[n], again[n]));
  }
}

TEST(Simulate, DeterministicLimitFollowsMeanFlow) {
  const ModelConfig cfg = deterministic_model();
  const Matrix A = drift_matrix(cfg);
  const PathRecord path = simulate_path(cfg, 5.0, 0.005, 1);
  for (std::size_t k = 0; k < path.size(); k += 50) {
    const Vector exact = mean_matrix(A, path.t_grid[k]).transpose() * cfg.mu0;
    EXPECT_LT((path.state(k) - exact).lpNorm<Eigen::Infinity>(), 1e-6 * exact.lpNorm<Eigen::Infinity>());
  }
  EXPECT_TRUE(path.jumps.empty());
  EXPECT_EQ(path.jump_count, 0u);
}

TEST(Simulate, StatesAndJumpsNonnegativeAndTrapAbsorbs) {
  ModelConfig cfg = reference_model();
  cfg.a = vec({0.8, 0.9});  // subcritical so that many paths die
  cfg.b = vec({1.5, 1.5});
  const auto ens = simulate_ensemble(cfg, 5.0, 0.005, 200, 4);
  std::size_t extinct = 0;
  for (const auto& p : ens) {
    for (double x : p.states) EXPECT_GE(x, 0.0);
    for (const auto& e : p.jumps) EXPECT_TRUE((e.jump.array() >= 0.0).all());
    if (p.extinct_at) {
      ++extinct;
      for (std::size_t k = p.index_of(*p.extinct_at); k < p.size(); ++k) EXPECT_EQ(p.state(k).sum(), 0.0);
    }
  }
  EXPECT_GT(extinct, 0u);
}

TEST(Simulate, RecordStrideKeepsGridTimes) {
  SimOptions opts;
  opts.record_every = 20;
  const PathRecord p = simulate_path(reference_model(), 2.0, 0.005, 3, opts);
  ASSERT_EQ(p.size(), 21u);
  EXPECT_NEAR(p.t_grid.back(), 2.0, 1e-12);
  EXPECT_NEAR(p.t_grid[5], 0.5, 1e-12);
  EXPECT_EQ(p.index_of(1.0), 10u);
}

TEST(Simulate, InputValidation) {
  const ModelConfig cfg = reference_model();
  EXPECT_THROW(simulate_path(cfg, 1.0, 0.02, 1), ConfigError);
  EXPECT_THROW(simulate_path(cfg, 1.0, 0.003, 1), ConfigError);
  ModelConfig zero = cfg;
  zero.mu0.setZero();
  EXPECT_THROW(simulate_path(zero, 1.0, 0.005, 1), ConfigError);
  ModelConfig bad = cfg;
  bad.eta(0, 0) = 1.0;
  EXPECT_THROW(simulate_path(bad, 1.0, 0.005, 1), SchemaError);
  SimOptions opts;
  opts.record_every = 7;
  EXPECT_THROW(simulate_path(cfg, 1.0, 0.005, 1, opts), ConfigError);
  ModelConfig fast = one_type(-20.0, 0.1);
  EXPECT_THROW(simulate_path(fast, 1.0, 0.01, 1), ConfigError);
}

TEST(Simulate, SubcriticalFellerGoesExtinct) {
  // a = 1, b = 0.5: extinction probability by T = 20 from the log-Laplace
  // flow started at theta = 1e3.
  const ModelConfig cfg = one_type(1.0, 0.5);
  const double v = solve_log_laplace(cfg, vec({1e3}), 20.0, 1e-4).final()(0);
  const double p = std::exp(-v);
  const auto ens = simulate_ensemble(cfg, 20.0, 0.005, 10000, 8, {20, false});
  double extinct = 0;
  for (const auto& path : ens) extinct += path.extinct_at ? 1.0 : 0.0;
  const double freq = extinct / 1e4;
  EXPECT_NEAR(freq, p, 3.0 * std::sqrt(p * (1 - p) / 1e4) + 1e-4);
}

TEST(Simulate, CriticalFellerExtinctionMatchesClosedForm) {
  // a = 0, b = 0.5: P(X_2 = 0) = exp(-1 / (b T)) = e^{-1}.
  const auto ens = simulate_ensemble(one_type(0.0, 0.5), 2.0, 0.005, 10000, 12, {400, false});
  std::vector<double> dead;
  for (const auto& path : ens) dead.push_back(path.extinct_at ? 1.0 : 0.0);
  const SampleStats st = sample_stats(dead);
  EXPECT_NEAR(st.mean, std::exp(-1.0), 3.0 * st.std_error);
}

TEST(Simulate, FirstMomentMatchesMeanMatrix) {
  const ModelConfig cfg = reference_model();
  const Matrix M = mean_matrix(drift_matrix(cfg), 2.0);
  const auto ens = simulate_ensemble(cfg, 2.0, 0.005, 10000, 2024, {400, false});
  for (const Vector& f : {vec({1.0, 1.0}), vec({1.0, 0.0}), vec({0.0, 1.0})}) {
    std::vector<double> xs;
    for (const auto& p : ens) xs.push_back(p.state(p.size() - 1).dot(f));
    const SampleStats st = sample_stats(xs);
    const double exact = cfg.mu0.dot(M * f);
    EXPECT_NEAR(st.mean, exact, 3.0 * st.std_error);
    // The transposed convention is far outside the band.
    const double other = cfg.mu0.dot(M.transpose() * f);
    if (std::abs(other - exact) > 1e-9) EXPECT_GT(std::abs(st.mean - other), 10.0 * st.std_error);
  }
}

TEST(Simulate, PowerLawPathsStayFiniteAndMeanIsExact) {
  ModelConfig cfg = one_type(0.0, 0.1);
  cfg.gamma[0] = JumpMeasure(PowerLaw{0.2, 1.5, vec({1.0}), 1.0, 1e-3});
  const auto ens = simulate_ensemble(cfg, 1.0, 0.005, 4000, 77, {200, false});
  std::vector<double> xs;
  for (const auto& p : ens) {
    for (double x : p.states) ASSERT_TRUE(std::isfinite(x));
    xs.push_back(p.state(p.size() - 1)(0));
  }
  const SampleStats st = sample_stats(xs);
  EXPECT_NEAR(st.mean, 1.0, 3.0 * st.std_error);
}

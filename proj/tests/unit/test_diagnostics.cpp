#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "csbp/diagnostics.hpp"
#include "csbp/errors.hpp"
#include "csbp/report.hpp"
#include "csbp/simulator.hpp"
#include "csbp/spectral.hpp"
#include "fixtures.hpp"

using namespace csbp;
using namespace csbp::testing;

namespace {

void expect_self_consistent(const Report& r) {
  EXPECT_EQ(r.recompute(), r.pass) << r.name;
  for (const auto& c : r.checks) expect_self_consistent(c);
}

bool same_report(const Report& x, const Report& y) {
  if (x.name != y.name || x.estimate != y.estimate || x.std_error != y.std_error || x.oracle != y.oracle ||
      x.pass != y.pass || x.metadata != y.metadata || x.checks.size() != y.checks.size()) {
    return false;
  }
  for (std::size_t k = 0; k < x.checks.size(); ++k) {
    if (!same_report(x.checks[k], y.checks[k])) return false;
  }
  return true;
}

}  // namespace

TEST(Report, PassRuleAndRecompute) {
  Report r = mc_check("x", 1.0, 0.1, 1.25, 10);
  EXPECT_TRUE(r.pass);
  r = mc_check("x", 1.0, 0.1, 1.31, 10);
  EXPECT_FALSE(r.pass);
  r = mc_check("x", std::nan(""), 0.1, 1.0, 10);
  EXPECT_FALSE(r.pass);
  Report parent;
  parent.name = "parent";
  parent.checks.push_back(mc_check("ok", 0.0, 0.0, 0.0, 1));
  parent.checks.push_back(mc_check("bad", 1.0, 0.0, 0.0, 1));
  parent.evaluate();
  EXPECT_FALSE(parent.pass);
  expect_self_consistent(parent);
}

TEST(Report, SampleStatsConstantIsExact) {
  const SampleStats st = sample_stats(std::vector<double>(1000, 0.1));
  EXPECT_EQ(st.mean, 0.1);
  EXPECT_EQ(st.std_error, 0.0);
  const SampleStats st2 = sample_stats({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(st2.mean, 2.0);
  EXPECT_DOUBLE_EQ(st2.variance, 1.0);
  EXPECT_DOUBLE_EQ(st2.std_error, 1.0 / std::sqrt(3.0));
}

TEST(Martingale, DeterministicFlowKeepsWConstant) {
  const ModelConfig cfg = deterministic_model();
  const SpectralData sd = perron_frobenius(drift_matrix(cfg));
  const auto ens = simulate_ensemble(cfg, 5.0, 0.005, 5, 1, {20, false});
  const double w0 = sd.h.dot(cfg.mu0);
  for (const auto& p : ens) {
    for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(additive_martingale(p, sd, k), w0, 1e-12 * w0);
  }
  const Report r = martingale_report(ens, sd, {1.0, 5.0});
  EXPECT_TRUE(r.pass);
  for (const auto& c : r.checks) EXPECT_EQ(c.std_error, 0.0);
  expect_self_consistent(r);
}

TEST(Martingale, SubcriticalFeller) {
  const ModelConfig cfg = one_type(1.0, 0.5);
  const SpectralData sd = perron_frobenius(drift_matrix(cfg));
  // Only about 0.9 of 10^4 paths survive to t = 10, where W_10 is then of
  // order 10^4, so the sample SE there is meaningless; t = 10 is left out.
  const auto ens = simulate_ensemble(cfg, 5.0, 0.005, 10000, 77, {200, false});
  const Report r = martingale_report(ens, sd, {1.0, 5.0});
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.checks.size(), 2u);
  expect_self_consistent(r);
  EXPECT_TRUE(same_report(r, martingale_report(ens, sd, {1.0, 5.0})));
}

TEST(Variance, DeterministicAndCritical) {
  const ModelConfig det = deterministic_model();
  const auto ens = simulate_ensemble(det, 1.0, 0.005, 50, 1, {20, false});
  const Report r = variance_report(ens, det, vec({1.0, 1.0}), 1.0);
  EXPECT_EQ(r.estimate, 0.0);
  EXPECT_EQ(*r.oracle, 0.0);
  EXPECT_TRUE(r.pass);

  const ModelConfig crit = one_type(0.0, 0.5);
  const auto ens2 = simulate_ensemble(crit, 1.0, 0.005, 10000, 3, {200, false});
  const Report r2 = variance_report(ens2, crit, vec({1.0}), 1.0);
  EXPECT_NEAR(*r2.oracle, 1.0, 1e-10);
  EXPECT_TRUE(r2.pass);
  expect_self_consistent(r2);
}

TEST(Laplace, ZeroFunctionAndFellerClosedForm) {
  const ModelConfig cfg = one_type(-1.0, 0.5);
  const auto ens = simulate_ensemble(cfg, 1.0, 0.005, 10000, 8, {200, false});
  const Report zero = laplace_report(ens, cfg, vec({0.0}), 1.0);
  EXPECT_EQ(zero.estimate, 1.0);
  EXPECT_EQ(*zero.oracle, 1.0);
  EXPECT_TRUE(zero.pass);
  const Report r = laplace_report(ens, cfg, vec({1.0}), 1.0);
  const double e = std::exp(1.0);
  EXPECT_NEAR(*r.oracle, std::exp(-e / (1.0 + 0.5 * (e - 1.0))), 1e-8);
  EXPECT_TRUE(r.pass);
  EXPECT_THROW(laplace_report(ens, cfg, vec({-1.0}), 1.0), DomainError);
}

TEST(JumpRate, EmptyAndSingleAtom) {
  const ModelConfig det = deterministic_model();
  const auto ens = simulate_ensemble(det, 1.0, 0.005, 20, 1, {20, false});
  const Report r = jump_rate_report(ens, det, 1.0);
  EXPECT_EQ(r.estimate, 0.0);
  EXPECT_TRUE(r.pass);

  ModelConfig cfg = one_type(0.0, 0.0);
  cfg.gamma[0] = atom(1.0, vec({0.2}));
  const auto ens2 = simulate_ensemble(cfg, 1.0, 0.005, 10000, 5, {200, false});
  const Report r2 = jump_rate_report(ens2, cfg, 1.0);
  EXPECT_NEAR(*r2.oracle, 1.0, 1e-10);  // mean stays at 1 with a = 0 after compensation
  EXPECT_TRUE(r2.pass);
  EXPECT_THROW(jump_rate_report(ens2, cfg, 0.5), DomainError);
}

TEST(Lln, FEqualsHGivesSlopeOne) {
  const ModelConfig cfg = reference_model();
  const SpectralData sd = perron_frobenius(drift_matrix(cfg));
  const auto ens = simulate_ensemble(cfg, 2.0, 0.005, 500, 6, {20, false});
  LlnOptions opts;
  opts.ratio_tolerance = 1.0;  // the ratio at T = 2 is far from its limit
  const LlnReport r = lln_report(ens, sd, ens.front().t_grid, sd.h, opts);
  EXPECT_NEAR(r.report.checks[0].estimate, 1.0, 1e-12);
  EXPECT_TRUE(r.report.checks[0].pass);
  expect_self_consistent(r.report);
}

TEST(Lln, SingleTypeRatioIsOne) {
  const ModelConfig cfg = one_type(-0.5, 0.3);
  const SpectralData sd = perron_frobenius(drift_matrix(cfg));
  const auto ens = simulate_ensemble(cfg, 2.0, 0.005, 300, 6, {20, false});
  const LlnReport r = lln_report(ens, sd, ens.front().t_grid, vec({1.0}));
  EXPECT_EQ(r.report.checks[1].estimate, 1.0);
  EXPECT_TRUE(r.report.pass);
  EXPECT_FALSE(r.trajectories.empty());
}

TEST(Lln, DeterministicModelUsesMeanRatio) {
  const ModelConfig cfg = deterministic_model();
  const SpectralData sd = perron_frobenius(drift_matrix(cfg));
  const auto ens = simulate_ensemble(cfg, 20.0, 0.005, 120, 6, {200, false});
  const LlnReport r = lln_report(ens, sd, ens.front().t_grid, vec({1.0, 1.0}));
  EXPECT_TRUE(r.report.pass);
  EXPECT_EQ(r.report.checks[0].std_error, 0.0);
  EXPECT_TRUE(r.report.checks[0].find("degenerate_regression").has_value());
}

TEST(Lln, TooFewSurvivors) {
  const ModelConfig cfg = reference_model();
  const SpectralData sd = perron_frobenius(drift_matrix(cfg));
  const auto ens = simulate_ensemble(cfg, 1.0, 0.005, 50, 6, {20, false});
  EXPECT_THROW(lln_report(ens, sd, ens.front().t_grid, vec({1.0, 1.0})), DegenerateError);
}

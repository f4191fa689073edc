#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace csbp {

/// Statistical or numerical check outcome.
///
/// The pass flag is a pure function of the stored fields:
///   |estimate - oracle| <= se_multiplier * std_error + abs_tol
/// and every child check passes. A report without an oracle passes iff its
/// estimate is finite and its children pass.
struct Report {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  std::optional<double> oracle;
  std::int64_t n_samples = 0;
  double se_multiplier = 3.0;
  double abs_tol = 0.0;
  bool pass = true;
  std::vector<std::pair<std::string, double>> metadata;
  std::vector<Report> checks;

  /// Recomputes `pass` from the fields (children first) and returns it.
  bool evaluate();
  /// Evaluates the stored rule without mutating anything.
  bool recompute() const;

  void add(std::string key, double value) { metadata.emplace_back(std::move(key), value); }
  std::optional<double> find(const std::string& key) const;
};

/// Floor on abs_tol used for exact (zero-variance) comparisons, relative to
/// the magnitude of the oracle. Covers floating-point rounding only.
inline constexpr double kRoundoffTolerance = 1e-9;

/// Builds a 3-SE check of a Monte Carlo mean against an oracle.
Report mc_check(std::string name, double estimate, double std_error, double oracle,
                std::int64_t n);

/// Mean and standard error of a sample, in index order.
struct SampleStats {
  double mean = 0.0;
  double std_error = 0.0;
  double variance = 0.0;
  std::int64_t n = 0;
};
SampleStats sample_stats(const std::vector<double>& xs);

}  // namespace csbp

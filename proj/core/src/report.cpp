#include "csbp/report.hpp"

#include <algorithm>
#include <cmath>

namespace csbp {

bool Report::recompute() const {
  bool ok = std::all_of(checks.begin(), checks.end(),
                        [](const Report& r) { return r.recompute(); });
  ok = ok && std::isfinite(estimate);
  if (oracle) {
    const double gap = std::abs(estimate - *oracle);
    ok = ok && gap <= se_multiplier * std_error + abs_tol;
  }
  return ok;
}

bool Report::evaluate() {
  for (auto& c : checks) c.evaluate();
  pass = recompute();
  return pass;
}

std::optional<double> Report::find(const std::string& key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return std::nullopt;
}

Report mc_check(std::string name, double estimate, double std_error, double oracle,
                std::int64_t n) {
  Report r;
  r.name = std::move(name);
  r.estimate = estimate;
  r.std_error = std_error;
  r.oracle = oracle;
  r.n_samples = n;
  r.abs_tol = kRoundoffTolerance * std::max(1.0, std::abs(oracle));
  r.evaluate();
  return r;
}

SampleStats sample_stats(const std::vector<double>& xs) {
  SampleStats s;
  s.n = static_cast<std::int64_t>(xs.size());
  if (xs.empty()) return s;
  if (std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); })) {
    // Constant samples: avoid the roundoff of sum / n.
    s.mean = xs.front();
    return s;
  }
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.variance = ss / static_cast<double>(s.n - 1);
    s.std_error = std::sqrt(s.variance / static_cast<double>(s.n));
  }
  return s;
}

}  // namespace csbp

#include "csbp/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>

#include "csbp/diagnostics.hpp"
#include "csbp/errors.hpp"
#include "csbp/output.hpp"
#include "csbp/rng.hpp"
#include "csbp/semigroup.hpp"
#include "csbp/simulator.hpp"
#include "csbp/spectral.hpp"
#include "csbp/spine.hpp"
#include "csbp/version.hpp"

namespace csbp::cli {

namespace {

// Stream tags keep sub-experiments on disjoint seed streams.
constexpr std::uint64_t kSpineStream = 0x7370696e65ULL;       // "spine"
constexpr std::uint64_t kOccupationStream = 0x6f63637570ULL;  // "occup"

constexpr std::size_t kSamplePathsWritten = 3;
constexpr std::size_t kRatioPathsWritten = 200;

std::string label(const char* prefix, std::size_t k) { return prefix + std::to_string(k); }

Json provenance(const ExperimentSpec& spec, Subcommand cmd) {
  Json p;
  p["subcommand"] = subcommand_name(cmd);
  p["T"] = spec.T;
  p["dt"] = spec.dt;
  p["paths"] = spec.paths;
  p["seed"] = spec.seed;
  p["p"] = spec.p;
  p["record_every"] = spec.record_every;
  Json grid = Json::array();
  for (double t : spec.t_grid) grid.push_back(t);
  p["t_grid"] = grid;
  Json defaults = Json::object();
  for (const auto& [k, v] : spec.defaults_applied) defaults[k] = v;
  p["defaults_applied"] = defaults;
  return p;
}

Json model_json(const ModelConfig& cfg) {
  Json m;
  m["K"] = cfg.K();
  m["a"] = to_json(cfg.a);
  m["b"] = to_json(cfg.b);
  m["eta"] = to_json(cfg.eta);
  m["mu0"] = to_json(cfg.mu0);
  return m;
}

class Runner {
 public:
  Runner(const ExperimentSpec& spec, Subcommand cmd, unsigned workers)
      : spec_(spec), cmd_(cmd), workers_(workers), out_(spec.output, spec.config_hash),
        A_(drift_matrix(spec.model)) {}

  RunOutcome go() {
    const bool all = cmd_ == Subcommand::all;
    if (all || cmd_ == Subcommand::spectral) spectral();
    if (all || cmd_ == Subcommand::laplace) laplace();
    if (all || cmd_ == Subcommand::simulate) simulate();
    if (all || cmd_ == Subcommand::spine) spine();
    if (all || cmd_ == Subcommand::lln) lln();
    outcome_.manifest_hash = out_.write_manifest();
    for (const auto& r : outcome_.reports) outcome_.all_pass = outcome_.all_pass && r.pass;
    return outcome_;
  }

 private:
  const SpectralData& spectral_data() {
    if (!spectral_) spectral_ = perron_frobenius(A_);
    return *spectral_;
  }

  const Ensemble& ensemble() {
    if (!ensemble_) {
      SimOptions opts;
      opts.record_every = spec_.record_every;
      opts.log_jumps = false;
      ensemble_ = simulate_ensemble(spec_.model, spec_.T, spec_.dt, spec_.paths, spec_.seed, opts, workers_);
    }
    return *ensemble_;
  }

  Json keep(const Report& r) {
    outcome_.reports.push_back(r);
    return to_json(r);
  }

  Json header() {
    Json j;
    j["provenance"] = provenance(spec_, cmd_);
    return j;
  }

  void spectral() {
    const SpectralData& sd = spectral_data();
    Json j = header();
    j["model"] = model_json(spec_.model);
    j["drift_matrix"] = to_json(A_);
    j["Lambda"] = sd.Lambda;
    j["lambda1"] = -sd.Lambda;
    j["h"] = to_json(sd.h);
    j["h_hat"] = to_json(sd.h_hat);
    j["gap"] = sd.gap ? Json(*sd.gap) : Json(nullptr);
    j["rho"] = to_json(sd.rho());
    j["growth_bound_c0"] = growth_bound(spec_.model);

    std::vector<double> grid;
    const double horizon = sd.gap && *sd.gap > 0.0 ? 24.0 / *sd.gap : 10.0;
    for (int k = 1; k <= 48; ++k) grid.push_back(horizon * k / 48.0);
    const MixingProfile prof = mixing_profile(sd, A_, grid);
    Json mix = Json::array();
    for (std::size_t k = 0; k < prof.t.size(); ++k) mix.push_back({{"t", prof.t[k]}, {"deviation", prof.deviation[k]}});
    j["mixing_profile"] = mix;
    j["mixing_C"] = prof.C;

    Json reports = Json::array();
    reports.push_back(keep(eigen_identity_report(sd, A_, {0.1, 1.0, 10.0})));
    reports.push_back(keep(mixing_report(prof)));
    reports.push_back(keep(check_moment_conditions(spec_.model, spec_.p, sd.h)));
    const double picard_dt = std::min(5e-4, spec_.T / 1000.0);
    for (std::size_t k = 0; k < spec_.f_test.size(); ++k) {
      const Vector& f = spec_.f_test[k];
      const Vector exact = mean_matrix(A_, spec_.T) * f;
      const Vector picard = mean_via_picard(spec_.model, f, spec_.T, picard_dt);
      Report r;
      r.name = label("mean_picard_vs_expm_f", k + 1);
      r.estimate = (picard - exact).lpNorm<Eigen::Infinity>() / std::max(1.0, exact.lpNorm<Eigen::Infinity>());
      r.oracle = 0.0;
      r.se_multiplier = 0.0;
      r.abs_tol = 1e-6;
      r.n_samples = 1;
      r.add("T", spec_.T);
      r.add("picard_dt", picard_dt);
      r.evaluate();
      reports.push_back(keep(r));
    }
    j["reports"] = reports;
    out_.write_json("spectral.json", j);
  }

  void laplace() {
    const double dt = std::min(0.01, spec_.T / 100.0);
    Json j = header();
    Json results = Json::array();
    Json reports = Json::array();
    const std::size_t K = spec_.model.K();
    for (std::size_t k = 0; k < spec_.f_test.size(); ++k) {
      const Vector& f = spec_.f_test[k];
      const OdeSolution sol = solve_log_laplace(spec_.model, f, spec_.T, dt);
      std::vector<std::string> header{"t"};
      for (std::size_t i = 0; i < K; ++i) header.push_back(label("V_", i + 1));
      std::vector<std::vector<std::string>> rows;
      rows.reserve(sol.t_grid.size());
      for (std::size_t n = 0; n < sol.t_grid.size(); ++n) {
        std::vector<std::string> row{format_double(sol.t_grid[n])};
        for (std::size_t i = 0; i < K; ++i) row.push_back(format_double(sol.V[n](static_cast<Eigen::Index>(i))));
        rows.push_back(std::move(row));
      }
      out_.write_csv(label("laplace_f", k + 1) + ".csv", header, rows);

      const double exponent = spec_.model.mu0.dot(sol.final());
      Json entry;
      entry["f"] = to_json(f);
      entry["V_T"] = to_json(sol.final());
      entry["mu0_dot_V_T"] = exponent;
      entry["laplace_transform"] = std::exp(-exponent);
      entry["step"] = sol.step;
      entry["clamp_count"] = sol.clamp_count;
      results.push_back(entry);

      Report r;
      r.name = label("step_halving_f", k + 1);
      r.estimate = sol.halving_error;
      r.oracle = 0.0;
      r.se_multiplier = 0.0;
      r.abs_tol = 1e-6;
      r.n_samples = 1;
      r.add("clamp_count", sol.clamp_count);
      r.evaluate();
      reports.push_back(keep(r));
    }
    j["results"] = results;
    j["reports"] = reports;
    out_.write_json("laplace.json", j);
  }

  void write_path_files(std::size_t n) {
    SimOptions opts;
    opts.log_jumps = true;
    const PathRecord path = simulate_path(spec_.model, spec_.T, spec_.dt, derive_seed(spec_.seed, n), opts);
    const std::size_t K = path.K;
    std::vector<std::string> header{"t"};
    for (std::size_t i = 0; i < K; ++i) header.push_back(label("X_", i + 1));
    std::vector<std::vector<std::string>> rows;
    rows.reserve(path.size());
    for (std::size_t k = 0; k < path.size(); ++k) {
      std::vector<std::string> row{format_double(path.t_grid[k])};
      for (std::size_t i = 0; i < K; ++i) row.push_back(format_double(path.coord(k, i)));
      rows.push_back(std::move(row));
    }
    out_.write_csv(label("path_", n) + ".csv", header, rows);

    std::vector<std::string> jheader{"t", "source"};
    for (std::size_t i = 0; i < K; ++i) jheader.push_back(label("y_", i + 1));
    jheader.push_back("count");
    std::vector<std::vector<std::string>> jrows;
    jrows.reserve(path.jumps.size());
    for (const auto& e : path.jumps) {
      std::vector<std::string> row{format_double(e.t), std::to_string(e.source + 1)};
      for (std::size_t i = 0; i < K; ++i) row.push_back(format_double(e.jump(static_cast<Eigen::Index>(i))));
      row.push_back(std::to_string(e.count));
      jrows.push_back(std::move(row));
    }
    out_.write_csv(label("jumps_", n) + ".csv", jheader, jrows);
  }

  void simulate() {
    const Ensemble& ens = ensemble();
    const SpectralData& sd = spectral_data();
    for (std::size_t n = 0; n < std::min(kSamplePathsWritten, ens.size()); ++n) write_path_files(n);

    Json j = header();
    std::size_t extinct = 0;
    Vector mean_T = Vector::Zero(static_cast<Eigen::Index>(spec_.model.K()));
    for (const auto& p : ens) {
      if (p.extinct_at) ++extinct;
      mean_T += p.state(p.size() - 1);
    }
    mean_T /= static_cast<double>(ens.size());
    Json summary;
    summary["paths"] = ens.size();
    summary["extinct_fraction"] = static_cast<double>(extinct) / static_cast<double>(ens.size());
    summary["mean_state_T"] = to_json(mean_T);
    summary["exact_mean_state_T"] = to_json(Vector(mean_matrix(A_, spec_.T).transpose() * spec_.model.mu0));
    j["summary"] = summary;

    Json reports = Json::array();
    reports.push_back(keep(martingale_report(ens, sd, spec_.t_grid, spec_.p)));
    for (std::size_t k = 0; k < spec_.f_test.size(); ++k) {
      Report lap = laplace_report(ens, spec_.model, spec_.f_test[k], spec_.T);
      lap.name = label("laplace_f", k + 1);
      reports.push_back(keep(lap));
      Report var = variance_report(ens, spec_.model, spec_.f_test[k], spec_.T);
      var.name = label("variance_f", k + 1);
      reports.push_back(keep(var));
    }
    reports.push_back(keep(jump_rate_report(ens, spec_.model, spec_.T)));
    j["reports"] = reports;
    out_.write_json("ensemble.json", j);
  }

  void spine() {
    const SpectralData& sd = spectral_data();
    const SpineGenerator gen = spine_generator(spec_.model, sd);
    Json j = header();
    j["q"] = to_json(gen.q);
    j["kappa"] = to_json(gen.kappa);
    j["G"] = to_json(gen.G);
    j["rho"] = to_json(sd.rho());

    Json reports = Json::array();
    for (std::size_t k = 0; k < spec_.f_test.size(); ++k) {
      Report r = many_to_one_gap(spec_.model, sd, gen, spec_.f_test[k], spec_.spine_t, spec_.spine_start,
                                 spec_.paths, derive_seed(spec_.seed, kSpineStream + k));
      r.name = label("many_to_one_f", k + 1);
      reports.push_back(keep(r));
    }
    reports.push_back(keep(stationary_check(gen, sd)));
    const std::uint64_t occ_seed = derive_seed(spec_.seed, kOccupationStream);
    reports.push_back(keep(occupation_report(gen, sd, spec_.spine_start, spec_.occupation_T, occ_seed)));
    j["reports"] = reports;
    out_.write_json("spine.json", j);

    const auto intervals = simulate_spine(gen, spec_.spine_start, spec_.occupation_T, occ_seed);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(intervals.size());
    for (const auto& iv : intervals) {
      rows.push_back({format_double(iv.start), format_double(iv.end), std::to_string(iv.type + 1)});
    }
    out_.write_csv("spine_intervals.csv", {"start", "end", "type"}, rows);
  }

  void lln() {
    const Ensemble& ens = ensemble();
    const SpectralData& sd = spectral_data();
    LlnOptions opts;
    opts.survival_fraction = spec_.survival_fraction;
    opts.ratio_tolerance = spec_.ratio_tolerance;
    const LlnReport res = lln_report(ens, sd, ens.front().t_grid, spec_.lln_f, opts);

    Json j = header();
    Json targets = Json::array();
    for (Eigen::Index i = 0; i < sd.h_hat.size(); ++i) targets.push_back(sd.h_hat(i) / sd.h_hat.sum());
    j["target_ratios"] = targets;
    j["reports"] = Json::array({keep(res.report)});
    out_.write_json("lln.json", j);

    const std::size_t K = sd.K();
    std::vector<std::string> header{"path", "t"};
    for (std::size_t i = 0; i < K; ++i) header.push_back(label("ratio_", i + 1));
    std::vector<std::vector<std::string>> rows;
    const std::size_t written = std::min(kRatioPathsWritten, res.trajectories.size());
    for (std::size_t n = 0; n < written; ++n) {
      const auto& tr = res.trajectories[n];
      for (std::size_t k = 0; k < tr.t.size(); ++k) {
        std::vector<std::string> row{std::to_string(tr.path), format_double(tr.t[k])};
        for (std::size_t i = 0; i < K; ++i) row.push_back(format_double(tr.ratios[k * K + i]));
        rows.push_back(std::move(row));
      }
    }
    out_.write_csv("lln_ratios.csv", header, rows);
  }

  const ExperimentSpec& spec_;
  Subcommand cmd_;
  unsigned workers_;
  OutputDir out_;
  Matrix A_;
  std::optional<SpectralData> spectral_;
  std::optional<Ensemble> ensemble_;
  RunOutcome outcome_;
};

}  // namespace

Subcommand parse_subcommand(const std::string& name) {
  if (name == "spectral") return Subcommand::spectral;
  if (name == "laplace") return Subcommand::laplace;
  if (name == "simulate") return Subcommand::simulate;
  if (name == "spine") return Subcommand::spine;
  if (name == "lln") return Subcommand::lln;
  if (name == "all") return Subcommand::all;
  throw ConfigError("unknown subcommand '" + name + "'");
}

const char* subcommand_name(Subcommand cmd) {
  switch (cmd) {
    case Subcommand::spectral: return "spectral";
    case Subcommand::laplace: return "laplace";
    case Subcommand::simulate: return "simulate";
    case Subcommand::spine: return "spine";
    case Subcommand::lln: return "lln";
    case Subcommand::all: return "all";
  }
  return "unknown";
}

RunOutcome run(const ExperimentSpec& spec, Subcommand cmd, unsigned workers) {
  return Runner(spec, cmd, workers).go();
}

unsigned workers_from_env() {
  const char* v = std::getenv("CSBP_WORKERS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("CSBP_WORKERS must be a positive integer");
  return static_cast<unsigned>(n);
}

void write_error(const std::filesystem::path& dir, const std::string& kind, const std::string& message) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return;
  Json j;
  j["version"] = kVersion;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::ofstream out(dir / "error.json", std::ios::binary | std::ios::trunc);
  if (out) out << j.dump(2) << "\n";
}

}  // namespace csbp::cli

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "csbp/config.hpp"
#include "csbp/report.hpp"

namespace csbp::cli {

enum class Subcommand { spectral, laplace, simulate, spine, lln, all };

Subcommand parse_subcommand(const std::string& name);
const char* subcommand_name(Subcommand cmd);

struct RunOutcome {
  std::vector<Report> reports;
  bool all_pass = true;
  std::string manifest_hash;

  int exit_code() const { return all_pass ? 0 : 1; }
};

/// Runs one pipeline and writes its JSON/CSV outputs plus manifest.json to
/// spec.output. Identical spec (including the seed) gives byte-identical
/// files for every worker count.
RunOutcome run(const ExperimentSpec& spec, Subcommand cmd, unsigned workers = 1);

/// Worker count from CSBP_WORKERS (default 1).
unsigned workers_from_env();

/// Writes error.json ({kind, message}) into `dir` if possible.
void write_error(const std::filesystem::path& dir, const std::string& kind, const std::string& message);

}  // namespace csbp::cli

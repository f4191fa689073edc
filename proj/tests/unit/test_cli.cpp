#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "csbp/app.hpp"
#include "csbp/config.hpp"
#include "csbp/errors.hpp"
#include "csbp/output.hpp"

using namespace csbp;
using namespace csbp::cli;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"([model]
a = [-0.5]
b = [0.3]
eta = [[0]]
mu0 = [1]
)";

const char* kSmall = R"(# small two-type run
[model]
K = 2
a = [-0.5, -0.2]
b = [0.3, 0.3]
eta = [[0.0, 0.3],
       [0.1, 0.0]]
mu0 = [1.0, 1.0]

[jumps]
type1.atoms = [[0.5, 0.4, 0.4]]
type2.atoms = [[0.2, 0.4, 0.4]]

[run]
T = 1
dt = 0.01
paths = 400
seed = 5

[tests]
f = [[1, 0], [0, 1]]
occupation_T = 500
ratio_tolerance = 0.5
survival_fraction = 0.001
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("csbp_test_" + name);
  fs::remove_all(p);
  return p;
}

template <class E>
std::string error_of(const std::string& text) {
  try {
    spec_from_text(text);
  } catch (const E& e) {
    return e.what();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, MinimalFillsDefaults) {
  const ExperimentSpec s = spec_from_text(kMinimal);
  EXPECT_EQ(s.model.K(), 1u);
  EXPECT_EQ(s.dt, 0.005);
  EXPECT_EQ(s.paths, 10000u);
  EXPECT_EQ(s.p, 2.0);
  EXPECT_EQ(s.t_grid, (std::vector<double>{0.25, 0.5, 0.75, 1.0}));
  bool saw_dt = false;
  for (const auto& [k, v] : s.defaults_applied) saw_dt = saw_dt || k == "run.dt";
  EXPECT_TRUE(saw_dt);
  EXPECT_EQ(s.config_hash.size(), 16u);
}

TEST(Config, FullSchema) {
  const ExperimentSpec s = spec_from_text(kSmall);
  EXPECT_EQ(s.model.eta(0, 1), 0.3);
  EXPECT_TRUE(s.model.gamma[0].is_atoms());
  EXPECT_EQ(s.model.gamma[1].atoms().atoms[0].rate, 0.2);
  EXPECT_EQ(s.f_test.size(), 2u);
  EXPECT_EQ(s.seed, 5u);
  EXPECT_EQ(s.ratio_tolerance, 0.5);
  EXPECT_EQ(s.record_every, 5);  // t_grid multiples of 0.25 with dt = 0.01
}

TEST(Config, PowerLawJumps) {
  std::string text = kMinimal;
  text += "[jumps]\ntype1.kind = \"power_law\"\ntype1.c = 0.2\ntype1.theta = 1.5\ntype1.direction = [1]\n"
          "type1.u_max = 2\n";
  const ExperimentSpec s = spec_from_text(text);
  ASSERT_TRUE(s.model.gamma[0].is_power_law());
  EXPECT_EQ(s.model.gamma[0].power_law().epsilon, 2e-3);
}

TEST(Config, NegativeB) {
  const std::string text = std::string(kMinimal).replace(std::string(kMinimal).find("0.3"), 3, "-0.3");
  EXPECT_NE(error_of<SchemaError>(text).find("b must be nonnegative"), std::string::npos);
}

TEST(Config, DiagonalEta) {
  std::string text = kSmall;
  text.replace(text.find("[[0.0, 0.3]"), 11, "[[0.2, 0.3]");
  const std::string msg = error_of<SchemaError>(text);
  EXPECT_NE(msg.find("eta diagonal nonzero at 1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("eta_ii = 0"), std::string::npos) << msg;
}

TEST(Config, UnknownKeysAndSections) {
  EXPECT_NE(error_of<SchemaError>(std::string(kMinimal) + "colour = 1\n").find("model.colour"), std::string::npos);
  EXPECT_NE(error_of<SchemaError>(std::string(kMinimal) + "[extra]\nx = 1\n").find("[extra]"), std::string::npos);
  EXPECT_NE(error_of<SchemaError>(std::string(kMinimal) + "[run]\nsteps = 3\n").find("run.steps"), std::string::npos);
}

TEST(Config, ParseErrorsCarryPosition) {
  try {
    spec_from_text("[model]\na = [1, 2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_GE(e.line(), 2);
    EXPECT_GT(e.column(), 0);
  }
  try {
    spec_from_text("[model]\na = [1]\na = [2]\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.column(), 1);
  }
  EXPECT_THROW(spec_from_text("[model\n"), ParseError);
  EXPECT_THROW(spec_from_text("[model]\nb = \"unterminated\n"), ParseError);
  EXPECT_THROW(spec_from_text("[model]\nb = 1.2.3\n"), ParseError);
}

TEST(Config, GridValidation) {
  EXPECT_THROW(spec_from_text(std::string(kMinimal) + "[run]\nT = 1\ndt = 0.3\n"), SchemaError);
  EXPECT_THROW(spec_from_text(std::string(kMinimal) + "[run]\nt_grid = [0.5, 0.25]\n"), SchemaError);
  EXPECT_THROW(spec_from_text(std::string(kMinimal) + "[run]\np = 2.5\n"), SchemaError);
  EXPECT_THROW(spec_from_text(std::string(kMinimal) + "[run]\npaths = 0\n"), SchemaError);
  ExperimentSpec s = spec_from_text(kMinimal);
  s.dt = 0.003;
  EXPECT_THROW(finalize_grid(s), SchemaError);
}

TEST(Config, MomentBoundViolationIsSchemaError) {
  std::string text = kSmall;
  text.replace(text.find("[[0.5, 0.4, 0.4]]"), 17, "[[1.0, 0.4, 0.4]]");
  EXPECT_NE(error_of<SchemaError>(text).find("first moment"), std::string::npos);
}

TEST(Output, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(hex64(fnv1a("a")), "af63dc4c8601ec8c");
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}

TEST(Run, DeterministicAcrossRunsAndWorkers) {
  ExperimentSpec s = spec_from_text(kSmall);
  const fs::path dir_a = scratch_dir("det_a");
  const fs::path dir_b = scratch_dir("det_b");
  s.output = dir_a;
  const RunOutcome a = run(s, Subcommand::all, 1);
  s.output = dir_b;
  const RunOutcome b = run(s, Subcommand::all, 3);
  EXPECT_EQ(a.manifest_hash, b.manifest_hash);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir_a)) {
    EXPECT_EQ(slurp(entry.path()), slurp(dir_b / entry.path().filename())) << entry.path();
    ++files;
  }
  EXPECT_GT(files, 10u);
}

TEST(Run, EveryFileEmbedsVersionAndHash) {
  ExperimentSpec s = spec_from_text(kSmall);
  s.output = scratch_dir("hash");
  run(s, Subcommand::all, 1);
  for (const auto& entry : fs::directory_iterator(s.output)) {
    const std::string body = slurp(entry.path());
    EXPECT_NE(body.find(s.config_hash), std::string::npos) << entry.path();
    EXPECT_NE(body.find("0.1.0"), std::string::npos) << entry.path();
  }
}

TEST(Run, SubcommandsWriteTheirFiles) {
  ExperimentSpec s = spec_from_text(kSmall);
  const std::vector<std::pair<Subcommand, std::vector<std::string>>> expected = {
      {Subcommand::spectral, {"spectral.json"}},
      {Subcommand::laplace, {"laplace.json", "laplace_f1.csv", "laplace_f2.csv"}},
      {Subcommand::simulate, {"ensemble.json", "path_0.csv", "jumps_2.csv"}},
      {Subcommand::spine, {"spine.json", "spine_intervals.csv"}},
      {Subcommand::lln, {"lln.json", "lln_ratios.csv"}},
  };
  for (const auto& [cmd, files] : expected) {
    s.output = scratch_dir(std::string("sub_") + subcommand_name(cmd));
    run(s, cmd, 1);
    EXPECT_TRUE(fs::exists(s.output / "manifest.json"));
    for (const auto& f : files) EXPECT_TRUE(fs::exists(s.output / f)) << f;
  }
}

TEST(Run, DeterministicModelPassesWithZeroSe) {
  const char* text = R"([model]
K = 2
a = [-0.5, -0.2]
b = [0, 0]
eta = [[0, 0.3], [0.1, 0]]
mu0 = [1, 1]
[run]
T = 20
paths = 120
[tests]
occupation_T = 2000
)";
  ExperimentSpec s = spec_from_text(text);
  s.output = scratch_dir("deterministic");
  const RunOutcome out = run(s, Subcommand::all, 1);
  EXPECT_TRUE(out.all_pass);
  for (const auto& r : out.reports) {
    if (r.name.rfind("laplace", 0) == 0 || r.name.rfind("variance", 0) == 0 || r.name == "jump_count") {
      EXPECT_EQ(r.std_error, 0.0) << r.name;
    }
  }
}

TEST(Run, UnknownSubcommand) { EXPECT_THROW(parse_subcommand("plot"), ConfigError); }

#ifdef CSBP_CLI_PATH
TEST(Cli, ExitCodesAndErrorJson) {
  const fs::path dir = scratch_dir("cli");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "bad.toml") << "[model]\na = [1]\nb = [-1]\neta = [[0]]\nmu0 = [1]\n";
    std::ofstream(dir / "good.toml") << kSmall;
  }
  const std::string cli = CSBP_CLI_PATH;
  const std::string out = (dir / "out").string();
  int rc = std::system((cli + " spectral --config " + (dir / "bad.toml").string() + " --out " + out +
                        " > /dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(rc), 2);
  const std::string err = slurp(dir / "out" / "error.json");
  EXPECT_NE(err.find("SchemaError"), std::string::npos);
  EXPECT_NE(err.find("b must be nonnegative"), std::string::npos);
  rc = std::system((cli + " spectral --config " + (dir / "good.toml").string() + " --out " + out +
                    " --seed 3 > /dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(rc), 0);
  rc = std::system((cli + " frobnicate > /dev/null 2>&1").c_str());
  EXPECT_NE(WEXITSTATUS(rc), 0);
}
#endif

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "csbp/linalg.hpp"
#include "csbp/model.hpp"

namespace csbp::cli {

/// Value of the configuration language: numbers, strings, booleans and
/// (possibly nested) arrays.
struct Value {
  struct Array {
    std::vector<Value> items;
  };
  std::variant<double, std::string, bool, Array> data;
  std::string text;  ///< source spelling of numbers
  int line = 0;
  int column = 0;

  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_array() const { return std::holds_alternative<Array>(data); }
};

struct Entry {
  std::string key;
  Value value;
  int line = 0;
  int column = 0;
};

/// Section name -> entries in file order. Keys outside any section live
/// under "".
using Document = std::map<std::string, std::vector<Entry>>;

/// Parses the flat sectioned key-value format:
///
///   # comment
///   [model]
///   a = [-0.5, -0.2]
///   eta = [[0, 0.3],
///          [0.1, 0]]
///   [jumps]
///   type1.atoms = [[0.5, 0.4, 0.4]]
///
/// Throws ParseError with 1-based line and column.
Document parse_document(const std::string& text);

struct ExperimentSpec {
  ModelConfig model;
  double T = 1.0;
  double dt = 0.005;
  std::size_t paths = 10000;
  std::uint64_t seed = 0;
  double p = 2.0;
  std::vector<double> t_grid;
  bool t_grid_explicit = false;
  long record_every = 1;
  bool record_every_explicit = false;
  std::vector<Vector> f_test;
  std::filesystem::path output = "csbp_out";

  // spine and LLN settings
  double spine_t = 1.0;
  std::size_t spine_start = 0;
  double occupation_T = 1e4;
  Vector lln_f;
  double survival_fraction = 1e-3;
  double ratio_tolerance = 0.05;

  /// FNV-1a hash of the configuration text, hex.
  std::string config_hash;
  /// Every setting that was filled from a default, with its value.
  std::vector<std::pair<std::string, std::string>> defaults_applied;
};

/// Builds an ExperimentSpec from configuration text. Unknown keys and bad
/// values raise SchemaError naming the key; syntax errors raise ParseError.
ExperimentSpec spec_from_text(const std::string& text);

/// Reads and parses a UTF-8 configuration file.
ExperimentSpec load_config(const std::filesystem::path& path);

/// Picks the recording stride (unless set explicitly) and validates grid
/// alignment. Called again after command-line overrides change T or dt.
void finalize_grid(ExperimentSpec& spec);

}  // namespace csbp::cli

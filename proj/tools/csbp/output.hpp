#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csbp/linalg.hpp"
#include "csbp/report.hpp"

namespace csbp::cli {

using Json = nlohmann::ordered_json;

std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t x);

/// Shortest-round-trip-safe fixed format: 17 significant digits.
std::string format_double(double x);

Json to_json(const Report& r);
Json to_json(const Vector& v);
Json to_json(const Matrix& m);

/// Output directory that remembers every file it wrote, for the manifest.
class OutputDir {
 public:
  OutputDir(std::filesystem::path root, std::string config_hash);

  const std::filesystem::path& root() const { return root_; }
  const std::string& config_hash() const { return config_hash_; }

  /// Writes `body` (an object) with version and config hash prepended.
  void write_json(const std::string& name, const Json& body);

  /// Writes a CSV with a '#' provenance line, the header row, then rows.
  void write_csv(const std::string& name, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

  /// Writes manifest.json over everything written so far and returns the
  /// manifest hash.
  std::string write_manifest();

 private:
  void write_file(const std::string& name, const std::string& bytes);

  std::filesystem::path root_;
  std::string config_hash_;
  std::vector<std::pair<std::string, std::uint64_t>> files_;
  std::vector<std::uint64_t> sizes_;
};

}  // namespace csbp::cli

#include "csbp/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "csbp/errors.hpp"
#include "csbp/version.hpp"

namespace csbp::cli {

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vector(m.row(i).transpose())));
  return out;
}

Json to_json(const Report& r) {
  Json j;
  j["name"] = r.name;
  j["estimate"] = r.estimate;
  j["std_error"] = r.std_error;
  j["oracle"] = r.oracle ? Json(*r.oracle) : Json(nullptr);
  j["n_samples"] = r.n_samples;
  j["se_multiplier"] = r.se_multiplier;
  j["abs_tol"] = r.abs_tol;
  j["pass"] = r.pass;
  Json meta = Json::object();
  for (const auto& [k, v] : r.metadata) meta[k] = v;
  j["metadata"] = meta;
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  j["checks"] = checks;
  return j;
}

OutputDir::OutputDir(std::filesystem::path root, std::string config_hash)
    : root_(std::move(root)), config_hash_(std::move(config_hash)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw ConfigError("cannot create output directory " + root_.string() + ": " + ec.message());
}

void OutputDir::write_file(const std::string& name, const std::string& bytes) {
  const auto path = root_ / name;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << bytes;
  if (!out) throw ConfigError("failed writing " + path.string());
  files_.emplace_back(name, fnv1a(bytes));
  sizes_.push_back(bytes.size());
}

void OutputDir::write_json(const std::string& name, const Json& body) {
  Json doc;
  doc["version"] = kVersion;
  doc["config_hash"] = config_hash_;
  for (const auto& [k, v] : body.items()) doc[k] = v;
  write_file(name, doc.dump(2) + "\n");
}

void OutputDir::write_csv(const std::string& name, const std::vector<std::string>& header,
                          const std::vector<std::vector<std::string>>& rows) {
  std::string out = std::string("# csbp ") + kVersion + " config=" + config_hash_ + "\n";
  for (std::size_t k = 0; k < header.size(); ++k) out += (k ? "," : "") + header[k];
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ',';
      out += row[k];
    }
    out += '\n';
  }
  write_file(name, out);
}

std::string OutputDir::write_manifest() {
  std::vector<std::size_t> order(files_.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return files_[x].first < files_[y].first; });
  Json list = Json::array();
  std::string digest_input;
  for (std::size_t k : order) {
    Json f;
    f["name"] = files_[k].first;
    f["bytes"] = sizes_[k];
    f["fnv1a64"] = hex64(files_[k].second);
    list.push_back(f);
    digest_input += files_[k].first + ":" + hex64(files_[k].second) + "\n";
  }
  const std::string manifest_hash = hex64(fnv1a(digest_input));
  Json doc;
  doc["version"] = kVersion;
  doc["config_hash"] = config_hash_;
  doc["files"] = list;
  doc["manifest_hash"] = manifest_hash;
  const auto path = root_ / "manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << doc.dump(2) << "\n";
  return manifest_hash;
}

}  // namespace csbp::cli

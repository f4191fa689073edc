#include "csbp/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <optional>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "csbp/errors.hpp"

namespace csbp::cli {

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  Document parse() {
    Document doc;
    std::string section;
    std::set<std::string> seen_sections;
    std::set<std::pair<std::string, std::string>> seen_keys;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        const int line = line_, col = col_;
        advance();
        skip_spaces();
        std::string name = bare_key();
        skip_spaces();
        expect(']');
        end_of_statement();
        if (!seen_sections.insert(name).second) {
          throw ParseError("duplicate section [" + name + "]", line, col);
        }
        section = name;
        doc[section];
        continue;
      }
      Entry e;
      e.line = line_;
      e.column = col_;
      e.key = bare_key();
      skip_spaces();
      expect('=');
      skip_spaces();
      e.value = value();
      end_of_statement();
      if (!seen_keys.insert({section, e.key}).second) {
        throw ParseError("duplicate key '" + e.key + "'", e.line, e.column);
      }
      doc[section].push_back(std::move(e));
    }
    return doc;
  }

 private:
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }

  void advance() {
    if (s_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else if ((static_cast<unsigned char>(s_[pos_]) & 0xC0) != 0x80) {
      ++col_;  // count code points, not UTF-8 continuation bytes
    }
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
  }

  void skip_comment() {
    if (!eof() && peek() == '#') {
      while (!eof() && peek() != '\n') advance();
    }
  }

  void skip_blank_lines() {
    while (!eof()) {
      skip_spaces();
      skip_comment();
      if (!eof() && peek() == '\n') {
        advance();
        continue;
      }
      break;
    }
  }

  // whitespace, newlines and comments inside arrays
  void skip_layout() {
    while (!eof()) {
      skip_spaces();
      skip_comment();
      if (!eof() && peek() == '\n') {
        advance();
        continue;
      }
      break;
    }
  }

  void expect(char c) {
    if (eof()) fail(std::string("expected '") + c + "' before end of input");
    if (peek() != c) fail(std::string("expected '") + c + "', found '" + peek() + "'");
    advance();
  }

  void end_of_statement() {
    skip_spaces();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n') fail(std::string("unexpected '") + peek() + "' after value");
    advance();
  }

  std::string bare_key() {
    std::string out;
    while (!eof()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.') {
        out += c;
        advance();
      } else {
        break;
      }
    }
    if (out.empty()) {
      if (eof()) fail("expected a key");
      fail(std::string("expected a key, found '") + peek() + "'");
    }
    return out;
  }

  Value value() {
    Value v;
    v.line = line_;
    v.column = col_;
    if (eof()) fail("expected a value");
    const char c = peek();
    if (c == '[') {
      advance();
      Value::Array arr;
      skip_layout();
      if (!eof() && peek() == ']') {
        advance();
        v.data = std::move(arr);
        return v;
      }
      while (true) {
        skip_layout();
        arr.items.push_back(value());
        skip_layout();
        if (eof()) fail("unterminated array");
        if (peek() == ',') {
          advance();
          skip_layout();
          if (!eof() && peek() == ']') {
            advance();
            break;
          }
          continue;
        }
        if (peek() == ']') {
          advance();
          break;
        }
        fail(std::string("expected ',' or ']' in array, found '") + peek() + "'");
      }
      v.data = std::move(arr);
      return v;
    }
    if (c == '"') {
      advance();
      std::string out;
      while (true) {
        if (eof() || peek() == '\n') fail("unterminated string");
        if (peek() == '"') {
          advance();
          break;
        }
        if (peek() == '\\') {
          advance();
          if (eof()) fail("unterminated escape");
          const char e = peek();
          if (e == 'n') out += '\n';
          else if (e == 't') out += '\t';
          else if (e == '"' || e == '\\') out += e;
          else fail(std::string("unknown escape '\\") + e + "'");
          advance();
          continue;
        }
        out += peek();
        advance();
      }
      v.data = std::move(out);
      return v;
    }
    std::string token;
    while (!eof()) {
      const char ch = peek();
      if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '+' || ch == '-' || ch == '.' || ch == '_') {
        token += ch;
        advance();
      } else {
        break;
      }
    }
    if (token.empty()) fail(std::string("unexpected '") + c + "'");
    if (token == "true" || token == "false") {
      v.data = token == "true";
      return v;
    }
    std::string digits;
    for (char ch : token) {
      if (ch != '_') digits += ch;
    }
    char* end = nullptr;
    const double x = std::strtod(digits.c_str(), &end);
    if (end != digits.c_str() + digits.size() || digits.empty()) {
      throw ParseError("invalid number '" + token + "'", v.line, v.column);
    }
    v.data = x;
    v.text = digits;
    return v;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string where(const Entry& e) {
  return " (line " + std::to_string(e.line) + ")";
}

double number(const Entry& e, const Value& v, const std::string& key) {
  if (!v.is_number()) throw SchemaError(key + " must be a number" + where(e));
  return std::get<double>(v.data);
}

double number(const Entry& e) { return number(e, e.value, e.key); }

Vector vector_of(const Entry& e, const Value& v, const std::string& key) {
  if (!v.is_array()) throw SchemaError(key + " must be a list of numbers" + where(e));
  const auto& items = std::get<Value::Array>(v.data).items;
  Vector out(static_cast<Eigen::Index>(items.size()));
  for (std::size_t k = 0; k < items.size(); ++k) out(static_cast<Eigen::Index>(k)) = number(e, items[k], key);
  return out;
}

Vector vector_of(const Entry& e) { return vector_of(e, e.value, e.key); }

std::vector<Vector> rows_of(const Entry& e) {
  if (!e.value.is_array()) throw SchemaError(e.key + " must be a list of rows" + where(e));
  std::vector<Vector> rows;
  for (const auto& item : std::get<Value::Array>(e.value.data).items) rows.push_back(vector_of(e, item, e.key));
  return rows;
}

Matrix matrix_of(const Entry& e) {
  const auto rows = rows_of(e);
  if (rows.empty()) return Matrix(0, 0);
  const Eigen::Index cols = rows.front().size();
  Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw SchemaError(e.key + " rows must all have the same length" + where(e));
    m.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  }
  return m;
}

std::uint64_t unsigned_of(const Entry& e) {
  if (!e.value.is_number()) throw SchemaError(e.key + " must be a nonnegative integer" + where(e));
  const std::string& t = e.value.text;
  if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
    throw SchemaError(e.key + " must be a nonnegative integer" + where(e));
  }
  errno = 0;
  const unsigned long long x = std::strtoull(t.c_str(), nullptr, 10);
  if (errno == ERANGE) throw SchemaError(e.key + " does not fit in 64 bits" + where(e));
  return x;
}

std::string string_of(const Entry& e) {
  if (!e.value.is_string()) throw SchemaError(e.key + " must be a string" + where(e));
  return std::get<std::string>(e.value.data);
}

std::string format_number(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

struct JumpSpec {
  std::string kind;
  std::vector<Vector> atoms;
  bool has_atoms = false;
  PowerLaw law;
  std::set<std::string> law_fields;
};

}  // namespace

Document parse_document(const std::string& text) { return Parser(text).parse(); }

void finalize_grid(ExperimentSpec& spec) {
  const bool record_every_explicit = spec.record_every_explicit;
  const double T = spec.T;
  const double dt = spec.dt;
  if (!(T > 0.0)) throw SchemaError("run.T must be positive");
  if (!(dt > 0.0)) throw SchemaError("run.dt must be positive");
  const long steps = std::lround(T / dt);
  if (steps < 1 || std::abs(static_cast<double>(steps) * dt - T) > 1e-12 * std::max(1.0, T)) {
    throw SchemaError("run.dt must divide run.T");
  }
  if (!spec.t_grid_explicit) spec.t_grid = {0.25 * T, 0.5 * T, 0.75 * T, T};

  std::vector<long> indices;
  for (double t : spec.t_grid) {
    if (!(t > 0.0) || t > T * (1.0 + 1e-12)) throw SchemaError("run.t_grid entries must lie in (0, T]");
    const long k = std::lround(t / dt);
    if (std::abs(static_cast<double>(k) * dt - t) > 1e-9 * std::max(1.0, t)) {
      throw SchemaError("run.t_grid entries must be multiples of run.dt");
    }
    indices.push_back(k);
  }
  for (std::size_t k = 1; k < spec.t_grid.size(); ++k) {
    if (!(spec.t_grid[k] > spec.t_grid[k - 1])) throw SchemaError("run.t_grid must be increasing");
  }

  if (record_every_explicit) {
    if (spec.record_every < 1 || steps % spec.record_every != 0) {
      throw SchemaError("run.record_every must divide the number of steps");
    }
    for (long k : indices) {
      if (k % spec.record_every != 0) throw SchemaError("run.t_grid must lie on the recorded grid");
    }
    return;
  }
  long g = steps;
  for (long k : indices) g = std::gcd(g, k);
  const long cap = std::max(1L, std::lround(0.1 / dt));
  long best = 1;
  for (long d = 1; d <= std::min(g, cap); ++d) {
    if (g % d == 0) best = d;
  }
  spec.record_every = best;
  auto& d = spec.defaults_applied;
  d.erase(std::remove_if(d.begin(), d.end(), [](const auto& kv) { return kv.first == "run.record_every"; }), d.end());
  d.emplace_back("run.record_every", std::to_string(best));
}

ExperimentSpec spec_from_text(const std::string& text) {
  const Document doc = parse_document(text);
  ExperimentSpec spec;
  spec.config_hash = fnv1a_hex(text);

  static const std::set<std::string> kSections = {"model", "jumps", "run", "tests"};
  for (const auto& [name, entries] : doc) {
    if (!kSections.count(name)) {
      if (name.empty() && !entries.empty()) {
        throw SchemaError("key '" + entries.front().key + "' must appear inside a section" + where(entries.front()));
      }
      if (!name.empty()) throw SchemaError("unknown section [" + name + "]");
    }
  }
  auto section = [&](const std::string& name) -> const std::vector<Entry>& {
    static const std::vector<Entry> none;
    const auto it = doc.find(name);
    return it == doc.end() ? none : it->second;
  };

  // [model]
  std::optional<double> declared_K;
  bool have_a = false, have_b = false, have_eta = false, have_mu0 = false;
  for (const auto& e : section("model")) {
    if (e.key == "K") {
      declared_K = number(e);
    } else if (e.key == "a") {
      spec.model.a = vector_of(e);
      have_a = true;
    } else if (e.key == "b") {
      spec.model.b = vector_of(e);
      have_b = true;
    } else if (e.key == "eta") {
      spec.model.eta = matrix_of(e);
      have_eta = true;
    } else if (e.key == "mu0") {
      spec.model.mu0 = vector_of(e);
      have_mu0 = true;
    } else {
      throw SchemaError("unknown key 'model." + e.key + "'" + where(e));
    }
  }
  if (!have_a) throw SchemaError("missing key 'model.a'");
  const std::size_t K = spec.model.K();
  if (K == 0) throw SchemaError("model.a must not be empty");
  if (declared_K && *declared_K != static_cast<double>(K)) {
    throw SchemaError("model.K does not match the length of model.a");
  }
  const auto k = static_cast<Eigen::Index>(K);
  if (!have_b) {
    spec.model.b = Vector::Zero(k);
    spec.defaults_applied.emplace_back("model.b", "0");
  }
  if (!have_eta) {
    spec.model.eta = Matrix::Zero(k, k);
    spec.defaults_applied.emplace_back("model.eta", "0");
  }
  if (!have_mu0) throw SchemaError("missing key 'model.mu0'");

  // [jumps]
  std::map<std::size_t, JumpSpec> jumps;
  for (const auto& e : section("jumps")) {
    const auto dot = e.key.find('.');
    if (e.key.rfind("type", 0) != 0 || dot == std::string::npos) {
      throw SchemaError("unknown key 'jumps." + e.key + "' (expected typeN.<field>)" + where(e));
    }
    const std::string index_text = e.key.substr(4, dot - 4);
    if (index_text.empty() || index_text.find_first_not_of("0123456789") != std::string::npos) {
      throw SchemaError("unknown key 'jumps." + e.key + "'" + where(e));
    }
    const std::size_t type = std::stoul(index_text);
    if (type < 1 || type > K) throw SchemaError("jumps." + e.key + ": type index out of range 1.." + std::to_string(K));
    const std::string field = e.key.substr(dot + 1);
    JumpSpec& js = jumps[type - 1];
    if (field == "kind") {
      js.kind = string_of(e);
      if (js.kind != "atoms" && js.kind != "power_law") {
        throw SchemaError("jumps." + e.key + " must be \"atoms\" or \"power_law\"" + where(e));
      }
    } else if (field == "atoms") {
      js.atoms = rows_of(e);
      js.has_atoms = true;
    } else if (field == "c") {
      js.law.c = number(e);
      js.law_fields.insert(field);
    } else if (field == "theta") {
      js.law.theta = number(e);
      js.law_fields.insert(field);
    } else if (field == "direction") {
      js.law.direction = vector_of(e);
      js.law_fields.insert(field);
    } else if (field == "u_max") {
      js.law.u_max = number(e);
      js.law_fields.insert(field);
    } else if (field == "epsilon") {
      js.law.epsilon = number(e);
      js.law_fields.insert(field);
    } else {
      throw SchemaError("unknown key 'jumps." + e.key + "'" + where(e));
    }
  }
  spec.model.gamma.assign(K, JumpMeasure::none());
  for (auto& [type, js] : jumps) {
    const std::string prefix = "jumps.type" + std::to_string(type + 1);
    const std::string kind = js.kind.empty() ? (js.law_fields.empty() ? "atoms" : "power_law") : js.kind;
    if (kind == "atoms") {
      if (!js.law_fields.empty()) throw SchemaError(prefix + " mixes atoms with power-law fields");
      FiniteAtoms fa;
      for (const auto& row : js.atoms) {
        if (static_cast<std::size_t>(row.size()) != K + 1) {
          throw SchemaError(prefix + ".atoms rows must be [rate, y_1, ..., y_K] with K = " + std::to_string(K));
        }
        fa.atoms.push_back({row(0), row.tail(k)});
      }
      spec.model.gamma[type] = JumpMeasure(std::move(fa));
    } else {
      if (js.has_atoms) throw SchemaError(prefix + " mixes atoms with power-law fields");
      for (const char* required : {"c", "theta", "direction", "u_max"}) {
        if (!js.law_fields.count(required)) throw SchemaError("missing key '" + prefix + "." + required + "'");
      }
      if (!js.law_fields.count("epsilon")) {
        js.law.epsilon = 1e-3 * js.law.u_max;
        spec.defaults_applied.emplace_back(prefix + ".epsilon", format_number(js.law.epsilon));
      }
      spec.model.gamma[type] = JumpMeasure(js.law);
    }
  }

  // Schema-level model checks with config-facing messages, then the full set.
  for (Eigen::Index i = 0; i < spec.model.b.size(); ++i) {
    if (spec.model.b(i) < 0.0) {
      throw SchemaError("b must be nonnegative (b[" + std::to_string(i + 1) + "] = " + format_number(spec.model.b(i)) + ")");
    }
  }
  if (spec.model.eta.rows() == k && spec.model.eta.cols() == k) {
    for (Eigen::Index i = 0; i < k; ++i) {
      if (spec.model.eta(i, i) != 0.0) {
        throw SchemaError("eta diagonal nonzero at " + std::to_string(i + 1) +
                          ": the model requires eta_ii = 0; fold the diagonal into a_i");
      }
    }
  }
  const auto violations = validate_model(spec.model);
  if (!violations.empty()) {
    std::string msg = "invalid model:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw SchemaError(msg);
  }

  // [run]
  std::set<std::string> run_keys;
  for (const auto& e : section("run")) {
    run_keys.insert(e.key);
    if (e.key == "T") {
      spec.T = number(e);
    } else if (e.key == "dt") {
      spec.dt = number(e);
    } else if (e.key == "paths") {
      const auto n = unsigned_of(e);
      if (n < 1) throw SchemaError("run.paths must be at least 1" + where(e));
      spec.paths = static_cast<std::size_t>(n);
    } else if (e.key == "seed") {
      spec.seed = unsigned_of(e);
    } else if (e.key == "p") {
      spec.p = number(e);
      if (!(spec.p > 1.0 && spec.p <= 2.0)) throw SchemaError("run.p must lie in (1, 2]" + where(e));
    } else if (e.key == "t_grid") {
      const Vector g = vector_of(e);
      spec.t_grid.assign(g.data(), g.data() + g.size());
      spec.t_grid_explicit = true;
      if (spec.t_grid.empty()) throw SchemaError("run.t_grid must not be empty" + where(e));
    } else if (e.key == "record_every") {
      spec.record_every = static_cast<long>(unsigned_of(e));
      spec.record_every_explicit = true;
    } else if (e.key == "output") {
      spec.output = string_of(e);
    } else {
      throw SchemaError("unknown key 'run." + e.key + "'" + where(e));
    }
  }
  auto note_default = [&](const std::string& key, const std::string& value) {
    if (!run_keys.count(key)) spec.defaults_applied.emplace_back("run." + key, value);
  };
  note_default("T", format_number(spec.T));
  note_default("dt", format_number(spec.dt));
  note_default("paths", std::to_string(spec.paths));
  note_default("seed", std::to_string(spec.seed));
  note_default("p", format_number(spec.p));
  note_default("output", spec.output.string());
  if (!run_keys.count("t_grid")) spec.defaults_applied.emplace_back("run.t_grid", "[T/4, T/2, 3T/4, T]");

  // [tests]
  std::set<std::string> test_keys;
  for (const auto& e : section("tests")) {
    test_keys.insert(e.key);
    if (e.key == "f") {
      spec.f_test = rows_of(e);
      for (const auto& f : spec.f_test) {
        if (static_cast<std::size_t>(f.size()) != K) throw SchemaError("tests.f rows must have length K" + where(e));
        if ((f.array() < 0.0).any()) throw SchemaError("tests.f rows must be nonnegative" + where(e));
      }
    } else if (e.key == "spine_t") {
      spec.spine_t = number(e);
      if (!(spec.spine_t > 0.0)) throw SchemaError("tests.spine_t must be positive" + where(e));
    } else if (e.key == "spine_start") {
      const auto s = unsigned_of(e);
      if (s < 1 || s > K) throw SchemaError("tests.spine_start must lie in 1..K" + where(e));
      spec.spine_start = static_cast<std::size_t>(s - 1);
    } else if (e.key == "occupation_T") {
      spec.occupation_T = number(e);
      if (!(spec.occupation_T > 0.0)) throw SchemaError("tests.occupation_T must be positive" + where(e));
    } else if (e.key == "lln_f") {
      spec.lln_f = vector_of(e);
      if (static_cast<std::size_t>(spec.lln_f.size()) != K) throw SchemaError("tests.lln_f must have length K" + where(e));
    } else if (e.key == "survival_fraction") {
      spec.survival_fraction = number(e);
    } else if (e.key == "ratio_tolerance") {
      spec.ratio_tolerance = number(e);
    } else {
      throw SchemaError("unknown key 'tests." + e.key + "'" + where(e));
    }
  }
  if (spec.f_test.empty()) {
    spec.f_test.push_back(Vector::Ones(k));
    spec.defaults_applied.emplace_back("tests.f", "[[1, ..., 1]]");
  }
  if (spec.lln_f.size() == 0) {
    spec.lln_f = Vector::Ones(k);
    spec.defaults_applied.emplace_back("tests.lln_f", "[1, ..., 1]");
  }
  auto note_test_default = [&](const std::string& key, const std::string& value) {
    if (!test_keys.count(key)) spec.defaults_applied.emplace_back("tests." + key, value);
  };
  note_test_default("spine_t", format_number(spec.spine_t));
  note_test_default("spine_start", "1");
  note_test_default("occupation_T", format_number(spec.occupation_T));
  note_test_default("survival_fraction", format_number(spec.survival_fraction));
  note_test_default("ratio_tolerance", format_number(spec.ratio_tolerance));

  finalize_grid(spec);
  return spec;
}

ExperimentSpec load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return spec_from_text(os.str());
}

}  // namespace csbp::cli

#include "blocksolve/app/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace blocksolve::app {

using nlohmann::json;

ConfigError::ConfigError(const std::string& msg, std::size_t line, std::size_t column)
    : std::runtime_error(line > 0 ? std::to_string(line) + ":" + std::to_string(column) + ": " + msg : msg),
      line_(line),
      column_(column) {}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

namespace {

const std::set<std::string> kSolvers{"rcog", "arcog_direct", "arcog_practical", "fedog", "acfeddr"};
const std::set<std::string> kKeys{"problem",   "problem_file", "solver",   "omega",          "rho",
                                  "nu",        "beta_fraction", "lambda",  "beta",           "rebase_threshold",
                                  "probs",     "x0",           "seeds",    "seed",           "max_iters",
                                  "tol",       "record_every", "diagnostics", "output_dir"};
const std::set<std::string> kDiagnosticKeys{"lyapunov", "descent_margins", "summable_checks"};

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const std::string needle = "\"" + key + "\"";
    std::size_t pos = 0;
    while ((pos = text_.find(needle, pos)) != std::string::npos) {
      std::size_t q = pos + needle.size();
      while (q < text_.size() && std::isspace(static_cast<unsigned char>(text_[q]))) ++q;
      if (q < text_.size() && text_[q] == ':') {
        auto [l, c] = line_column(text_, pos);
        throw ConfigError(msg, l, c);
      }
      pos += needle.size();
    }
    throw ConfigError(msg);
  }

  double number(const json& j, const std::string& key) const {
    const json& v = j.at(key);
    if (!v.is_number()) fail(key, "'" + key + "' must be a number");
    return v.get<double>();
  }

  long integer(const json& j, const std::string& key) const {
    const json& v = j.at(key);
    if (!v.is_number_integer()) fail(key, "'" + key + "' must be an integer");
    return v.get<long>();
  }

  bool boolean(const json& j, const std::string& key) const {
    const json& v = j.at(key);
    if (!v.is_boolean()) fail(key, "'" + key + "' must be true or false");
    return v.get<bool>();
  }

  std::string string(const json& j, const std::string& key) const {
    const json& v = j.at(key);
    if (!v.is_string()) fail(key, "'" + key + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const json& j, const std::string& key) const {
    const json& v = j.at(key);
    if (!v.is_array() || v.empty()) fail(key, "'" + key + "' must be a nonempty array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "'" + key + "' must contain only numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::uint64_t seed(const json& v, const std::string& key) const {
    if (!v.is_number_unsigned()) fail(key, "'" + key + "' entries must be nonnegative integers");
    return v.get<std::uint64_t>();
  }

 private:
  const std::string& text_;
};

json to_json(const RunConfig& c) {
  json j;
  if (c.problem_file) j["problem_file"] = *c.problem_file;
  if (c.problem_inline) j["problem"] = json::parse(*c.problem_inline);
  j["solver"] = c.solver;
  if (c.omega) j["omega"] = *c.omega;
  if (c.rho) j["rho"] = *c.rho;
  j["nu"] = c.nu;
  j["beta_fraction"] = c.beta_fraction;
  if (c.lambda) j["lambda"] = *c.lambda;
  if (c.beta) j["beta"] = *c.beta;
  j["rebase_threshold"] = c.rebase_threshold;
  if (c.probs) j["probs"] = *c.probs;
  if (c.x0) j["x0"] = *c.x0;
  j["seeds"] = c.seeds;
  j["max_iters"] = c.max_iters;
  j["tol"] = c.tol;
  j["record_every"] = c.record_every;
  j["diagnostics"] = {{"lyapunov", c.diagnostics.lyapunov},
                      {"descent_margins", c.diagnostics.descent_margins},
                      {"summable_checks", c.diagnostics.summable_checks}};
  j["output_dir"] = c.output_dir;
  return j;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [l, c] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    const auto cut = what.find("parse error");
    throw ConfigError("invalid JSON: " + (cut == std::string::npos ? what : what.substr(cut)), l, c);
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object", 1, 1);
  Reader r(text);
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.count(key)) r.fail(key, "unknown key '" + key + "'");
  }

  RunConfig c;
  const bool has_inline = j.contains("problem");
  const bool has_file = j.contains("problem_file");
  if (has_inline == has_file) {
    if (has_inline) r.fail("problem_file", "give either 'problem' or 'problem_file', not both");
    throw ConfigError("missing problem: set 'problem' (inline) or 'problem_file'");
  }
  if (has_file) c.problem_file = r.string(j, "problem_file");
  if (has_inline) {
    if (!j.at("problem").is_object()) r.fail("problem", "'problem' must be an object");
    c.problem_inline = j.at("problem").dump();
  }

  if (j.contains("solver")) c.solver = r.string(j, "solver");
  if (!kSolvers.count(c.solver)) {
    r.fail("solver", "unknown solver '" + c.solver +
                         "' (expected rcog, arcog_direct, arcog_practical, fedog or acfeddr)");
  }
  if (j.contains("omega")) c.omega = r.number(j, "omega");
  if (j.contains("rho")) c.rho = r.number(j, "rho");
  if (j.contains("nu")) c.nu = r.number(j, "nu");
  if (j.contains("beta_fraction")) c.beta_fraction = r.number(j, "beta_fraction");
  if (j.contains("lambda")) c.lambda = r.number(j, "lambda");
  if (j.contains("beta")) c.beta = r.number(j, "beta");
  if (j.contains("rebase_threshold")) c.rebase_threshold = r.number(j, "rebase_threshold");
  if (j.contains("probs")) c.probs = r.numbers(j, "probs");
  if (j.contains("x0")) c.x0 = r.numbers(j, "x0");
  if (j.contains("seeds") && j.contains("seed")) r.fail("seed", "give either 'seed' or 'seeds', not both");
  if (j.contains("seed")) c.seeds = {r.seed(j.at("seed"), "seed")};
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    if (!s.is_array() || s.empty()) r.fail("seeds", "'seeds' must be a nonempty array");
    c.seeds.clear();
    for (const auto& e : s) c.seeds.push_back(r.seed(e, "seeds"));
    std::vector<std::uint64_t> sorted = c.seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) r.fail("seeds", "'seeds' has duplicates");
  }
  if (j.contains("max_iters")) c.max_iters = r.integer(j, "max_iters");
  if (j.contains("tol")) c.tol = r.number(j, "tol");
  if (j.contains("record_every")) c.record_every = r.integer(j, "record_every");
  if (j.contains("output_dir")) c.output_dir = r.string(j, "output_dir");
  if (j.contains("diagnostics")) {
    const json& d = j.at("diagnostics");
    if (!d.is_object()) r.fail("diagnostics", "'diagnostics' must be an object");
    for (const auto& [key, _] : d.items()) {
      if (!kDiagnosticKeys.count(key)) r.fail(key, "unknown diagnostics toggle '" + key + "'");
    }
    if (d.contains("lyapunov")) c.diagnostics.lyapunov = r.boolean(d, "lyapunov");
    if (d.contains("descent_margins")) c.diagnostics.descent_margins = r.boolean(d, "descent_margins");
    if (d.contains("summable_checks")) c.diagnostics.summable_checks = r.boolean(d, "summable_checks");
  }

  if (c.max_iters < 0) r.fail("max_iters", "'max_iters' must be nonnegative");
  if (c.record_every < 1) r.fail("record_every", "'record_every' must be at least 1");
  if (!(c.tol >= 0.0)) r.fail("tol", "'tol' must be nonnegative");
  if (!(c.rebase_threshold >= 0.0 && c.rebase_threshold < 1.0)) {
    r.fail("rebase_threshold", "'rebase_threshold' must lie in [0, 1)");
  }
  if (!(c.beta_fraction > 0.0 && c.beta_fraction <= 1.0)) {
    r.fail("beta_fraction", "'beta_fraction' must lie in (0, 1]");
  }
  if (!(c.nu > 3.0)) r.fail("nu", "'nu' must exceed 3 (the summable constant C1 diverges otherwise)");
  if (c.output_dir.empty()) r.fail("output_dir", "'output_dir' must not be empty");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  try {
    return parse_run_config(os.str());
  } catch (const ConfigError& e) {
    if (e.line() == 0) throw ConfigError(path + ": " + e.what());
    throw ConfigError(path + ":" + e.what());
  }
}

std::string serialize_run_config(const RunConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

std::string config_hash(const RunConfig& cfg, const std::string& problem_text) {
  json j = to_json(cfg);
  j.erase("output_dir");
  j.erase("problem_file");
  j.erase("problem");
  try {
    j["problem"] = json::parse(problem_text);
  } catch (const json::parse_error&) {
    j["problem"] = problem_text;
  }
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string resolve_path(const std::string& base_dir, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

}  // namespace blocksolve::app

#include "blocksolve/problem_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "blocksolve/errors.hpp"
#include "blocksolve/instances.hpp"

namespace blocksolve {

using nlohmann::json;

namespace {

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

template <class T>
T get(const json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? get<T>(j, key) : fallback;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Matrix to_matrix(const std::vector<double>& flat, std::size_t rows, std::size_t cols, const std::string& what) {
  if (flat.size() != rows * cols) {
    throw ParseError(what + " has " + std::to_string(flat.size()) + " entries, expected " +
                     std::to_string(rows * cols));
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[r * cols + c];
  return m;
}

std::vector<double> flatten(const Matrix& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

void apply_certificate_overrides(const json& j, BlockOperator& g) {
  if (!j.contains("certificates")) return;
  const json& c = j.at("certificates");
  auto& cert = g.mutable_certificates();
  if (c.contains("lipschitz")) {
    auto l = get<std::vector<double>>(c, "lipschitz");
    if (l.size() != g.num_blocks()) throw ParseError("certificate 'lipschitz' needs one entry per block");
    cert.lipschitz = std::move(l);
  }
  if (c.contains("cocoercivity")) {
    auto b = get<std::vector<double>>(c, "cocoercivity");
    if (b.size() != g.num_blocks()) throw ParseError("certificate 'cocoercivity' needs one entry per block");
    cert.cocoercivity = std::move(b);
    cert.cocoercivity_exact = false;
  }
  if (c.contains("rho")) cert.weak_minty_rho = get<double>(c, "rho");
}

json certificates_to_json(const Certificates& c) {
  json j;
  j["lipschitz"] = c.lipschitz;
  if (c.cocoercivity) j["cocoercivity"] = *c.cocoercivity;
  if (c.weak_minty_rho) j["rho"] = *c.weak_minty_rho;
  return j;
}

MonotoneOperator monotone_from_json(const json& j, std::size_t dim, const std::string& who) {
  const auto kind = get<std::string>(j, "kind");
  if (kind == "zero") return ZeroMap{};
  if (kind == "affine") {
    Matrix m = to_matrix(get<std::vector<double>>(j, "matrix"), dim, dim, who + " matrix");
    auto off = get_or<std::vector<double>>(j, "offset", std::vector<double>(dim, 0.0));
    if (off.size() != dim) throw ParseError(who + " offset has wrong length");
    return AffineMap{std::move(m), to_vector(off)};
  }
  if (kind == "soft_threshold") return SoftThreshold{get<double>(j, "mu")};
  if (kind == "box") {
    BoxProjection b{get<double>(j, "lo"), get<double>(j, "hi")};
    if (b.lo > b.hi) throw ParseError(who + " box needs lo <= hi");
    return b;
  }
  throw ParseError(who + " has unknown kind '" + kind + "'");
}

json monotone_to_json(const MonotoneOperator& op) {
  json j;
  j["kind"] = kind_name(op);
  if (const auto* a = std::get_if<AffineMap>(&op)) {
    j["matrix"] = flatten(a->m);
    j["offset"] = from_vector(a->b);
  } else if (const auto* s = std::get_if<SoftThreshold>(&op)) {
    j["mu"] = s->mu;
  } else if (const auto* b = std::get_if<BoxProjection>(&op)) {
    j["lo"] = b->lo;
    j["hi"] = b->hi;
  }
  return j;
}

}  // namespace

bool is_split_problem_document(const std::string& text) {
  const json j = parse(text);
  const auto kind = j.value("kind", std::string());
  return kind == "split" || kind == "random_split_affine";
}

OperatorPtr operator_from_json(const std::string& text) {
  const json j = parse(text);
  const auto kind = get<std::string>(j, "kind");
  std::shared_ptr<BlockOperator> g;
  if (kind == "random_separable") {
    g = random_separable_cocoercive(get<std::size_t>(j, "blocks"), get<std::size_t>(j, "block_size"),
                                    get_or<std::uint64_t>(j, "seed", 0),
                                    spectrum_from_string(get_or<std::string>(j, "spectrum", "uniform")));
  } else if (kind == "random_monotone_linear") {
    g = random_monotone_linear(get<std::size_t>(j, "blocks"), get<std::size_t>(j, "block_size"),
                               get_or<std::uint64_t>(j, "seed", 0), get_or<double>(j, "skew_weight", 1.0));
  } else if (kind == "random_weak_minty_linear") {
    g = random_weak_minty_linear(get<std::size_t>(j, "blocks"), get<std::size_t>(j, "block_size"),
                                 get_or<std::uint64_t>(j, "seed", 0), get<double>(j, "rho"));
  } else if (kind == "separable_quadratic" || kind == "linear") {
    auto part = std::make_shared<const BlockPartition>(get<std::vector<std::size_t>>(j, "block_sizes"));
    const std::size_t p = part->dim();
    if (kind == "separable_quadratic") {
      const auto blocks = get<std::vector<std::vector<double>>>(j, "blocks");
      if (blocks.size() != part->num_blocks()) throw ParseError("'blocks' needs one matrix per block");
      std::vector<Matrix> qs;
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        qs.push_back(to_matrix(blocks[i], part->size(i), part->size(i), "block " + std::to_string(i)));
      }
      const auto xs = get<std::vector<double>>(j, "solution");
      if (xs.size() != p) throw ParseError("solution has wrong length");
      try {
        g = make_separable_cocoercive(part, std::move(qs), to_vector(xs));
      } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
      }
    } else {
      Matrix m = to_matrix(get<std::vector<double>>(j, "matrix"), p, p, "matrix");
      if (j.contains("solution")) {
        const auto xs = get<std::vector<double>>(j, "solution");
        if (xs.size() != p) throw ParseError("solution has wrong length");
        g = make_linear_weak_minty(part, std::move(m), to_vector(xs));
      } else {
        const auto b = get_or<std::vector<double>>(j, "offset", std::vector<double>(p, 0.0));
        if (b.size() != p) throw ParseError("offset has wrong length");
        g = std::make_shared<LinearOperator>(part, std::move(m), to_vector(b));
      }
    }
  } else {
    throw ParseError("unknown operator kind '" + kind + "'");
  }
  apply_certificate_overrides(j, *g);
  return g;
}

std::string operator_to_json(const BlockOperator& g) {
  json j;
  j["block_sizes"] = g.partition().sizes();
  if (const auto* q = dynamic_cast<const SeparableQuadraticOperator*>(&g)) {
    j["kind"] = "separable_quadratic";
    json blocks = json::array();
    for (const auto& b : q->blocks()) blocks.push_back(flatten(b));
    j["blocks"] = blocks;
  } else if (const auto* l = dynamic_cast<const LinearOperator*>(&g)) {
    j["kind"] = "linear";
    j["matrix"] = flatten(l->matrix());
    j["offset"] = from_vector(l->offset());
  } else {
    throw std::invalid_argument("only linear and separable quadratic operators serialize");
  }
  if (g.certificates().solution) j["solution"] = from_vector(*g.certificates().solution);
  j["certificates"] = certificates_to_json(g.certificates());
  return j.dump();
}

SplitProblem split_problem_from_json(const std::string& text) {
  const json j = parse(text);
  const auto kind = get<std::string>(j, "kind");
  if (kind == "random_split_affine") {
    SplitInstanceOptions o;
    o.users = get<std::size_t>(j, "users");
    o.dim = get<std::size_t>(j, "dim");
    o.skew_weight = get_or<double>(j, "skew_weight", o.skew_weight);
    o.central_affine = get_or<bool>(j, "central_affine", o.central_affine);
    return random_split_affine(o, get_or<std::uint64_t>(j, "seed", 0));
  }
  if (kind != "split") throw ParseError("unknown split problem kind '" + kind + "'");
  SplitProblem prob;
  prob.dim = get<std::size_t>(j, "dim");
  if (!j.contains("users") || !j.at("users").is_array() || j.at("users").empty()) {
    throw ParseError("'users' must be a nonempty array");
  }
  std::size_t idx = 0;
  for (const auto& u : j.at("users")) {
    prob.users.push_back(monotone_from_json(u, prob.dim, "user " + std::to_string(idx++)));
  }
  if (j.contains("central")) prob.central = monotone_from_json(j.at("central"), prob.dim, "central");
  if (j.contains("solution")) {
    const auto xs = get<std::vector<double>>(j, "solution");
    if (xs.size() != prob.dim) throw ParseError("solution has wrong length");
    prob.solution = to_vector(xs);
  }
  if (j.contains("lipschitz")) prob.lipschitz = get<double>(j, "lipschitz");
  prob.rho = get_or<double>(j, "rho", 0.0);
  return prob;
}

std::string split_problem_to_json(const SplitProblem& prob) {
  json j;
  j["kind"] = "split";
  j["dim"] = prob.dim;
  json users = json::array();
  for (const auto& u : prob.users) users.push_back(monotone_to_json(u));
  j["users"] = users;
  j["central"] = monotone_to_json(prob.central);
  if (prob.solution) j["solution"] = from_vector(*prob.solution);
  if (prob.lipschitz) j["lipschitz"] = *prob.lipschitz;
  j["rho"] = prob.rho;
  return j.dump();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace blocksolve

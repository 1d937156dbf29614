#include "gflow/app/config.hpp"

#include <fstream>
#include <sstream>

#define TOML_ENABLE_FORMATTERS 0
#include "toml.hpp"

namespace gflow::app {

namespace {

json toml_to_json(const toml::node& node) {
  if (const auto* table = node.as_table()) {
    json out = json::object();
    for (const auto& [key, value] : *table) out[std::string(key.str())] = toml_to_json(value);
    return out;
  }
  if (const auto* array = node.as_array()) {
    json out = json::array();
    for (const auto& value : *array) out.push_back(toml_to_json(value));
    return out;
  }
  if (const auto* v = node.as_integer()) return json(v->get());
  if (const auto* v = node.as_floating_point()) return json(v->get());
  if (const auto* v = node.as_boolean()) return json(v->get());
  if (const auto* v = node.as_string()) return json(v->get());
  throw InputError("config: unsupported TOML value (dates and times are not accepted)");
}

double positive(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj[key];
  if (!v.is_number()) throw InputError(where + "." + key + ": expected a number");
  const double x = v.get<double>();
  if (!(x > 0)) throw InputError(where + "." + key + ": must be > 0");
  return x;
}

int require_int(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  if (!obj[key].is_number_integer()) throw InputError(where + "." + key + ": expected an integer");
  return obj[key].get<int>();
}

std::vector<Matrix<double>> matrices(const json& j, int n, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InputError(where + ": expected a nonempty list of matrices");
  std::vector<Matrix<double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(matrix_from_json(j[i], n, where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

CompactGroupSampler<double>::Factor parse_factor(const json& j, int n, const std::string& where) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw InputError(where + ".kind: expected \"finite\" or \"torus\"");
  }
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "finite") {
    if (!j.contains("elements")) throw InputError(where + ": missing field 'elements'");
    return CompactGroupSampler<double>::Finite{matrices(j["elements"], n, where + ".elements")};
  }
  if (kind == "torus") {
    if (!j.contains("generators")) throw InputError(where + ": missing field 'generators'");
    return CompactGroupSampler<double>::Torus{matrices(j["generators"], n, where + ".generators")};
  }
  throw InputError(where + ".kind: unknown kind '" + kind + "'");
}

CompactGroupSampler<double> parse_k_group(const json& j, int n) {
  const std::string where = "k_group";
  int order = 8;
  if (j.contains("quadrature_order")) order = require_int(j, "quadrature_order", where);
  std::vector<CompactGroupSampler<double>::Factor> factors;
  if (j.contains("kind") && j["kind"] == "product") {
    if (!j.contains("factors") || !j["factors"].is_array()) {
      throw InputError(where + ".factors: expected a list of factor tables");
    }
    for (std::size_t i = 0; i < j["factors"].size(); ++i) {
      factors.push_back(parse_factor(j["factors"][i], n, where + ".factors[" + std::to_string(i) + "]"));
    }
  } else {
    factors.push_back(parse_factor(j, n, where));
  }
  try {
    return CompactGroupSampler<double>(n, std::move(factors), order);
  } catch (const std::invalid_argument& e) {
    throw InputError(where + ": " + e.what());
  }
}

GroupSpec parse_group(const json& root) {
  GroupSpec g;
  if (!root.contains("action") || !root["action"].is_object()) {
    throw InputError("action: missing table with field 'dim'");
  }
  g.dim = require_int(root["action"], "dim", "action");
  if (g.dim < 1) throw InputError("action.dim: must be positive");
  const json& group = root["group"];
  if (!group.is_object() || !group.contains("generators")) {
    throw InputError("group: missing field 'generators'");
  }
  g.generators = matrices(group["generators"], g.dim, "group.generators");
  if (group.contains("complexified")) {
    if (!group["complexified"].is_boolean()) throw InputError("group.complexified: expected a boolean");
    g.complexified = group["complexified"].get<bool>();
  }
  if (group.contains("complex_structure")) {
    const Matrix<double> j = matrix_from_json(group["complex_structure"], g.dim, "group.complex_structure");
    const Matrix<double> id = Matrix<double>::Identity(g.dim, g.dim);
    if ((j + j.transpose()).norm() > 1e-12 || (j * j + id).norm() > 1e-10) {
      throw InputError("group.complex_structure: must satisfy J^T = -J and J^2 = -I");
    }
    for (std::size_t i = 0; i < g.generators.size(); ++i) {
      const auto& x = g.generators[i];
      if ((x * j - j * x).norm() > 1e-10 * std::max(1.0, x.norm())) {
        throw InputError("group.generators[" + std::to_string(i) +
                         "]: does not commute with complex_structure");
      }
    }
    g.complex_structure = j;
    g.complexified = true;
  }
  if (root.contains("k_group")) g.k_group = parse_k_group(root["k_group"], g.dim);
  return g;
}

RunParams parse_run(const json& root) {
  RunParams r;
  if (!root.contains("run")) return r;
  const json& run = root["run"];
  const std::string where = "run";
  if (!run.is_object()) throw InputError("run: expected a table");
  r.t_end = positive(run, "t_end", r.t_end, where);
  r.phi_tol = positive(run, "phi_tol", r.phi_tol, where);
  r.grad_tol = positive(run, "grad_tol", r.grad_tol, where);
  r.max_time = positive(run, "max_time", r.max_time, where);
  r.tail_fraction = positive(run, "tail_fraction", r.tail_fraction, where);
  if (r.tail_fraction > 1) throw InputError("run.tail_fraction: must be <= 1");
  if (run.contains("samples")) {
    const int s = require_int(run, "samples", where);
    if (s < 1) throw InputError("run.samples: must be positive");
    r.samples = static_cast<std::size_t>(s);
  }
  if (run.contains("seed")) {
    if (!run["seed"].is_number_integer()) throw InputError("run.seed: expected an integer");
    r.seed = run["seed"].get<std::uint64_t>();
  }
  if (run.contains("threads")) {
    const int t = require_int(run, "threads", where);
    if (t < 0) throw InputError("run.threads: must be >= 0");
    r.threads = static_cast<unsigned>(t);
  }
  if (run.contains("epsilon")) {
    const auto& e = run["epsilon"];
    if (e.is_number()) {
      r.epsilons = {e.get<double>()};
    } else {
      const Vector<double> v = vector_from_json(e, "run.epsilon");
      r.epsilons.assign(v.data(), v.data() + v.size());
    }
  }
  if (run.contains("x0")) r.x0 = vector_from_json(run["x0"], "run.x0");
  return r;
}

}  // namespace

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::polynomial:
      return "polynomial";
    case ProblemKind::variety:
      return "variety";
    case ProblemKind::group:
      return "group";
  }
  return "unknown";
}

int ProblemConfig::dim() const {
  switch (kind) {
    case ProblemKind::polynomial:
      return polynomial->n_vars();
    case ProblemKind::variety:
      return generators.front().n_vars();
    case ProblemKind::group:
      return group->dim;
  }
  return 0;
}

Polynomial ProblemConfig::phi() const {
  switch (kind) {
    case ProblemKind::polynomial:
      return *polynomial;
    case ProblemKind::variety:
      return build_variety_phi(generators);
    case ProblemKind::group:
      return moment_polynomial(basis());
  }
  throw InputError("config: no problem");
}

SelfAdjointBasis<double> ProblemConfig::basis() const {
  if (!group) throw InputError("config: not a group-action problem");
  return lie_algebra_basis(group->generators, group->complexified);
}

ProblemConfig parse_config(const std::string& text, const std::string& format) {
  std::string fmt = format;
  if (fmt.empty()) {
    const auto first = text.find_first_not_of(" \t\r\n");
    fmt = (first != std::string::npos && text[first] == '{') ? "json" : "toml";
  }
  json root;
  if (fmt == "json") {
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      throw InputError(std::string("config json: ") + e.what());
    }
  } else if (fmt == "toml") {
    try {
      root = toml_to_json(toml::parse(text));
    } catch (const toml::parse_error& e) {
      std::ostringstream msg;
      msg << "config toml line " << e.source().begin.line << ", column " << e.source().begin.column
          << ": " << e.description();
      throw InputError(msg.str());
    }
  } else {
    throw InputError("config: unknown format '" + fmt + "'");
  }
  if (!root.is_object()) throw InputError("config: top level must be a table/object");

  ProblemConfig cfg;
  const int kinds = static_cast<int>(root.contains("polynomial")) +
                    static_cast<int>(root.contains("variety")) +
                    static_cast<int>(root.contains("group"));
  if (kinds != 1) {
    throw InputError("config: exactly one of [polynomial], [variety], [group] must be present");
  }
  if (root.contains("polynomial")) {
    cfg.kind = ProblemKind::polynomial;
    cfg.polynomial = polynomial_from_json(root["polynomial"], "polynomial");
    if (cfg.polynomial->degree() < 1) throw InputError("polynomial.degree: must be >= 1");
  } else if (root.contains("variety")) {
    cfg.kind = ProblemKind::variety;
    const json& v = root["variety"];
    if (!v.is_object() || !v.contains("generators") || !v["generators"].is_array() ||
        v["generators"].empty()) {
      throw InputError("variety.generators: expected a nonempty list of polynomials");
    }
    for (std::size_t i = 0; i < v["generators"].size(); ++i) {
      cfg.generators.push_back(
          polynomial_from_json(v["generators"][i], "variety.generators[" + std::to_string(i) + "]"));
    }
    try {
      (void)build_variety_phi(cfg.generators);
    } catch (const std::exception& e) {
      throw InputError(std::string("variety: ") + e.what());
    }
  } else {
    cfg.kind = ProblemKind::group;
    cfg.group = parse_group(root);
    try {
      (void)cfg.basis();
    } catch (const std::invalid_argument& e) {
      throw InputError(std::string("group.generators: ") + e.what());
    }
  }
  cfg.run = parse_run(root);
  if (cfg.run.x0 && cfg.run.x0->size() != cfg.dim()) {
    throw InputError("run.x0: expected " + std::to_string(cfg.dim()) + " entries");
  }
  cfg.hash = fnv1a_hex(text);
  return cfg;
}

ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string format;
  if (path.ends_with(".json")) format = "json";
  if (path.ends_with(".toml")) format = "toml";
  return parse_config(ss.str(), format);
}

}  // namespace gflow::app

#include "gflow/app/serialize.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace gflow::app {

namespace {

bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json polynomial_to_json(const Polynomial& p) {
  json terms = json::array();
  for (const auto& t : p.terms()) terms.push_back({{"exps", t.exps}, {"coef", t.coef}});
  return {{"n_vars", p.n_vars()}, {"degree", p.degree()}, {"terms", terms}};
}

Polynomial polynomial_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  for (const char* key : {"n_vars", "degree", "terms"}) {
    if (!j.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  }
  if (!j["n_vars"].is_number_integer()) throw InputError(where + ".n_vars: expected an integer");
  if (!j["degree"].is_number_integer()) throw InputError(where + ".degree: expected an integer");
  if (!j["terms"].is_array()) throw InputError(where + ".terms: expected an array");
  const int n = j["n_vars"].get<int>();
  const int degree = j["degree"].get<int>();
  std::vector<Polynomial::Term> terms;
  std::size_t index = 0;
  for (const auto& t : j["terms"]) {
    const std::string at = where + ".terms[" + std::to_string(index++) + "]";
    if (!t.is_object() || !t.contains("exps") || !t.contains("coef")) {
      throw InputError(at + ": expected {\"exps\": [...], \"coef\": number}");
    }
    if (!t["coef"].is_number()) throw InputError(at + ".coef: expected a number");
    if (!t["exps"].is_array()) throw InputError(at + ".exps: expected an array");
    Exponents e;
    for (const auto& x : t["exps"]) {
      if (!x.is_number_integer()) throw InputError(at + ".exps: expected integers");
      e.push_back(x.get<int>());
    }
    terms.push_back({std::move(e), t["coef"].get<double>()});
  }
  try {
    return Polynomial(n, degree, terms);
  } catch (const std::invalid_argument& e) {
    throw InputError(where + ": " + e.what());
  }
}

json vector_to_json(const Vector<double>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector<double> vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected an array of numbers");
  Vector<double> v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError(where + "[" + std::to_string(i) + "]: expected a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

json matrix_to_json(const Matrix<double>& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

Matrix<double> matrix_from_json(const json& j, int n, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected a matrix");
  Matrix<double> m(n, n);
  const bool nested = !j.empty() && j[0].is_array();
  if (nested) {
    if (j.size() != static_cast<std::size_t>(n)) {
      throw InputError(where + ": expected " + std::to_string(n) + " rows");
    }
    for (int r = 0; r < n; ++r) {
      const Vector<double> row = vector_from_json(j[static_cast<std::size_t>(r)],
                                                  where + "[" + std::to_string(r) + "]");
      if (row.size() != n) throw InputError(where + "[" + std::to_string(r) + "]: expected " +
                                            std::to_string(n) + " columns");
      m.row(r) = row.transpose();
    }
  } else {
    const Vector<double> flat = vector_from_json(j, where);
    if (flat.size() != static_cast<Eigen::Index>(n) * n) {
      throw InputError(where + ": expected " + std::to_string(n * n) + " row-major entries");
    }
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) m(r, c) = flat(r * n + c);
    }
  }
  return m;
}

void write_trajectory_csv(std::ostream& out, const Trajectory<double>& traj) {
  const Eigen::Index n = traj.x0.size();
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x_" << (i + 1);
  out << ",phi,grad_norm\n";
  for (const auto& st : traj.states) {
    out << format_double(st.t);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(st.x(i));
    out << ',' << format_double(st.phi) << ',' << format_double(st.grad_norm) << '\n';
  }
}

json trajectory_to_json(const Trajectory<double>& traj) {
  json states = json::array();
  for (const auto& st : traj.states) {
    states.push_back({{"t", st.t},
                      {"x", vector_to_json(st.x)},
                      {"phi", st.phi},
                      {"grad_norm", st.grad_norm},
                      {"arclength", st.arclength}});
  }
  return {{"x0", vector_to_json(traj.x0)},
          {"status", to_string(traj.status)},
          {"accepted_steps", traj.accepted_steps},
          {"rejected_steps", traj.rejected_steps},
          {"states", states}};
}

Trajectory<double> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("trajectory csv: empty input");
  const auto header = split_commas(line);
  if (header.size() < 4 || header.front() != "t") {
    throw InputError("trajectory csv line 1: expected header t,x_1,...,x_n,phi,grad_norm");
  }
  const auto n = static_cast<Eigen::Index>(header.size() - 3);
  Trajectory<double> traj;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto fields = split_commas(line);
    if (fields.size() != header.size()) {
      throw InputError("trajectory csv line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields");
    }
    std::vector<double> vals(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!parse_double(fields[i], vals[i])) {
        throw InputError("trajectory csv line " + std::to_string(line_no) + ": bad number '" +
                         fields[i] + "'");
      }
    }
    FlowState<double> st{vals[0], Vector<double>(n), vals[static_cast<std::size_t>(n) + 1],
                         vals[static_cast<std::size_t>(n) + 2], 0.0};
    for (Eigen::Index i = 0; i < n; ++i) st.x(i) = vals[static_cast<std::size_t>(i) + 1];
    traj.states.push_back(std::move(st));
  }
  if (traj.states.empty()) throw InputError("trajectory csv: no states");
  traj.x0 = traj.states.front().x;
  return traj;
}

std::vector<Vector<double>> read_vectors_csv(std::istream& in) {
  std::vector<Vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line) || line.front() == '#') continue;
    const auto fields = split_commas(line);
    std::vector<double> vals(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i) numeric = numeric && parse_double(fields[i], vals[i]);
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw InputError("line " + std::to_string(line_no) + ": unparsable number");
    }
    first = false;
    if (rows.empty()) {
      width = vals.size();
    } else if (vals.size() != width) {
      throw InputError("line " + std::to_string(line_no) + ": ragged row (" +
                       std::to_string(vals.size()) + " fields, expected " + std::to_string(width) + ")");
    }
    rows.push_back(Eigen::Map<const Vector<double>>(vals.data(), static_cast<Eigen::Index>(vals.size())));
  }
  return rows;
}

json decay_to_json(const DecayReport<double>& r) {
  return {{"fitted_exponent", r.fitted_exponent},
          {"intercept", r.intercept},
          {"sup_tH", r.sup_tH},
          {"tail_start", r.tail_start},
          {"tail_points", r.tail_points}};
}

json inequality_to_json(const InequalityReport<double>& r) {
  json out = {{"epsilon", r.epsilon},
              {"c_estimate", r.c_estimate},
              {"worst_point", vector_to_json(r.worst_point)},
              {"n_samples", r.n_samples},
              {"vacuous_excluded", r.vacuous_excluded},
              {"violated", r.violated},
              {"label", r.label}};
  out["commuting"] = r.commuting ? json(*r.commuting) : json(nullptr);
  return out;
}

json criticality_to_json(const CriticalityReport<double>& r) {
  return {{"residuals", vector_to_json(r.residuals)},
          {"max_abs", r.max_abs},
          {"is_critical", r.is_critical}};
}

OrthoResiduals ortho_residuals(const OrthogonalizationResult<double>& r, const Matrix<double>& v) {
  const Eigen::Index n = r.A.rows();
  OrthoResiduals out{};
  out.orthogonality = (r.A * r.A.transpose() - Matrix<double>::Identity(n, n)).cwiseAbs().maxCoeff();
  out.recompute = (r.z - r.A * v).cwiseAbs().maxCoeff();
  out.zero_rows = 0.0;
  for (Eigen::Index j = r.m; j < n; ++j) out.zero_rows = std::max(out.zero_rows, r.z.row(j).norm());
  out.gram_offdiag = 0.0;
  out.min_c = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < r.m; ++i) {
    out.min_c = std::min(out.min_c, r.c[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < r.m; ++j) {
      if (i != j) out.gram_offdiag = std::max(out.gram_offdiag, std::abs(r.z.row(i).dot(r.z.row(j))));
    }
  }
  return out;
}

json orthogonalization_to_json(const OrthogonalizationResult<double>& r, const Matrix<double>& v) {
  const OrthoResiduals res = ortho_residuals(r, v);
  json c = json::array();
  for (double ci : r.c) c.push_back(ci);
  return {{"m", r.m},
          {"A", matrix_to_json(r.A)},
          {"z", matrix_to_json(r.z)},
          {"c", c},
          {"permutation", r.permutation},
          {"residuals",
           {{"orthogonality", res.orthogonality},
            {"recompute", res.recompute},
            {"zero_rows", res.zero_rows},
            {"gram_offdiag", res.gram_offdiag}}}};
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gflow::app

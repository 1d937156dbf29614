#ifndef GFLOW_APP_SERIALIZE_HPP
#define GFLOW_APP_SERIALIZE_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "gflow/flow.hpp"
#include "gflow/group.hpp"
#include "gflow/inequalities.hpp"
#include "gflow/orthogonalize.hpp"
#include "gflow/polynomial.hpp"

namespace gflow::app {

using json = nlohmann::json;

/// Malformed input file or config; what() names the offending field or line.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Polynomials: {"n_vars", "degree", "terms": [{"exps": [...], "coef": x}]}, graded-lex order.
json polynomial_to_json(const Polynomial& p);
Polynomial polynomial_from_json(const json& j, const std::string& where = "polynomial");

json vector_to_json(const Vector<double>& v);
Vector<double> vector_from_json(const json& j, const std::string& where);
json matrix_to_json(const Matrix<double>& m);
/// Accepts nested rows or a flat row-major array of length n*n.
Matrix<double> matrix_from_json(const json& j, int n, const std::string& where);

/// %.17g.
std::string format_double(double x);

/// Header t,x_1,...,x_n,phi,grad_norm; one row per stored state.
void write_trajectory_csv(std::ostream& out, const Trajectory<double>& traj);
json trajectory_to_json(const Trajectory<double>& traj);
/// Reads the CSV written by write_trajectory_csv (arclength is not stored and is left 0).
Trajectory<double> read_trajectory_csv(std::istream& in);

/// One vector per nonempty line, comma separated. Throws InputError on ragged rows or
/// unparsable numbers. An optional header line of non-numeric fields is skipped.
std::vector<Vector<double>> read_vectors_csv(std::istream& in);

json decay_to_json(const DecayReport<double>& r);
json inequality_to_json(const InequalityReport<double>& r);
json criticality_to_json(const CriticalityReport<double>& r);
json orthogonalization_to_json(const OrthogonalizationResult<double>& r, const Matrix<double>& v);

/// Postcondition residuals of an orthogonalization of the rows of v.
struct OrthoResiduals {
  double orthogonality;  ///< ||A A^T - I||_max
  double recompute;      ///< ||z - A v||_max
  double zero_rows;      ///< max ||z_j|| for j > m
  double gram_offdiag;   ///< max |<z_i, z_j>| for i != j <= m
  double min_c;          ///< min c_i (infinity when m = 0)
};
OrthoResiduals ortho_residuals(const OrthogonalizationResult<double>& r, const Matrix<double>& v);

/// 64-bit FNV-1a, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace gflow::app

#endif  // GFLOW_APP_SERIALIZE_HPP

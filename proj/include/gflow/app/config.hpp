#ifndef GFLOW_APP_CONFIG_HPP
#define GFLOW_APP_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gflow/app/serialize.hpp"
#include "gflow/group.hpp"
#include "gflow/polynomial.hpp"

namespace gflow::app {

enum class ProblemKind { polynomial, variety, group };

const char* to_string(ProblemKind kind);

struct RunParams {
  double t_end = 10.0;
  double phi_tol = 1e-10;
  double grad_tol = 1e-8;
  double max_time = 1e8;
  double tail_fraction = 0.5;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  std::vector<double> epsilons;
  std::optional<Vector<double>> x0;
  /// 0 = hardware concurrency.
  unsigned threads = 0;
};

struct GroupSpec {
  int dim = 0;
  std::vector<Matrix<double>> generators;
  bool complexified = false;
  std::optional<Matrix<double>> complex_structure;
  std::optional<CompactGroupSampler<double>> k_group;
};

/// A parsed problem: exactly one of a polynomial, variety generators or a group action, plus
/// run parameters. hash is the FNV-1a digest of the config bytes.
struct ProblemConfig {
  ProblemKind kind = ProblemKind::polynomial;
  std::optional<Polynomial> polynomial;
  std::vector<Polynomial> generators;
  std::optional<GroupSpec> group;
  RunParams run;
  std::string hash;

  int dim() const;
  /// The polynomial phi whose flow is studied (for group actions, the expanded moment map).
  Polynomial phi() const;
  /// Orthonormal basis of the group's Lie algebra (group configs only).
  SelfAdjointBasis<double> basis() const;
};

/// Parses TOML or JSON text. format is "toml", "json", or "" to sniff (a leading '{' means
/// JSON). Throws InputError with a line or field diagnostic.
ProblemConfig parse_config(const std::string& text, const std::string& format = "");

/// Reads a config file; the extension (.toml / .json) picks the format.
ProblemConfig load_config(const std::string& path);

}  // namespace gflow::app

#endif  // GFLOW_APP_CONFIG_HPP

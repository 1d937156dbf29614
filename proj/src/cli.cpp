#include "gflow/app/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "gflow/app/config.hpp"
#include "gflow/app/serialize.hpp"
#include "gflow/gflow.hpp"

namespace gflow::app {

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::string input;
  std::string x0;
  std::string mode = "lojasiewicz";
  std::uint64_t seed = 0;
  unsigned threads = 0;
  double t_end = 0;
  double phi_tol = 0;
  double grad_tol = 0;
  double max_time = 0;
  double epsilon = 0;
  double tail_fraction = 0;
  std::size_t samples = 0;
  bool seed_set = false;
};

// Flags override the config's [run] table.
void apply_overrides(ProblemConfig& cfg, const Flags& f) {
  if (f.t_end > 0) cfg.run.t_end = f.t_end;
  if (f.phi_tol > 0) cfg.run.phi_tol = f.phi_tol;
  if (f.grad_tol > 0) cfg.run.grad_tol = f.grad_tol;
  if (f.max_time > 0) cfg.run.max_time = f.max_time;
  if (f.epsilon > 0) cfg.run.epsilons = {f.epsilon};
  if (f.tail_fraction > 0) cfg.run.tail_fraction = f.tail_fraction;
  if (f.samples > 0) cfg.run.samples = f.samples;
  if (f.seed_set) cfg.run.seed = f.seed;
  if (f.threads > 0) cfg.run.threads = f.threads;
  if (cfg.run.threads == 0) cfg.run.threads = std::max(1u, std::thread::hardware_concurrency());
}

FlowOptions<double> flow_options(const ProblemConfig& cfg) {
  FlowOptions<double> opts;
  opts.phi_tol = cfg.run.phi_tol;
  opts.grad_tol = cfg.run.grad_tol;
  opts.max_time = cfg.run.max_time;
  return opts;
}

Vector<double> parse_vector_flag(const std::string& text, int dim) {
  std::istringstream in(text);
  const auto rows = read_vectors_csv(in);
  if (rows.size() != 1) throw InputError("--x0: expected one comma-separated vector");
  if (rows.front().size() != dim) {
    throw InputError("--x0: expected " + std::to_string(dim) + " entries");
  }
  return rows.front();
}

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(std::string(what) + ": cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
}

std::string summary_path(const std::string& out) {
  std::filesystem::path p(out);
  if (p.extension() == ".csv") return p.replace_extension(".json").string();
  return out + ".json";
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

template <typename Fn>
auto with_system(const ProblemConfig& cfg, Fn&& fn) {
  if (cfg.kind == ProblemKind::group) return fn(MomentSystem<double>(cfg.basis()));
  return fn(PolynomialSystem<double>(cfg.phi()));
}

int cmd_flow(const Flags& f, std::ostream& out) {
  ProblemConfig cfg = load_config(f.config);
  apply_overrides(cfg, f);
  Vector<double> x0;
  if (!f.x0.empty()) {
    x0 = parse_vector_flag(f.x0, cfg.dim());
  } else if (cfg.run.x0) {
    x0 = *cfg.run.x0;
  } else {
    throw InputError("flow: no start vector (use --x0 or run.x0)");
  }
  const Trajectory<double> traj = with_system(cfg, [&](const auto& system) {
    return integrate_flow(system, x0, cfg.run.t_end, flow_options(cfg));
  });

  std::ostringstream csv;
  write_trajectory_csv(csv, traj);
  write_file(f.out, csv.str());

  const auto& last = traj.final_state();
  json summary = {{"status", to_string(traj.status)},
                  {"final_t", last.t},
                  {"final_x", vector_to_json(last.x)},
                  {"final_phi", last.phi},
                  {"final_grad_norm", last.grad_norm},
                  {"arclength", last.arclength},
                  {"accepted_steps", traj.accepted_steps},
                  {"rejected_steps", traj.rejected_steps},
                  {"config_hash", cfg.hash},
                  {"seed", cfg.run.seed}};
  try {
    summary["decay_fit"] = decay_to_json(decay_fit(traj, cfg.run.tail_fraction));
  } catch (const DomainError& e) {
    summary["decay_fit"] = nullptr;
    summary["decay_fit_error"] = e.what();
  }
  write_file(summary_path(f.out), dump(summary));

  out << "status " << to_string(traj.status) << " at t=" << format_double(last.t)
      << "  phi=" << format_double(last.phi) << "  |grad|=" << format_double(last.grad_norm) << "\n";
  return traj.status == FlowStatus::step_failure ? kExitNumerical : kExitOk;
}

struct RowResult {
  FlowStatus status = FlowStatus::step_failure;
  FlowState<double> state;
  std::string error;
};

int cmd_retract(const Flags& f, std::ostream& out) {
  ProblemConfig cfg = load_config(f.config);
  apply_overrides(cfg, f);
  std::vector<Vector<double>> rows;
  {
    std::ifstream in(f.input);
    if (!in) throw InputError("retract: cannot open '" + f.input + "'");
    rows = read_vectors_csv(in);
  }
  const int n = cfg.dim();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != n) {
      throw InputError("retract input row " + std::to_string(i) + ": expected " +
                       std::to_string(n) + " entries");
    }
  }
  const bool is_group = cfg.kind == ProblemKind::group;
  const FlowOptions<double> opts = flow_options(cfg);

  std::vector<RowResult> results(rows.size());
  with_system(cfg, [&](const auto& system) {
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i = next++; i < rows.size(); i = next++) {
        try {
          const auto traj = retract_trajectory(system, rows[i], cfg.run.phi_tol, opts);
          results[i] = {traj.status, traj.final_state(), {}};
        } catch (const std::exception& e) {
          results[i].error = e.what();
        }
      }
    };
    const unsigned t = std::min<unsigned>(cfg.run.threads, static_cast<unsigned>(std::max<std::size_t>(1, rows.size())));
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < t; ++w) pool.emplace_back(work);
    work();
    return 0;
  });

  std::optional<SelfAdjointBasis<double>> basis;
  if (is_group) basis = cfg.basis();
  const double crit_tol = std::sqrt(cfg.run.phi_tol);

  std::ostringstream csv;
  csv << "index,status";
  for (int i = 0; i < n; ++i) csv << ",y_" << (i + 1);
  csv << ",phi,grad_norm";
  if (is_group) csv << ",crit_max_abs,critical";
  csv << "\n";
  json reports = json::array();
  std::size_t failed = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const RowResult& r = results[i];
    const bool ok = r.error.empty() && r.status == FlowStatus::converged;
    if (!ok) ++failed;
    const char* status = r.error.empty() ? to_string(r.status) : "error";
    csv << i << ',' << status;
    json row = {{"index", i}, {"status", status}};
    if (!r.error.empty()) {
      for (int k = 0; k < n; ++k) csv << ",nan";
      csv << ",nan,nan";
      if (is_group) csv << ",nan,false";
      row["error"] = r.error;
    } else {
      for (int k = 0; k < n; ++k) csv << ',' << format_double(r.state.x(k));
      csv << ',' << format_double(r.state.phi) << ',' << format_double(r.state.grad_norm);
      row["y"] = vector_to_json(r.state.x);
      row["phi"] = r.state.phi;
      row["grad_norm"] = r.state.grad_norm;
      if (is_group) {
        const auto crit = criticality(*basis, r.state.x, crit_tol);
        csv << ',' << format_double(crit.max_abs) << ',' << (crit.is_critical ? "true" : "false");
        row["criticality"] = criticality_to_json(crit);
      }
    }
    csv << "\n";
    reports.push_back(row);
  }
  write_file(f.out, csv.str());
  json summary = {{"rows", rows.size()},
                  {"failed", failed},
                  {"phi_tol", cfg.run.phi_tol},
                  {"grad_tol", cfg.run.grad_tol},
                  {"max_time", cfg.run.max_time},
                  {"results", reports},
                  {"config_hash", cfg.hash},
                  {"seed", cfg.run.seed}};
  write_file(summary_path(f.out), dump(summary));
  out << "retracted " << (rows.size() - failed) << "/" << rows.size() << " rows";
  if (failed) out << " (" << failed << " failed)";
  out << "\n";
  return failed ? kExitNumerical : kExitOk;
}

void print_table(std::ostream& out, const std::vector<InequalityReport<double>>& reports) {
  out << std::left << std::setw(12) << "epsilon" << std::setw(24) << "c_estimate" << std::setw(10)
      << "samples" << "vacuous\n";
  for (const auto& r : reports) {
    out << std::setw(12) << format_double(r.epsilon).substr(0, 10) << std::setw(24)
        << format_double(r.c_estimate) << std::setw(10) << r.n_samples << r.vacuous_excluded << "\n";
  }
}

int cmd_inequality(const Flags& f, std::ostream& out) {
  ProblemConfig cfg = load_config(f.config);
  apply_overrides(cfg, f);
  const SphereSampler<double> sampler(cfg.dim(), cfg.run.samples, cfg.run.seed);
  json result = {{"mode", f.mode}, {"config_hash", cfg.hash}, {"seed", cfg.run.seed}};

  if (f.mode == "lojasiewicz") {
    const Polynomial phi = cfg.phi();
    if (phi.degree() <= 1) throw DomainError("lojasiewicz mode needs degree > 1");
    std::vector<double> eps = cfg.run.epsilons;
    if (eps.empty()) eps = {1.0 / (phi.degree() - 1)};
    const auto reports = lojasiewicz_scan(phi, eps, sampler, kFloorTol, cfg.run.threads);
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(inequality_to_json(r));
    result["degree"] = phi.degree();
    result["reports"] = arr;
    print_table(out, reports);
  } else if (f.mode == "neeman") {
    if (cfg.kind != ProblemKind::group) throw InputError("neeman mode needs a [group] config");
    const auto basis = cfg.basis();
    const auto report = estimate_neeman_constant(basis, sampler, kFloorTol, cfg.run.threads);
    result["reports"] = json::array({inequality_to_json(report)});
    print_table(out, {report});
    out << report.label << "\n";
    if (cfg.group->generators.size() == 1) {
      const Matrix<double>& x = cfg.group->generators.front();
      if ((x - x.transpose()).norm() <= 1e-12 * std::max(1.0, x.norm())) {
        const double bound = single_matrix_bound<double>(x);
        double scan_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < sampler.size(); ++i) {
          if (const auto r = single_matrix_ratio<double>(x, sampler.point(i))) scan_min = std::min(scan_min, *r);
        }
        result["single_matrix"] = {{"bound", bound}, {"scan_min", scan_min}};
        out << "single-matrix bound a_k^2/|a_1| = " << format_double(bound)
            << ", sampled floor = " << format_double(scan_min) << "\n";
      }
    }
  } else {
    throw InputError("--mode: expected 'lojasiewicz' or 'neeman'");
  }
  write_file(f.out, dump(result));
  return kExitOk;
}

int cmd_ortho(const Flags& f, std::ostream& out) {
  const std::string text = read_file(f.input, "ortho input");
  std::istringstream in(text);
  const auto rows = read_vectors_csv(in);
  if (rows.empty()) throw InputError("ortho: no vectors in '" + f.input + "'");
  Matrix<double> v(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) v.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  const auto result = simultaneous_orthogonalize(v);
  json j = orthogonalization_to_json(result, v);
  j["input_hash"] = fnv1a_hex(text);
  j["seed"] = f.seed;
  write_file(f.out, dump(j));
  const auto res = ortho_residuals(result, v);
  out << "m = " << result.m << "\n"
      << "orthogonality residual " << format_double(res.orthogonality) << "\n"
      << "zero-row residual      " << format_double(res.zero_rows) << "\n"
      << "gram off-diagonal      " << format_double(res.gram_offdiag) << "\n";
  return kExitOk;
}

int cmd_report(const Flags& f, std::ostream& out) {
  const std::string text = read_file(f.input, "report input");
  std::istringstream in(text);
  const Trajectory<double> traj = read_trajectory_csv(in);
  double norm_increase = 0, phi_increase = 0;
  for (std::size_t i = 1; i < traj.states.size(); ++i) {
    const auto& a = traj.states[i - 1];
    const auto& b = traj.states[i];
    norm_increase = std::max(norm_increase, (b.x.norm() - a.x.norm()) / std::max(a.x.norm(), 1e-300));
    phi_increase = std::max(phi_increase, (b.phi - a.phi) / std::max(std::abs(a.phi), 1e-300));
  }
  json j = {{"states", traj.states.size()},
            {"final_t", traj.final_state().t},
            {"final_phi", traj.final_state().phi},
            {"max_relative_norm_increase", norm_increase},
            {"max_relative_phi_increase", phi_increase},
            {"input_hash", fnv1a_hex(text)},
            {"seed", f.seed}};
  const double tail = f.tail_fraction > 0 ? f.tail_fraction : 0.5;
  try {
    const auto d = decay_fit(traj, tail);
    j["decay_fit"] = decay_to_json(d);
    out << "fitted exponent " << format_double(d.fitted_exponent) << ", sup t*phi "
        << format_double(d.sup_tH) << "\n";
  } catch (const DomainError& e) {
    j["decay_fit"] = nullptr;
    j["decay_fit_error"] = e.what();
    out << "decay fit unavailable: " << e.what() << "\n";
  }
  write_file(f.out, dump(j));
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gradient flows of nonnegative homogeneous polynomials", "gflow"};
  app.require_subcommand(1);
  Flags f;

  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "problem config (TOML or JSON)")->required();
    sub->add_option("--seed", f.seed, "random seed")->each([&](const std::string&) { f.seed_set = true; });
    sub->add_option("--threads", f.threads, "worker threads (default: all cores)");
    sub->add_option("--phi-tol", f.phi_tol, "convergence threshold on phi");
    sub->add_option("--grad-tol", f.grad_tol, "convergence threshold on |grad phi|");
  };

  auto* flow = app.add_subcommand("flow", "integrate dx/dt = -grad phi and write the trajectory");
  add_run_flags(flow);
  flow->add_option("--out", f.out, "trajectory CSV (summary JSON alongside)")->required();
  flow->add_option("--x0", f.x0, "start vector, comma separated");
  flow->add_option("--t-end", f.t_end, "final time");
  flow->add_option("--tail-fraction", f.tail_fraction, "tail used for the decay fit");

  auto* retract_cmd = app.add_subcommand("retract", "retract a batch of start vectors onto the zero set");
  add_run_flags(retract_cmd);
  retract_cmd->add_option("--input", f.input, "CSV of start vectors")->required();
  retract_cmd->add_option("--out", f.out, "endpoint CSV (summary JSON alongside)")->required();
  retract_cmd->add_option("--max-time", f.max_time, "flow time horizon");

  auto* ineq = app.add_subcommand("inequality", "scan gradient inequality ratios on the sphere");
  add_run_flags(ineq);
  ineq->add_option("--mode", f.mode, "lojasiewicz | neeman");
  ineq->add_option("--out", f.out, "report JSON")->required();
  ineq->add_option("--samples", f.samples, "sphere samples");
  ineq->add_option("--epsilon", f.epsilon, "exponent epsilon (lojasiewicz mode)");

  auto* ortho = app.add_subcommand("ortho", "simultaneously orthogonalize a family of vectors");
  ortho->add_option("--input", f.input, "CSV of row vectors")->required();
  ortho->add_option("--out", f.out, "result JSON")->required();
  ortho->add_option("--seed", f.seed, "recorded in the output");

  auto* report = app.add_subcommand("report", "decay fit and monotonicity summary of a trajectory CSV");
  report->add_option("--input", f.input, "trajectory CSV written by 'flow'")->required();
  report->add_option("--out", f.out, "report JSON")->required();
  report->add_option("--tail-fraction", f.tail_fraction, "tail used for the decay fit");
  report->add_option("--seed", f.seed, "recorded in the output");

  std::vector<std::string> argv_store{"gflow"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (flow->parsed()) return cmd_flow(f, out);
    if (retract_cmd->parsed()) return cmd_retract(f, out);
    if (ineq->parsed()) return cmd_inequality(f, out);
    if (ortho->parsed()) return cmd_ortho(f, out);
    if (report->parsed()) return cmd_report(f, out);
  } catch (const ConvergenceError<double>& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const LimitError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace gflow::app

#pragma once

// Command-line front end: solve, diagnose, verify, generate.
//
// Problem specs:
//   <generator>:k=v,k=v     e.g. cycle:N=6,k=1  random_dense:N=8,cond=100  diag:values=-1;-2
//   mm:A=<file>,b=<file or v1;v2;...>[,x0=<file>]
//   <directory>              containing A.mtx, b.mtx and optionally x0.mtx (as written by `generate`)
//
// Exit codes: 0 success, 1 verification failure, 2 solver stagnation,
// 3 max_iter or breakdown, 64 usage error, 65 invalid data, 74 file error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "andersonkit/diagnostics.hpp"
#include "andersonkit/generators.hpp"
#include "andersonkit/io.hpp"
#include "andersonkit/problem.hpp"
#include "andersonkit/random.hpp"
#include "andersonkit/solvers.hpp"
#include "andersonkit/verification.hpp"

namespace andersonkit {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int verify_failed = 1;
inline constexpr int stagnated = 2;
inline constexpr int not_converged = 3;
inline constexpr int usage = 64;
inline constexpr int data = 65;
inline constexpr int io = 74;
}  // namespace exit_code

/// Raised for malformed command-line values that CLI11 cannot catch itself.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ProblemSpec {
  std::string name;  // generator name, "mm" or "dir"
  GeneratorParams params;
  std::filesystem::path directory;
};

inline ProblemSpec parse_problem_spec(const std::string& text) {
  ProblemSpec spec;
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    if (std::filesystem::is_directory(text)) {
      spec.name = "dir";
      spec.directory = text;
      return spec;
    }
    if (std::find(generator_names().begin(), generator_names().end(), text) != generator_names().end()) {
      spec.name = text;
      return spec;
    }
    throw UsageError("problem spec '" + text + "' is neither name:params nor a directory");
  }
  spec.name = text.substr(0, colon);
  std::stringstream rest(text.substr(colon + 1));
  std::string item;
  while (std::getline(rest, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("problem parameter '" + item + "' is not key=value");
    spec.params[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return spec;
}

namespace detail {

inline RealVector vector_from_file_or_literal(const std::string& value) {
  if (std::filesystem::is_regular_file(value)) return read_vector_market(value);
  return RealVector(parse_list(value));
}

}  // namespace detail

/// Builds the problem; `x0_text` is "zero", "random:<seed>", a literal list,
/// or empty to keep the source's own starting vector.
inline LinearProblem load_problem(const ProblemSpec& spec, std::uint64_t seed, const std::string& x0_text,
                                  double rank_tol = default_rank_tol) {
  DenseMatrix a = DenseMatrix::zeros(1, 1);
  std::optional<RealVector> b;
  std::optional<RealVector> x0;
  if (spec.name == "dir") {
    a = read_matrix_market(spec.directory / "A.mtx");
    b = read_vector_market(spec.directory / "b.mtx");
    if (std::filesystem::exists(spec.directory / "x0.mtx")) x0 = read_vector_market(spec.directory / "x0.mtx");
  } else if (spec.name == "mm") {
    auto get = [&](const std::string& key) -> const std::string* {
      auto it = spec.params.find(key);
      return it == spec.params.end() ? nullptr : &it->second;
    };
    if (!get("A") || !get("b")) throw UsageError("mm problem needs A=<file> and b=<file or list>");
    a = read_matrix_market(*get("A"));
    b = detail::vector_from_file_or_literal(*get("b"));
    if (get("x0")) x0 = detail::vector_from_file_or_literal(*get("x0"));
  } else {
    LinearProblem g = generate_problem(spec.name, spec.params, seed);
    a = g.a();
    b = g.b();
    x0 = g.x0();
  }
  const std::size_t n = a.rows();
  if (!x0_text.empty()) {
    if (x0_text == "zero") {
      x0 = RealVector::zeros(n);
    } else if (x0_text.rfind("random:", 0) == 0) {
      std::uint64_t s = 0;
      try {
        s = std::stoull(x0_text.substr(7));
      } catch (const std::exception&) {
        throw UsageError("bad --x0 seed in '" + x0_text + "'");
      }
      Rng rng(s);
      x0 = rng.uniform_vector(n, -1.0, 1.0);
    } else {
      x0 = RealVector(detail::parse_list(x0_text));
    }
  }
  if (!x0) x0 = RealVector::zeros(n);
  return LinearProblem(std::move(a), std::move(*b), std::move(*x0), rank_tol);
}

namespace detail {

struct CommonOptions {
  std::string problem;
  std::uint64_t seed = 0;
  std::string x0;
};

inline void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--problem", o.problem, "problem spec (generator:k=v,..., mm:A=..,b=.., or a directory)")
      ->required();
  cmd->add_option("--seed", o.seed, "seed for random generators");
  cmd->add_option("--x0", o.x0, "starting vector: zero | random:<seed> | v1;v2;...");
}

inline Method parse_method(const std::string& s) {
  if (s == "fixed") return Method::fixed_point;
  if (s == "simple") return Method::simple_mixing;
  if (s == "gmres") return Method::gmres;
  if (s == "anderson") return Method::anderson;
  if (s == "opt-anderson") return Method::optimized_anderson;
  throw UsageError("unknown method '" + s + "'");
}

inline std::optional<std::size_t> parse_window(const std::string& s) {
  if (s == "inf") return std::nullopt;
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || v < 1) throw UsageError("--window must be a positive integer or 'inf'");
  return static_cast<std::size_t>(v);
}

inline int solve_exit(Termination t) {
  switch (t) {
    case Termination::residual_tol_met:
      return exit_code::ok;
    case Termination::stagnation_detected:
      return exit_code::stagnated;
    case Termination::max_iter:
    case Termination::breakdown:
      return exit_code::not_converged;
  }
  return exit_code::not_converged;
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anderson mixing and GMRES on A x + b = 0"};
  app.name("andersonkit");
  app.require_subcommand(1);

  detail::CommonOptions solve_o, diag_o, verify_o;
  std::string method, betas, window = "inf", format = "csv", out_path, suite = "all";
  std::optional<double> beta;
  int max_iter = SolveConfig{}.max_iter;
  std::optional<double> solve_tol, diag_tol, verify_tol;

  CLI::App* solve = app.add_subcommand("solve", "run one solver");
  detail::add_common(solve, solve_o);
  solve->add_option("--method", method, "fixed | simple | gmres | anderson | opt-anderson")->required();
  auto* beta_opt = solve->add_option("--beta", beta, "constant mixing parameter (default 1)");
  solve->add_option("--betas", betas, "explicit beta schedule, comma separated")->excludes(beta_opt);
  solve->add_option("--window", window, "Anderson window m, or inf");
  solve->add_option("--max-iter", max_iter, "iteration limit");
  solve->add_option("--tol", solve_tol, "absolute residual tolerance");
  solve->add_option("--out", out_path, "trace export path");
  solve->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  CLI::App* diagnose = app.add_subcommand("diagnose", "report nu, kappa_A, eta_G and the convergence case");
  detail::add_common(diagnose, diag_o);
  diagnose->add_option("--tol", diag_tol, "verification tolerance");

  CLI::App* verify = app.add_subcommand("verify", "run the relation checks");
  detail::add_common(verify, verify_o);
  verify->add_option("--suite", suite, "all | equivalence | structure | optimized | projections")
      ->check(CLI::IsMember({"all", "equivalence", "structure", "optimized", "projections"}));
  verify->add_option("--tol", verify_tol, "verification tolerance");

  std::string gen_name, gen_params, gen_out;
  std::uint64_t gen_seed = 0;
  CLI::App* generate = app.add_subcommand("generate", "write a generated problem as Matrix Market files");
  generate->add_option("--name", gen_name, "generator name")->required();
  generate->add_option("--params", gen_params, "k=v,k=v");
  generate->add_option("--seed", gen_seed, "seed")->required();
  generate->add_option("--out", gen_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_code::ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return exit_code::usage;
  }

  try {
    if (*solve) {
      SolveConfig cfg;
      cfg.max_iter = max_iter;
      if (solve_tol) cfg.residual_tol = *solve_tol;
      cfg.validate();
      const Method m = detail::parse_method(method);
      const auto win = detail::parse_window(window);
      const LinearProblem p = load_problem(parse_problem_spec(solve_o.problem), solve_o.seed, solve_o.x0);
      SolverTrace t;
      switch (m) {
        case Method::fixed_point:
          t = fixed_point_run(p, cfg);
          break;
        case Method::simple_mixing:
          t = simple_mixing_run(p, beta.value_or(1.0), cfg);
          break;
        case Method::gmres:
          t = gmres_run(p, cfg);
          break;
        case Method::anderson: {
          const MixingSchedule sched = betas.empty() ? MixingSchedule::constant(beta.value_or(1.0))
                                                     : MixingSchedule::explicit_list(detail::parse_list(betas));
          t = anderson_run(p, sched, win, cfg);
          break;
        }
        case Method::optimized_anderson:
          t = optimized_anderson_run(p, cfg);
          break;
      }
      out << "method=" << to_string(t.method) << " iterations=" << t.steps()
          << " final_residual=" << format_double(t.residual_norms.back())
          << " termination=" << to_string(t.termination) << '\n';
      if (!out_path.empty()) {
        const TraceExport e = make_trace_export(t, cfg);
        export_trace(e, format == "json" ? TraceFormat::json : TraceFormat::csv, out_path);
      }
      return detail::solve_exit(t.termination);
    }
    if (*diagnose) {
      const LinearProblem p = load_problem(parse_problem_spec(diag_o.problem), diag_o.seed, diag_o.x0);
      const DiagnosticsReport rep = classify(p, SolveConfig{}, diag_tol.value_or(default_verify_tol));
      out << to_text(rep);
      return exit_code::ok;
    }
    if (*verify) {
      const LinearProblem p = load_problem(parse_problem_spec(verify_o.problem), verify_o.seed, verify_o.x0);
      const VerificationResult res =
          run_verification(p, parse_suite(suite), SolveConfig{}, verify_tol.value_or(default_verify_tol));
      out << summary_line(res.report) << '\n' << relation_table(res.checks);
      const bool pass = res.all_pass();
      out << (pass ? "all relations PASS" : "some relations FAIL") << '\n';
      return pass ? exit_code::ok : exit_code::verify_failed;
    }
    if (*generate) {
      GeneratorParams params = parse_problem_spec(gen_name + ":" + gen_params).params;
      const LinearProblem p = generate_problem(gen_name, params, gen_seed);
      const std::filesystem::path dir(gen_out);
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
      write_matrix_market(dir / "A.mtx", p.a());
      write_vector_market(dir / "b.mtx", p.b());
      write_vector_market(dir / "x0.mtx", p.x0());
      out << "wrote " << (dir / "A.mtx").string() << ", b.mtx, x0.mtx (N=" << p.dimension() << ")\n";
      return exit_code::ok;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::usage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::io;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::data;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::data;
  }
  return exit_code::usage;
}

}  // namespace andersonkit

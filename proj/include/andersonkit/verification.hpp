#pragma once

// Verification suites: run the solvers on one problem and evaluate every
// relation check that applies.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "andersonkit/diagnostics.hpp"
#include "andersonkit/problem.hpp"
#include "andersonkit/solvers.hpp"

namespace andersonkit {

enum class Suite { all, equivalence, structure, optimized, projections };

inline Suite parse_suite(const std::string& s) {
  if (s == "all") return Suite::all;
  if (s == "equivalence") return Suite::equivalence;
  if (s == "structure") return Suite::structure;
  if (s == "optimized") return Suite::optimized;
  if (s == "projections") return Suite::projections;
  throw std::invalid_argument("unknown suite '" + s + "'");
}

/// Two Anderson runs with different nonzero schedules share the Anderson
/// index and the predicted iterates xbar_1 .. xbar_{kappa+1}.
inline std::vector<RelationCheck> verify_schedule_invariance(const SolverTrace& first, const SolverTrace& second,
                                                             double tol = default_verify_tol,
                                                             double dep_tol = default_dep_tol) {
  if (first.problem_fingerprint != second.problem_fingerprint) throw MismatchedTracesError();
  std::vector<RelationCheck> out;
  if (first.steps() == 0 || second.steps() == 0) return out;
  const AndersonIndex k1 = resolved_anderson_index(first, dep_tol);
  const AndersonIndex k2 = resolved_anderson_index(second, dep_tol);
  out.push_back(detail::boolean_check("kappa_schedule_invariant", k1.value == k2.value,
                                      std::to_string(k1.value) + " vs " + std::to_string(k2.value)));
  detail::CheckBuilder pred("predictions_schedule_invariant", tol);
  const double xs = std::max(detail::iterate_scale(first), detail::iterate_scale(second));
  const std::size_t upto = std::min({k1.value, first.predicted.size() - 1, second.predicted.size() - 1});
  for (std::size_t n = 0; n <= upto; ++n) {
    pred.equality(detail::relative_gap(first.predicted[n], second.predicted[n], xs), n);
  }
  out.push_back(std::move(pred).done());
  return out;
}

struct VerificationResult {
  DiagnosticsReport report;
  std::vector<RelationCheck> checks;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
  }
};

/// Runs the requested suite. Anderson runs use infinite history with
/// beta = 1 (and beta = -0.3 for the schedule-invariance checks).
inline VerificationResult run_verification(const LinearProblem& p, Suite suite, const SolveConfig& cfg = {},
                                           double tol = default_verify_tol) {
  VerificationResult out;
  out.report = classify(p, cfg, tol);
  const DiagnosticsReport& rep = out.report;
  auto append = [&out](std::vector<RelationCheck> cs) {
    for (auto& c : cs) out.checks.push_back(std::move(c));
  };
  if (suite == Suite::all) append(rep.relation_checks);
  if (rep.trivially_converged) return out;

  SolveConfig run_cfg = cfg;
  run_cfg.max_iter = std::max<int>(cfg.max_iter, static_cast<int>(p.dimension()) + 3);
  const SolverTrace g = gmres_run(p, run_cfg);
  const SolverTrace aa = anderson_run(p, MixingSchedule::constant(1.0), std::nullopt, run_cfg);
  const std::size_t nu = *rep.grade;
  const std::size_t kappa = rep.anderson_index.value;

  if (suite == Suite::all || suite == Suite::equivalence) {
    append(verify_equivalence(aa, g, tol, cfg.dep_tol));
    const SolverTrace damped = anderson_run(p, MixingSchedule::constant(-0.3), std::nullopt, run_cfg);
    auto damped_checks = verify_equivalence(damped, g, tol, cfg.dep_tol);
    for (auto& c : damped_checks) c.id += "_damped";
    append(std::move(damped_checks));
    append(verify_schedule_invariance(aa, damped, tol, cfg.dep_tol));
  }
  if (suite == Suite::all || suite == Suite::structure) {
    append(verify_prop_structure(aa, g, nu, kappa, tol));
  }
  if (suite == Suite::all || suite == Suite::optimized) {
    const SolverTrace opt = optimized_anderson_run(p, run_cfg);
    const std::size_t eta = rep.stagnation_index.value_or(g.steps());
    append(verify_optimized(p, opt, g, kappa, eta, tol, cfg.dep_tol));
  }
  if (suite == Suite::all || suite == Suite::projections) {
    append(verify_projection_identities(p, g, tol, &aa, cfg.dep_tol));
  }
  return out;
}

}  // namespace andersonkit

#pragma once

// Grade, Anderson index and GMRES stagnation index of a problem, the
// converge/stagnate classification, and trace-level checks of the relations
// tying Anderson mixing (any nonzero beta schedule, or optimized beta) to
// GMRES on linear problems.
//
// Equalities are tested at a relative tolerance (default 1e-8); strict
// inequalities must hold with a margin of tolerance times the stated scale.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "andersonkit/linalg.hpp"
#include "andersonkit/problem.hpp"
#include "andersonkit/solvers.hpp"

namespace andersonkit {

inline constexpr double default_verify_tol = 1e-8;

/// One evaluated relation. For equalities `max_deviation` is the largest
/// relative deviation seen; for inequalities it is the largest relative
/// shortfall against the required margin (0 when every instance holds).
struct RelationCheck {
  std::string id;
  double max_deviation = 0.0;
  double threshold = 0.0;
  std::size_t instances = 0;
  bool pass = true;
  std::string detail;
};

enum class ConvergenceCase { converges, stagnates };

inline std::string_view to_string(ConvergenceCase c) { return c == ConvergenceCase::converges ? "i" : "ii"; }

struct AndersonIndex {
  std::size_t value = 0;
  bool observed = false;  // false: no dependence seen before the trace ended
};

struct DiagnosticsReport {
  std::optional<std::size_t> grade;
  AndersonIndex anderson_index;
  std::optional<std::size_t> stagnation_index;
  ConvergenceCase convergence_case = ConvergenceCase::converges;
  bool trivially_converged = false;
  double beta_star = 0.0;
  std::vector<RelationCheck> relation_checks;
  SolveConfig solve_config;
  double verify_tol = default_verify_tol;

  bool all_pass() const {
    return std::all_of(relation_checks.begin(), relation_checks.end(), [](const auto& c) { return c.pass; });
  }
};

class MismatchedTracesError : public std::invalid_argument {
 public:
  MismatchedTracesError() : std::invalid_argument("traces come from different problems") {}
};

namespace detail {

/// ||a - b|| / max(||a||, ||b||, floor), zero when all three vanish. The
/// floor keeps comparisons of vectors near the origin on the problem's scale.
inline double relative_gap(const RealVector& a, const RealVector& b, double floor = 0.0) {
  const double scale = std::max({norm2(a), norm2(b), floor});
  return scale == 0.0 ? 0.0 : norm2(a - b) / scale;
}

/// Largest iterate norm in a trace.
inline double iterate_scale(const SolverTrace& t) {
  double s = 0.0;
  for (const auto& x : t.iterates) s = std::max(s, norm2(x));
  return s;
}

/// Accumulates one relation over many instances.
class CheckBuilder {
 public:
  CheckBuilder(std::string id, double threshold) {
    check_.id = std::move(id);
    check_.threshold = threshold;
  }
  void equality(double deviation, std::size_t n) {
    ++check_.instances;
    check_.max_deviation = std::max(check_.max_deviation, deviation);
    if (!(deviation <= check_.threshold)) fail(n);
  }
  /// `holds` decides; `shortfall` is reported when it does not.
  void inequality(bool holds, double shortfall, std::size_t n) {
    ++check_.instances;
    if (!holds) {
      check_.max_deviation = std::max(check_.max_deviation, shortfall);
      fail(n);
    }
  }
  void note(std::string s) { check_.detail = std::move(s); }
  RelationCheck done() && { return std::move(check_); }

 private:
  void fail(std::size_t n) {
    if (check_.pass) check_.detail = "first failure at n=" + std::to_string(n);
    check_.pass = false;
  }
  RelationCheck check_;
};

inline RelationCheck boolean_check(std::string id, bool holds, std::string detail) {
  RelationCheck c;
  c.id = std::move(id);
  c.instances = 1;
  c.pass = holds;
  c.max_deviation = holds ? 0.0 : 1.0;
  c.detail = std::move(detail);
  return c;
}

/// A x_bar + b recovered from the trace as sum_i alpha_i f_i (exact for affine f).
inline RealVector predicted_residual(const SolverTrace& t, std::size_t n) {
  const auto& alpha = t.alphas.at(n);
  const std::size_t start = t.window_start.at(n);
  std::vector<double> acc(t.residuals.front().size(), 0.0);
  for (std::size_t i = 0; i < alpha.size(); ++i)
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += alpha[i] * t.residuals[start + i][j];
  return RealVector(std::move(acc));
}

inline void require_method(const SolverTrace& t, Method m, const char* what) {
  if (t.method != m) throw std::invalid_argument(std::string(what) + ": wrong method-tag");
}

inline void require_anderson(const SolverTrace& t, const char* what) {
  if (!t.is_anderson()) throw std::invalid_argument(std::string(what) + ": not an Anderson trace");
}

}  // namespace detail

/// Smallest n with r0, A r0, ..., A^n r0 linearly dependent. The Krylov space
/// is grown with Arnoldi vectors A q_n, which span the same spaces as the
/// powers but stay well conditioned.
inline std::size_t grade(const DenseMatrix& a, const RealVector& r0, double dep_tol = default_dep_tol) {
  const double rnorm = norm2(r0);
  if (rnorm == 0.0) throw std::invalid_argument("grade undefined for zero residual");
  const std::size_t n_dim = r0.size();
  std::vector<RealVector> basis{(1.0 / rnorm) * r0};
  for (std::size_t n = 1; n <= n_dim; ++n) {
    auto ext = orthonormal_extend(basis, matvec(a, basis.back()), dep_tol);
    if (ext.dependent || n == n_dim) return n;
    basis.push_back(std::move(*ext.q));
  }
  return n_dim;
}

/// First n at which x_{n+1} - x0 depends on x_1 - x0, ..., x_n - x0 (n >= 1).
inline AndersonIndex anderson_index(const SolverTrace& t, double dep_tol = default_dep_tol) {
  detail::require_anderson(t, "anderson_index");
  if (t.iterates.size() < 2) throw std::invalid_argument("anderson_index: trace shorter than 2 iterates");
  const RealVector& x0 = t.iterates.front();
  std::vector<RealVector> basis;
  for (std::size_t i = 1; i < t.iterates.size(); ++i) {
    auto ext = orthonormal_extend(basis, t.iterates[i] - x0, dep_tol);
    if (ext.dependent) return {std::max<std::size_t>(i - 1, 1), true};
    basis.push_back(std::move(*ext.q));
  }
  return {t.steps(), false};
}

/// anderson_index, resolving an unobserved index for a run that met the
/// residual tolerance at its last iterate: the next iterate would repeat it.
inline AndersonIndex resolved_anderson_index(const SolverTrace& t, double dep_tol = default_dep_tol) {
  AndersonIndex k = anderson_index(t, dep_tol);
  if (!k.observed && t.termination == Termination::residual_tol_met) k.observed = true;
  return k;
}

/// First n with x^G_n = x^G_{n+1} (at dep_tol relative). A run that met the
/// residual tolerance repeats its last iterate forever, so its last index is
/// returned when no earlier repeat exists.
inline std::optional<std::size_t> gmres_stagnation_index(const SolverTrace& t, double dep_tol = default_dep_tol) {
  detail::require_method(t, Method::gmres, "gmres_stagnation_index");
  for (std::size_t n = 0; n + 1 < t.iterates.size(); ++n) {
    if (detail::same_iterate(t.iterates[n + 1], t.iterates[n], dep_tol)) return n;
  }
  if (t.termination == Termination::residual_tol_met) return t.steps();
  return std::nullopt;
}

/// Residual-chain predicates on a GMRES trace.
struct ResidualChain {
  bool strict_to_zero = false;            // every step decreases, zero at the grade
  std::optional<std::size_t> plateau_at;  // kappa of a strict chain ending in one equality
};

/// Evaluates the two residual-chain predicates. Decrease and equality are
/// judged against tol times the previous residual norm.
inline ResidualChain residual_chain(const SolverTrace& gmres, std::size_t nu, double residual_tol, double tol) {
  detail::require_method(gmres, Method::gmres, "residual_chain");
  const auto& r = gmres.residual_norms;
  ResidualChain out;
  std::size_t n = 1;
  while (n <= nu && n < r.size() && r[n - 1] - r[n] > tol * r[n - 1]) ++n;
  if (n > nu) {
    out.strict_to_zero = nu < r.size() && r[nu] <= residual_tol;
  } else if (n < nu && n < r.size()) {
    if (std::abs(r[n - 1] - r[n]) <= tol * r[n - 1] && r[n] > residual_tol) out.plateau_at = n;
  }
  return out;
}

/// Anderson/GMRES agreement: x^A_{n+1} = x^G_n + beta_n (A x^G_n + b) and
/// xbar^A_{n+1} = x^G_n up to the Anderson index, then the case-dependent tail
/// (exact solution when the run converges, frozen x^G_{kappa-1} otherwise).
inline std::vector<RelationCheck> verify_equivalence(const SolverTrace& anderson, const SolverTrace& gmres,
                                                     double tol = default_verify_tol,
                                                     double dep_tol = default_dep_tol) {
  detail::require_anderson(anderson, "verify_equivalence");
  detail::require_method(gmres, Method::gmres, "verify_equivalence");
  if (anderson.problem_fingerprint != gmres.problem_fingerprint) throw MismatchedTracesError();

  std::vector<RelationCheck> out;
  if (anderson.steps() == 0) {
    out.push_back(detail::boolean_check("equivalence", true, "no Anderson steps (r0 within tolerance)"));
    return out;
  }
  const AndersonIndex kappa_idx = resolved_anderson_index(anderson, dep_tol);
  const std::size_t kappa = kappa_idx.value;
  const std::size_t lg = gmres.steps();
  const double xs = detail::iterate_scale(gmres);
  const bool gmres_converged = gmres.termination == Termination::residual_tol_met;
  const bool case_i = gmres_converged && kappa >= lg;

  auto xg = [&](std::size_t n) -> const RealVector& { return gmres.iterates[std::min(n, lg)]; };
  auto rg = [&](std::size_t n) -> const RealVector& { return gmres.residuals[std::min(n, lg)]; };

  detail::CheckBuilder step_match("anderson_step_matches_gmres", tol);
  detail::CheckBuilder pred_match("prediction_matches_gmres", tol);
  detail::CheckBuilder tail_x(case_i ? "converging_tail_iterates" : "stagnating_tail_iterates", tol);
  detail::CheckBuilder tail_bar(case_i ? "converging_tail_predictions" : "stagnating_tail_predictions", tol);

  for (std::size_t n = 0; n < anderson.steps(); ++n) {
    const double beta = anderson.betas[n];
    const RealVector& xa = anderson.iterates[n + 1];
    const RealVector& xbar = anderson.predicted[n];
    if (n <= kappa && n <= lg) {
      step_match.equality(detail::relative_gap(xa, axpy(beta, rg(n), xg(n)), xs), n);
      pred_match.equality(detail::relative_gap(xbar, xg(n), xs), n);
    }
    if (case_i) {
      const RealVector expect_x = n < lg ? axpy(beta, rg(n), xg(n)) : xg(lg);
      tail_x.equality(detail::relative_gap(xa, expect_x, xs), n);
      tail_bar.equality(detail::relative_gap(xbar, xg(n), xs), n);
    } else if (kappa >= 1 && kappa <= lg) {
      const std::size_t base = n <= kappa ? n : kappa - 1;
      tail_x.equality(detail::relative_gap(xa, axpy(beta, rg(base), xg(base)), xs), n);
      tail_bar.equality(detail::relative_gap(xbar, xg(base), xs), n);
    }
  }
  if (!kappa_idx.observed) tail_x.note("Anderson index not observed within the trace");
  out.push_back(std::move(step_match).done());
  out.push_back(std::move(pred_match).done());
  out.push_back(std::move(tail_x).done());
  out.push_back(std::move(tail_bar).done());
  return out;
}

/// Structure of the Anderson coefficients and GMRES residuals around the
/// Anderson index: nonzero newest weight and strict residual decrease before
/// it; vanishing newest weight, residual orthogonality, coinciding iterates
/// and equal residual norms at it (when kappa < nu).
inline std::vector<RelationCheck> verify_prop_structure(const SolverTrace& anderson, const SolverTrace& gmres,
                                                        std::size_t nu, std::size_t kappa,
                                                        double tol = default_verify_tol) {
  detail::require_anderson(anderson, "verify_prop_structure");
  detail::require_method(gmres, Method::gmres, "verify_prop_structure");
  if (anderson.problem_fingerprint != gmres.problem_fingerprint) throw MismatchedTracesError();
  const double r0 = gmres.residual_norms.front();
  const auto& rg = gmres.residual_norms;
  const double xs = detail::iterate_scale(gmres);

  std::vector<RelationCheck> out;
  detail::CheckBuilder a("newest_weight_nonzero", tol);
  detail::CheckBuilder b("gmres_strict_decrease", tol);
  for (std::size_t n = 1; n < kappa; ++n) {
    if (n < anderson.alphas.size()) {
      const double w = std::abs(anderson.alpha_last(n));
      a.inequality(w > tol, tol - w, n);
    }
    if (n < rg.size()) {
      const double margin = rg[n - 1] - rg[n];
      b.inequality(margin > tol * r0, (tol * r0 - margin) / r0, n);
    }
  }
  out.push_back(std::move(a).done());
  out.push_back(std::move(b).done());
  if (kappa >= nu) return out;

  const std::size_t k = kappa;
  detail::CheckBuilder c("newest_weight_zero", tol);
  detail::CheckBuilder d("residual_orthogonality", tol);
  detail::CheckBuilder e("iterate_coincidence", tol);
  detail::CheckBuilder f("residual_plateau", tol);
  if (k < anderson.alphas.size()) c.equality(std::abs(anderson.alpha_last(k)), k);
  if (k + 1 < anderson.iterates.size() && k >= 1) {
    const RealVector rbar = detail::predicted_residual(anderson, k - 1);
    const RealVector a_step = anderson.residuals[k + 1] - anderson.residuals.front();
    const double scale = norm2(rbar) * norm2(a_step);
    d.equality(scale == 0.0 ? 0.0 : std::abs(dot(rbar, a_step)) / scale, k);
  }
  if (k >= 1 && k < gmres.iterates.size()) {
    const RealVector& ref = gmres.iterates[k - 1];
    e.equality(detail::relative_gap(gmres.iterates[k], ref, xs), k);
    for (std::size_t s : {k - 1, k, k + 1}) {
      if (s < anderson.predicted.size()) e.equality(detail::relative_gap(anderson.predicted[s], ref, xs), k);
    }
    if (k + 1 >= anderson.predicted.size()) e.note("trace too short for xbar_{k+2}");
    f.equality(std::abs(rg[k - 1] - rg[k]) / std::max(rg[k - 1], std::numeric_limits<double>::min()), k);
  }
  out.push_back(std::move(c).done());
  out.push_back(std::move(d).done());
  out.push_back(std::move(e).done());
  out.push_back(std::move(f).done());
  return out;
}

/// First step whose optimized beta is zero at dep_tol; the trace length if none.
inline std::size_t optimized_freeze_index(const SolverTrace& opt, double dep_tol = default_dep_tol) {
  detail::require_method(opt, Method::optimized_anderson, "optimized_freeze_index");
  for (std::size_t n = 0; n < opt.betas.size(); ++n)
    if (std::abs(opt.betas[n]) <= dep_tol) return n;
  return opt.steps();
}

/// Relations of the residual-optimal Anderson run against GMRES.
///
/// beta*_n is treated as nonzero when |beta*_n| > dep_tol, matching the
/// solver's freeze rule. The switch-over index is eta^G: beta*_n is nonzero
/// exactly for n < eta^G, which is kappa_A in the converging case and
/// kappa_A - 1 in the stagnating case.
inline std::vector<RelationCheck> verify_optimized(const LinearProblem& p, const SolverTrace& opt,
                                                   const SolverTrace& gmres, std::size_t kappa, std::size_t eta,
                                                   double tol = default_verify_tol,
                                                   double dep_tol = default_dep_tol) {
  detail::require_method(opt, Method::optimized_anderson, "verify_optimized");
  detail::require_method(gmres, Method::gmres, "verify_optimized");
  if (opt.problem_fingerprint != p.fingerprint() || gmres.problem_fingerprint != p.fingerprint()) {
    throw MismatchedTracesError();
  }
  const double r0 = gmres.residual_norms.front();
  const std::size_t lg = gmres.steps();
  const double xs = detail::iterate_scale(gmres);
  auto xg = [&](std::size_t n) -> const RealVector& { return gmres.iterates[std::min(n, lg)]; };
  auto rg = [&](std::size_t n) -> const RealVector& { return gmres.residuals[std::min(n, lg)]; };
  auto rgn = [&](std::size_t n) { return gmres.residual_norms[std::min(n, lg)]; };

  detail::CheckBuilder iter_match("opt_iterates_match_gmres", tol);
  detail::CheckBuilder pred_match("opt_predictions_match_gmres", tol);
  detail::CheckBuilder sandwich("opt_residual_sandwich", tol);
  detail::CheckBuilder identity("opt_residual_identity", tol);
  detail::CheckBuilder bound_check("opt_residual_bound", tol);
  detail::CheckBuilder descent("opt_descent", tol);

  for (std::size_t n = 0; n < opt.steps(); ++n) {
    const double beta = opt.betas[n];
    const RealVector& x_next = opt.iterates[n + 1];
    const RealVector& xbar = opt.predicted[n];
    if (n < eta) {
      iter_match.equality(detail::relative_gap(x_next, axpy(beta, rg(n), xg(n)), xs), n);
      pred_match.equality(detail::relative_gap(xbar, xg(n), xs), n);
      const double rn = opt.residual_norms[n + 1];
      const bool upper = rn < rgn(n) - tol * rgn(n);
      const bool lower = rgn(n + 1) <= rn + tol * rgn(n);
      sandwich.inequality(upper && lower, std::max(rn - rgn(n) + tol * rgn(n), rgn(n + 1) - rn) / r0, n);
    } else {
      iter_match.equality(detail::relative_gap(x_next, xg(eta), xs), n);
      pred_match.equality(detail::relative_gap(xbar, xg(eta), xs), n);
    }

    const RealVector rbar = p.residual(xbar);
    const double rbar_n = norm2(rbar);
    const double arbar2 = dot(p.apply(rbar), p.apply(rbar));
    const double lhs = opt.residual_norms[n + 1] * opt.residual_norms[n + 1];
    const double rhs = rbar_n * rbar_n - beta * beta * arbar2;
    const double scale = std::max(rbar_n * r0, std::numeric_limits<double>::min());
    identity.equality(std::abs(lhs - rhs) / scale, n);
    const double prev2 = opt.residual_norms[n] * opt.residual_norms[n];
    const double bound = prev2 - beta * beta * arbar2;
    bound_check.inequality(lhs <= bound + tol * std::max(opt.residual_norms[n] * r0, scale),
                           (lhs - bound) / (r0 * r0), n);

    if (n < kappa) {
      const double rn = opt.residual_norms[n + 1];
      const bool weak = rbar_n <= opt.residual_norms[n] + tol * opt.residual_norms[n];
      const bool strict = n >= eta || rn < rbar_n - tol * rbar_n;
      const double weak_short = rbar_n - opt.residual_norms[n] - tol * opt.residual_norms[n];
      const double strict_short = n >= eta ? 0.0 : rn - rbar_n + tol * rbar_n;
      descent.inequality(weak && strict, std::max(weak_short, strict_short) / r0, n);
    }
  }

  std::vector<RelationCheck> out;
  out.push_back(std::move(iter_match).done());
  out.push_back(std::move(pred_match).done());
  out.push_back(std::move(sandwich).done());
  out.push_back(std::move(identity).done());
  out.push_back(std::move(bound_check).done());
  out.push_back(std::move(descent).done());

  const std::size_t freeze = optimized_freeze_index(opt, dep_tol);
  bool nonzero_ok = true;
  for (std::size_t n = 0; n < opt.betas.size(); ++n) {
    if ((std::abs(opt.betas[n]) > dep_tol) != (n < freeze)) nonzero_ok = false;
  }
  out.push_back(detail::boolean_check("opt_beta_support", nonzero_ok,
                                      "freeze index " + std::to_string(freeze)));
  const bool converging = eta >= kappa;
  const std::size_t expected = converging ? kappa : kappa - 1;
  out.push_back(detail::boolean_check(
      "opt_freeze_index", freeze == eta && freeze == expected,
      "freeze=" + std::to_string(freeze) + " eta_G=" + std::to_string(eta) + " kA=" + std::to_string(kappa)));
  return out;
}

/// Rebuilds the orthonormal Krylov basis of a problem (Arnoldi, dep_tol).
inline std::vector<RealVector> krylov_basis(const LinearProblem& p, double dep_tol = default_dep_tol) {
  const double rn = norm2(p.r0());
  if (rn == 0.0) return {};
  std::vector<RealVector> basis{(1.0 / rn) * p.r0()};
  while (basis.size() < p.dimension()) {
    auto ext = orthonormal_extend(basis, p.apply(basis.back()), dep_tol);
    if (ext.dependent) break;
    basis.push_back(std::move(*ext.q));
  }
  return basis;
}

/// Checks A x^G_n + b = (I - K_n) r0 with K_n the projector onto A K_n, and,
/// when an Anderson trace is supplied, A xbar^A_{n+1} + b = (I - L_n) r0 with
/// L_n the projector onto A span{x_1 - x0, ..., x_n - x0}.
///
/// The Anderson side is measured through the orthogonality of the predicted
/// residual to each A (x_i - x0). Projecting onto a basis built from stored
/// iterates would inherit the poor conditioning of nearly parallel iterate
/// differences.
inline std::vector<RelationCheck> verify_projection_identities(const LinearProblem& p, const SolverTrace& gmres,
                                                               double tol = default_verify_tol,
                                                               const SolverTrace* anderson = nullptr,
                                                               double dep_tol = default_dep_tol) {
  detail::require_method(gmres, Method::gmres, "verify_projection_identities");
  if (gmres.problem_fingerprint != p.fingerprint()) throw MismatchedTracesError();
  const RealVector& r0 = p.r0();
  const double r0n = norm2(r0);
  std::vector<RelationCheck> out;

  detail::CheckBuilder gp("gmres_projection_identity", tol);
  const auto basis = krylov_basis(p, dep_tol);
  for (std::size_t n = 0; n < gmres.iterates.size(); ++n) {
    const std::size_t dim = std::min(n, basis.size());
    RealVector expected = r0;
    if (dim > 0) {
      std::vector<RealVector> cols;
      for (std::size_t j = 0; j < dim; ++j) cols.push_back(p.apply(basis[j]));
      expected = r0 - project_onto_columnspace(DenseMatrix::from_columns(cols), r0, dep_tol);
    }
    gp.equality(r0n == 0.0 ? 0.0 : norm2(gmres.residuals[n] - expected) / r0n, n);
  }
  out.push_back(std::move(gp).done());

  if (anderson != nullptr) {
    detail::require_anderson(*anderson, "verify_projection_identities");
    if (anderson->problem_fingerprint != p.fingerprint()) throw MismatchedTracesError();
    detail::CheckBuilder ab("anderson_projection_identity", tol);
    const RealVector& x0 = p.x0();
    std::vector<RealVector> cols;
    for (std::size_t n = 0; n < anderson->predicted.size(); ++n) {
      if (!anderson->window_start.empty() && anderson->window_start[n] != 0) {
        ab.note("finite-window steps skipped");
        continue;
      }
      if (n >= 1) cols.push_back(p.apply(anderson->iterates[n] - x0));
      const RealVector actual = p.residual(anderson->predicted[n]);
      if (r0n == 0.0) {
        ab.equality(0.0, n);
        continue;
      }
      if (n == 0) {
        ab.equality(norm2(actual - r0) / r0n, n);
        continue;
      }
      // xbar lies in the hull by construction, so (I - L_n) r0 is the unique
      // residual there that is orthogonal to every column.
      double worst = 0.0;
      for (const auto& c : cols) {
        const double cn = norm2(c);
        if (cn > 0.0) worst = std::max(worst, std::abs(dot(actual, c)) / (cn * r0n));
      }
      ab.equality(worst, n);
    }
    out.push_back(std::move(ab).done());
  }
  return out;
}

/// Anderson run reaches its final iterate within kappa+1 steps; the final
/// iterate is x* in the converging case and differs from x* otherwise.
inline RelationCheck verify_convergence_bound(const LinearProblem& p, const SolverTrace& anderson, std::size_t kappa,
                                              ConvergenceCase c, double tol = default_verify_tol,
                                              double dep_tol = default_dep_tol) {
  detail::require_anderson(anderson, "verify_convergence_bound");
  std::size_t settled = anderson.steps();
  while (settled > 0 && detail::same_iterate(anderson.iterates[settled], anderson.iterates[settled - 1], dep_tol)) {
    --settled;
  }
  const double err = detail::relative_gap(anderson.iterates.back(), p.exact_solution());
  bool ok = settled <= kappa + 1;
  std::string detail = "settled at step " + std::to_string(settled) + ", |x-x*|/|x*|=" + std::to_string(err);
  if (c == ConvergenceCase::converges) {
    ok = ok && err <= tol;
  } else {
    ok = ok && err > 1e-6;
  }
  RelationCheck out = detail::boolean_check("settles_within_kappa_plus_one", ok, detail);
  out.max_deviation = err;
  return out;
}

/// Runs GMRES and a beta = 1 infinite-history Anderson pass, computes the
/// grade, Anderson index and GMRES stagnation index, classifies the problem
/// and cross-checks the classification against the residual chains.
inline DiagnosticsReport classify(const LinearProblem& p, const SolveConfig& cfg = {},
                                  double verify_tol = default_verify_tol) {
  cfg.validate();
  DiagnosticsReport rep;
  rep.solve_config = cfg;
  rep.verify_tol = verify_tol;
  if (norm2(p.r0()) <= cfg.residual_tol) {
    rep.trivially_converged = true;
    rep.relation_checks.push_back(detail::boolean_check("trivial", true, "r0 within residual tolerance"));
    return rep;
  }

  SolveConfig run_cfg = cfg;
  run_cfg.max_iter = std::max<int>(cfg.max_iter, static_cast<int>(p.dimension()) + 3);
  const SolverTrace g = gmres_run(p, run_cfg);
  const SolverTrace aa = anderson_run(p, MixingSchedule::constant(1.0), std::nullopt, run_cfg);

  const std::size_t nu = grade(p.a(), p.r0(), cfg.dep_tol);
  rep.grade = nu;
  rep.stagnation_index = gmres_stagnation_index(g, cfg.dep_tol);
  rep.anderson_index = resolved_anderson_index(aa, cfg.dep_tol);
  rep.beta_star = beta_star(p.r0(), p.apply(p.r0()));
  const std::size_t kappa = rep.anderson_index.value;
  rep.convergence_case = kappa >= nu ? ConvergenceCase::converges : ConvergenceCase::stagnates;

  auto& checks = rep.relation_checks;
  checks.push_back(detail::boolean_check("kappa_observed", rep.anderson_index.observed,
                                         rep.anderson_index.observed ? "" : "Anderson trace ended before dependence"));
  checks.push_back(detail::boolean_check("kappa_le_grade", kappa <= nu,
                                         "kA=" + std::to_string(kappa) + " nu=" + std::to_string(nu)));

  const ResidualChain chain = residual_chain(g, nu, cfg.residual_tol, verify_tol);
  const bool strict = chain.strict_to_zero;
  const bool plateau = chain.plateau_at.has_value();
  checks.push_back(detail::boolean_check(
      "one_residual_chain", strict != plateau,
      std::string("strict=") + (strict ? "1" : "0") + " plateau=" + (plateau ? "1" : "0")));
  if (rep.convergence_case == ConvergenceCase::converges) {
    checks.push_back(detail::boolean_check("converging_chain", strict, ""));
    checks.push_back(detail::boolean_check("eta_eq_grade", rep.stagnation_index == nu,
                                           rep.stagnation_index ? "eta_G=" + std::to_string(*rep.stagnation_index)
                                                                : "eta_G=none"));
  } else {
    checks.push_back(detail::boolean_check("stagnating_chain", plateau && chain.plateau_at == kappa,
                                           chain.plateau_at ? "plateau at " + std::to_string(*chain.plateau_at)
                                                            : "no plateau"));
    checks.push_back(detail::boolean_check(
        "kappa_eq_eta_plus_one", rep.stagnation_index && *rep.stagnation_index + 1 == kappa,
        rep.stagnation_index ? "eta_G=" + std::to_string(*rep.stagnation_index) : "eta_G=none"));
  }

  const bool beta_zero = std::abs(rep.beta_star) <= cfg.dep_tol;
  const bool eta_zero = rep.stagnation_index == std::size_t{0};
  const bool kappa_one = kappa == 1;
  // kA = 1 also occurs for nu = 1 without stagnation, so the third leg is
  // only meaningful in the stagnating case.
  const bool kappa_leg = rep.convergence_case == ConvergenceCase::stagnates ? kappa_one == beta_zero : true;
  checks.push_back(detail::boolean_check("zero_beta_star_equivalence", beta_zero == eta_zero && kappa_leg,
                                         "beta*=" + std::to_string(rep.beta_star)));
  checks.push_back(verify_convergence_bound(p, aa, kappa, rep.convergence_case, verify_tol, cfg.dep_tol));
  return rep;
}

inline std::string format_eta(const std::optional<std::size_t>& eta) {
  return eta ? std::to_string(*eta) : std::string("none");
}

/// One-line summary, e.g. "nu=6 kappa_A=1 eta_G=0 case=ii".
inline std::string summary_line(const DiagnosticsReport& rep) {
  if (rep.trivially_converged) return "nu=undefined kappa_A=0 eta_G=0 case=i";
  std::ostringstream os;
  os << "nu=" << *rep.grade << " kappa_A=" << rep.anderson_index.value
     << " eta_G=" << format_eta(rep.stagnation_index) << " case=" << to_string(rep.convergence_case);
  return os.str();
}

inline std::string relation_table(const std::vector<RelationCheck>& checks) {
  std::ostringstream os;
  std::size_t width = 8;
  for (const auto& c : checks) width = std::max(width, c.id.size());
  os.setf(std::ios::left);
  for (const auto& c : checks) {
    os << c.id << std::string(width + 2 - c.id.size(), ' ');
    char buf[32];
    std::snprintf(buf, sizeof buf, "%-12.3e", c.max_deviation);
    os << buf << (c.pass ? "PASS" : "FAIL");
    if (!c.detail.empty()) os << "  " << c.detail;
    os << '\n';
  }
  return os.str();
}

/// Structured text form of a report.
inline std::string to_text(const DiagnosticsReport& rep) {
  std::ostringstream os;
  os << summary_line(rep) << '\n';
  os << "beta_star=" << rep.beta_star << '\n';
  os << "kappa_A_observed=" << (rep.anderson_index.observed ? "yes" : "no") << '\n';
  os << "tolerances: residual_tol=" << rep.solve_config.residual_tol << " dep_tol=" << rep.solve_config.dep_tol
     << " rank_tol=" << rep.solve_config.rank_tol << " verify_tol=" << rep.verify_tol << '\n';
  os << relation_table(rep.relation_checks);
  return os.str();
}

}  // namespace andersonkit

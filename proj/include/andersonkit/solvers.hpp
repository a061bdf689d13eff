#pragma once

// Iterative methods for A x + b = 0: fixed point, simple mixing, full GMRES,
// Anderson mixing with a general window and beta schedule, and Anderson
// mixing with residual-optimal mixing parameters. Every run returns the full
// SolverTrace.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "andersonkit/linalg.hpp"
#include "andersonkit/problem.hpp"

namespace andersonkit {

namespace detail {

inline SolverTrace start_trace(Method method, const LinearProblem& p) {
  SolverTrace t;
  t.method = method;
  t.problem_fingerprint = p.fingerprint();
  t.iterates.push_back(p.x0());
  t.residuals.push_back(p.r0());
  t.residual_norms.push_back(norm2(p.r0()));
  return t;
}

inline void push_iterate(SolverTrace& t, const LinearProblem& p, RealVector x) {
  RealVector r = p.residual(x);
  t.residual_norms.push_back(norm2(r));
  t.residuals.push_back(std::move(r));
  t.iterates.push_back(std::move(x));
}

inline bool same_iterate(const RealVector& next, const RealVector& prev, double dep_tol) {
  return norm2(next - prev) <= dep_tol * (1.0 + norm2(prev));
}

inline SolverTrace mixing_run(Method method, const LinearProblem& p, double beta, const SolveConfig& cfg) {
  cfg.validate();
  SolverTrace t = start_trace(method, p);
  const double guard = 1e12 * t.residual_norms.front();
  if (t.residual_norms.front() <= cfg.residual_tol) {
    t.termination = Termination::residual_tol_met;
    return t;
  }
  for (int n = 0; n < cfg.max_iter; ++n) {
    RealVector next = axpy(beta, t.residuals.back(), t.iterates.back());
    t.betas.push_back(beta);
    push_iterate(t, p, std::move(next));
    const double rn = t.residual_norms.back();
    if (rn <= cfg.residual_tol) {
      t.termination = Termination::residual_tol_met;
      return t;
    }
    if (rn > guard) {
      t.termination = Termination::breakdown;
      return t;
    }
  }
  t.termination = Termination::max_iter;
  return t;
}

}  // namespace detail

/// x_{n+1} = x_n + A x_n + b.
inline SolverTrace fixed_point_run(const LinearProblem& p, const SolveConfig& cfg = {}) {
  return detail::mixing_run(Method::fixed_point, p, 1.0, cfg);
}

/// x_{n+1} = x_n + beta (A x_n + b).
inline SolverTrace simple_mixing_run(const LinearProblem& p, double beta, const SolveConfig& cfg = {}) {
  if (beta == 0.0 || !std::isfinite(beta)) throw std::invalid_argument("zero mixing parameter");
  return detail::mixing_run(Method::simple_mixing, p, beta, cfg);
}

/// Full (non-restarted) GMRES: Arnoldi on K_n(A, r0) with Givens rotations on
/// the Hessenberg factor. The iterate x_n is materialized at every step.
inline SolverTrace gmres_run(const LinearProblem& p, const SolveConfig& cfg = {}) {
  cfg.validate();
  SolverTrace t = detail::start_trace(Method::gmres, p);
  const double beta0 = t.residual_norms.front();
  if (beta0 <= cfg.residual_tol) {
    t.termination = Termination::residual_tol_met;
    return t;
  }
  const std::size_t n_dim = p.dimension();

  std::vector<RealVector> basis{(1.0 / beta0) * p.r0()};
  std::vector<std::vector<double>> r_cols;  // rotated Hessenberg columns (upper triangular)
  std::vector<double> cs, sn;
  std::vector<double> g{beta0};

  for (int n = 1; n <= cfg.max_iter; ++n) {
    const RealVector w = p.apply(basis.back());
    auto ext = orthonormal_extend(basis, w, cfg.dep_tol);
    std::vector<double> h = ext.h;
    const bool happy = ext.dependent || basis.size() == n_dim;
    double sub = happy ? 0.0 : ext.remainder_norm;

    for (std::size_t i = 0; i + 1 < h.size(); ++i) {
      const double a = h[i];
      const double b = h[i + 1];
      h[i] = cs[i] * a + sn[i] * b;
      h[i + 1] = -sn[i] * a + cs[i] * b;
    }
    const double top = h.back();
    const double rad = std::hypot(top, sub);
    double c = 1.0, s = 0.0;
    if (rad > 0.0) {
      c = top / rad;
      s = sub / rad;
    }
    h.back() = rad;
    cs.push_back(c);
    sn.push_back(s);
    const double gk = g.back();
    g.back() = c * gk;
    g.push_back(-s * gk);
    r_cols.push_back(std::move(h));

    const std::size_t k = r_cols.size();
    std::vector<double> y(k, 0.0);
    for (std::size_t i = k; i-- > 0;) {
      double acc = g[i];
      for (std::size_t j = i + 1; j < k; ++j) acc -= r_cols[j][i] * y[j];
      // A zero diagonal means the new direction adds nothing; leave y_i = 0.
      y[i] = r_cols[i][i] != 0.0 ? acc / r_cols[i][i] : 0.0;
    }
    // The residual is A x + b = r0 + A V y, so the minimizer is x0 - V y.
    std::vector<double> x(p.x0().values().begin(), p.x0().values().end());
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < x.size(); ++i) x[i] -= y[j] * basis[j][i];
    detail::push_iterate(t, p, RealVector(std::move(x)));

    if (happy || t.residual_norms.back() <= cfg.residual_tol) {
      t.termination = Termination::residual_tol_met;
      return t;
    }
    basis.push_back(std::move(*ext.q));
  }
  t.termination = Termination::max_iter;
  return t;
}

/// Mixing parameter minimizing ||r0 + beta A r0||.
inline double beta_star(const RealVector& r0, const RealVector& ar0) {
  require_same_size(r0, ar0, "beta_star");
  if (norm2(r0) == 0.0) return 0.0;
  const double d = dot(ar0, ar0);
  if (d == 0.0) throw std::domain_error("beta_star: A r0 vanishes for nonzero r0 (singular A)");
  return -dot(r0, ar0) / d;
}

/// Weights (alpha_0..alpha_m) summing to one that minimize ||sum alpha_i f_i||.
///
/// alpha_0 is eliminated as 1 - sum_{i>=1} alpha_i and the remaining weights
/// solve min ||f_0 + sum_i alpha_i (f_i - f_0)|| in the minimum-norm sense.
inline std::vector<double> anderson_coefficients(const DenseMatrix& residual_columns, double rank_tol) {
  const std::size_t m = residual_columns.cols() - 1;
  if (m == 0) return {1.0};
  const std::size_t n = residual_columns.rows();
  std::vector<double> diffs(n * m);
  std::vector<double> rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f0 = residual_columns(i, 0);
    rhs[i] = -f0;
    for (std::size_t j = 0; j < m; ++j) diffs[i * m + j] = residual_columns(i, j + 1) - f0;
  }
  const auto ls = least_squares(DenseMatrix(n, m, std::move(diffs)), RealVector(std::move(rhs)), rank_tol);
  std::vector<double> alpha(m + 1);
  double tail = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    alpha[j + 1] = ls.coeffs[j];
    tail += ls.coeffs[j];
  }
  alpha[0] = 1.0 - tail;
  return alpha;
}

inline DenseMatrix columns_of(const std::vector<RealVector>& vs, std::size_t first, std::size_t count) {
  return DenseMatrix::from_columns(std::span<const RealVector>(vs.data() + first, count));
}

namespace detail {

/// History of accepted steps dx_j = x_{j+1} - x_j and df_j = A dx_j.
///
/// The constrained least squares over iterates x_r..x_n is solved in the
/// equivalent form min ||f_n - dF gamma||, xbar = x_n - dX gamma. Forming dx_j
/// from the update itself and df_j as a product keeps the small differences
/// between nearly coincident iterates accurate; subtracting stored iterates
/// or residuals would cancel most of their digits.
class StepHistory {
 public:
  void push(RealVector dx, RealVector df) {
    dx_.push_back(std::move(dx));
    df_.push_back(std::move(df));
  }

  struct Prediction {
    RealVector offset;           // xbar - x_n
    RealVector fbar;             // f_n - dF gamma
    std::vector<double> alpha;   // weights on x_first..x_n
  };

  /// Uses steps first..size()-1, i.e. iterates x_first..x_n.
  Prediction predict(std::size_t first, const RealVector& fn, double rank_tol) const {
    const std::size_t m = dx_.size() - first;
    Prediction out{RealVector::zeros(fn.size()), fn, {1.0}};
    if (m == 0) return out;
    const DenseMatrix dfm = columns_of(df_, first, m);
    const auto ls = least_squares(dfm, fn, rank_tol);
    std::vector<double> off(fn.size(), 0.0);
    std::vector<double> fb(fn.values().begin(), fn.values().end());
    for (std::size_t j = 0; j < m; ++j) {
      const double gj = ls.coeffs[j];
      if (gj == 0.0) continue;
      const RealVector& dx = dx_[first + j];
      const RealVector& df = df_[first + j];
      for (std::size_t i = 0; i < off.size(); ++i) {
        off[i] -= gj * dx[i];
        fb[i] -= gj * df[i];
      }
    }
    // xbar = x_n - sum_j gamma_j (x_{j+1} - x_j), rewritten as weights on iterates.
    std::vector<double> alpha(m + 1, 0.0);
    alpha[m] = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      alpha[j + 1] -= ls.coeffs[j];
      alpha[j] += ls.coeffs[j];
    }
    out.offset = RealVector(std::move(off));
    out.fbar = RealVector(std::move(fb));
    out.alpha = std::move(alpha);
    return out;
  }

  std::size_t size() const { return dx_.size(); }

 private:
  std::vector<RealVector> dx_;
  std::vector<RealVector> df_;
};

/// Orthonormal basis Q of span{x_1 - x_0, ..., x_n - x_0} together with A Q
/// and the coordinates t_j of x_j - x_0 in that basis.
///
/// The minimizer of ||A x + b|| over the affine hull of all iterates is
/// x_n + Q z with z = argmin ||f_n + (A Q) z||, and A Q is no worse
/// conditioned than A. Each step x_{n+1} - x_n = Q z + beta fbar only adds
/// the component of beta fbar orthogonal to Q, so the basis is extended from
/// that vector directly instead of from differences of stored iterates.
class HullBasis {
 public:
  struct Prediction {
    RealVector offset;          // xbar - x_n
    std::vector<double> coord;  // coordinates of xbar - x_0
    std::vector<double> alpha;  // weights on x_0..x_n
  };

  Prediction predict(const RealVector& fn, double rank_tol) const {
    const std::size_t k = q_.size();
    const std::vector<double> tn = coords_.empty() ? std::vector<double>{} : padded(coords_.back());
    Prediction out{RealVector::zeros(fn.size()), tn, {}};
    if (k > 0) {
      const auto ls = least_squares(columns_of(aq_, 0, k), -1.0 * fn, rank_tol);
      std::vector<double> off(fn.size(), 0.0);
      for (std::size_t j = 0; j < k; ++j) {
        out.coord[j] += ls.coeffs[j];
        for (std::size_t i = 0; i < off.size(); ++i) off[i] += ls.coeffs[j] * q_[j][i];
      }
      out.offset = RealVector(std::move(off));
    }
    out.alpha = weights(out.coord, rank_tol);
    return out;
  }

  /// Records x_{n+1} - x_0 = Q coord + v, where v = beta fbar.
  void accept(const LinearProblem& p, std::vector<double> coord, const RealVector& v, double dep_tol) {
    auto ext = orthonormal_extend(std::span<const RealVector>(q_), v, dep_tol);
    for (std::size_t j = 0; j < ext.h.size(); ++j) coord[j] += ext.h[j];
    if (!ext.dependent) {
      coord.push_back(ext.remainder_norm);
      aq_.push_back(p.apply(*ext.q));
      q_.push_back(std::move(*ext.q));
    }
    coords_.push_back(std::move(coord));
  }

 private:
  std::vector<double> padded(const std::vector<double>& c) const {
    std::vector<double> out(q_.size(), 0.0);
    std::copy(c.begin(), c.end(), out.begin());
    return out;
  }

  /// Weights (alpha_0..alpha_n) with sum one and sum_i alpha_i (x_i - x_0) = Q coord.
  std::vector<double> weights(const std::vector<double>& coord, double rank_tol) const {
    const std::size_t n = coords_.size();
    const std::size_t k = q_.size();
    std::vector<double> a(n + 1, 0.0);
    if (n == 0) {
      a[0] = 1.0;
      return a;
    }
    bool triangular = n == k;
    for (std::size_t j = 0; triangular && j < n; ++j) triangular = coords_[j].size() == j + 1 && coords_[j][j] != 0.0;
    if (triangular) {
      for (std::size_t i = n; i-- > 0;) {
        double acc = coord[i];
        for (std::size_t j = i + 1; j < n; ++j) acc -= coords_[j][i] * a[j + 1];
        a[i + 1] = acc / coords_[i][i];
      }
    } else {
      std::vector<double> t(k * n, 0.0);
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < coords_[j].size(); ++i) t[i * n + j] = coords_[j][i];
      const auto ls = least_squares(DenseMatrix(k, n, std::move(t)), RealVector(coord), rank_tol);
      for (std::size_t j = 0; j < n; ++j) a[j + 1] = ls.coeffs[j];
    }
    double tail = 0.0;
    for (std::size_t j = 1; j <= n; ++j) tail += a[j];
    a[0] = 1.0 - tail;
    return a;
  }

  std::vector<RealVector> q_;
  std::vector<RealVector> aq_;
  std::vector<std::vector<double>> coords_;
};

}  // namespace detail

namespace detail {

struct AndersonStep {
  RealVector predicted;
  RealVector fbar;
  std::optional<RealVector> offset;  // xbar - x_n, when known without cancellation
  std::vector<double> coord;         // hull coordinates of xbar - x_0 (hull form only)
  std::vector<double> alpha;
};

/// Literal form: alpha from the stored residuals, xbar = sum alpha_i x_i.
inline AndersonStep literal_step(const LinearProblem& p, const SolverTrace& t, std::size_t rk, std::size_t mk,
                                 double rank_tol) {
  auto alpha = anderson_coefficients(columns_of(t.residuals, rk, mk + 1), rank_tol);
  std::vector<double> xbar(p.dimension(), 0.0);
  for (std::size_t i = 0; i <= mk; ++i)
    for (std::size_t j = 0; j < xbar.size(); ++j) xbar[j] += alpha[i] * t.iterates[rk + i][j];
  RealVector predicted(std::move(xbar));
  RealVector fbar = p.residual(predicted);
  return {std::move(predicted), std::move(fbar), std::nullopt, {}, std::move(alpha)};
}

}  // namespace detail

/// Anderson mixing with window m (nullopt = infinite history) and a constant
/// or explicit beta schedule, applied to f(x) = A x + b.
inline SolverTrace anderson_run(const LinearProblem& p, const MixingSchedule& schedule,
                                std::optional<std::size_t> window_m, const SolveConfig& cfg = {}) {
  cfg.validate();
  if (schedule.is_optimized()) {
    throw std::invalid_argument("anderson_run: use optimized_anderson_run for the optimized schedule");
  }
  if (window_m && *window_m < 1) throw std::invalid_argument("anderson_run: window must be >= 1");

  SolverTrace t = detail::start_trace(Method::anderson, p);
  if (t.residual_norms.front() <= cfg.residual_tol) {
    t.termination = Termination::residual_tol_met;
    return t;
  }

  const bool literal = cfg.anderson_form == AndersonForm::residual_differences;
  // In the hull form, full-history steps use the hull basis and steps whose
  // window has dropped old iterates use the step history over the window.
  detail::HullBasis hull;
  detail::StepHistory history;
  int repeats = 0;
  for (std::size_t k = 0; k < static_cast<std::size_t>(cfg.max_iter); ++k) {
    const double beta = schedule.at(k);
    const std::size_t mk = window_m ? std::min(*window_m, k) : k;
    const std::size_t rk = k - mk;
    const RealVector& xn = t.iterates.back();

    detail::AndersonStep s = [&]() -> detail::AndersonStep {
      if (literal) return detail::literal_step(p, t, rk, mk, cfg.rank_tol);
      if (rk == 0) {
        auto pred = hull.predict(t.residuals.back(), cfg.rank_tol);
        RealVector predicted = xn + pred.offset;
        RealVector fbar = p.residual(predicted);
        return {std::move(predicted), std::move(fbar), std::move(pred.offset), std::move(pred.coord),
                std::move(pred.alpha)};
      }
      auto pred = history.predict(rk, t.residuals.back(), cfg.rank_tol);
      RealVector predicted = xn + pred.offset;
      RealVector fbar = p.residual(predicted);
      return {std::move(predicted), std::move(fbar), std::move(pred.offset), {}, std::move(pred.alpha)};
    }();

    const RealVector push = beta * s.fbar;
    RealVector next = s.offset ? xn + (*s.offset + push) : s.predicted + push;
    if (!literal) {
      const RealVector step = s.offset ? *s.offset + push : next - xn;
      if (!window_m || *window_m > k) hull.accept(p, std::move(s.coord), push, cfg.dep_tol);
      if (window_m) history.push(step, p.apply(step));
    }
    t.predicted.push_back(std::move(s.predicted));
    t.alphas.push_back(std::move(s.alpha));
    t.window_start.push_back(rk);
    t.betas.push_back(beta);
    const bool repeat = detail::same_iterate(next, xn, cfg.dep_tol);
    detail::push_iterate(t, p, std::move(next));

    if (t.residual_norms.back() <= cfg.residual_tol) {
      t.termination = Termination::residual_tol_met;
      return t;
    }
    repeats = repeat ? repeats + 1 : 0;
    if (repeats >= 2) {
      t.termination = Termination::stagnation_detected;
      return t;
    }
  }
  t.termination = Termination::max_iter;
  return t;
}

/// Infinite-history Anderson mixing where each beta_n minimizes the residual
/// of x_{n+1} given the predicted iterate. The run freezes (stagnation) once
/// |beta_n| <= dep_tol.
inline SolverTrace optimized_anderson_run(const LinearProblem& p, const SolveConfig& cfg = {}) {
  cfg.validate();
  SolverTrace t = detail::start_trace(Method::optimized_anderson, p);
  if (t.residual_norms.front() <= cfg.residual_tol) {
    t.termination = Termination::residual_tol_met;
    return t;
  }

  const bool literal = cfg.anderson_form == AndersonForm::residual_differences;
  detail::HullBasis hull;
  for (std::size_t k = 0; k < static_cast<std::size_t>(cfg.max_iter); ++k) {
    const RealVector& xn = t.iterates.back();
    detail::AndersonStep s = [&]() -> detail::AndersonStep {
      if (literal) return detail::literal_step(p, t, 0, k, cfg.rank_tol);
      auto pred = hull.predict(t.residuals.back(), cfg.rank_tol);
      RealVector predicted = xn + pred.offset;
      RealVector fbar = p.residual(predicted);
      return {std::move(predicted), std::move(fbar), std::move(pred.offset), std::move(pred.coord),
              std::move(pred.alpha)};
    }();
    const bool solved = norm2(s.fbar) <= cfg.residual_tol;
    const double beta = solved ? 0.0 : beta_star(s.fbar, p.apply(s.fbar));
    const RealVector push = beta * s.fbar;
    RealVector next = s.offset ? xn + (*s.offset + push) : s.predicted + push;

    if (!literal) hull.accept(p, std::move(s.coord), push, cfg.dep_tol);
    t.predicted.push_back(std::move(s.predicted));
    t.alphas.push_back(std::move(s.alpha));
    t.window_start.push_back(0);
    t.betas.push_back(beta);
    detail::push_iterate(t, p, std::move(next));

    if (t.residual_norms.back() <= cfg.residual_tol) {
      t.termination = Termination::residual_tol_met;
      return t;
    }
    if (std::abs(beta) <= cfg.dep_tol) {
      t.termination = Termination::stagnation_detected;
      return t;
    }
  }
  t.termination = Termination::max_iter;
  return t;
}

}  // namespace andersonkit

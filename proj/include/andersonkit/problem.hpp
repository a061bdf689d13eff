#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "andersonkit/linalg.hpp"

namespace andersonkit {

/// The affine system A x + b = 0 with a starting point.
///
/// The exact solution is computed once by a direct solve and kept only as a
/// test oracle; none of the iterative methods read it.
class LinearProblem {
 public:
  LinearProblem(DenseMatrix a, RealVector b, RealVector x0, double rank_tol = default_rank_tol)
      : a_(std::move(a)), b_(std::move(b)), x0_(std::move(x0)), r0_(RealVector::zeros(1)), x_star_(RealVector::zeros(1)) {
    if (a_.rows() != a_.cols()) throw DimensionError("LinearProblem: A must be square");
    require_same_size(b_, x0_, "LinearProblem");
    if (a_.rows() != b_.size()) throw DimensionError("LinearProblem: A and b dimensions differ");
    r0_ = residual(x0_);
    x_star_ = lu_solve(a_, -1.0 * b_, rank_tol);
    fingerprint_ = compute_fingerprint();
  }

  std::size_t dimension() const noexcept { return b_.size(); }
  const DenseMatrix& a() const noexcept { return a_; }
  const RealVector& b() const noexcept { return b_; }
  const RealVector& x0() const noexcept { return x0_; }
  const RealVector& r0() const noexcept { return r0_; }
  const RealVector& exact_solution() const noexcept { return x_star_; }
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

  /// f(x) = A x + b, evaluated fresh.
  RealVector residual(const RealVector& x) const { return matvec(a_, x) + b_; }
  RealVector apply(const RealVector& v) const { return matvec(a_, v); }

 private:
  std::uint64_t compute_fingerprint() const {
    // FNV-1a over the raw bytes of A, b and x0.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::span<const double> data) {
      for (double d : data) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &d, sizeof(double));
        for (unsigned char c : bytes) {
          h ^= c;
          h *= 1099511628211ULL;
        }
      }
    };
    mix(a_.row_major());
    mix(b_.values());
    mix(x0_.values());
    return h;
  }

  DenseMatrix a_;
  RealVector b_;
  RealVector x0_;
  RealVector r0_;
  RealVector x_star_;
  std::uint64_t fingerprint_ = 0;
};

inline LinearProblem make_problem(DenseMatrix a, RealVector b, RealVector x0, double rank_tol = default_rank_tol) {
  return LinearProblem(std::move(a), std::move(b), std::move(x0), rank_tol);
}

/// How Anderson runs evaluate the constrained least squares over past iterates.
///
/// hull_basis keeps an orthonormal basis of the iterate differences and solves
/// against A times that basis. residual_differences solves directly with the
/// differences f_i - f_0 of stored residuals and forms xbar = sum alpha_i x_i.
/// Both give the same minimizer in exact arithmetic; the second loses about
/// two digits per step once the iterates become nearly affinely dependent.
enum class AndersonForm { hull_basis, residual_differences };

struct SolveConfig {
  int max_iter = 500;
  double residual_tol = 1e-10;  // absolute, on ||A x + b||
  double rank_tol = default_rank_tol;
  double dep_tol = default_dep_tol;
  AndersonForm anderson_form = AndersonForm::hull_basis;

  void validate() const {
    if (max_iter < 1) throw std::invalid_argument("SolveConfig: max_iter must be >= 1");
    if (!(residual_tol > 0.0) || !(rank_tol > 0.0) || !(dep_tol > 0.0)) {
      throw std::invalid_argument("SolveConfig: tolerances must be > 0");
    }
  }
};

/// Sequence of nonzero mixing parameters, or the residual-optimal choice.
class MixingSchedule {
 public:
  struct Constant {
    double beta;
  };
  struct Explicit {
    std::vector<double> betas;
  };
  struct Optimized {};

  static MixingSchedule constant(double beta, double min_abs_beta = 1e-14) {
    return MixingSchedule(Constant{beta}, min_abs_beta);
  }
  static MixingSchedule explicit_list(std::vector<double> betas, double min_abs_beta = 1e-14) {
    return MixingSchedule(Explicit{std::move(betas)}, min_abs_beta);
  }
  static MixingSchedule optimized() { return MixingSchedule(Optimized{}, 1e-14); }

  bool is_optimized() const noexcept { return std::holds_alternative<Optimized>(kind_); }
  double min_abs_beta() const noexcept { return min_abs_beta_; }

  /// beta_n; throws when an explicit list is exhausted.
  double at(std::size_t n) const {
    if (const auto* c = std::get_if<Constant>(&kind_)) return c->beta;
    if (const auto* e = std::get_if<Explicit>(&kind_)) {
      if (n >= e->betas.size()) throw std::out_of_range("schedule too short");
      return e->betas[n];
    }
    throw std::logic_error("optimized schedule has no precomputed betas");
  }

 private:
  MixingSchedule(std::variant<Constant, Explicit, Optimized> kind, double min_abs_beta)
      : kind_(std::move(kind)), min_abs_beta_(min_abs_beta) {
    if (!(min_abs_beta_ > 0.0)) throw std::invalid_argument("MixingSchedule: min_abs_beta must be > 0");
    auto check = [this](double b) {
      if (!std::isfinite(b) || std::abs(b) < min_abs_beta_) throw std::invalid_argument("zero mixing parameter");
    };
    if (const auto* c = std::get_if<Constant>(&kind_)) check(c->beta);
    if (const auto* e = std::get_if<Explicit>(&kind_)) {
      if (e->betas.empty()) throw std::invalid_argument("MixingSchedule: empty explicit list");
      for (double b : e->betas) check(b);
    }
  }

  std::variant<Constant, Explicit, Optimized> kind_;
  double min_abs_beta_;
};

enum class Method { fixed_point, simple_mixing, gmres, anderson, optimized_anderson };
enum class Termination { residual_tol_met, max_iter, stagnation_detected, breakdown };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::fixed_point: return "fixed";
    case Method::simple_mixing: return "simple";
    case Method::gmres: return "gmres";
    case Method::anderson: return "anderson";
    case Method::optimized_anderson: return "opt-anderson";
  }
  return "unknown";
}

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::residual_tol_met: return "residual_tol_met";
    case Termination::max_iter: return "max_iter";
    case Termination::stagnation_detected: return "stagnation_detected";
    case Termination::breakdown: return "breakdown";
  }
  return "unknown";
}

/// Complete history of one solver run.
///
/// Step-indexed lists (`predicted`, `alphas`, `window_start`, `betas`) have
/// one entry per step n = 0..L-1, where L + 1 = iterates.size():
///   predicted[n]    = xbar_{n+1}, the alpha-weighted combination before mixing
///   alphas[n]       = (alpha_{0,n}, ..., alpha_{m_n,n}) over iterates
///                     window_start[n] .. window_start[n] + m_n
///   betas[n]        = beta_n used to produce x_{n+1}
/// GMRES traces leave predicted/alphas/window_start/betas empty; fixed-point
/// and simple-mixing traces fill only betas.
struct SolverTrace {
  Method method = Method::gmres;
  std::uint64_t problem_fingerprint = 0;
  std::vector<RealVector> iterates;
  std::vector<RealVector> predicted;
  std::vector<RealVector> residuals;
  std::vector<double> residual_norms;
  std::vector<std::vector<double>> alphas;
  std::vector<std::size_t> window_start;
  std::vector<double> betas;
  Termination termination = Termination::max_iter;

  std::size_t steps() const noexcept { return iterates.empty() ? 0 : iterates.size() - 1; }
  bool is_anderson() const noexcept {
    return method == Method::anderson || method == Method::optimized_anderson;
  }

  /// alpha_{n,n}: weight of the newest iterate at step n (alpha_{0,0} = 1).
  double alpha_last(std::size_t n) const { return alphas.at(n).back(); }
};

}  // namespace andersonkit

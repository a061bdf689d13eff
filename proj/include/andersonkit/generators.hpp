#pragma once

// Named problem generators.
//
//   cycle(N, k)                 A = cyclic permutation (e_i -> e_{i+1}), b = e_k, x0 = 0
//   random_dense(N, cond)       A = U diag(sigma) V^T, log-spaced sigma in [1/cond, 1]
//   shifted_spd(N, lmin, lmax)  symmetric A with eigenvalues spread over [lmin, lmax]
//   diag(values[, b])           diagonal A, b defaults to ones
//   stagnating(N, step[, cond]) random A with a rank-one correction that makes
//                               GMRES stagnate exactly at `step`
//
// Random generators draw b uniformly from [-1, 1]^N; x0 is zero unless set.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "andersonkit/linalg.hpp"
#include "andersonkit/problem.hpp"
#include "andersonkit/random.hpp"
#include "andersonkit/solvers.hpp"

namespace andersonkit {

class GeneratorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using GeneratorParams = std::map<std::string, std::string>;

inline const std::vector<std::string>& generator_names() {
  static const std::vector<std::string> names{"cycle", "random_dense", "shifted_spd", "diag", "stagnating"};
  return names;
}

namespace detail {

inline double param_double(const GeneratorParams& p, const std::string& key, std::optional<double> fallback = {}) {
  auto it = p.find(key);
  if (it == p.end()) {
    if (fallback) return *fallback;
    throw GeneratorError("missing parameter '" + key + "'");
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != it->second.size() || !std::isfinite(v)) {
    throw GeneratorError("parameter '" + key + "' is not a number: " + it->second);
  }
  return v;
}

inline std::size_t param_size(const GeneratorParams& p, const std::string& key,
                              std::optional<std::size_t> fallback = {}) {
  const double v = param_double(p, key, fallback ? std::optional<double>(static_cast<double>(*fallback)) : std::nullopt);
  if (v < 1.0 || v != std::floor(v)) throw GeneratorError("parameter '" + key + "' must be a positive integer");
  return static_cast<std::size_t>(v);
}

/// Parses "v1;v2;..." (also accepts spaces as separators).
inline std::vector<double> parse_list(std::string_view text) {
  std::vector<double> out;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw GeneratorError("not a number in list: " + token);
    out.push_back(v);
    token.clear();
  };
  for (char c : text) {
    if (c == ';' || c == ' ' || c == ',') {
      flush();
    } else {
      token.push_back(c);
    }
  }
  flush();
  if (out.empty()) throw GeneratorError("empty value list");
  return out;
}

inline void check_dimension(std::size_t n) {
  if (n < 1 || n > 10000) throw GeneratorError("N must lie in [1, 10000]");
}

}  // namespace detail

inline DenseMatrix cycle_permutation(std::size_t n) {
  std::vector<double> d(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) d[((j + 1) % n) * n + j] = 1.0;
  return DenseMatrix(n, n, std::move(d));
}

inline LinearProblem cycle_problem(std::size_t n, std::size_t k) {
  detail::check_dimension(n);
  if (k < 1 || k > n) throw GeneratorError("cycle: k must lie in [1, N]");
  return LinearProblem(cycle_permutation(n), RealVector::unit(n, k - 1), RealVector::zeros(n));
}

/// A = U diag(sigma) V^T with sigma log-spaced from 1 down to 1/cond, so
/// the 2-norm condition number is cond.
inline DenseMatrix random_dense_matrix(std::size_t n, double cond, Rng& rng) {
  const DenseMatrix u = random_orthogonal(n, rng);
  const DenseMatrix v = random_orthogonal(n, rng);
  std::vector<double> us(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    const double sigma = n == 1 ? 1.0 : std::pow(cond, -static_cast<double>(j) / static_cast<double>(n - 1));
    for (std::size_t i = 0; i < n; ++i) us[i * n + j] = u(i, j) * sigma;
  }
  return matmul(DenseMatrix(n, n, std::move(us)), v.transpose());
}

inline LinearProblem random_dense_problem(std::size_t n, double cond, std::uint64_t seed) {
  detail::check_dimension(n);
  if (!(cond >= 1.0)) throw GeneratorError("random_dense: cond must be >= 1");
  Rng rng(seed);
  DenseMatrix a = random_dense_matrix(n, cond, rng);
  RealVector b = rng.uniform_vector(n, -1.0, 1.0);
  return LinearProblem(std::move(a), std::move(b), RealVector::zeros(n));
}

inline LinearProblem shifted_spd_problem(std::size_t n, double lmin, double lmax, std::uint64_t seed) {
  detail::check_dimension(n);
  if (!(lmin <= lmax)) throw GeneratorError("shifted_spd: lmin must not exceed lmax");
  if (!(lmin * lmax > 0.0)) throw GeneratorError("shifted_spd: lmin and lmax must be nonzero with the same sign");
  Rng rng(seed);
  const DenseMatrix q = random_orthogonal(n, rng);
  std::vector<double> d(n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double lam = n == 1 ? lmin : lmin + (lmax - lmin) * static_cast<double>(k) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i * n + j] += lam * q(i, k) * q(j, k);
  }
  // Exact symmetry.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d[j * n + i] = d[i * n + j];
  RealVector b = rng.uniform_vector(n, -1.0, 1.0);
  return LinearProblem(DenseMatrix(n, n, std::move(d)), std::move(b), RealVector::zeros(n));
}

inline LinearProblem diag_problem(const std::vector<double>& values, std::optional<std::vector<double>> b = {}) {
  detail::check_dimension(values.size());
  std::vector<double> rhs = b ? *b : std::vector<double>(values.size(), 1.0);
  if (rhs.size() != values.size()) throw GeneratorError("diag: b length differs from values");
  const std::size_t n = values.size();
  return LinearProblem(DenseMatrix::diagonal(RealVector(values)), RealVector(std::move(rhs)), RealVector::zeros(n));
}

/// Random problem whose GMRES iterates satisfy x_step = x_{step+1}.
///
/// With r_s the GMRES residual after s = step steps and w the unit component
/// of r_s orthogonal to K_s, the update A + gamma r_s w^T leaves A unchanged on
/// K_s (hence K_{s+1} and r_s), and gamma is chosen so r_s^T A r_s = 0, which
/// makes the next Krylov direction useless for reducing the residual.
inline LinearProblem stagnating_problem(std::size_t n, std::size_t step, double cond, std::uint64_t seed) {
  detail::check_dimension(n);
  if (n < 2 || step + 2 > n) throw GeneratorError("stagnating: need N >= 2 and step <= N - 2");
  if (!(cond >= 1.0)) throw GeneratorError("stagnating: cond must be >= 1");
  Rng rng(seed);
  const DenseMatrix a0 = random_dense_matrix(n, cond, rng);
  const RealVector b = rng.uniform_vector(n, -1.0, 1.0);
  const RealVector x0 = RealVector::zeros(n);
  const LinearProblem base(a0, b, x0);

  RealVector rs = base.r0();
  std::vector<RealVector> basis;
  if (step > 0) {
    SolveConfig cfg;
    cfg.max_iter = static_cast<int>(step);
    cfg.residual_tol = 1e-300;
    const SolverTrace g = gmres_run(base, cfg);
    if (g.steps() != step) throw GeneratorError("stagnating: base problem converged before the requested step");
    rs = g.residuals.back();
    const double rn = norm2(base.r0());
    basis.push_back((1.0 / rn) * base.r0());
    while (basis.size() < step) {
      auto ext = orthonormal_extend(basis, base.apply(basis.back()), default_dep_tol);
      if (ext.dependent) throw GeneratorError("stagnating: Krylov space degenerated");
      basis.push_back(std::move(*ext.q));
    }
  }
  const RealVector w_raw = rs - project_onto_basis(basis, rs);
  const double w_norm = norm2(w_raw);
  if (w_norm == 0.0) throw GeneratorError("stagnating: residual already inside the Krylov space");
  const RealVector w = (1.0 / w_norm) * w_raw;
  const double gamma = -dot(rs, base.apply(rs)) / (dot(rs, rs) * dot(w, rs));

  std::vector<double> d(a0.row_major().begin(), a0.row_major().end());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i * n + j] += gamma * rs[i] * w[j];
  return LinearProblem(DenseMatrix(n, n, std::move(d)), b, x0);
}

/// Builds a problem from a registered generator name and string parameters.
inline LinearProblem generate_problem(const std::string& name, const GeneratorParams& params, std::uint64_t seed) {
  if (auto it = params.find("seed"); it != params.end()) {
    seed = static_cast<std::uint64_t>(std::stoull(it->second));
  }
  if (name == "cycle") {
    return cycle_problem(detail::param_size(params, "N"), detail::param_size(params, "k", 1));
  }
  if (name == "random_dense") {
    return random_dense_problem(detail::param_size(params, "N"), detail::param_double(params, "cond", 10.0), seed);
  }
  if (name == "shifted_spd") {
    return shifted_spd_problem(detail::param_size(params, "N"), detail::param_double(params, "lmin"),
                               detail::param_double(params, "lmax"), seed);
  }
  if (name == "diag") {
    auto it = params.find("values");
    if (it == params.end()) throw GeneratorError("missing parameter 'values'");
    std::optional<std::vector<double>> b;
    if (auto jt = params.find("b"); jt != params.end()) b = detail::parse_list(jt->second);
    return diag_problem(detail::parse_list(it->second), b);
  }
  if (name == "stagnating") {
    const double step = detail::param_double(params, "step", 0.0);
    if (step < 0.0 || step != std::floor(step)) throw GeneratorError("parameter 'step' must be a non-negative integer");
    return stagnating_problem(detail::param_size(params, "N"), static_cast<std::size_t>(step),
                              detail::param_double(params, "cond", 10.0), seed);
  }
  throw GeneratorError("unknown generator '" + name + "'");
}

}  // namespace andersonkit

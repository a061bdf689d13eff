#pragma once

// Matrix Market exchange files and trace export (CSV / JSON).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "andersonkit/diagnostics.hpp"
#include "andersonkit/linalg.hpp"
#include "andersonkit/problem.hpp"

namespace andersonkit {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line), message_(msg) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::size_t line_;
  std::string message_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t max_matrix_market_dimension = 10000;

/// 17 significant digits: enough to round-trip any double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline bool next_data_line(std::istream& in, std::string& line, std::size_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%') continue;
    return true;
  }
  return false;
}

}  // namespace detail

/// Parses a real general or symmetric Matrix Market stream (array or coordinate).
inline DenseMatrix parse_matrix_market(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty input");
  ++lineno;
  std::istringstream hs(line);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") throw ParseError(lineno, "missing %%MatrixMarket banner");
  object = detail::lower(object);
  format = detail::lower(format);
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);
  if (object != "matrix") throw ParseError(lineno, "unsupported object '" + object + "'");
  if (format != "array" && format != "coordinate") throw ParseError(lineno, "unsupported format '" + format + "'");
  if (field != "real") throw ParseError(lineno, "unsupported field '" + field + "' (only real)");
  if (symmetry != "general" && symmetry != "symmetric") {
    throw ParseError(lineno, "unsupported symmetry '" + symmetry + "'");
  }
  const bool symmetric = symmetry == "symmetric";
  const bool coordinate = format == "coordinate";

  if (!detail::next_data_line(in, line, lineno)) throw ParseError(lineno, "missing size line");
  std::istringstream ss(line);
  long long rows = 0, cols = 0, nnz = 0;
  if (!(ss >> rows >> cols) || (coordinate && !(ss >> nnz))) throw ParseError(lineno, "malformed size line");
  if (rows < 1 || cols < 1) throw ParseError(lineno, "dimensions must be positive");
  if (rows > static_cast<long long>(max_matrix_market_dimension) ||
      cols > static_cast<long long>(max_matrix_market_dimension)) {
    throw ParseError(lineno, "dimension exceeds " + std::to_string(max_matrix_market_dimension));
  }
  if (symmetric && rows != cols) throw ParseError(lineno, "symmetric matrix must be square");
  const auto nr = static_cast<std::size_t>(rows);
  const auto nc = static_cast<std::size_t>(cols);
  std::vector<double> d(nr * nc, 0.0);

  auto read_value = [&](std::istringstream& s) {
    double v = 0.0;
    if (!(s >> v)) throw ParseError(lineno, "malformed value");
    if (!std::isfinite(v)) throw ParseError(lineno, "non-finite value");
    return v;
  };

  if (coordinate) {
    if (nnz < 0) throw ParseError(lineno, "negative entry count");
    for (long long e = 0; e < nnz; ++e) {
      if (!detail::next_data_line(in, line, lineno)) throw ParseError(lineno, "unexpected end of file");
      std::istringstream es(line);
      long long i = 0, j = 0;
      if (!(es >> i >> j)) throw ParseError(lineno, "malformed coordinate entry");
      if (i < 1 || j < 1 || i > rows || j > cols) throw ParseError(lineno, "index out of range");
      const double v = read_value(es);
      const auto ii = static_cast<std::size_t>(i - 1);
      const auto jj = static_cast<std::size_t>(j - 1);
      d[ii * nc + jj] += v;
      if (symmetric && ii != jj) d[jj * nc + ii] += v;
    }
  } else {
    for (std::size_t j = 0; j < nc; ++j) {
      for (std::size_t i = symmetric ? j : 0; i < nr; ++i) {
        if (!detail::next_data_line(in, line, lineno)) throw ParseError(lineno, "unexpected end of file");
        std::istringstream es(line);
        const double v = read_value(es);
        d[i * nc + j] = v;
        if (symmetric) d[j * nc + i] = v;
      }
    }
  }
  return DenseMatrix(nr, nc, std::move(d));
}

inline DenseMatrix read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return parse_matrix_market(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.message());
  }
}

/// Reads an N x 1 (or 1 x N) Matrix Market file as a vector.
inline RealVector read_vector_market(const std::filesystem::path& path) {
  const DenseMatrix m = read_matrix_market(path);
  if (m.cols() != 1 && m.rows() != 1) throw ParseError(2, path.string() + ": not a vector");
  return RealVector(std::vector<double>(m.row_major().begin(), m.row_major().end()));
}

inline void write_matrix_market(std::ostream& out, const DenseMatrix& m) {
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) out << format_double(m(i, j)) << '\n';
}

inline void write_matrix_market(const std::filesystem::path& path, const DenseMatrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_matrix_market(out, m);
  if (!out) throw IoError("write failed for " + path.string());
}

inline void write_vector_market(const std::filesystem::path& path, const RealVector& v) {
  write_matrix_market(path, DenseMatrix(v.size(), 1, v.std_vector()));
}

/// Serializable view of a trace.
struct TraceExport {
  struct Metadata {
    std::string method;
    std::size_t dimension = 0;
    std::optional<std::size_t> grade;
    std::optional<std::size_t> anderson_index;
    std::optional<std::size_t> stagnation_index;
    std::string termination;
    double residual_tol = 0.0;
    double dep_tol = 0.0;
    double rank_tol = 0.0;
  };
  struct Row {
    std::size_t n = 0;
    double residual_norm = 0.0;
    std::optional<double> beta;
    std::optional<double> alpha_last;
    bool stagnated = false;
  };
  Metadata metadata;
  std::vector<Row> rows;
};

/// One row per iterate. `beta` and `alpha_last` are the quantities of step n
/// (producing x_{n+1}); `stagnated` flags x_n = x_{n-1} at dep_tol.
inline TraceExport make_trace_export(const SolverTrace& t, const SolveConfig& cfg,
                                     std::optional<std::size_t> grade = {},
                                     std::optional<std::size_t> anderson_index = {},
                                     std::optional<std::size_t> stagnation_index = {}) {
  TraceExport e;
  e.metadata.method = std::string(to_string(t.method));
  e.metadata.dimension = t.iterates.front().size();
  e.metadata.grade = grade;
  e.metadata.anderson_index = anderson_index;
  e.metadata.stagnation_index = stagnation_index;
  e.metadata.termination = std::string(to_string(t.termination));
  e.metadata.residual_tol = cfg.residual_tol;
  e.metadata.dep_tol = cfg.dep_tol;
  e.metadata.rank_tol = cfg.rank_tol;
  for (std::size_t n = 0; n < t.iterates.size(); ++n) {
    TraceExport::Row r;
    r.n = n;
    r.residual_norm = t.residual_norms[n];
    if (n < t.betas.size()) r.beta = t.betas[n];
    if (n < t.alphas.size()) r.alpha_last = t.alpha_last(n);
    r.stagnated = n > 0 && detail::same_iterate(t.iterates[n], t.iterates[n - 1], cfg.dep_tol);
    e.rows.push_back(r);
  }
  return e;
}

inline constexpr const char* trace_csv_header = "n,residual_norm,beta,alpha_last,stagnated";

inline void write_trace_csv(std::ostream& out, const TraceExport& e) {
  out << trace_csv_header << '\n';
  for (const auto& r : e.rows) {
    out << r.n << ',' << format_double(r.residual_norm) << ',';
    if (r.beta) out << format_double(*r.beta);
    out << ',';
    if (r.alpha_last) out << format_double(*r.alpha_last);
    out << ',' << (r.stagnated ? 1 : 0) << '\n';
  }
}

/// JSON document with a metadata object and a rows array. Numbers are written
/// with 17 significant digits like the CSV form; nlohmann is used only to
/// quote strings.
inline void write_trace_json(std::ostream& out, const TraceExport& e) {
  auto str = [](const std::string& s) { return nlohmann::json(s).dump(); };
  auto opt_size = [](const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : std::string("null"); };
  auto opt_real = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("null"); };
  const auto& m = e.metadata;
  out << "{\n  \"metadata\": {\n";
  out << "    \"method\": " << str(m.method) << ",\n";
  out << "    \"N\": " << m.dimension << ",\n";
  out << "    \"nu\": " << opt_size(m.grade) << ",\n";
  out << "    \"kappa_A\": " << opt_size(m.anderson_index) << ",\n";
  out << "    \"eta_G\": " << opt_size(m.stagnation_index) << ",\n";
  out << "    \"termination\": " << str(m.termination) << ",\n";
  out << "    \"tolerances\": {\"residual_tol\": " << format_double(m.residual_tol)
      << ", \"dep_tol\": " << format_double(m.dep_tol) << ", \"rank_tol\": " << format_double(m.rank_tol) << "}\n";
  out << "  },\n  \"rows\": [";
  for (std::size_t i = 0; i < e.rows.size(); ++i) {
    const auto& r = e.rows[i];
    out << (i == 0 ? "\n" : ",\n") << "    {\"n\": " << r.n << ", \"residual_norm\": " << format_double(r.residual_norm)
        << ", \"beta\": " << opt_real(r.beta) << ", \"alpha_last\": " << opt_real(r.alpha_last)
        << ", \"stagnated\": " << (r.stagnated ? "true" : "false") << "}";
  }
  out << (e.rows.empty() ? "]\n}\n" : "\n  ]\n}\n");
}

inline TraceExport trace_from_json(const nlohmann::json& doc) {
  TraceExport e;
  try {
    const auto& m = doc.at("metadata");
    auto opt_size = [](const nlohmann::json& v) -> std::optional<std::size_t> {
      if (v.is_null()) return std::nullopt;
      return v.get<std::size_t>();
    };
    e.metadata.method = m.at("method").get<std::string>();
    e.metadata.dimension = m.at("N").get<std::size_t>();
    e.metadata.grade = opt_size(m.at("nu"));
    e.metadata.anderson_index = opt_size(m.at("kappa_A"));
    e.metadata.stagnation_index = opt_size(m.at("eta_G"));
    e.metadata.termination = m.at("termination").get<std::string>();
    e.metadata.residual_tol = m.at("tolerances").at("residual_tol").get<double>();
    e.metadata.dep_tol = m.at("tolerances").at("dep_tol").get<double>();
    e.metadata.rank_tol = m.at("tolerances").at("rank_tol").get<double>();
    for (const auto& r : doc.at("rows")) {
      TraceExport::Row row;
      row.n = r.at("n").get<std::size_t>();
      row.residual_norm = r.at("residual_norm").get<double>();
      if (!r.at("beta").is_null()) row.beta = r.at("beta").get<double>();
      if (!r.at("alpha_last").is_null()) row.alpha_last = r.at("alpha_last").get<double>();
      row.stagnated = r.at("stagnated").get<bool>();
      e.rows.push_back(row);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(0, std::string("trace json: ") + ex.what());
  }
  return e;
}

enum class TraceFormat { csv, json };

inline void export_trace(const TraceExport& e, TraceFormat format, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  if (format == TraceFormat::csv) {
    write_trace_csv(out, e);
  } else {
    write_trace_json(out, e);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

inline TraceExport import_trace_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& ex) {
    throw ParseError(0, path.string() + ": " + ex.what());
  }
  return trace_from_json(doc);
}

}  // namespace andersonkit

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "andersonkit/generators.hpp"
#include "andersonkit/io.hpp"

using namespace andersonkit;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("andersonkit_io_" + std::to_string(counter_++) + "_" +
                                         std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DenseMatrix parse(const std::string& text) {
  std::istringstream in(text);
  return parse_matrix_market(in);
}

std::size_t parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no ParseError for:\n" << text;
  return 0;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST(MatrixMarket, ArrayIdentity) {
  const DenseMatrix m = parse("%%MatrixMarket matrix array real general\n2 2\n1\n0\n0\n1\n");
  EXPECT_EQ(m.row_major().size(), 4u);
  EXPECT_EQ(m(0, 0), 1.0);
  EXPECT_EQ(m(1, 1), 1.0);
  EXPECT_EQ(m(0, 1), 0.0);
  EXPECT_EQ(m(1, 0), 0.0);
}

TEST(MatrixMarket, ArrayIsColumnMajor) {
  const DenseMatrix m = parse("%%MatrixMarket matrix array real general\n% comment\n2 2\n1\n2\n3\n4\n");
  EXPECT_EQ(m(1, 0), 2.0);
  EXPECT_EQ(m(0, 1), 3.0);
}

TEST(MatrixMarket, CoordinateDuplicatesAccumulate) {
  const DenseMatrix m = parse("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 0.5\n1 1 0.5\n2 1 -3\n");
  EXPECT_EQ(m(0, 0), 1.0);
  EXPECT_EQ(m(1, 0), -3.0);
  EXPECT_EQ(m(0, 1), 0.0);
}

TEST(MatrixMarket, SymmetricMirrors) {
  const DenseMatrix c = parse("%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n2 1 7\n3 3 1\n");
  EXPECT_EQ(c(0, 1), 7.0);
  EXPECT_EQ(c(1, 0), 7.0);
  EXPECT_EQ(c(2, 2), 1.0);
  const DenseMatrix a = parse("%%MatrixMarket matrix array real symmetric\n2 2\n1\n5\n2\n");
  EXPECT_EQ(a(1, 0), 5.0);
  EXPECT_EQ(a(0, 1), 5.0);
  EXPECT_EQ(a(1, 1), 2.0);
}

TEST(MatrixMarket, ErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix array complex general\n1 1\n1\n"), 1u);
  EXPECT_EQ(parse_error_line("%MatrixMarket matrix array real general\n1 1\n1\n"), 1u);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix array real general\n% c\n2 x\n"), 3u);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix array real general\n2 2\n1\n0\nabc\n1\n"), 5u);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n"), 3u);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix array real general\n10001 1\n"), 2u);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n"), 3u);
}

TEST(MatrixMarket, RoundTripExact) {
  Rng rng(5);
  const DenseMatrix m = rng.gaussian_matrix(5, 5);
  TempDir dir;
  write_matrix_market(dir.path() / "m.mtx", m);
  const DenseMatrix back = read_matrix_market(dir.path() / "m.mtx");
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(back(i, j), m(i, j));
}

TEST(MatrixMarket, VectorRoundTrip) {
  TempDir dir;
  const RealVector v{1.0 / 3.0, -2.5e-300, 7.0};
  write_vector_market(dir.path() / "v.mtx", v);
  EXPECT_EQ(read_vector_market(dir.path() / "v.mtx"), v);
}

TEST(MatrixMarket, MissingFileIsIoError) {
  EXPECT_THROW(read_matrix_market("/nonexistent/dir/A.mtx"), IoError);
  EXPECT_THROW(write_matrix_market(fs::path("/nonexistent/dir/A.mtx"), DenseMatrix::identity(2)), IoError);
}

TEST(Generators, Examples) {
  const LinearProblem c = generate_problem("cycle", {{"N", "5"}, {"k", "2"}}, 0);
  EXPECT_EQ(c.r0(), RealVector::unit(5, 1));
  EXPECT_EQ(c.a()(1, 0), 1.0);
  EXPECT_EQ(c.a()(0, 4), 1.0);

  const LinearProblem d = generate_problem("diag", {{"values", "-1;-2;-3"}}, 0);
  EXPECT_DOUBLE_EQ(d.exact_solution()[0], 1.0);
  EXPECT_DOUBLE_EQ(d.exact_solution()[1], 0.5);
  EXPECT_DOUBLE_EQ(d.exact_solution()[2], 1.0 / 3.0);
}

TEST(Generators, RandomDenseConditionNumber) {
  const LinearProblem p = generate_problem("random_dense", {{"N", "10"}, {"cond", "1e3"}}, 42);
  // Power iteration on A^T A for the largest singular value and on (A^T A)^{-1}
  // through the direct solver for the smallest.
  const DenseMatrix ata = matmul(p.a().transpose(), p.a());
  RealVector v = RealVector::zeros(10) + RealVector::unit(10, 0) + 0.5 * RealVector::unit(10, 3);
  RealVector w = v;
  for (int it = 0; it < 500; ++it) {
    v = (1.0 / norm2(v)) * matvec(ata, v);
    w = (1.0 / norm2(w)) * lu_solve(ata, w, 1e-14);
  }
  const double smax2 = norm2(matvec(ata, (1.0 / norm2(v)) * v));
  const double smin2 = 1.0 / norm2(lu_solve(ata, (1.0 / norm2(w)) * w, 1e-14));
  const double cond = std::sqrt(smax2 / smin2);
  EXPECT_GT(cond, 500.0);
  EXPECT_LT(cond, 2000.0);
}

TEST(Generators, InvalidParameters) {
  EXPECT_THROW(generate_problem("shifted_spd", {{"N", "4"}, {"lmin", "-1"}, {"lmax", "2"}}, 0), GeneratorError);
  EXPECT_THROW(generate_problem("cycle", {{"N", "0"}}, 0), GeneratorError);
  EXPECT_THROW(generate_problem("nope", {}, 0), GeneratorError);
}

TEST(TraceExport, SingleIterate) {
  const LinearProblem base = random_dense_problem(3, 10.0, 1);
  const LinearProblem p = make_problem(base.a(), base.b(), base.exact_solution());
  std::ostringstream out;
  write_trace_csv(out, make_trace_export(gmres_run(p), SolveConfig{}));
  const auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "n,residual_norm,beta,alpha_last,stagnated");
}

TEST(TraceExport, CycleGmresCsv) {
  const SolverTrace t = gmres_run(cycle_problem(20, 1));
  std::ostringstream out;
  write_trace_csv(out, make_trace_export(t, SolveConfig{}));
  const auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 22u);
  EXPECT_EQ(lines[0], trace_csv_header);
  for (std::size_t n = 0; n <= 20; ++n) {
    std::istringstream row(lines[n + 1]);
    std::string idx, norm;
    std::getline(row, idx, ',');
    std::getline(row, norm, ',');
    EXPECT_EQ(std::stoul(idx), n);
    if (n < 20) {
      EXPECT_NEAR(std::stod(norm), 1.0, 1e-12);
    } else {
      EXPECT_LE(std::stod(norm), 1e-10);
    }
  }
}

TEST(TraceExport, JsonRoundTrip) {
  const LinearProblem p = random_dense_problem(6, 100.0, 9);
  const SolverTrace t = anderson_run(p, MixingSchedule::constant(0.7), std::nullopt);
  const TraceExport e = make_trace_export(t, SolveConfig{}, std::size_t{6}, std::size_t{6}, std::nullopt);
  TempDir dir;
  export_trace(e, TraceFormat::json, dir.path() / "t.json");
  const TraceExport back = import_trace_json(dir.path() / "t.json");
  EXPECT_EQ(back.metadata.method, "anderson");
  EXPECT_EQ(back.metadata.dimension, 6u);
  EXPECT_EQ(back.metadata.grade, std::size_t{6});
  EXPECT_FALSE(back.metadata.stagnation_index.has_value());
  ASSERT_EQ(back.rows.size(), t.residual_norms.size());
  for (std::size_t n = 0; n < back.rows.size(); ++n) {
    EXPECT_EQ(back.rows[n].residual_norm, t.residual_norms[n]);
    EXPECT_EQ(back.rows[n].beta, e.rows[n].beta);
    EXPECT_EQ(back.rows[n].alpha_last, e.rows[n].alpha_last);
  }
}

TEST(TraceExport, DeterministicBytes) {
  const LinearProblem p = random_dense_problem(7, 10.0, 3);
  TempDir dir;
  for (const char* name : {"a.csv", "b.csv"}) {
    const SolverTrace t = anderson_run(p, MixingSchedule::constant(1.0), std::nullopt);
    export_trace(make_trace_export(t, SolveConfig{}), TraceFormat::csv, dir.path() / name);
  }
  EXPECT_EQ(slurp(dir.path() / "a.csv"), slurp(dir.path() / "b.csv"));
}

TEST(TraceExport, UnwritablePath) {
  const TraceExport e = make_trace_export(gmres_run(cycle_problem(3, 1)), SolveConfig{});
  EXPECT_THROW(export_trace(e, TraceFormat::csv, "/nonexistent/dir/t.csv"), IoError);
}

TEST(TraceExport, MalformedJson) {
  TempDir dir;
  std::ofstream(dir.path() / "bad.json") << "{\"metadata\": 3";
  EXPECT_THROW(import_trace_json(dir.path() / "bad.json"), ParseError);
}

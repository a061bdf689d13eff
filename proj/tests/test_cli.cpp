#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "andersonkit/cli.hpp"

using namespace andersonkit;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "andersonkit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("andersonkit_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(ProblemSpecParse, GeneratorAndParams) {
  const ProblemSpec s = parse_problem_spec("cycle:N=6,k=1");
  EXPECT_EQ(s.name, "cycle");
  EXPECT_EQ(s.params.at("N"), "6");
  EXPECT_EQ(s.params.at("k"), "1");
  EXPECT_EQ(parse_problem_spec("cycle").name, "cycle");
  EXPECT_THROW(parse_problem_spec("cycle:N"), UsageError);
  EXPECT_THROW(parse_problem_spec("not-a-thing"), UsageError);
}

TEST(Cli, DiagnoseCycle) {
  const CliResult r = run({"diagnose", "--problem", "cycle:N=6,k=1"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "nu=6 kappa_A=1 eta_G=0 case=ii");
}

TEST(Cli, SolveGmresScalar) {
  const CliResult r = run({"solve", "--method", "gmres", "--problem", "diag:values=-1"});
  EXPECT_EQ(r.code, exit_code::ok);
  EXPECT_NE(r.out.find("iterations=1 "), std::string::npos) << r.out;
}

TEST(Cli, SolveExitCodes) {
  EXPECT_EQ(run({"solve", "--method", "anderson", "--problem", "cycle:N=5,k=1"}).code, exit_code::stagnated);
  EXPECT_EQ(run({"solve", "--method", "opt-anderson", "--problem", "cycle:N=5,k=1"}).code, exit_code::stagnated);
  EXPECT_EQ(run({"solve", "--method", "fixed", "--problem", "diag:values=1", "--max-iter", "5"}).code,
            exit_code::not_converged);
  EXPECT_EQ(run({"solve", "--method", "fixed", "--problem", "diag:values=1"}).code, exit_code::not_converged);
  EXPECT_EQ(run({"solve", "--method", "anderson", "--problem", "shifted_spd:N=20,lmin=-10,lmax=-1", "--window", "3",
                 "--beta", "0.1", "--tol", "1e-8"})
                .code,
            exit_code::ok);
}

TEST(Cli, VerifyAllPass) {
  const CliResult r = run({"verify", "--problem", "random_dense:N=8,cond=100", "--suite", "all", "--seed", "7"});
  EXPECT_EQ(r.code, exit_code::ok) << r.out;
  EXPECT_NE(r.out.find("all relations PASS"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, VerifyFailureExitCode) {
  // An absurd tolerance turns the strict-decrease margins into failures.
  const CliResult r = run({"verify", "--problem", "random_dense:N=6", "--suite", "structure", "--tol", "10"});
  EXPECT_EQ(r.code, exit_code::verify_failed);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({"solve", "--bogus"}).code, exit_code::usage);
  EXPECT_EQ(run({}).code, exit_code::usage);
  EXPECT_EQ(run({"solve", "--method", "nope", "--problem", "cycle:N=3"}).code, exit_code::usage);
  EXPECT_EQ(run({"solve", "--method", "anderson", "--problem", "cycle:N=3", "--beta", "1", "--betas", "1,2"}).code,
            exit_code::usage);
  EXPECT_EQ(run({"verify", "--problem", "cycle:N=3", "--suite", "weird"}).code, exit_code::usage);
  EXPECT_EQ(run({"--help"}).code, exit_code::ok);
}

TEST(Cli, DataAndIoErrors) {
  EXPECT_EQ(run({"diagnose", "--problem", "cycle:N=0"}).code, exit_code::data);
  EXPECT_EQ(run({"diagnose", "--problem", "mm:A=/nonexistent/A.mtx,b=1"}).code, exit_code::io);
  const fs::path dir = scratch("bad");
  fs::create_directories(dir);
  std::ofstream(dir / "A.mtx") << "%%MatrixMarket matrix array real general\n2 2\n1\nx\n";
  std::ofstream(dir / "b.mtx") << "%%MatrixMarket matrix array real general\n2 1\n1\n1\n";
  const CliResult r = run({"diagnose", "--problem", dir.string()});
  EXPECT_EQ(r.code, exit_code::data);
  EXPECT_NE(r.err.find("line 4"), std::string::npos) << r.err;
  EXPECT_EQ(run({"solve", "--method", "gmres", "--problem", "cycle:N=3", "--out", "/nonexistent/dir/t.csv"}).code,
            exit_code::io);
  fs::remove_all(dir);
}

TEST(Cli, GenerateRoundTrip) {
  const fs::path dir = scratch("gen");
  const CliResult r = run({"generate", "--name", "random_dense", "--params", "N=7,cond=50", "--seed", "11", "--out",
                           dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const LinearProblem orig = generate_problem("random_dense", {{"N", "7"}, {"cond", "50"}}, 11);
  const DenseMatrix a = read_matrix_market(dir / "A.mtx");
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(a(i, j), orig.a()(i, j));
  EXPECT_EQ(read_vector_market(dir / "b.mtx"), orig.b());
  // The directory form of --problem reproduces the generated problem.
  const CliResult d1 = run({"diagnose", "--problem", dir.string()});
  const CliResult d2 = run({"diagnose", "--problem", "random_dense:N=7,cond=50", "--seed", "11"});
  EXPECT_EQ(d1.out, d2.out);
  fs::remove_all(dir);
}

TEST(Cli, CsvExportIsDeterministic) {
  const fs::path dir = scratch("det");
  fs::create_directories(dir);
  for (const char* name : {"a.csv", "b.csv"}) {
    const CliResult r = run({"solve", "--method", "anderson", "--problem", "random_dense:N=9,cond=100", "--seed", "4",
                             "--x0", "random:3", "--out", (dir / name).string()});
    EXPECT_EQ(r.code, exit_code::ok);
  }
  const std::string a = slurp(dir / "a.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir / "b.csv"));
  EXPECT_EQ(a.substr(0, a.find('\n')), "n,residual_norm,beta,alpha_last,stagnated");
  fs::remove_all(dir);
}

TEST(Cli, JsonExport) {
  const fs::path dir = scratch("json");
  fs::create_directories(dir);
  const CliResult r = run({"solve", "--method", "gmres", "--problem", "cycle:N=4,k=2", "--out",
                           (dir / "t.json").string(), "--format", "json"});
  EXPECT_EQ(r.code, exit_code::ok);
  const TraceExport e = import_trace_json(dir / "t.json");
  EXPECT_EQ(e.metadata.method, "gmres");
  EXPECT_EQ(e.rows.size(), 5u);
  fs::remove_all(dir);
}

TEST(Cli, ExecutableRuns) {
  const std::string cmd = std::string(ANDERSONKIT_CLI_PATH) + " diagnose --problem cycle:N=6,k=1";
  FILE* pipe = popen(cmd.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  char buf[256] = {};
  std::string first = fgets(buf, sizeof buf, pipe) ? buf : "";
  const int status = pclose(pipe);
  EXPECT_EQ(first, "nu=6 kappa_A=1 eta_G=0 case=ii\n");
  EXPECT_EQ(WEXITSTATUS(status), 0);
}

#include "flexqp/io.hpp"
#include "flexqp/probgen.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

using namespace flexqp;
using namespace flexqp::test;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "flexqp_cli_stdout.txt";
  const std::string cmd = std::string("\"") + FLEXQP_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  CliRun r{WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, read_file(log.string())};
  return r;
}

fs::path scratch(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() / ("flexqp_cli_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    if (std::string(FLEXQP_CLI).empty()) GTEST_SKIP() << "command-line tool not built";
  }
};

TEST_F(Cli, GenerateWritesProblemsAndManifest) {
  const fs::path dir = scratch("gen");
  const CliRun r = run_cli("generate huber 5 --seed 0 -o " + (dir / "a").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const Manifest m = load_manifest((dir / "a" / "manifest.json").string());
  ASSERT_EQ(m.problems.size(), 5u);
  for (const ManifestEntry& e : m.problems) {
    EXPECT_TRUE(fs::exists(e.file));
    EXPECT_EQ(e.dims, (Dims{310, 200, 100}));
  }

  ASSERT_EQ(run_cli("generate huber 5 --seed 0 -o " + (dir / "b").string()).code, 0);
  EXPECT_FALSE(read_file((dir / "a" / "huber_0.json").string()).empty());
  for (int i = 0; i < 5; ++i) {
    const std::string name = "huber_" + std::to_string(i) + ".json";
    EXPECT_EQ(read_file((dir / "a" / name).string()), read_file((dir / "b" / name).string())) << name;
  }

  ASSERT_EQ(run_cli("generate portfolio 1 --seed 3 -o " + (dir / "c").string()).code, 0);
  const Manifest pm = load_manifest((dir / "c" / "manifest.json").string());
  EXPECT_EQ(pm.problems[0].dims, (Dims{275, 250, 26}));

  ASSERT_EQ(run_cli("generate random_qp 2 --seed 1 --scale n=6 --scale m=4 -o " + (dir / "d").string()).code, 0);
  EXPECT_EQ(load_manifest((dir / "d" / "manifest.json").string()).problems[0].dims, (Dims{6, 4, 0}));

  EXPECT_EQ(run_cli("generate nonsense 1 -o " + (dir / "e").string()).code, 1);
  fs::remove_all(dir);
}

TEST_F(Cli, SolveReportsStatusThroughTheExitCode) {
  const fs::path dir = scratch("solve");
  const QpProblem ok = random_qp(0, 10, 8, 2);
  save_problem(ok, (dir / "ok.json").string());
  CliRun r = run_cli("solve " + (dir / "ok.json").string() + " -o " + (dir / "ok_sol.json").string() +
                     " --trace " + (dir / "trace.jsonl").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const json sol = json::parse(read_file((dir / "ok_sol.json").string()));
  EXPECT_EQ(sol.at("status"), "Solved");
  EXPECT_LE(sol.at("qp_residual_inf").get<double>(), 1e-3);
  EXPECT_TRUE(sol.at("violated_inequalities").empty());
  EXPECT_FALSE(read_file((dir / "trace.jsonl").string()).empty());

  // x <= 0 and x >= 1
  Mat G(2, 1);
  G << 1.0, -1.0;
  Vec h(2);
  h << 0.0, -1.0;
  save_problem(dense_qp(Mat::Identity(1, 1), Vec::Zero(1), G, h, empty_rows(1), Vec(0)),
               (dir / "bad.json").string());
  r = run_cli("solve " + (dir / "bad.json").string() + " -o " + (dir / "bad_sol.json").string());
  EXPECT_EQ(r.code, 2) << r.out;
  const json bad = json::parse(read_file((dir / "bad_sol.json").string()));
  EXPECT_EQ(bad.at("status"), "SolvedInfeasibleOriginal");
  EXPECT_FALSE(bad.at("violated_inequalities").empty());

  r = run_cli("solve " + (dir / "ok.json").string() + " --max-iter 2 --policy fixed");
  EXPECT_EQ(r.code, 3) << r.out;

  r = run_cli("solve " + (dir / "ok.json").string() + " --policy learned");
  EXPECT_EQ(r.code, 1);
  r = run_cli("solve " + (dir / "missing.json").string());
  EXPECT_EQ(r.code, 1);
  fs::remove_all(dir);
}

TEST_F(Cli, LearnedPolicyWithWeights) {
  const fs::path dir = scratch("learned");
  save_problem(random_qp(1, 8, 6, 2), (dir / "p.json").string());
  const std::string weights = std::string(FLEXQP_TEST_DATA) + "/weights_mlp.json";
  const CliRun r = run_cli("solve " + (dir / "p.json").string() + " --policy learned --weights " + weights +
                           " --max-iter 50 -o " + (dir / "s.json").string());
  EXPECT_TRUE(r.code == 0 || r.code == 2 || r.code == 3) << r.out;
  EXPECT_TRUE(fs::exists(dir / "s.json"));
  fs::remove_all(dir);
}

TEST_F(Cli, BenchWritesCsvAndSummary) {
  const fs::path dir = scratch("bench");
  ASSERT_EQ(run_cli("generate random_qp 3 --seed 0 --scale n=6 --scale m=4 -o " + dir.string()).code, 0);
  const CliRun r = run_cli("bench " + (dir / "manifest.json").string() + " -o " + (dir / "summary.json").string() +
                           " --csv " + (dir / "records.csv").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string csv = read_file((dir / "records.csv").string());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 2);
  EXPECT_NO_THROW(json::parse(read_file((dir / "summary.json").string())));
  fs::remove_all(dir);
}

TEST_F(Cli, CertifyArithmetic) {
  const fs::path dir = scratch("cert");
  write_file((dir / "losses.json").string(), "{\"mean_loss\": 0.3, \"N\": 100, \"M\": 1}");
  CliRun r = run_cli("certify " + (dir / "losses.json").string() + " --c 0 -o " + (dir / "b.json").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(json::parse(read_file((dir / "b.json").string())).at("bound").get<double>(), 0.3, 1e-9);

  write_file((dir / "grid.json").string(), "[[0.0, 0.5], [0.5, 1.0]]");
  r = run_cli("certify " + (dir / "grid.json").string() + " --kl 0.1 -o " + (dir / "g.json").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const json g = json::parse(read_file((dir / "g.json").string()));
  EXPECT_DOUBLE_EQ(g.at("sample_loss").get<double>(), 0.5);
  EXPECT_EQ(g.at("N"), 2);
  EXPECT_EQ(g.at("M"), 2);
  EXPECT_GE(g.at("bound").get<double>(), 0.5);
  EXPECT_LE(g.at("bound").get<double>(), 1.0);
  fs::remove_all(dir);
}

TEST_F(Cli, TaskAndSqp) {
  const fs::path dir = scratch("sqp");
  ASSERT_EQ(run_cli("task safety_filter --seed 2 -o " + (dir / "t.json").string()).code, 0);
  const CliRun r = run_cli("sqp " + (dir / "t.json").string() + " -o " + (dir / "r.json").string());
  EXPECT_TRUE(r.code == 0 || r.code == 3) << r.out;
  const json res = json::parse(read_file((dir / "r.json").string()));
  EXPECT_TRUE(res.contains("status"));
  EXPECT_EQ(run_cli("task unicycle -o " + (dir / "u.json").string()).code, 1);
  fs::remove_all(dir);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run_cli("").code, 1);
  EXPECT_EQ(run_cli("solve").code, 1);
  EXPECT_EQ(run_cli("solve x.json --eps -1").code, 1);
  EXPECT_EQ(run_cli("--help").code, 0);
}

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"
#include "indscale/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "indscale");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = indscale::cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("indscale_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const std::string kData = INDSCALE_DATA_DIR;

}  // namespace

TEST(Cli, TheoryPrintsDiscrepancyAndOptimum) {
  const auto dir = fresh_dir("theory");
  const auto r = run({"theory", "--pair", "gaussian:1.2", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("I = 0.0672"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("optimal k = 42"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("predicted acceptance = 0.23"), std::string::npos) << r.out;
  const auto curve = slurp(dir / "theory_curve.csv");
  EXPECT_EQ(curve.rfind("acceptance,normalized_efficiency\n", 0), 0u);
  const auto manifest = slurp(dir / "manifest.txt");
  EXPECT_NE(manifest.find("pair = gaussian:1.2"), std::string::npos);
  EXPECT_NE(manifest.find("seed = 1"), std::string::npos);
}

TEST(Cli, ProductCauchyProposalOptimum) {
  const auto dir = fresh_dir("product");
  const auto r = run({"product", "--pair", "t:1", "--scale", "desk", "--grid", "1,2,3,4,5,6,7,8,9,10", "--iters",
                      "30000", "--replicates", "1", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t found = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().rfind("tuning_", 0) == 0) {
      const auto table = indscale::read_tuning_csv(e.path());
      EXPECT_GE(table.best().k, 2u);
      EXPECT_LE(table.best().k, 4u);
      ++found;
    }
  EXPECT_EQ(found, 1u);
}

TEST(Cli, MissingSirDataIsUsageError) {
  const auto r = run({"sir", "--data", "/definitely/not/here.txt", "--out", fresh_dir("sir_missing").string()});
  EXPECT_EQ(r.code, indscale::cli::kExitUsage);
  EXPECT_NE(r.err.find("/definitely/not/here.txt"), std::string::npos) << r.err;
}

TEST(Cli, ConfigFileAndOverrides) {
  const auto dir = fresh_dir("config");
  fs::create_directories(dir);
  std::ofstream(dir / "run.cfg") << "# theory settings\npair = gaussian:2\nn = 10\n";
  const auto r = run({"theory", "--config", (dir / "run.cfg").string(), "--n", "2", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("optimal k = 2"), std::string::npos) << r.out;
  EXPECT_NE(slurp(dir / "manifest.txt").find("n = 2"), std::string::npos);

  std::ofstream(dir / "bad.cfg") << "pair = gaussian:2\nlambda = 3\n";
  const auto bad = run({"theory", "--config", (dir / "bad.cfg").string(), "--out", dir.string()});
  EXPECT_EQ(bad.code, indscale::cli::kExitUsage);
  EXPECT_NE(bad.err.find("lambda"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, indscale::cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, indscale::cli::kExitUsage);
  EXPECT_EQ(run({"theory", "--pair", "gaussian:1.2", "--n", "many"}).code, indscale::cli::kExitUsage);
  EXPECT_EQ(run({"theory", "--pair", "gaussian:1.2", "--scale", "huge"}).code, indscale::cli::kExitUsage);
  EXPECT_EQ(run({"theory"}).code, indscale::cli::kExitUsage);
  EXPECT_EQ(run({"theory", "--pair", "gaussian:0.5", "--out", fresh_dir("bad_pair").string()}).code,
            indscale::cli::kExitRuntime);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  const auto dir = fresh_dir("env");
  ::setenv("INDSCALE_OUT_DIR", dir.string().c_str(), 1);
  const auto r = run({"theory", "--pair", "t:5", "--mc", "20000"});
  ::unsetenv("INDSCALE_OUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "theory_curve.csv"));
}

TEST(Cli, IdenticalRunsGiveIdenticalFiles) {
  const auto a = fresh_dir("repro_a"), b = fresh_dir("repro_b");
  for (const auto& dir : {a, b}) {
    const auto r = run({"jumplim", "--pair", "gaussian:1.5", "--n", "100", "--k", "4", "--horizon", "50", "--probes",
                        "3", "--probe_samples", "500", "--seed", "9", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(a / "jumplim.csv"), slurp(b / "jumplim.csv"));
  const auto ma = slurp(a / "manifest.txt"), mb = slurp(b / "manifest.txt");
  EXPECT_EQ(ma.substr(0, ma.find("out = ")), mb.substr(0, mb.find("out = ")));
}

TEST(Cli, SirSingleRunWritesTrace) {
  const auto dir = fresh_dir("sir");
  const auto r = run({"sir", "--data", kData + "/abakaliki_removals.txt", "--alpha", "unknown", "--k", "10",
                      "--iters", "3000", "--burnin", "500", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "sir_trace.csv").rfind("iteration,beta,delta,alpha\n", 0), 0u);
  EXPECT_EQ(indscale::read_tuning_csv(dir / "sir_tuning.csv").rows.size(), 1u);
  EXPECT_EQ(run({"sir", "--data", kData + "/abakaliki_removals.txt", "--k", "31"}).code, indscale::cli::kExitUsage);
}

TEST(Cli, BdmSmallSweep) {
  const auto dir = fresh_dir("bdm");
  const auto r = run({"bdm", "--ntarget", "150", "--sample", "40", "--nlatent", "2000", "--k", "20,200", "--iters",
                      "600", "--burnin", "100", "--nrep", "5", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(indscale::read_tuning_csv(dir / "bdm_tuning.csv").rows.size(), 2u);
  const auto ess = slurp(dir / "bdm_ess.csv");
  EXPECT_NE(ess.find("k=200:d"), std::string::npos) << ess;
  const auto table1 = run({"bdm", "--data", kData + "/table1_clusters.txt", "--ntarget", "100", "--out", dir.string()});
  EXPECT_EQ(table1.code, indscale::cli::kExitUsage);
  EXPECT_NE(table1.err.find("473"), std::string::npos) << table1.err;
}

#include "cli.hpp"

#include "sensitest/path_io.hpp"
#include "sensitest/serialize.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sensitest;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / (std::to_string(::getpid()) + "_" + name)).string();
}

}  // namespace

TEST(Cli, HelpExitsZero) {
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
  EXPECT_EQ(run({"verify", "sdqm", "--help"}).code, cli::kExitOk);
}

TEST(Cli, MissingSubcommandOrSeedIsUsageError) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"simulate", "--n", "10"}).code, cli::kExitUsage);
}

TEST(Cli, SimulateIsReproducible) {
  const auto a = run({"simulate", "--design", "bruceton", "--x1", "0", "--d", "0.5", "--n", "40", "--seed", "9"});
  const auto b = run({"simulate", "--design", "bruceton", "--x1", "0", "--d", "0.5", "--n", "40", "--seed", "9"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  std::istringstream in(a.out);
  const auto path = read_path_csv(in);
  EXPECT_EQ(path.size(), 40u);
  EXPECT_TRUE(replays_exactly(path));
  EXPECT_NE(a.err.find("final_level="), std::string::npos);
}

TEST(Cli, ForeignDesignFlagIsRejected) {
  const auto r = run({"simulate", "--design", "bruceton", "--eps", "0.1", "--seed", "1"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("--eps"), std::string::npos);
  EXPECT_EQ(run({"simulate", "--design", "langlie", "--d", "1", "--seed", "1"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"verify", "lan", "--design", "langlie", "--x1", "1", "--seed", "1"}).code, cli::kExitUsage);
}

TEST(Cli, InvalidRuleIsUsageError) {
  const auto r = run({"simulate", "--design", "langlie", "--a", "0", "--b", "1", "--eps", "0.6", "--seed", "1"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("eps"), std::string::npos);
}

TEST(Cli, SimulateThenEstimate) {
  const auto file = temp_file("path.csv");
  ASSERT_EQ(run({"simulate", "--design", "robbins-monro", "--x1", "1", "--c", "4", "--q", "0.5", "--n", "300",
                 "--seed", "3", "--out", file})
                .code,
            0);
  const auto r = run({"estimate", file, "--q", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["status"], "converged");
  EXPECT_TRUE(j.contains("fieller"));
  EXPECT_TRUE(j.contains("wald"));
  EXPECT_EQ(vec2_from_json(j["theta_hat"]), fit_mle(load_path(file), Link::logit).theta_hat);
  std::filesystem::remove(file);
}

TEST(Cli, EstimateMissingFileFails) {
  EXPECT_EQ(run({"estimate", "/nonexistent/path.csv"}).code, cli::kExitFailure);
}

TEST(Cli, EstimateMalformedFileIsUsageError) {
  const auto file = temp_file("bad.csv");
  std::ofstream(file) << "index,x,y\n1,zz,1\n";
  EXPECT_EQ(run({"estimate", file}).code, cli::kExitUsage);
  std::filesystem::remove(file);
}

TEST(Cli, VerifySdqmWritesFiles) {
  const auto json_file = temp_file("dqm.json"), csv_file = temp_file("dqm.csv");
  const auto r = run({"verify", "sdqm", "--design", "bruceton", "--x1", "0", "--d", "1", "--h", "1,1", "--n-grid",
                      "100,1000", "--reps", "10", "--seed", "5", "--out-json", json_file, "--out-csv", csv_file});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream csv(csv_file);
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "n,median_sum");
  std::ifstream js(json_file);
  EXPECT_EQ(json::parse(js)["n_grid"].size(), 2u);
  std::filesystem::remove(json_file);
  std::filesystem::remove(csv_file);
}

TEST(Cli, VerifyRejectsBadDirection) {
  EXPECT_EQ(run({"verify", "lan", "--h", "1", "--seed", "1"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"verify", "sdqm", "--n-grid", "10,x", "--seed", "1"}).code, cli::kExitUsage);
}

TEST(Cli, VerifyCoverageReportsVerdict) {
  const auto r = run({"verify", "coverage", "--design", "bruceton", "--d", "0.5", "--n", "100", "--reps", "100",
                      "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_TRUE(j["result"] == "PASS" || j["result"] == "FAIL");
}

TEST(Cli, ChainBrucetonReport) {
  const auto csv_file = temp_file("pi.csv");
  const auto r = run({"chain", "bruceton", "--alpha", "0", "--beta", "1", "--d", "1", "--K", "30", "--out-csv",
                      csv_file});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["drift"]["result"], "PASS");
  std::ifstream csv(csv_file);
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "x,pi");
  std::filesystem::remove(csv_file);
  EXPECT_EQ(run({"chain", "bruceton", "--beta", "0"}).code, cli::kExitUsage);
  const auto rev = json::parse(run({"chain", "bruceton", "--reverse"}).out);
  EXPECT_EQ(rev["drift"]["result"], "FAIL");
}

TEST(Cli, ChainLanglieReport) {
  const auto r = run({"chain", "langlie", "--link", "probit", "--a", "0", "--b", "1", "--eps", "0.1", "--m", "10",
                      "--skip-invariant"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["drift"]["drift_at_one"].get<double>(), -2.865, 1e-3);
  EXPECT_EQ(j["overlap_bound_generation"], 5);
}

TEST(Cli, BoundsReport) {
  const auto r = run({"bounds", "--link", "logit"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out)["all_finite"], true);
  EXPECT_EQ(run({"bounds", "--link", "cauchit"}).code, cli::kExitUsage);
}

TEST(Cli, ConfigFile) {
  const auto file = temp_file("run.ini");
  std::ofstream(file) << "[simulate]\ndesign=bruceton\nx1=1\nd=0.5\nn=5\nseed=4\n";
  const auto r = run({"--config", file, "simulate"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  const auto path = read_path_csv(in);
  EXPECT_EQ(path.size(), 5u);
  EXPECT_EQ(path.trials[0].x, 1.0);
  std::filesystem::remove(file);
}

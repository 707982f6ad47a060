#include "lastmile/cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "json.hpp"
#include "lastmile/instgen.h"
#include "support/fixtures.h"

namespace lastmile::cli {
namespace {

namespace fs = std::filesystem;
using lastmile::testing::DataPath;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome Call(std::vector<std::string> args) {
  args.insert(args.begin(), "lastmile");
  std::ostringstream out;
  std::ostringstream err;
  const int code = Run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lastmile_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const {
    return (dir_ / name).string();
  }
  std::string Example() const { return DataPath("example1.json").string(); }

  fs::path dir_;
};

std::vector<std::vector<std::string>> ParseCsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream cols(line);
    std::string cell;
    while (std::getline(cols, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(cells);
  }
  return rows;
}

std::size_t col_index(const std::string& name) {
  return std::find(kSweepColumns.begin(), kSweepColumns.end(), name) -
         kSweepColumns.begin();
}

TEST_F(CliTest, GenerateBenchmarkSize) {
  const Outcome r = Call({"generate", "--K", "10", "--per-dest", "100", "--Tw",
                          "5", "--seed", "7", "--out", Path("a.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Instance inst = ReadInstance(Path("a.json"));
  EXPECT_EQ(inst.passengers.size(), 1000u);
  EXPECT_EQ(inst.fleet_size, 60);
  EXPECT_EQ(inst.window, 5);
}

TEST_F(CliTest, GenerateExpress) {
  const Outcome r = Call({"generate", "--variant", "express", "--K", "10",
                          "--per-dest", "50", "--seed", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Instance inst = InstanceFromJson(nlohmann::json::parse(r.out));
  EXPECT_EQ(inst.fleet_size, 50);
}

TEST_F(CliTest, GenerateBatch) {
  EXPECT_EQ(Call({"generate", "--batch", "--K", "2"}).code, kExitUsage);
  EXPECT_EQ(Call({"generate", "--K", "2", "--per-dest", "4"}).code, kExitUsage);
  const Outcome r = Call({"generate", "--batch", "--K", "2", "3", "--per-dest",
                          "4", "--fleet-fraction", "0.25", "--replicates", "2",
                          "--out", Path("batch")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(Path("batch/inst_K2_n4_Tw5_s1.json")));
  EXPECT_TRUE(fs::exists(Path("batch/inst_K3_n4_Tw5_s2.json")));
  EXPECT_EQ(std::distance(fs::directory_iterator(Path("batch")),
                          fs::directory_iterator{}),
            4);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(Call({}).code, kExitUsage);
  EXPECT_EQ(Call({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Call({"solve", Example(), "--engine", "magic"}).code, kExitUsage);
  EXPECT_EQ(Call({"solve", Example(), "--alpha", "2"}).code, kExitUsage);
  EXPECT_EQ(Call({"solve", Path("missing.json")}).code, kExitUsage);
  EXPECT_EQ(Call({"generate", "--variant", "bullet"}).code, kExitUsage);
}

TEST_F(CliTest, SolveBp) {
  const Outcome r = Call({"solve", "--engine", "bp", "--alpha", "1.0", Example()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["status"], "optimal");
  EXPECT_EQ(j["objective"], 22.0);
  EXPECT_EQ(j["travel"], 22);
}

TEST_F(CliTest, SolveRootOnly) {
  const Outcome r = Call({"solve", "--root-only", "--alpha", "0.5", Example()});
  ASSERT_TRUE(r.code == kExitOk || r.code == kExitFeasible) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_TRUE(j["lp_bound"].is_number());
  ASSERT_TRUE(j["objective"].is_number());
  const double lb = j["lower_bound"];
  const double ub = j["objective"];
  EXPECT_NEAR(j["gap_percent"].get<double>(), (ub - lb) / lb * 100, 1e-9);
}

TEST_F(CliTest, SolveOracle) {
  const Outcome r = Call({"solve", "--engine", "oracle", "--alpha", "0", Example()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["objective"], 2.0);
  ASSERT_EQ(Call({"generate", "--K", "10", "--per-dest", "100", "--out",
                  Path("big.json")})
                .code,
            kExitOk);
  const Outcome big = Call({"solve", "--engine", "oracle", Path("big.json")});
  EXPECT_EQ(big.code, kExitLimit);
  EXPECT_EQ(nlohmann::json::parse(big.out)["status"], "limit");
}

TEST_F(CliTest, SolveInfeasible) {
  Instance inst = lastmile::testing::Example1();
  inst.fleet_size = 0;
  WriteInstance(inst, Path("none.json"));
  const Outcome r = Call({"solve", Path("none.json")});
  EXPECT_EQ(r.code, kExitInfeasible);
  EXPECT_EQ(nlohmann::json::parse(r.out)["status"], "infeasible");
}

TEST_F(CliTest, Exports) {
  ASSERT_EQ(Call({"solve", "--engine", "export-ip", "--out", Path("m.lp"),
                  Example()})
                .code,
            kExitOk);
  std::ifstream ip(Path("m.lp"));
  std::stringstream ip_text;
  ip_text << ip.rdbuf();
  EXPECT_NE(ip_text.str().find("Subject To"), std::string::npos);
  EXPECT_NE(ip_text.str().find("ip14"), std::string::npos);
  const Outcome nf = Call({"solve", "--engine", "export-nf", Example()});
  ASSERT_EQ(nf.code, kExitOk) << nf.err;
  EXPECT_NE(nf.out.find("cap_4"), std::string::npos);
}

TEST_F(CliTest, Validate) {
  const Outcome ok =
      Call({"validate", Example(), DataPath("p_double_prime.json").string()});
  EXPECT_EQ(ok.code, kExitOk);
  const Outcome bad =
      Call({"validate", Example(), DataPath("p_prime.json").string()});
  EXPECT_EQ(bad.code, kExitViolations);
  EXPECT_NE(bad.out.find("CV capacity exceeded at t=4"), std::string::npos);
  std::ofstream(Path("cut.json")) << "{\"schedule\": [{\"dest\": 0,";
  EXPECT_EQ(Call({"validate", Example(), Path("cut.json")}).code, kExitUsage);
}

TEST_F(CliTest, Dd) {
  const Outcome r = Call({"dd", Example()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("nodes 12"), std::string::npos);
  const Outcome dot = Call({"dd", Example(), "--dot", "-"});
  EXPECT_NE(dot.out.find("digraph"), std::string::npos);
  EXPECT_EQ(Call({"dd", Example(), "--dest", "3"}).code, kExitUsage);
}

TEST_F(CliTest, SweepExampleOne) {
  const Outcome r =
      Call({"sweep", "--alpha", "0", "1", "--no-timing", Example()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = ParseCsv(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], kSweepColumns);
  EXPECT_EQ(rows[1][col_index("alpha")], "0");
  EXPECT_EQ(rows[1][col_index("trips")], "2");
  EXPECT_EQ(rows[2][col_index("travel_total")], "22");
  EXPECT_LE(std::stoi(rows[2][col_index("travel_total")]),
            std::stoi(rows[1][col_index("travel_total")]));
  EXPECT_LE(std::stoi(rows[1][col_index("trips")]), std::stoi(rows[2][col_index("trips")]));
  EXPECT_EQ(rows[1][col_index("wall_ms")], "0");
  EXPECT_EQ(rows[1][col_index("status")], "optimal");
}

TEST_F(CliTest, SweepScaleTripsAndWindows) {
  const Outcome r = Call({"sweep", "--alpha", "0", "--Tw", "1", "2",
                          "--scale-trips", "--no-timing", Example()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = ParseCsv(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][col_index("trips")], "200");
  EXPECT_EQ(rows[2][col_index("Tw")], "2");
}

TEST_F(CliTest, SweepDeterministicAcrossJobs) {
  const std::vector<std::string> args = {"sweep", "--alpha", "0", "0.5", "1",
                                         "--no-timing", Example(), Example()};
  auto with_jobs = args;
  with_jobs.insert(with_jobs.end(), {"--jobs", "3"});
  const Outcome a = Call(args);
  const Outcome b = Call(with_jobs);
  ASSERT_EQ(a.code, kExitOk);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, Call(args).out);
}

TEST_F(CliTest, SweepRecordsFailures) {
  std::ofstream(Path("broken.json")) << "{";
  const Outcome r = Call({"sweep", "--alpha", "1", "--no-timing",
                          Path("broken.json"), Example()});
  const auto rows = ParseCsv(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].back(), "error");
  EXPECT_EQ(rows[2].back(), "optimal");
}

TEST_F(CliTest, SolveDeterministicJson) {
  const std::vector<std::string> args = {"solve", "--alpha", "0.5",
                                         "--no-timing", Example()};
  EXPECT_EQ(Call(args).out, Call(args).out);
}

}  // namespace
}  // namespace lastmile::cli

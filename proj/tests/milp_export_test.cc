#include "lastmile/milp_export.h"

#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>

#include "lastmile/oracle.h"
#include "support/fixtures.h"
#include "support/tiny.h"

namespace lastmile::milp {
namespace {

using lastmile::testing::Example1;
using lastmile::testing::PDoublePrime;
using lastmile::testing::PPrime;

std::vector<dd::DecisionDiagram> Diagrams(const Instance& inst, Alpha alpha) {
  std::vector<dd::DecisionDiagram> out;
  for (int d = 0; d < static_cast<int>(inst.destinations.size()); ++d) {
    out.push_back(dd::BuildFor(inst, d, alpha));
  }
  return out;
}

int CountPrefix(const MilpModel& model, const std::string& prefix) {
  return static_cast<int>(std::count_if(
      model.variables().begin(), model.variables().end(),
      [&](const Variable& v) { return v.name.rfind(prefix, 0) == 0; }));
}

int CountRows(const MilpModel& model, const std::string& prefix) {
  return static_cast<int>(std::count_if(
      model.rows().begin(), model.rows().end(),
      [&](const Row& r) { return r.name.rfind(prefix, 0) == 0; }));
}

std::map<std::string, double> AsValues(const MilpModel& model,
                                       const Assignment& values) {
  std::ostringstream out;
  WriteSolution(model, values, out);
  std::istringstream in(out.str());
  return ReadSolution(in);
}

std::vector<std::string> Broken(const std::vector<Residual>& residuals) {
  std::vector<std::string> names;
  for (const Residual& r : residuals) names.push_back(r.name);
  return names;
}

TEST(MilpModelTest, RejectsDuplicatesAndUnknownIds) {
  MilpModel m;
  const int x = m.AddVariable("x", VarKind::kBinary);
  EXPECT_EQ(m.variables()[x].upper, 1);
  EXPECT_THROW(m.AddVariable("x", VarKind::kInteger), Error);
  m.AddRow("r", {{x, 1}}, RowSense::kLessEqual, 1);
  EXPECT_THROW(m.AddRow("r", {{x, 1}}, RowSense::kLessEqual, 1), Error);
  EXPECT_THROW(m.AddRow("s", {{7, 1}}, RowSense::kLessEqual, 1), Error);
  EXPECT_EQ(m.FindVariable("x"), x);
  EXPECT_FALSE(m.FindRow("nope"));
}

TEST(ExportIpTest, ExampleOneSizes) {
  const Instance inst = Example1();
  const MilpModel m = ExportIp(inst, Alpha(1, 1));
  EXPECT_EQ(CountPrefix(m, "x_"), 5 * 2);
  EXPECT_EQ(CountPrefix(m, "z_"), 5 * inst.horizon);
  EXPECT_EQ(CountPrefix(m, "w_"), 5);
  EXPECT_EQ(CountPrefix(m, "nB_"), inst.horizon);
  EXPECT_EQ(CountPrefix(m, "nT_"), inst.horizon + 1);
  ASSERT_TRUE(m.FindRow("ip14"));
  EXPECT_EQ(m.rows()[*m.FindRow("ip14")].rhs, 2);
  // ip8 carries the 1 - vcap right-hand side.
  EXPECT_EQ(m.rows()[*m.FindRow("ip8_0_5")].rhs, 1 - 3);
}

TEST(ExportIpTest, WitnessSatisfiesEveryRow) {
  const Instance inst = Example1();
  for (const Alpha a : {Alpha(0, 1), Alpha(1, 2), Alpha(1, 1)}) {
    const oracle::OracleResult best = oracle::SolveContiguous(inst, a);
    const MilpModel m = ExportIp(inst, a);
    const Assignment values = BuildIpAssignment(m, inst, *best.schedule);
    EXPECT_TRUE(CheckAssignment(m, values).empty());
    double objective = 0.0;
    for (const auto& [var, coef] : m.objective()) objective += coef * values[var];
    EXPECT_NEAR(objective, best.value, 1e-9);
  }
}

TEST(ExportIpTest, PrimeBreaksFleetRows) {
  const Instance inst = Example1();
  const MilpModel m = ExportIp(inst, Alpha(1, 2));
  const auto broken =
      Broken(CheckAssignment(m, BuildIpAssignment(m, inst, PPrime())));
  EXPECT_FALSE(broken.empty());
  EXPECT_NE(std::find(broken.begin(), broken.end(), "nT_4"), broken.end());
  EXPECT_TRUE(CheckAssignment(m, BuildIpAssignment(m, inst, PDoublePrime()))
                  .empty());
}

TEST(ExportIpTest, NoPassengers) {
  Instance inst = Example1();
  inst.passengers.clear();
  const MilpModel m = ExportIp(inst, Alpha(1, 2));
  EXPECT_EQ(CountPrefix(m, "x_") + CountPrefix(m, "z_") + CountPrefix(m, "w_"),
            0);
  const Assignment values = BuildIpAssignment(m, inst, Schedule{});
  EXPECT_TRUE(CheckAssignment(m, values).empty());
  double objective = 0.0;
  for (const auto& [var, coef] : m.objective()) objective += coef * values[var];
  EXPECT_EQ(objective, 0.0);
}

TEST(ExportIpTest, AlphaOnlyInObjective) {
  const Instance inst = Example1();
  const MilpModel a = ExportIp(inst, Alpha(1, 10));
  const MilpModel b = ExportIp(inst, Alpha(7, 10));
  ASSERT_EQ(a.rows().size(), b.rows().size());
  for (std::size_t i = 0; i < a.rows().size(); ++i) {
    EXPECT_EQ(a.rows()[i].name, b.rows()[i].name);
    EXPECT_EQ(a.rows()[i].rhs, b.rows()[i].rhs);
    ASSERT_EQ(a.rows()[i].terms.size(), b.rows()[i].terms.size());
    for (std::size_t k = 0; k < a.rows()[i].terms.size(); ++k) {
      EXPECT_EQ(a.rows()[i].terms[k].var, b.rows()[i].terms[k].var);
      EXPECT_EQ(a.rows()[i].terms[k].coef, b.rows()[i].terms[k].coef);
    }
  }
  ASSERT_EQ(a.variables().size(), b.variables().size());
  EXPECT_NE(a.objective(), b.objective());
}

TEST(ExportNfTest, ExampleOneRows) {
  const Instance inst = Example1();
  const auto diagrams = Diagrams(inst, Alpha(1, 1));
  const MilpModel m = ExportNf(diagrams, inst);
  EXPECT_EQ(CountRows(m, "src_"), 1);
  EXPECT_EQ(CountRows(m, "sink_"), 1);
  EXPECT_EQ(CountRows(m, "flow_"), 10);
  EXPECT_EQ(CountRows(m, "cap_"), inst.horizon);
  EXPECT_EQ(static_cast<int>(m.variables().size()),
            static_cast<int>(diagrams[0].arcs().size()));
}

TEST(ExportNfTest, DoublePrimeFitsPrimeBreaksCapFour) {
  const Instance inst = Example1();
  const auto diagrams = Diagrams(inst, Alpha(1, 1));
  const MilpModel m = ExportNf(diagrams, inst);
  EXPECT_TRUE(
      CheckAssignment(m, BuildNfAssignment(m, diagrams, PDoublePrime())).empty());
  const auto broken =
      Broken(CheckAssignment(m, BuildNfAssignment(m, diagrams, PPrime())));
  EXPECT_NE(std::find(broken.begin(), broken.end(), "cap_4"), broken.end());
  for (const std::string& name : broken) EXPECT_EQ(name.rfind("cap_", 0), 0u);
}

TEST(WriteLpTest, Sections) {
  const Instance inst = Example1();
  std::ostringstream out;
  WriteLp(ExportIp(inst, Alpha(1, 2)), out);
  const std::string text = out.str();
  std::size_t pos = 0;
  for (const char* section :
       {"Minimize", "Subject To", "Bounds", "Binaries", "Generals", "End"}) {
    const std::size_t at = text.find(section, pos);
    ASSERT_NE(at, std::string::npos) << section;
    pos = at;
  }
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) EXPECT_LE(line.size(), 255u);
  EXPECT_NE(text.find("ip14: nT_0 = 2"), std::string::npos);
}

TEST(WriteLpTest, LongRowsWrap) {
  const Instance inst = lastmile::testing::FullyOverlapping(40, 3);
  std::ostringstream out;
  WriteLp(ExportIp(inst, Alpha(1, 2)), out);
  std::istringstream lines(out.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    EXPECT_LE(line.size(), 255u);
    ++count;
  }
  EXPECT_GT(count, 100);
}

TEST(SolutionFileTest, Parse) {
  std::istringstream in("# header\nx_0_0 1\n  z_0_3   1.0000000001 # tail\n\n");
  const auto values = ReadSolution(in);
  EXPECT_EQ(values.size(), 2u);
  EXPECT_EQ(values.at("x_0_0"), 1.0);
  std::istringstream bad("x_0_0\n");
  EXPECT_THROW(ReadSolution(bad), ImportError);
  std::istringstream worse("x_0_0 one\n");
  EXPECT_THROW(ReadSolution(worse), ImportError);
}

TEST(ImportNfTest, DoublePrimeRoundTrip) {
  const Instance inst = Example1();
  const auto diagrams = Diagrams(inst, Alpha(1, 1));
  const MilpModel m = ExportNf(diagrams, inst);
  const auto values =
      AsValues(m, BuildNfAssignment(m, diagrams, PDoublePrime()));
  const Imported got = ImportNf(inst, diagrams, values);
  EXPECT_TRUE(got.report.ok());
  EXPECT_EQ(got.schedule, Summarize(inst, PDoublePrime()));
}

TEST(ImportNfTest, RejectsZerosAndHalves) {
  const Instance inst = Example1();
  const auto diagrams = Diagrams(inst, Alpha(0, 1));
  EXPECT_THROW(ImportNf(inst, diagrams, {}), ImportError);

  std::vector<double> lengths;
  for (const dd::Arc& a : diagrams[0].arcs()) lengths.push_back(a.cost);
  const auto two = dd::KShortestPaths(diagrams[0], lengths, 2);
  std::map<std::string, double> values;
  for (const auto& p : two) {
    for (int a : p.path.arcs) values["y_0_" + std::to_string(a)] += 0.5;
  }
  EXPECT_THROW(ImportNf(inst, diagrams, values), ImportError);
}

TEST(ImportIpTest, RoundTripAndRejects) {
  const Instance inst = Example1();
  const MilpModel m = ExportIp(inst, Alpha(1, 1));
  const oracle::OracleResult best = oracle::SolveContiguous(inst, Alpha(1, 1));
  const Imported got =
      ImportIp(inst, AsValues(m, BuildIpAssignment(m, inst, *best.schedule)));
  EXPECT_TRUE(got.report.ok());
  EXPECT_EQ(got.schedule.travel, best.schedule->travel);
  EXPECT_EQ(got.schedule.trips, best.schedule->trips);

  EXPECT_THROW(ImportIp(inst, {}), ImportError);
  auto values = AsValues(m, BuildIpAssignment(m, inst, *best.schedule));
  values["z_0_2"] = 0.5;
  EXPECT_THROW(ImportIp(inst, values), ImportError);
}

TEST(ImportIpTest, PrimeImportsWithViolations) {
  const Instance inst = Example1();
  const MilpModel m = ExportIp(inst, Alpha(1, 1));
  const Imported got =
      ImportIp(inst, AsValues(m, BuildIpAssignment(m, inst, PPrime())));
  EXPECT_TRUE(got.report.Has(ViolationKind::kFleet));
}

// The oracle witness translated to both models leaves no residual.
TEST(MilpProperty, TinyWitnesses) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    lastmile::testing::TinySpec spec;
    spec.time_dependent = seed % 3 == 2;
    const Instance inst = lastmile::testing::TinyInstance(seed, spec);
    const Alpha alpha(1, 2);
    const oracle::OracleResult best = oracle::SolveContiguous(inst, alpha);
    const MilpModel ip = ExportIp(inst, alpha);
    EXPECT_TRUE(CheckAssignment(ip, BuildIpAssignment(ip, inst, *best.schedule))
                    .empty())
        << "seed " << seed;
    const auto diagrams = Diagrams(inst, alpha);
    const MilpModel nf = ExportNf(diagrams, inst);
    const Assignment y = BuildNfAssignment(nf, diagrams, *best.schedule);
    EXPECT_TRUE(CheckAssignment(nf, y).empty()) << "seed " << seed;
    double objective = 0.0;
    for (const auto& [var, coef] : nf.objective()) objective += coef * y[var];
    EXPECT_NEAR(objective, best.value, 1e-9);
    const Imported back = ImportNf(inst, diagrams, AsValues(nf, y));
    EXPECT_TRUE(back.report.ok());
    EXPECT_EQ(back.schedule.travel, best.schedule->travel);
  }
}

}  // namespace
}  // namespace lastmile::milp

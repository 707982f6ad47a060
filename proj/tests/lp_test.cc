#include "lastmile/lp.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lastmile/bp.h"
#include "lastmile/instgen.h"
#include "support/fixtures.h"

namespace lastmile::lp {
namespace {

struct RandomLp {
  std::vector<Sense> senses;
  std::vector<double> rhs;
  struct Col {
    double cost;
    std::vector<Entry> entries;
    double ub;
  };
  std::vector<Col> cols;

  LpTableau Make(int first_cols) const {
    LpTableau t;
    for (std::size_t i = 0; i < senses.size(); ++i) t.AddRow(senses[i], rhs[i]);
    for (int j = 0; j < first_cols; ++j) {
      t.AddColumn(cols[j].cost, cols[j].entries, cols[j].ub);
    }
    return t;
  }
};

// Feasible by construction around a random point x0 in the box.
RandomLp Draw(std::mt19937_64& rng, int m, int n) {
  RandomLp lp;
  std::vector<std::vector<double>> a(m, std::vector<double>(n, 0.0));
  std::vector<double> x0(n);
  for (int j = 0; j < n; ++j) {
    const double ub = static_cast<double>(UniformInt(rng, 1, 3));
    x0[j] = ub * static_cast<double>(UniformInt(rng, 0, 4)) / 4.0;
    RandomLp::Col col{static_cast<double>(UniformInt(rng, -6, 6)), {}, ub};
    for (int i = 0; i < m; ++i) {
      if (UniformInt(rng, 0, 2) == 0) continue;
      a[i][j] = static_cast<double>(UniformInt(rng, -2, 3));
      if (a[i][j] != 0.0) col.entries.push_back({i, a[i][j]});
    }
    lp.cols.push_back(col);
  }
  for (int i = 0; i < m; ++i) {
    double ax = 0.0;
    for (int j = 0; j < n; ++j) ax += a[i][j] * x0[j];
    if (UniformInt(rng, 0, 1) == 0) {
      lp.senses.push_back(Sense::kEqual);
      lp.rhs.push_back(ax);
    } else {
      lp.senses.push_back(Sense::kLessEqual);
      lp.rhs.push_back(ax + static_cast<double>(UniformInt(rng, 0, 2)));
    }
  }
  return lp;
}

// Optimality certificate: primal feasibility, reduced costs signed by bound
// status, and dual sign / complementary slackness on <= rows.
void ExpectKkt(const LpTableau& t, const std::vector<Sense>& senses,
               const std::vector<double>& rhs, const std::vector<double>& ubs) {
  const LpSolution& s = t.solution();
  ASSERT_EQ(s.status, Status::kOptimal);
  std::vector<double> activity(t.num_rows(), 0.0);
  double objective = 0.0;
  for (int j = 0; j < t.num_columns(); ++j) {
    const double x = s.primal[j];
    EXPECT_GE(x, -kTolFeas);
    EXPECT_LE(x, ubs[j] + kTolFeas);
    objective += t.cost(j) * x;
    for (const Entry& e : t.entries(j)) activity[e.row] += e.value * x;
    const double d = t.ReducedCost(j);
    if (x <= kTolFeas) {
      EXPECT_GE(d, -kTolOpt) << "column " << j;
    } else if (x >= ubs[j] - kTolFeas) {
      EXPECT_LE(d, kTolOpt) << "column " << j;
    } else {
      EXPECT_NEAR(d, 0.0, kTolOpt) << "column " << j;
    }
  }
  EXPECT_NEAR(objective, s.objective, 1e-6 * (1 + std::abs(objective)));
  for (int i = 0; i < t.num_rows(); ++i) {
    if (senses[i] == Sense::kEqual) {
      EXPECT_NEAR(activity[i], rhs[i], 1e-6);
    } else {
      EXPECT_LE(activity[i], rhs[i] + 1e-6);
      EXPECT_LE(s.duals[i], kTolOpt);
      if (activity[i] < rhs[i] - 1e-6) {
        EXPECT_NEAR(s.duals[i], 0.0, kTolCs);
      }
    }
  }
}

TEST(LpTest, SingleEquality) {
  LpTableau t;
  t.AddRow(Sense::kEqual, 1.0);
  t.AddColumn(1.0, {{0, 1.0}});
  const LpSolution& s = t.Solve();
  ASSERT_EQ(s.status, Status::kOptimal);
  EXPECT_NEAR(s.objective, 1.0, 1e-12);
  EXPECT_NEAR(s.duals[0], 1.0, 1e-12);
}

TEST(LpTest, SingleInequality) {
  LpTableau t;
  t.AddRow(Sense::kLessEqual, 3.0);
  t.AddColumn(-1.0, {{0, 1.0}});
  const LpSolution& s = t.Solve();
  ASSERT_EQ(s.status, Status::kOptimal);
  EXPECT_NEAR(s.objective, -3.0, 1e-12);
  EXPECT_NEAR(s.duals[0], -1.0, 1e-12);
}

TEST(LpTest, InfeasibleAndUnbounded) {
  LpTableau t;
  t.AddRow(Sense::kEqual, 2.0);
  t.AddColumn(1.0, {{0, 1.0}}, 1.0);
  EXPECT_EQ(t.Solve().status, Status::kInfeasible);

  LpTableau v;
  v.AddRow(Sense::kEqual, 0.0);
  v.AddColumn(-1.0, {{0, 1.0}});
  v.AddColumn(0.0, {{0, -1.0}});
  EXPECT_EQ(v.Solve().status, Status::kUnbounded);
}

TEST(LpTest, UnknownRowRejected) {
  LpTableau t;
  t.AddRow(Sense::kEqual, 1.0);
  EXPECT_THROW(t.AddColumn(1.0, {{1, 1.0}}), Error);
}

TEST(LpTest, DuplicateColumnKeepsValue) {
  LpTableau t;
  t.AddRow(Sense::kEqual, 1.0);
  t.AddRow(Sense::kLessEqual, 0.5);
  t.AddColumn(2.0, {{0, 1.0}, {1, 1.0}});
  t.AddColumn(5.0, {{0, 1.0}});
  const double before = t.Solve().objective;
  const int id = t.AddColumn(2.0, {{0, 1.0}, {1, 1.0}});
  EXPECT_EQ(id, 2);
  EXPECT_NEAR(t.Solve().objective, before, 1e-9);
}

TEST(LpTest, ImprovingColumnLowersValue) {
  LpTableau t;
  t.AddRow(Sense::kEqual, 1.0);
  t.AddColumn(5.0, {{0, 1.0}});
  EXPECT_NEAR(t.Solve().objective, 5.0, 1e-12);
  t.AddColumn(3.0, {{0, 1.0}});
  EXPECT_LT(t.ReducedCost(1), 0.0);
  EXPECT_NEAR(t.Solve().objective, 3.0, 1e-12);
}

TEST(LpTest, FixUnfix) {
  LpTableau t;
  t.AddRow(Sense::kEqual, 1.0);
  t.AddRow(Sense::kLessEqual, 1.0);
  t.AddColumn(1.0, {{0, 1.0}, {1, 2.0}}, 1.0);
  t.AddColumn(3.0, {{0, 1.0}}, 1.0);
  const double free_value = t.Solve().objective;
  EXPECT_NEAR(free_value, 2.0, 1e-9);  // half of each
  EXPECT_NEAR(t.solution().primal[0], 0.5, 1e-9);
  t.FixColumn(0, 0.0);
  EXPECT_TRUE(t.IsFixed(0));
  EXPECT_GE(t.Solve().objective, free_value - 1e-9);
  EXPECT_THROW(t.FixColumn(0, 1.0), Error);
  t.UnfixColumn(0);
  EXPECT_NEAR(t.Solve().objective, free_value, 1e-9);
}

TEST(LpTest, TwoColumnsFixedInOneConvexityRow) {
  LpTableau t;
  t.AddRow(Sense::kEqual, 1.0);
  t.AddColumn(1.0, {{0, 1.0}}, 1.0);
  t.AddColumn(2.0, {{0, 1.0}}, 1.0);
  t.FixColumn(0, 1.0);
  t.FixColumn(1, 1.0);
  EXPECT_EQ(t.Solve().status, Status::kInfeasible);
  t.UnfixAll();
  EXPECT_EQ(t.Solve().status, Status::kOptimal);
  EXPECT_NEAR(t.solution().objective, 1.0, 1e-12);
}

TEST(LpProperty, RandomCertificates) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = static_cast<int>(UniformInt(rng, 1, 8));
    const int n = static_cast<int>(UniformInt(rng, 1, 14));
    const RandomLp lp = Draw(rng, m, n);
    LpTableau t = lp.Make(n);
    t.Solve();
    std::vector<double> ubs;
    for (const auto& c : lp.cols) ubs.push_back(c.ub);
    ExpectKkt(t, lp.senses, lp.rhs, ubs);
  }
}

TEST(LpProperty, WarmMatchesCold) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = static_cast<int>(UniformInt(rng, 2, 8));
    const int n = static_cast<int>(UniformInt(rng, 4, 16));
    const RandomLp lp = Draw(rng, m, n);
    LpTableau warm = lp.Make(1);
    warm.Solve();
    for (int j = 1; j < n; ++j) {
      warm.AddColumn(lp.cols[j].cost, lp.cols[j].entries, lp.cols[j].ub);
      if (j % 3 == 0) warm.Solve();
    }
    warm.Solve();
    LpTableau cold = lp.Make(n);
    cold.Solve();
    ASSERT_EQ(cold.solution().status, Status::kOptimal);
    ASSERT_EQ(warm.solution().status, Status::kOptimal);
    EXPECT_NEAR(warm.solution().objective, cold.solution().objective, kTolOpt);
    // Fixing and unfixing goes through the dual warm start.
    const int j = static_cast<int>(UniformInt(rng, 0, n - 1));
    warm.FixColumn(j, 0.0);
    warm.Solve();
    warm.UnfixColumn(j);
    warm.Solve();
    EXPECT_NEAR(warm.solution().objective, cold.solution().objective, kTolOpt);
  }
}

TEST(LpTest, ExampleOneAllColumns) {
  const Instance inst = lastmile::testing::Example1();
  bp::MasterState state(inst, Alpha(1, 1));
  EXPECT_NEAR(state.tableau().Solve().objective, state.big_m(), 1e-9);
  const dd::DecisionDiagram& dd = state.diagrams()[0];
  std::vector<double> lengths;
  for (const dd::Arc& a : dd.arcs()) lengths.push_back(a.cost);
  // The optimal path alone pulls the value down to its cost.
  state.AddPath(dd::ShortestPath(dd, lengths).path);
  EXPECT_NEAR(state.tableau().Solve().objective, 22.0, 1e-9);
  const int total = static_cast<int>(dd::CountPaths(dd));
  for (const auto& p : dd::KShortestPaths(dd, lengths, total)) {
    state.AddPath(p.path);
  }
  const LpSolution& s = state.tableau().Solve();
  ASSERT_EQ(s.status, Status::kOptimal);
  EXPECT_LE(s.objective, 22.0 + 1e-9);
  for (int j = 0; j < state.tableau().num_columns(); ++j) {
    EXPECT_GE(state.tableau().ReducedCost(j), -kTolOpt);
  }
}

TEST(LpTest, StatusNames) {
  EXPECT_EQ(ToString(Status::kOptimal), "optimal");
  EXPECT_EQ(ToString(Status::kInfeasible), "infeasible");
}

}  // namespace
}  // namespace lastmile::lp

#include "lastmile/oracle.h"

#include <random>

#include <gtest/gtest.h>

#include "lastmile/dd.h"
#include "lastmile/instgen.h"
#include "support/fixtures.h"
#include "support/tiny.h"

namespace lastmile::oracle {
namespace {

using lastmile::testing::Example1;

TEST(SolveContiguousTest, ExampleOne) {
  const Instance inst = Example1();
  const OracleResult travel = SolveContiguous(inst, Alpha(1, 1));
  ASSERT_TRUE(travel.feasible);
  EXPECT_EQ(travel.value, 22.0);
  EXPECT_EQ(travel.scaled, 22);
  ASSERT_TRUE(travel.schedule);
  EXPECT_TRUE(Validate(inst, *travel.schedule).ok());
  EXPECT_EQ(travel.schedule->travel, 22);

  const OracleResult trips = SolveContiguous(inst, Alpha(0, 1));
  EXPECT_EQ(trips.value, 2.0);
  EXPECT_EQ(trips.schedule->trips, 2);
  EXPECT_TRUE(Validate(inst, *trips.schedule).ok());
}

TEST(SolveContiguousTest, NoFleet) {
  Instance inst = Example1();
  inst.fleet_size = 0;
  const OracleResult r = SolveContiguous(inst, Alpha(1, 1));
  EXPECT_FALSE(r.feasible);
  EXPECT_FALSE(r.schedule);
}

TEST(SolveContiguousTest, EmptyInstance) {
  Instance inst = Example1();
  inst.passengers.clear();
  const OracleResult r = SolveContiguous(inst, Alpha(1, 2));
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_TRUE(r.schedule->groups.empty());
}

TEST(SolveContiguousTest, BudgetRefusal) {
  const Instance inst = Generate({.num_destinations = 10,
                                  .passengers_per_destination = 100});
  EXPECT_THROW(SolveContiguous(inst, Alpha(1, 2)), BudgetExceeded);
  EXPECT_THROW(SolveContiguous(Example1(), Alpha(1, 2), 10), BudgetExceeded);
}

TEST(SolveUnrestrictedTest, ExampleOne) {
  const OracleResult r = SolveUnrestricted(Example1(), Alpha(1, 1));
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(r.value, 22.0);
}

TEST(SolveUnrestrictedTest, SizeRefusal) {
  const Instance inst = lastmile::testing::FullyOverlapping(11, 2);
  EXPECT_THROW(SolveUnrestricted(inst, Alpha(1, 1)), BudgetExceeded);
}

TEST(SolveUnrestrictedTest, OnePassenger) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    lastmile::testing::TinySpec spec;
    spec.max_passengers = 1;
    const Instance inst = lastmile::testing::TinyInstance(seed, spec);
    EXPECT_EQ(SolveUnrestricted(inst, Alpha(1, 2)).scaled,
              SolveContiguous(inst, Alpha(1, 2)).scaled);
  }
}

TEST(PhiTest, Values) {
  EXPECT_EQ(Phi(0, 2), 1);
  EXPECT_EQ(Phi(1, 2), 1);
  EXPECT_EQ(Phi(2, 2), 2);
  EXPECT_EQ(Phi(5, 2), 8);
  EXPECT_EQ(Phi(4, 3), 7);  // 1 2 4 7
  EXPECT_EQ(Phi(6, 1), 1);
  boost::multiprecision::cpp_int a = 1;
  boost::multiprecision::cpp_int b = 1;
  for (int n = 1; n <= 90; ++n) {
    // phi(n, 2) = F(n + 1) with F(1) = F(2) = 1.
    const boost::multiprecision::cpp_int next = a + b;
    a = b;
    b = next;
    EXPECT_EQ(Phi(n, 2), a) << n;
  }
}

TEST(OptionsTest, ContiguousIsSubsetOfAll) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    lastmile::testing::TinySpec spec;
    spec.max_passengers = 7;
    const Instance inst = lastmile::testing::TinyInstance(seed, spec);
    for (int d = 0; d < static_cast<int>(inst.destinations.size()); ++d) {
      EXPECT_LE(ContiguousOptions(inst, d).size(), AllOptions(inst, d).size());
    }
  }
}

TEST(FeasibleTimesTest, AgreesWithDiagramWindows) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    lastmile::testing::TinySpec spec;
    spec.time_dependent = seed % 2 == 0;
    spec.feasible_only = false;
    const Instance inst = lastmile::testing::TinyInstance(seed, spec);
    for (const Passenger& p : inst.passengers) {
      EXPECT_EQ(FeasibleTimes(inst, p.id), dd::AdmissibleTimes(inst, p.id));
    }
  }
}

// Contiguous equals unrestricted, witness validity and optimality against random
// feasible schedules.
TEST(OracleProperty, UnrestrictedEqualsContiguous) {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    lastmile::testing::TinySpec spec;
    spec.max_passengers = 8;
    const Instance inst = lastmile::testing::TinyInstance(seed, spec);
    for (const Alpha a : {Alpha(0, 1), Alpha(1, 2), Alpha(1, 1)}) {
      const OracleResult c = SolveContiguous(inst, a);
      const OracleResult u = SolveUnrestricted(inst, a);
      EXPECT_EQ(c.feasible, u.feasible);
      EXPECT_EQ(c.scaled, u.scaled) << "seed " << seed;
      EXPECT_TRUE(Validate(inst, *u.schedule).ok());
    }
  }
}

TEST(OracleProperty, NoRandomScheduleBeatsIt) {
  std::mt19937_64 rng(8);
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    lastmile::testing::TinySpec spec;
    spec.max_passengers = 7;
    const Instance inst = lastmile::testing::TinyInstance(seed, spec);
    const Alpha alpha(1, 3);
    const OracleResult best = SolveContiguous(inst, alpha);
    EXPECT_EQ(best.scaled, ScaledObjective(best.schedule->travel,
                                           best.schedule->trips, alpha));
    std::vector<std::vector<Option>> options;
    for (int d = 0; d < static_cast<int>(inst.destinations.size()); ++d) {
      options.push_back(AllOptions(inst, d));
    }
    for (int trial = 0; trial < 200; ++trial) {
      Schedule s;
      for (const auto& per_dest : options) {
        if (per_dest.empty()) continue;
        const Option& o = per_dest[UniformInt(rng, 0, per_dest.size() - 1)];
        s.groups.insert(s.groups.end(), o.groups.begin(), o.groups.end());
      }
      s = Summarize(inst, s);
      if (!Validate(inst, s).ok()) continue;
      ++checked;
      EXPECT_LE(best.scaled, ScaledObjective(s.travel, s.trips, alpha));
    }
  }
  EXPECT_GT(checked, 100);
}

}  // namespace
}  // namespace lastmile::oracle

#ifndef LASTMILE_BP_H_
#define LASTMILE_BP_H_

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lastmile/core.h"
#include "lastmile/dd.h"
#include "lastmile/lp.h"

namespace lastmile::bp {

// Restricted master problem: one convexity row per destination followed by
// one capacity row per time step 1..horizon.
class MasterState {
 public:
  struct Column {
    int destination = 0;
    bool dummy = false;
    dd::PathColumn path;  // empty for dummies
  };

  // Builds every diagram and adds one big-M dummy per destination. Throws
  // dd::InfeasiblePassenger when some passenger has no admissible time.
  // With `feasibility` set, paths cost 0 and dummies cost 1, so the LP
  // optimum is the least dummy mass any fractional selection needs.
  MasterState(const Instance& instance, Alpha alpha, bool feasibility = false);

  const Instance& instance() const { return *instance_; }
  Alpha alpha() const { return alpha_; }
  int num_destinations() const {
    return static_cast<int>(diagrams_.size());
  }
  int horizon() const { return instance_->horizon; }
  bool feasibility() const { return feasibility_; }
  // alpha * n * horizon + (1 - alpha) * n + 1.
  double big_m() const { return big_m_; }
  const std::vector<dd::DecisionDiagram>& diagrams() const { return diagrams_; }
  const std::vector<Column>& columns() const { return columns_; }
  int dummy(int destination) const { return dummies_.at(destination); }
  int capacity_row(int t) const { return num_destinations() + t - 1; }

  lp::LpTableau& tableau() { return tableau_; }
  const lp::LpTableau& tableau() const { return tableau_; }

  // Adds the path as a column unless an identical arc sequence is already
  // present. Returns the column id and whether it was new.
  std::pair<int, bool> AddPath(dd::PathColumn path);

  // Row entries of a path: convexity 1 plus h(p, t) on capacity rows.
  std::vector<lp::Entry> Entries(const dd::PathColumn& path) const;

 private:
  const Instance* instance_;
  Alpha alpha_;
  bool feasibility_ = false;
  double big_m_ = 0.0;
  std::vector<dd::DecisionDiagram> diagrams_;
  std::vector<Column> columns_;
  std::vector<int> dummies_;
  std::map<std::pair<int, std::vector<int>>, int> index_;
  lp::LpTableau tableau_;
};

// Column ids forced to 0 (out) or 1 (in) at a search node.
struct Fixings {
  std::vector<int> out;
  std::vector<int> in;
};

struct PricingResult {
  struct Entry {
    int destination = 0;
    bool skipped = false;  // destination has an in-fixed column
    std::optional<dd::PathColumn> path;
    double length = 0.0;        // adjusted path length
    double reduced_cost = 0.0;  // length - mu_d
  };
  std::vector<Entry> entries;
  bool improving = false;  // some reduced cost < -tol_opt
};

// One-arc a gets length eta(a) - sum of lambda_t over the steps its CV is
// away; zero-arcs get 0. Out-fixed paths are skipped by enumerating the
// |out_d| + 1 shortest paths.
PricingResult Price(const MasterState& state, const std::vector<double>& duals,
                    const Fixings& fixings = {});

struct RootResult {
  double lp_bound = 0.0;
  std::int64_t columns_generated = 0;
  int rounds = 0;
  bool needs_dummies = false;
  bool infeasible = false;
  lp::LpSolution solution;
};

// Column generation under the given fixings until no column prices out.
// Throws Error when `max_rounds` is exceeded.
RootResult SolveRoot(MasterState& state, const Fixings& fixings = {},
                     int max_rounds = 10'000);

// False when no fractional selection of paths meets the fleet limit, which
// proves the instance infeasible. Runs column generation on the feasibility
// master until no path prices out.
bool RelaxationFeasible(const Instance& instance);

// Fixes the groups of the best real column per destination and searches
// departure times for them under the fleet limit; falls back to a dive over
// the restricted master's columns, then to a dive that in-fixes columns and
// keeps pricing (skipped when `dive_seconds` is 0). Returned schedules pass
// Validate. May add columns to the pool.
std::optional<Schedule> PrimalHeuristic(MasterState& state,
                                        const lp::LpSolution& solution,
                                        double time_cap_seconds = 1.0,
                                        const Fixings& fixings = {},
                                        double dive_seconds = 0.0);

// Schedule read off an LP solution whose real columns are all 0 or 1.
std::optional<Schedule> IntegralSchedule(const MasterState& state,
                                         const lp::LpSolution& solution);

enum class NodeOrder { kBestBound, kDepthFirst };

struct Options {
  double time_limit_seconds = 600.0;
  std::int64_t node_limit = std::numeric_limits<std::int64_t>::max();
  bool root_only = false;
  int max_rounds = 10'000;
  double heuristic_seconds = 1.0;
  double dive_seconds = 30.0;
  // When false, incumbents come only from integral master solutions.
  bool use_heuristic = true;
  NodeOrder order = NodeOrder::kBestBound;
};

enum class SolveStatus { kOptimal, kFeasible, kInfeasible, kLimit };

std::string ToString(SolveStatus status);

struct SolveResult {
  SolveStatus status = SolveStatus::kInfeasible;
  std::optional<Schedule> schedule;  // validated, travel/trips recomputed
  double objective = 0.0;
  double lower_bound = 0.0;
  double upper_bound = std::numeric_limits<double>::infinity();
  double gap_percent = 0.0;
  double root_bound = 0.0;
  std::int64_t nodes = 0;
  std::int64_t columns = 0;
  std::int64_t wall_ms = 0;
  std::string message;  // reason for infeasible / limit outcomes
};

SolveResult BranchAndPrice(const Instance& instance, Alpha alpha,
                           const Options& options = {});

// (UB - LB) / LB * 100; 0 when the bounds meet.
double GapPercent(double lower, double upper);

// {objective, travel, trips, lower_bound, gap_percent, nodes, columns,
//  wall_ms, schedule}, preceded by "status".
nlohmann::ordered_json ResultToJson(const SolveResult& result);

}  // namespace lastmile::bp

#endif  // LASTMILE_BP_H_

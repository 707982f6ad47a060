#include "lastmile/bp.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <queue>
#include <set>

#include "lastmile/instgen.h"

namespace lastmile::bp {

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

bool IsDestinationFixedIn(const MasterState& state, const Fixings& fixings,
                          int destination) {
  for (int c : fixings.in) {
    if (state.columns()[c].destination == destination) return true;
  }
  return false;
}

Schedule AssembleSchedule(const MasterState& state,
                          const std::vector<int>& chosen) {
  Schedule schedule;
  for (int c : chosen) {
    const MasterState::Column& col = state.columns()[c];
    for (GroupTrip& g : dd::ToGroups(state.instance(),
                                     state.diagrams()[col.destination],
                                     col.path)) {
      schedule.groups.push_back(std::move(g));
    }
  }
  return Summarize(state.instance(), std::move(schedule));
}

std::optional<Schedule> Checked(const Instance& instance, Schedule schedule) {
  if (!Validate(instance, schedule).ok()) return std::nullopt;
  return schedule;
}

}  // namespace

MasterState::MasterState(const Instance& instance, Alpha alpha,
                         bool feasibility)
    : instance_(&instance), alpha_(alpha), feasibility_(feasibility) {
  CheckInstance(instance);
  const double a = alpha.value();
  const double n = static_cast<double>(instance.passengers.size());
  big_m_ = feasibility ? 1.0 : a * n * instance.horizon + (1.0 - a) * n + 1.0;
  const int k = static_cast<int>(instance.destinations.size());
  for (int d = 0; d < k; ++d) {
    diagrams_.push_back(dd::BuildFor(instance, d, alpha));
    tableau_.AddRow(lp::Sense::kEqual, 1.0);
  }
  for (int t = 1; t <= instance.horizon; ++t) {
    tableau_.AddRow(lp::Sense::kLessEqual, instance.fleet_size);
  }
  for (int d = 0; d < k; ++d) {
    const int id = tableau_.AddColumn(big_m_, {{d, 1.0}});
    columns_.push_back({d, true, {}});
    columns_.back().path.destination = d;
    dummies_.push_back(id);
  }
}

std::vector<lp::Entry> MasterState::Entries(const dd::PathColumn& path) const {
  std::vector<lp::Entry> entries{{path.destination, 1.0}};
  for (const auto& [t, h] : path.occupancy) {
    if (t < 1 || t > horizon()) {
      throw Error("path occupies t=" + std::to_string(t) +
                  " outside the horizon 1.." + std::to_string(horizon()));
    }
    entries.push_back({capacity_row(t), static_cast<double>(h)});
  }
  return entries;
}

std::pair<int, bool> MasterState::AddPath(dd::PathColumn path) {
  auto key = std::make_pair(path.destination, path.arcs);
  if (auto it = index_.find(key); it != index_.end()) {
    return {it->second, false};
  }
  const int id = tableau_.AddColumn(feasibility_ ? 0.0 : path.cost,
                                    Entries(path));
  index_.emplace(std::move(key), id);
  const int d = path.destination;
  columns_.push_back({d, false, std::move(path)});
  return {id, true};
}

PricingResult Price(const MasterState& state, const std::vector<double>& duals,
                    const Fixings& fixings) {
  const int horizon = state.horizon();
  std::vector<double> prefix(horizon + 1, 0.0);
  for (int t = 1; t <= horizon; ++t) {
    prefix[t] = prefix[t - 1] + duals[state.capacity_row(t)];
  }
  PricingResult result;
  for (int d = 0; d < state.num_destinations(); ++d) {
    PricingResult::Entry entry;
    entry.destination = d;
    if (IsDestinationFixedIn(state, fixings, d)) {
      entry.skipped = true;
      result.entries.push_back(std::move(entry));
      continue;
    }
    const dd::DecisionDiagram& dd = state.diagrams()[d];
    std::vector<double> lengths(dd.arcs().size(), 0.0);
    for (const dd::Arc& a : dd.arcs()) {
      if (a.kind != dd::ArcKind::kOne) continue;
      const int hi = std::min(a.busy_until, horizon);
      const int lo = std::max(a.start, 1);
      lengths[a.id] = (state.feasibility() ? 0.0 : a.cost) - (hi >= lo ? prefix[hi] - prefix[lo - 1] : 0.0);
    }
    std::set<std::vector<int>> forbidden;
    for (int c : fixings.out) {
      const MasterState::Column& col = state.columns()[c];
      if (col.destination == d && !col.dummy) forbidden.insert(col.path.arcs);
    }
    if (forbidden.empty()) {
      dd::WeightedPath best = dd::ShortestPath(dd, lengths);
      entry.path = std::move(best.path);
      entry.length = best.length;
    } else {
      const int k = static_cast<int>(forbidden.size()) + 1;
      for (dd::WeightedPath& wp : dd::KShortestPaths(dd, lengths, k)) {
        if (forbidden.contains(wp.path.arcs)) continue;
        entry.path = std::move(wp.path);
        entry.length = wp.length;
        break;
      }
    }
    if (entry.path) {
      entry.reduced_cost = entry.length - duals[d];
      if (entry.reduced_cost < -lp::kTolOpt) result.improving = true;
    }
    result.entries.push_back(std::move(entry));
  }
  return result;
}

RootResult SolveRoot(MasterState& state, const Fixings& fixings,
                     int max_rounds) {
  lp::LpTableau& tableau = state.tableau();
  tableau.UnfixAll();
  for (int c : fixings.out) tableau.FixColumn(c, 0.0);
  for (int c : fixings.in) tableau.FixColumn(c, 1.0);

  RootResult result;
  for (;;) {
    if (result.rounds >= max_rounds) {
      throw Error("column generation exceeded " + std::to_string(max_rounds) +
                  " rounds; last LP value " +
                  std::to_string(tableau.solution().objective) + " with " +
                  std::to_string(tableau.num_columns()) + " columns");
    }
    ++result.rounds;
    const lp::LpSolution& sol = tableau.Solve();
    if (sol.status == lp::Status::kInfeasible) {
      result.infeasible = true;
      result.solution = sol;
      return result;
    }
    if (sol.status != lp::Status::kOptimal) {
      throw Error("restricted master returned " + lp::ToString(sol.status));
    }
    const PricingResult priced = Price(state, sol.duals, fixings);
    int added = 0;
    for (const PricingResult::Entry& e : priced.entries) {
      if (!e.path || e.reduced_cost >= -lp::kTolOpt) continue;
      if (state.AddPath(*e.path).second) ++added;
    }
    result.columns_generated += added;
    if (added == 0) {
      result.solution = sol;
      result.lp_bound = sol.objective;
      for (int d = 0; d < state.num_destinations(); ++d) {
        if (sol.primal[state.dummy(d)] > lp::kTolFeas) {
          result.needs_dummies = true;
        }
      }
      return result;
    }
  }
}

bool RelaxationFeasible(const Instance& instance) {
  MasterState state(instance, Alpha(1, 1), /*feasibility=*/true);
  const RootResult cg = SolveRoot(state);
  return !cg.infeasible && cg.lp_bound <= lp::kTolOpt;
}

std::optional<Schedule> IntegralSchedule(const MasterState& state,
                                         const lp::LpSolution& solution) {
  std::vector<int> chosen(state.num_destinations(), -1);
  for (int c = 0; c < static_cast<int>(solution.primal.size()); ++c) {
    const double v = solution.primal[c];
    if (v <= lp::kTolFeas) continue;
    if (v < 1.0 - lp::kTolFeas) return std::nullopt;
    const MasterState::Column& col = state.columns()[c];
    if (col.dummy || chosen[col.destination] >= 0) return std::nullopt;
    chosen[col.destination] = c;
  }
  for (int c : chosen) {
    if (c < 0) return std::nullopt;
  }
  return Checked(state.instance(), AssembleSchedule(state, chosen));
}

namespace {

struct TimedGroup {
  int destination;
  std::vector<int> members;  // passenger ids
};

// Small 0-1 program over (group, departure) pairs solved by depth-first
// branch-and-bound on LP bounds.
std::optional<Schedule> AssignTimes(const MasterState& state,
                                    const std::vector<TimedGroup>& groups,
                                    Clock::time_point deadline) {
  const Instance& instance = state.instance();
  const double a = state.alpha().value();
  struct Var {
    int group;
    int start;
  };
  std::vector<Var> vars;
  lp::LpTableau model;
  const int num_groups = static_cast<int>(groups.size());
  for (int g = 0; g < num_groups; ++g) model.AddRow(lp::Sense::kEqual, 1.0);
  for (int t = 1; t <= instance.horizon; ++t) {
    model.AddRow(lp::Sense::kLessEqual, instance.fleet_size);
  }
  for (int g = 0; g < num_groups; ++g) {
    std::vector<int> shared;
    bool first = true;
    for (int j : groups[g].members) {
      std::vector<int> times = dd::AdmissibleTimes(instance, j);
      if (first) {
        shared = std::move(times);
        first = false;
      } else {
        std::vector<int> both;
        std::set_intersection(shared.begin(), shared.end(), times.begin(),
                              times.end(), std::back_inserter(both));
        shared = std::move(both);
      }
    }
    if (shared.empty()) return std::nullopt;
    const Destination& dest = instance.destinations[groups[g].destination];
    for (int t : shared) {
      double travel = 0.0;
      for (int j : groups[g].members) {
        travel += TravelTime(instance, j, t, BestTrip(instance, j, t));
      }
      std::vector<lp::Entry> entries{{g, 1.0}};
      const int until = std::min(t + dest.RoundTripAt(t) - 1, instance.horizon);
      for (int s = std::max(t, 1); s <= until; ++s) {
        entries.push_back({num_groups + s - 1, 1.0});
      }
      model.AddColumn(a * travel + (1.0 - a), entries, 1.0);
      vars.push_back({g, t});
    }
  }

  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_x;
  std::function<void()> search = [&]() {
    if (Clock::now() > deadline) return;
    const lp::LpSolution& sol = model.Solve();
    if (sol.status != lp::Status::kOptimal) return;
    if (sol.objective >= best - lp::kTolOpt) return;
    int branch = -1;
    double frac = 0.0;
    for (int v = 0; v < static_cast<int>(sol.primal.size()); ++v) {
      const double f = std::min(sol.primal[v], 1.0 - sol.primal[v]);
      if (f > lp::kTolFeas && f > frac + 1e-12) {
        frac = f;
        branch = v;
      }
    }
    if (branch < 0) {
      best = sol.objective;
      best_x = sol.primal;
      return;
    }
    for (double value : {1.0, 0.0}) {
      model.FixColumn(branch, value);
      search();
      model.UnfixColumn(branch);
    }
  };
  search();
  if (best_x.empty()) return std::nullopt;

  Schedule schedule;
  for (int v = 0; v < static_cast<int>(vars.size()); ++v) {
    if (best_x[v] < 0.5) continue;
    const TimedGroup& g = groups[vars[v].group];
    GroupTrip trip;
    trip.destination = g.destination;
    trip.depart = vars[v].start;
    for (int j : g.members) {
      trip.members.push_back({j, BestTrip(instance, j, trip.depart)});
    }
    schedule.groups.push_back(std::move(trip));
  }
  return Checked(instance, Summarize(instance, std::move(schedule)));
}

// Depth-first dive over the restricted master's existing columns.
std::optional<Schedule> DiveColumns(const MasterState& state,
                                    Clock::time_point deadline) {
  lp::LpTableau model = state.tableau();
  for (int d = 0; d < state.num_destinations(); ++d) {
    if (!model.IsFixed(state.dummy(d))) model.FixColumn(state.dummy(d), 0.0);
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_chosen;
  std::function<void()> search = [&]() {
    if (Clock::now() > deadline) return;
    const lp::LpSolution& sol = model.Solve();
    if (sol.status != lp::Status::kOptimal) return;
    if (sol.objective >= best - lp::kTolOpt) return;
    int branch = -1;
    double top = 0.0;
    for (int c = 0; c < static_cast<int>(sol.primal.size()); ++c) {
      const double v = sol.primal[c];
      if (v > lp::kTolFeas && v < 1.0 - lp::kTolFeas && v > top + 1e-12) {
        top = v;
        branch = c;
      }
    }
    if (branch < 0) {
      best = sol.objective;
      best_chosen.clear();
      for (int c = 0; c < static_cast<int>(sol.primal.size()); ++c) {
        if (sol.primal[c] > 0.5) best_chosen.push_back(c);
      }
      return;
    }
    for (double value : {1.0, 0.0}) {
      model.FixColumn(branch, value);
      search();
      model.UnfixColumn(branch);
    }
  };
  search();
  if (best_chosen.empty()) return std::nullopt;
  return Checked(state.instance(), AssembleSchedule(state, best_chosen));
}

}  // namespace

// Fix the real column with the largest fractional value to 1 and run column
// generation again until the master is integral; a fix that makes the master
// infeasible is turned into an out-fix instead.
std::optional<Schedule> PriceAndDive(MasterState& state, Fixings fixings,
                                     Clock::time_point deadline,
                                     int max_rounds) {
  while (Clock::now() < deadline) {
    const RootResult cg = SolveRoot(state, fixings, max_rounds);
    if (cg.infeasible || cg.lp_bound >= state.big_m() - lp::kTolOpt) {
      if (fixings.in.empty()) return std::nullopt;
      fixings.out.push_back(fixings.in.back());
      fixings.in.pop_back();
      continue;
    }
    if (auto s = IntegralSchedule(state, cg.solution)) return s;
    int pick = -1;
    double top = 0.0;
    for (int c = 0; c < static_cast<int>(cg.solution.primal.size()); ++c) {
      const double v = cg.solution.primal[c];
      if (state.columns()[c].dummy || v >= 1.0 - lp::kTolFeas) continue;
      if (v > lp::kTolFeas && v > top + 1e-12) {
        top = v;
        pick = c;
      }
    }
    if (pick < 0) return std::nullopt;
    fixings.in.push_back(pick);
  }
  return std::nullopt;
}

std::optional<Schedule> PrimalHeuristic(MasterState& state,
                                        const lp::LpSolution& solution,
                                        double time_cap_seconds,
                                        const Fixings& fixings,
                                        double dive_seconds) {
  if (auto s = IntegralSchedule(state, solution)) return s;
  auto seconds = [](double x) {
    return std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(x));
  };

  std::vector<int> pick(state.num_destinations(), -1);
  for (int c = 0; c < static_cast<int>(solution.primal.size()); ++c) {
    const MasterState::Column& col = state.columns()[c];
    if (col.dummy) continue;
    const int d = col.destination;
    if (pick[d] < 0 || solution.primal[c] > solution.primal[pick[d]]) {
      pick[d] = c;
    }
  }
  if (std::all_of(pick.begin(), pick.end(), [](int c) { return c >= 0; })) {
    std::vector<TimedGroup> groups;
    for (int c : pick) {
      const MasterState::Column& col = state.columns()[c];
      const dd::DecisionDiagram& dd = state.diagrams()[col.destination];
      for (const dd::GroupSlot& slot : col.path.groups) {
        TimedGroup g{col.destination, {}};
        for (int pos = slot.first; pos <= slot.last; ++pos) {
          g.members.push_back(dd.order()[pos]);
        }
        groups.push_back(std::move(g));
      }
    }
    if (auto s = AssignTimes(state, groups,
                             Clock::now() + seconds(time_cap_seconds))) {
      return s;
    }
  }
  if (auto s = DiveColumns(state, Clock::now() + seconds(time_cap_seconds))) {
    return s;
  }
  if (dive_seconds <= 0.0) return std::nullopt;
  return PriceAndDive(state, fixings, Clock::now() + seconds(dive_seconds),
                      10'000);
}

std::string ToString(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kFeasible: return "feasible";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kLimit: return "limit";
  }
  return "unknown";
}

double GapPercent(double lower, double upper) {
  if (upper - lower <= 1e-9 * std::max(1.0, std::abs(upper))) return 0.0;
  if (lower <= 0.0) return std::numeric_limits<double>::infinity();
  return (upper - lower) / lower * 100.0;
}

SolveResult BranchAndPrice(const Instance& instance, Alpha alpha,
                           const Options& options) {
  const Clock::time_point start = Clock::now();
  SolveResult result;
  auto finish = [&]() {
    result.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         Clock::now() - start)
                         .count();
    return result;
  };

  std::optional<MasterState> state;
  try {
    state.emplace(instance, alpha);
  } catch (const dd::InfeasiblePassenger& e) {
    result.status = SolveStatus::kInfeasible;
    result.message = e.what();
    result.lower_bound = std::numeric_limits<double>::quiet_NaN();
    result.root_bound = result.lower_bound;
    return finish();
  }

  struct Node {
    double bound;
    std::int64_t seq;
    int depth;
    Fixings fixings;
  };
  auto later = [&](const Node& x, const Node& y) {
    if (options.order == NodeOrder::kDepthFirst) {
      if (x.depth != y.depth) return x.depth < y.depth;
      return x.seq < y.seq;
    }
    if (x.bound != y.bound) return x.bound > y.bound;
    return x.seq > y.seq;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(later)> open(later);
  std::int64_t seq = 0;
  open.push({-std::numeric_limits<double>::infinity(), seq++, 0, {}});

  std::optional<Schedule> incumbent;
  std::int64_t best_scaled = std::numeric_limits<std::int64_t>::max();
  auto offer = [&](std::optional<Schedule> s) {
    if (!s) return;
    const std::int64_t v = ScaledObjective(s->travel, s->trips, alpha);
    if (v < best_scaled) {
      best_scaled = v;
      incumbent = std::move(s);
    }
  };
  // Objective values are multiples of 1/den, so a bound can be rounded up to
  // that grid before comparing with the incumbent.
  auto dominated = [&](double bound) {
    if (!incumbent) return false;
    return std::ceil(bound * alpha.den() - 1e-6) >=
           static_cast<double>(best_scaled);
  };

  bool limit_hit = false;
  bool relaxation_infeasible = false;
  bool root_done = false;
  double root_bound = 0.0;
  while (!open.empty()) {
    if (Seconds(start) > options.time_limit_seconds ||
        result.nodes >= options.node_limit) {
      limit_hit = true;
      break;
    }
    Node node = open.top();
    open.pop();
    if (dominated(node.bound)) continue;

    const RootResult cg = SolveRoot(*state, node.fixings, options.max_rounds);
    ++result.nodes;
    const bool is_root = !root_done;
    root_done = true;
    if (cg.infeasible) {
      if (is_root) root_bound = std::numeric_limits<double>::infinity();
      continue;
    }
    const double bound = std::max(cg.lp_bound, node.bound);
    if (is_root) root_bound = bound;
    if (bound >= state->big_m() - lp::kTolOpt) continue;
    if (is_root && cg.needs_dummies && !RelaxationFeasible(instance)) {
      relaxation_infeasible = true;
      break;
    }

    auto integral = IntegralSchedule(*state, cg.solution);
    const bool is_integral = integral.has_value();
    offer(std::move(integral));
    if (options.use_heuristic && !is_integral && !dominated(bound)) {
      offer(PrimalHeuristic(*state, cg.solution, options.heuristic_seconds,
                            node.fixings, options.dive_seconds));
    }
    if (options.root_only) break;
    if (is_integral || dominated(bound)) continue;

    int branch = -1;
    double frac = 0.0;
    for (int c = 0; c < static_cast<int>(cg.solution.primal.size()); ++c) {
      if (state->columns()[c].dummy) continue;
      const double v = cg.solution.primal[c];
      const double f = std::min(v, 1.0 - v);
      if (f > lp::kTolFeas && f > frac + 1e-12) {
        frac = f;
        branch = c;
      }
    }
    if (branch < 0) continue;
    Node out{bound, seq++, node.depth + 1, node.fixings};
    out.fixings.out.push_back(branch);
    Node in{bound, seq++, node.depth + 1, node.fixings};
    in.fixings.in.push_back(branch);
    open.push(std::move(out));
    open.push(std::move(in));
  }

  result.root_bound = root_bound;
  for (const MasterState::Column& c : state->columns()) {
    if (!c.dummy) ++result.columns;
  }
  const bool complete =
      relaxation_infeasible || (!limit_hit && !options.root_only);
  if (incumbent) {
    const ValidationReport report = Validate(instance, *incumbent);
    if (!report.ok()) {
      throw Error("internal: incumbent failed validation: " +
                  report.violations.front().message);
    }
    result.objective = Objective(*incumbent, alpha);
    result.upper_bound = result.objective;
  }
  if (complete) {
    result.lower_bound = incumbent ? result.upper_bound : root_bound;
  } else if (options.root_only) {
    result.lower_bound = root_bound;
  } else {
    double lb = result.upper_bound;
    while (!open.empty()) {
      lb = std::min(lb, open.top().bound);
      open.pop();
    }
    result.lower_bound = std::max(std::min(lb, result.upper_bound), root_bound);
  }
  if (incumbent) {
    result.gap_percent = GapPercent(result.lower_bound, result.upper_bound);
    const bool proven = complete || dominated(result.lower_bound);
    result.status = proven ? SolveStatus::kOptimal : SolveStatus::kFeasible;
    result.schedule = std::move(incumbent);
  } else if (relaxation_infeasible) {
    result.status = SolveStatus::kInfeasible;
    result.message = "the fleet limit cannot be met even fractionally";
  } else if (complete || root_bound == std::numeric_limits<double>::infinity() ||
             root_bound >= state->big_m() - lp::kTolOpt) {
    result.status = SolveStatus::kInfeasible;
    result.message = "search exhausted without a feasible schedule";
  } else {
    result.status = SolveStatus::kLimit;
    result.message = limit_hit ? "limit reached before a schedule was found"
                               : "no schedule found at the root";
  }
  return finish();
}

nlohmann::ordered_json ResultToJson(const SolveResult& result) {
  nlohmann::ordered_json out;
  out["status"] = ToString(result.status);
  if (result.schedule) {
    out["objective"] = result.objective;
    out["travel"] = result.schedule->travel;
    out["trips"] = result.schedule->trips;
  } else {
    out["objective"] = nullptr;
    out["travel"] = nullptr;
    out["trips"] = nullptr;
  }
  if (std::isfinite(result.lower_bound)) {
    out["lower_bound"] = result.lower_bound;
  } else {
    out["lower_bound"] = nullptr;
  }
  if (std::isfinite(result.root_bound)) {
    out["lp_bound"] = result.root_bound;
  } else {
    out["lp_bound"] = nullptr;
  }
  if (result.schedule && std::isfinite(result.gap_percent)) {
    out["gap_percent"] = result.gap_percent;
  } else {
    out["gap_percent"] = nullptr;
  }
  out["nodes"] = result.nodes;
  out["columns"] = result.columns;
  out["wall_ms"] = result.wall_ms;
  out["schedule"] = result.schedule ? ScheduleToJson(*result.schedule)
                                    : nlohmann::ordered_json::array();
  if (!result.message.empty()) out["message"] = result.message;
  return out;
}

}  // namespace lastmile::bp

#include "lastmile/oracle.h"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>

namespace lastmile::oracle {

std::vector<int> FeasibleTimes(const Instance& instance, int passenger) {
  const Passenger& p = instance.passengers.at(passenger);
  const Destination& d = instance.destinations.at(p.destination);
  std::vector<int> times;
  for (int t = 1; t <= instance.horizon; ++t) {
    const int arrive = t + d.ToTimeAt(t);
    if (arrive < p.requested_arrival - instance.window ||
        arrive > p.requested_arrival + instance.window) {
      continue;
    }
    if (TryBestTrip(instance, passenger, t)) times.push_back(t);
  }
  return times;
}

namespace {

// Minimum travel over usable trips; ties by lowest trip id.
std::pair<int, int> CheapestTrip(const Instance& instance, int passenger,
                                 int depart) {
  const Passenger& p = instance.passengers[passenger];
  int best_trip = -1;
  int best_travel = std::numeric_limits<int>::max();
  for (const TransitTrip& c : instance.trips) {
    if (!c.departures.contains(p.origin) || c.terminal_arrival > depart) {
      continue;
    }
    const int w = TravelTime(instance, passenger, depart, c.id);
    if (w < best_travel) {
      best_travel = w;
      best_trip = c.id;
    }
  }
  return {best_trip, best_travel};
}

std::vector<int> Shared(const std::vector<std::vector<int>>& times,
                        const std::vector<int>& block) {
  std::vector<int> out = times[block.front()];
  for (std::size_t i = 1; i < block.size() && !out.empty(); ++i) {
    std::vector<int> keep;
    for (int t : out) {
      if (std::binary_search(times[block[i]].begin(), times[block[i]].end(),
                             t)) {
        keep.push_back(t);
      }
    }
    out = std::move(keep);
  }
  return out;
}

// Expands a partition (blocks of passenger ids) into one option per vector
// of shared departure times.
void Expand(const Instance& instance, int destination,
            const std::vector<std::vector<int>>& blocks,
            const std::vector<std::vector<int>>& times,
            std::vector<Option>& out, std::int64_t budget) {
  const Destination& dest = instance.destinations[destination];
  std::vector<std::vector<int>> shared;
  for (const auto& block : blocks) {
    shared.push_back(Shared(times, block));
    if (shared.back().empty()) return;
  }
  Option option;
  std::function<void(std::size_t)> rec = [&](std::size_t b) {
    if (b == blocks.size()) {
      if (static_cast<std::int64_t>(out.size()) >= budget) {
        throw BudgetExceeded("oracle: more than " + std::to_string(budget) +
                             " options for destination " +
                             std::to_string(destination));
      }
      out.push_back(option);
      return;
    }
    for (int t : shared[b]) {
      GroupTrip g;
      g.destination = destination;
      g.depart = t;
      std::int64_t travel = 0;
      for (int j : blocks[b]) {
        const auto [trip, w] = CheapestTrip(instance, j, t);
        g.members.push_back({j, trip});
        travel += w;
      }
      option.groups.push_back(std::move(g));
      option.travel += travel;
      option.trips += 1;
      option.busy.emplace_back(t, t + dest.RoundTripAt(t) - 1);
      rec(b + 1);
      option.busy.pop_back();
      option.trips -= 1;
      option.travel -= travel;
      option.groups.pop_back();
    }
  };
  rec(0);
}

std::vector<int> Members(const Instance& instance, int destination) {
  std::vector<int> members;
  for (const Passenger& p : instance.passengers) {
    if (p.destination == destination) members.push_back(p.id);
  }
  std::sort(members.begin(), members.end(), [&](int a, int b) {
    const int ra = instance.passengers[a].requested_arrival;
    const int rb = instance.passengers[b].requested_arrival;
    return ra != rb ? ra < rb : a < b;
  });
  return members;
}

std::vector<std::vector<int>> AllTimes(const Instance& instance) {
  std::vector<std::vector<int>> times(instance.passengers.size());
  for (std::size_t j = 0; j < times.size(); ++j) {
    times[j] = FeasibleTimes(instance, static_cast<int>(j));
  }
  return times;
}

std::vector<Option> Contiguous(const Instance& instance, int destination,
                               const std::vector<std::vector<int>>& times,
                               std::int64_t budget) {
  const std::vector<int> members = Members(instance, destination);
  const int n = static_cast<int>(members.size());
  std::vector<Option> out;
  std::vector<std::vector<int>> blocks;
  std::function<void(int)> rec = [&](int pos) {
    if (pos == n) {
      Expand(instance, destination, blocks, times, out, budget);
      return;
    }
    std::vector<int> block;
    for (int last = pos; last < n && last - pos < instance.cv_capacity;
         ++last) {
      block.push_back(members[last]);
      blocks.push_back(block);
      rec(last + 1);
      blocks.pop_back();
    }
  };
  rec(0);
  return out;
}

// Number of (contiguous partition, shared departure times) pairs, capped at
// `cap` + 1 so the count never overflows.
std::int64_t CountContiguous(const Instance& instance, int destination,
                             const std::vector<std::vector<int>>& times,
                             std::int64_t cap) {
  const std::vector<int> members = Members(instance, destination);
  const int n = static_cast<int>(members.size());
  std::vector<std::int64_t> ways(n + 1, 0);
  ways[0] = 1;
  for (int end = 1; end <= n; ++end) {
    std::vector<int> block;
    for (int first = end - 1; first >= 0 && end - first <= instance.cv_capacity;
         --first) {
      block.insert(block.begin(), members[first]);
      const std::int64_t shared =
          static_cast<std::int64_t>(Shared(times, block).size());
      if (shared == 0 || ways[first] == 0) continue;
      const std::int64_t add =
          ways[first] > (cap + 1) / shared ? cap + 1 : ways[first] * shared;
      ways[end] = std::min(cap + 1, ways[end] + add);
    }
  }
  return ways[n];
}

std::vector<Option> Unrestricted(const Instance& instance, int destination,
                                 const std::vector<std::vector<int>>& times,
                                 std::int64_t budget) {
  const std::vector<int> members = Members(instance, destination);
  const int n = static_cast<int>(members.size());
  std::vector<Option> out;
  std::vector<std::vector<int>> blocks;
  // Restricted growth: passenger i joins an existing block or opens one.
  std::function<void(int)> rec = [&](int i) {
    if (i == n) {
      Expand(instance, destination, blocks, times, out, budget);
      return;
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (static_cast<int>(blocks[b].size()) >= instance.cv_capacity) continue;
      blocks[b].push_back(members[i]);
      rec(i + 1);
      blocks[b].pop_back();
    }
    blocks.push_back({members[i]});
    rec(i + 1);
    blocks.pop_back();
  };
  rec(0);
  return out;
}

OracleResult Combine(const Instance& instance, Alpha alpha,
                     std::vector<std::vector<Option>> options,
                     std::int64_t budget) {
  OracleResult result;
  const int k = static_cast<int>(options.size());
  std::vector<std::vector<std::int64_t>> cost(k);
  for (int d = 0; d < k; ++d) {
    result.options += static_cast<std::int64_t>(options[d].size());
    if (options[d].empty()) return result;
    // Cheapest first; equal costs keep enumeration order.
    std::vector<int> idx(options[d].size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<std::int64_t> c(options[d].size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      c[i] = ScaledObjective(options[d][i].travel, options[d][i].trips, alpha);
    }
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return c[a] < c[b]; });
    std::vector<Option> sorted;
    for (int i : idx) {
      sorted.push_back(std::move(options[d][i]));
      cost[d].push_back(c[i]);
    }
    options[d] = std::move(sorted);
  }
  std::vector<std::int64_t> tail(k + 1, 0);
  for (int d = k - 1; d >= 0; --d) tail[d] = tail[d + 1] + cost[d].front();

  int max_t = instance.horizon;
  for (const auto& opts : options) {
    for (const Option& o : opts) {
      for (const auto& [s, e] : o.busy) max_t = std::max(max_t, e);
    }
  }
  std::vector<int> occ(max_t + 2, 0);
  std::vector<int> pick(k, -1), best_pick;
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  std::int64_t steps = 0;

  auto place = [&](const Option& o, int sign) {
    bool ok = true;
    for (const auto& [s, e] : o.busy) {
      for (int t = s; t <= e; ++t) {
        occ[t] += sign;
        if (occ[t] > instance.fleet_size) ok = false;
      }
    }
    return ok;
  };
  std::function<void(int, std::int64_t)> rec = [&](int d, std::int64_t acc) {
    if (d == k) {
      best = acc;
      best_pick = pick;
      return;
    }
    for (std::size_t i = 0; i < options[d].size(); ++i) {
      if (acc + cost[d][i] + tail[d + 1] >= best) break;
      if (++steps > budget) {
        throw BudgetExceeded("oracle: combination search exceeded " +
                             std::to_string(budget) + " steps");
      }
      pick[d] = static_cast<int>(i);
      if (place(options[d][i], +1)) rec(d + 1, acc + cost[d][i]);
      place(options[d][i], -1);
    }
  };
  rec(0, 0);
  if (best_pick.empty() && k > 0) return result;

  Schedule schedule;
  for (int d = 0; d < k; ++d) {
    for (const GroupTrip& g : options[d][best_pick[d]].groups) {
      schedule.groups.push_back(g);
    }
  }
  schedule = Summarize(instance, std::move(schedule));
  result.feasible = true;
  result.scaled = ScaledObjective(schedule.travel, schedule.trips, alpha);
  result.value = Objective(schedule, alpha);
  result.schedule = std::move(schedule);
  return result;
}

}  // namespace

std::vector<Option> ContiguousOptions(const Instance& instance,
                                      int destination) {
  return Contiguous(instance, destination, AllTimes(instance),
                    std::numeric_limits<std::int64_t>::max());
}

std::vector<Option> AllOptions(const Instance& instance, int destination) {
  return Unrestricted(instance, destination, AllTimes(instance),
                      std::numeric_limits<std::int64_t>::max());
}

OracleResult SolveContiguous(const Instance& instance, Alpha alpha,
                             std::int64_t budget) {
  const auto times = AllTimes(instance);
  std::vector<std::vector<Option>> options;
  std::int64_t total = 0;
  for (int d = 0; d < static_cast<int>(instance.destinations.size()); ++d) {
    total += CountContiguous(instance, d, times, budget);
    if (total > budget) {
      throw BudgetExceeded("oracle: more than " + std::to_string(budget) +
                           " contiguous options");
    }
  }
  total = 0;
  for (int d = 0; d < static_cast<int>(instance.destinations.size()); ++d) {
    options.push_back(Contiguous(instance, d, times, budget - total));
    total += static_cast<std::int64_t>(options.back().size());
  }
  return Combine(instance, alpha, std::move(options), budget);
}

OracleResult SolveUnrestricted(const Instance& instance, Alpha alpha,
                               int max_per_destination, std::int64_t budget) {
  for (const auto& members : instance.PassengersByDestination()) {
    if (static_cast<int>(members.size()) > max_per_destination) {
      throw BudgetExceeded("oracle: destination with " +
                           std::to_string(members.size()) +
                           " passengers exceeds the unrestricted limit " +
                           std::to_string(max_per_destination));
    }
  }
  const auto times = AllTimes(instance);
  std::vector<std::vector<Option>> options;
  std::int64_t total = 0;
  for (int d = 0; d < static_cast<int>(instance.destinations.size()); ++d) {
    options.push_back(Unrestricted(instance, d, times, budget - total));
    total += static_cast<std::int64_t>(options.back().size());
  }
  return Combine(instance, alpha, std::move(options), budget);
}

boost::multiprecision::cpp_int Phi(int n, int vcap) {
  if (n < 0) return 0;
  std::vector<boost::multiprecision::cpp_int> phi(n + 1);
  phi[0] = 1;
  for (int k = 1; k <= n; ++k) {
    for (int i = 1; i <= vcap && i <= k; ++i) phi[k] += phi[k - i];
  }
  return phi[n];
}

}  // namespace lastmile::oracle

#include "lastmile/dd.h"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>

namespace lastmile::dd {

DepartureWindow ComputeDepartureWindow(const Instance& instance,
                                       int passenger) {
  const Passenger& p = instance.passengers.at(passenger);
  const Destination& d = instance.destinations.at(p.destination);
  DepartureWindow w;
  w.latest = p.requested_arrival + instance.window - d.to_time;
  const auto first_train = instance.EarliestArrivalServing(p.origin);
  if (!first_train) return {1, 0};
  w.earliest =
      std::max(p.requested_arrival - instance.window - d.to_time, *first_train);
  return w;
}

std::vector<int> AdmissibleTimes(const Instance& instance, int passenger) {
  const Passenger& p = instance.passengers.at(passenger);
  const Destination& d = instance.destinations.at(p.destination);
  std::vector<int> times;
  if (!d.time_dependent()) {
    const DepartureWindow w = ComputeDepartureWindow(instance, passenger);
    for (int t = w.earliest; t <= w.latest; ++t) times.push_back(t);
    return times;
  }
  const auto first_train = instance.EarliestArrivalServing(p.origin);
  if (!first_train) return times;
  for (const auto& [t, legs] : d.time_table) {
    if (t < *first_train) continue;
    const int arrive = t + legs.to;
    if (arrive >= p.requested_arrival - instance.window &&
        arrive <= p.requested_arrival + instance.window) {
      times.push_back(t);
    }
  }
  return times;
}

namespace {

std::vector<int> Intersect(const std::vector<int>& a,
                           const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

std::vector<int> SortedPassengers(const Instance& instance, int destination) {
  std::vector<int> order;
  for (const Passenger& p : instance.passengers) {
    if (p.destination == destination) order.push_back(p.id);
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return instance.passengers[a].requested_arrival <
           instance.passengers[b].requested_arrival;
  });
  return order;
}

}  // namespace

class DiagramBuilder {
 public:
  static DecisionDiagram Make(const Instance& instance, int destination,
                              Alpha alpha) {
    if (destination < 0 ||
        destination >= static_cast<int>(instance.destinations.size())) {
      throw Error("unknown destination " + std::to_string(destination));
    }
    const Destination& dest = instance.destinations[destination];
    DecisionDiagram dd;
    dd.destination_ = destination;
    dd.order_ = SortedPassengers(instance, destination);
    const int n = static_cast<int>(dd.order_.size());
    const int vcap = instance.cv_capacity;

    std::vector<std::vector<int>> times(n);
    for (int pos = 0; pos < n; ++pos) {
      times[pos] = AdmissibleTimes(instance, dd.order_[pos]);
      if (times[pos].empty()) {
        const int id = dd.order_[pos];
        throw InfeasiblePassenger(
            id, "infeasible passenger " + std::to_string(id) +
                    ": no departure time reaches destination " +
                    std::to_string(destination) + " within its window");
      }
    }

    struct RawNode {
      int layer;
      int state;
      std::vector<int> open_times;  // shared times of the waiting passengers
      bool open_all = true;         // no one waiting yet
    };
    std::vector<RawNode> raw;
    std::vector<Arc> raw_arcs;
    std::vector<std::vector<int>> at(n + 1, std::vector<int>(vcap, -1));

    raw.push_back({0, 0, {}, true});
    at[0][0] = 0;
    for (int layer = 0; layer < n; ++layer) {
      const int zero_node = static_cast<int>(raw.size());
      raw.push_back({layer + 1, 0, {}, true});
      at[layer + 1][0] = zero_node;
      for (int k = 0; k < vcap; ++k) {
        const int u = at[layer][k];
        if (u < 0) continue;
        const std::vector<int> closing =
            raw[u].open_all ? times[layer]
                            : Intersect(raw[u].open_times, times[layer]);
        if (k < vcap - 1 && layer + 1 < n) {
          std::vector<int> joined = Intersect(closing, times[layer + 1]);
          if (!joined.empty()) {
            int v = at[layer + 1][k + 1];
            if (v < 0) {
              v = static_cast<int>(raw.size());
              raw.push_back({layer + 1, k + 1, closing, false});
              at[layer + 1][k + 1] = v;
            }
            Arc a;
            a.from = u;
            a.to = v;
            a.kind = ArcKind::kZero;
            raw_arcs.push_back(a);
          }
        }
        for (int t : closing) {
          Arc a;
          a.from = u;
          a.to = zero_node;
          a.kind = ArcKind::kOne;
          a.start = t;
          a.first = layer - k;
          a.last = layer;
          a.travel = 0;
          for (int pos = a.first; pos <= a.last; ++pos) {
            const int j = dd.order_[pos];
            a.travel += TravelTime(instance, j, t, BestTrip(instance, j, t));
          }
          a.cost = alpha.value() * a.travel + (1.0 - alpha.value());
          a.busy_until = t + dest.RoundTripAt(t) - 1;
          raw_arcs.push_back(a);
        }
      }
    }
    const int raw_terminal = at[n][0];

    // Keep only nodes and arcs on some root-terminal path.
    std::vector<char> fwd(raw.size(), 0), bwd(raw.size(), 0);
    fwd[0] = 1;
    for (const Arc& a : raw_arcs) {
      if (fwd[a.from]) fwd[a.to] = 1;
    }
    bwd[raw_terminal] = 1;
    for (auto it = raw_arcs.rbegin(); it != raw_arcs.rend(); ++it) {
      if (bwd[it->to]) bwd[it->from] = 1;
    }
    std::vector<int> remap(raw.size(), -1);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (fwd[i] && bwd[i]) {
        remap[i] = static_cast<int>(dd.nodes_.size());
        dd.nodes_.push_back({raw[i].layer, raw[i].state});
      }
    }
    for (Arc a : raw_arcs) {
      if (remap[a.from] < 0 || remap[a.to] < 0) continue;
      a.from = remap[a.from];
      a.to = remap[a.to];
      a.id = static_cast<int>(dd.arcs_.size());
      dd.arcs_.push_back(a);
    }
    dd.root_ = remap[0];
    dd.terminal_ = remap[raw_terminal];
    dd.RebuildAdjacency();
    return dd;
  }
};

void DecisionDiagram::RebuildAdjacency() {
  out_.assign(nodes_.size(), {});
  in_.assign(nodes_.size(), {});
  for (const Arc& a : arcs_) {
    out_[a.from].push_back(a.id);
    in_[a.to].push_back(a.id);
  }
  int max_layer = 0;
  for (const Node& u : nodes_) max_layer = std::max(max_layer, u.layer);
  layers_.assign(max_layer + 1, {});
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    layers_[nodes_[i].layer].push_back(static_cast<int>(i));
  }
  for (auto& layer : layers_) {
    std::sort(layer.begin(), layer.end(), [&](int a, int b) {
      return nodes_[a].state < nodes_[b].state;
    });
  }
}

std::optional<int> DecisionDiagram::FindZeroArc(int node) const {
  for (int a : out_[node]) {
    if (arcs_[a].kind == ArcKind::kZero) return a;
  }
  return std::nullopt;
}

std::optional<int> DecisionDiagram::FindOneArc(int node, int start) const {
  for (int a : out_[node]) {
    if (arcs_[a].kind == ArcKind::kOne && arcs_[a].start == start) return a;
  }
  return std::nullopt;
}

void DecisionDiagram::WriteDot(std::ostream& out) const {
  out << "digraph dd" << destination_ << " {\n  rankdir=TB;\n";
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    out << "  n" << i << " [label=\"u_" << nodes_[i].layer + 1 << "^"
        << nodes_[i].state << "\"];\n";
  }
  for (const Arc& a : arcs_) {
    out << "  n" << a.from << " -> n" << a.to;
    if (a.kind == ArcKind::kZero) {
      out << " [style=dashed];\n";
    } else {
      out << " [label=\"(" << a.start << "," << a.travel << ")\"];\n";
    }
  }
  out << "}\n";
}

DecisionDiagram Build(const Instance& instance, int destination, Alpha alpha) {
  if (instance.destinations.at(destination).time_dependent()) {
    throw Error("destination " + std::to_string(destination) +
                " has a time table; use BuildTimeDependent");
  }
  return DiagramBuilder::Make(instance, destination, alpha);
}

DecisionDiagram BuildTimeDependent(const Instance& instance, int destination,
                                   Alpha alpha) {
  if (!instance.destinations.at(destination).time_dependent()) {
    throw Error("destination " + std::to_string(destination) +
                " has no time table");
  }
  return DiagramBuilder::Make(instance, destination, alpha);
}

DecisionDiagram BuildFor(const Instance& instance, int destination,
                         Alpha alpha) {
  return DiagramBuilder::Make(instance, destination, alpha);
}

PathColumn MakePath(const DecisionDiagram& dd, std::vector<int> arcs) {
  PathColumn path;
  path.destination = dd.destination();
  std::map<int, int> delta;
  for (int id : arcs) {
    const Arc& a = dd.arcs().at(id);
    if (a.kind != ArcKind::kOne) continue;
    path.groups.push_back({a.first, a.last, a.start});
    path.travel += a.travel;
    path.trips += 1;
    path.cost += a.cost;
    delta[a.start] += 1;
    delta[a.busy_until + 1] -= 1;
  }
  int level = 0;
  int prev = 0;
  for (const auto& [t, change] : delta) {
    if (level > 0) {
      for (int s = prev; s < t; ++s) path.occupancy.emplace_back(s, level);
    }
    level += change;
    prev = t;
  }
  path.arcs = std::move(arcs);
  return path;
}

std::optional<std::vector<int>> FindPath(const DecisionDiagram& dd,
                                         std::span<const GroupSlot> groups) {
  std::vector<GroupSlot> sorted(groups.begin(), groups.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const GroupSlot& a, const GroupSlot& b) {
              return a.first < b.first;
            });
  std::vector<int> arcs;
  int node = dd.root();
  int pos = 0;
  for (const GroupSlot& g : sorted) {
    if (g.first != pos || g.last < g.first) return std::nullopt;
    for (int p = g.first; p < g.last; ++p) {
      const auto zero = dd.FindZeroArc(node);
      if (!zero) return std::nullopt;
      arcs.push_back(*zero);
      node = dd.arcs()[*zero].to;
    }
    const auto one = dd.FindOneArc(node, g.start);
    if (!one) return std::nullopt;
    arcs.push_back(*one);
    node = dd.arcs()[*one].to;
    pos = g.last + 1;
  }
  if (pos != dd.num_passengers() || node != dd.terminal()) return std::nullopt;
  return arcs;
}

std::vector<GroupTrip> ToGroups(const Instance& instance,
                                const DecisionDiagram& dd,
                                const PathColumn& path) {
  std::vector<GroupTrip> out;
  for (const GroupSlot& g : path.groups) {
    GroupTrip trip;
    trip.destination = dd.destination();
    trip.depart = g.start;
    for (int pos = g.first; pos <= g.last; ++pos) {
      const int j = dd.order()[pos];
      trip.members.push_back({j, BestTrip(instance, j, g.start)});
    }
    out.push_back(std::move(trip));
  }
  return out;
}

BigCount CountPaths(const DecisionDiagram& dd) {
  std::vector<BigCount> count(dd.nodes().size());
  count[dd.root()] = 1;
  for (const auto& layer : dd.layers()) {
    for (int u : layer) {
      if (count[u] == 0) continue;
      for (int a : dd.out_arcs(u)) count[dd.arcs()[a].to] += count[u];
    }
  }
  return count[dd.terminal()];
}

namespace {

std::vector<int> TracePrefix(const DecisionDiagram& dd,
                             const std::vector<int>& parent, int node) {
  std::vector<int> seq;
  while (parent[node] >= 0) {
    seq.push_back(parent[node]);
    node = dd.arcs()[parent[node]].from;
  }
  std::reverse(seq.begin(), seq.end());
  return seq;
}

}  // namespace

WeightedPath ShortestPath(const DecisionDiagram& dd,
                          std::span<const double> arc_lengths) {
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t num_nodes = dd.nodes().size();
  std::vector<double> dist(num_nodes, inf);
  std::vector<int> parent(num_nodes, -1);
  dist[dd.root()] = 0.0;
  for (const auto& layer : dd.layers()) {
    for (int v : layer) {
      for (int a : dd.in_arcs(v)) {
        const Arc& arc = dd.arcs()[a];
        if (dist[arc.from] == inf) continue;
        const double cand = dist[arc.from] + arc_lengths[a];
        bool better = cand < dist[v];
        if (!better && cand == dist[v] && parent[v] >= 0) {
          std::vector<int> mine = TracePrefix(dd, parent, arc.from);
          mine.push_back(a);
          better = mine < TracePrefix(dd, parent, v);
        }
        if (better) {
          dist[v] = cand;
          parent[v] = a;
        }
      }
    }
  }
  WeightedPath out;
  out.length = dist[dd.terminal()];
  out.path = MakePath(dd, TracePrefix(dd, parent, dd.terminal()));
  return out;
}

std::vector<WeightedPath> KShortestPaths(const DecisionDiagram& dd,
                                         std::span<const double> arc_lengths,
                                         int k) {
  struct Partial {
    double length;
    std::vector<int> arcs;
  };
  auto less = [](const Partial& a, const Partial& b) {
    if (a.length != b.length) return a.length < b.length;
    return a.arcs < b.arcs;
  };
  std::vector<std::vector<Partial>> best(dd.nodes().size());
  best[dd.root()].push_back({0.0, {}});
  for (const auto& layer : dd.layers()) {
    for (int v : layer) {
      if (v == dd.root()) continue;
      std::vector<Partial> cand;
      for (int a : dd.in_arcs(v)) {
        for (const Partial& p : best[dd.arcs()[a].from]) {
          Partial ext{p.length + arc_lengths[a], p.arcs};
          ext.arcs.push_back(a);
          cand.push_back(std::move(ext));
        }
      }
      const std::size_t keep = std::min<std::size_t>(cand.size(), k);
      std::partial_sort(cand.begin(), cand.begin() + keep, cand.end(), less);
      cand.resize(keep);
      best[v] = std::move(cand);
    }
  }
  std::vector<WeightedPath> out;
  for (Partial& p : best[dd.terminal()]) {
    out.push_back({MakePath(dd, std::move(p.arcs)), p.length});
  }
  return out;
}

PropertyReport CheckProperties(const Instance& instance,
                               const DecisionDiagram& dd, int max_passengers) {
  const int n = dd.num_passengers();
  if (n > max_passengers) {
    throw EnumerationRefused("destination " +
                             std::to_string(dd.destination()) + " has " +
                             std::to_string(n) + " passengers > limit " +
                             std::to_string(max_passengers));
  }
  PropertyReport report;
  auto fail = [&](bool PropertyReport::*flag, std::string msg) {
    report.*flag = false;
    report.failures.push_back(std::move(msg));
  };

  std::vector<std::vector<int>> times(n);
  for (int pos = 0; pos < n; ++pos) {
    times[pos] = AdmissibleTimes(instance, dd.order()[pos]);
  }

  // Layer and state algebra: together these force every root-terminal path
  // to close each passenger into exactly one contiguous group.
  if (dd.nodes()[dd.root()].layer != 0 || dd.nodes()[dd.root()].state != 0 ||
      dd.layers().front().size() != 1) {
    fail(&PropertyReport::dd1, "root is not the unique layer-0 node");
  }
  if (dd.nodes()[dd.terminal()].layer != n ||
      dd.nodes()[dd.terminal()].state != 0 ||
      dd.layers().back().size() != 1) {
    fail(&PropertyReport::dd1, "terminal is not the unique last-layer node");
  }
  for (const Arc& a : dd.arcs()) {
    const Node& u = dd.nodes()[a.from];
    const Node& v = dd.nodes()[a.to];
    const std::string tag = "arc " + std::to_string(a.id);
    if (v.layer != u.layer + 1) fail(&PropertyReport::dd1, tag + " skips a layer");
    if (u.state >= instance.cv_capacity || v.state >= instance.cv_capacity) {
      fail(&PropertyReport::dd1, tag + " touches a state >= capacity");
    }
    if (a.kind == ArcKind::kZero) {
      if (v.state != u.state + 1) {
        fail(&PropertyReport::dd1, tag + ": zero-arc must add one waiting");
      }
      continue;
    }
    if (v.state != 0) fail(&PropertyReport::dd1, tag + ": one-arc must close");
    if (a.first != u.layer - u.state || a.last != u.layer) {
      fail(&PropertyReport::dd1, tag + ": group does not end at its layer");
      continue;
    }
    int travel = 0;
    for (int pos = a.first; pos <= a.last; ++pos) {
      const int j = dd.order()[pos];
      if (!std::binary_search(times[pos].begin(), times[pos].end(), a.start)) {
        fail(&PropertyReport::dd2, tag + ": passenger " + std::to_string(j) +
                                       " misses its window at t=" +
                                       std::to_string(a.start));
        continue;
      }
      travel +=
          TravelTime(instance, j, a.start, BestTrip(instance, j, a.start));
    }
    if (report.dd2 && travel != a.travel) {
      fail(&PropertyReport::dd2, tag + ": stored travel time is stale");
    }
  }

  // DD-3: every contiguous capacity-feasible grouping with every shared
  // departure time must be a path.
  std::vector<GroupSlot> slots;
  std::int64_t found = 0;
  std::function<void(int)> recurse = [&](int pos) {
    if (pos == n) {
      ++report.groupings_checked;
      if (FindPath(dd, slots)) {
        ++found;
      } else if (report.failures.size() < 20) {
        std::string desc = "missing path for grouping";
        for (const GroupSlot& g : slots) {
          desc += " [" + std::to_string(g.first) + ".." +
                  std::to_string(g.last) + "]@" + std::to_string(g.start);
        }
        fail(&PropertyReport::dd3, desc);
      } else {
        report.dd3 = false;
      }
      return;
    }
    std::vector<int> shared = times[pos];
    for (int last = pos; last < n && last - pos < instance.cv_capacity;
         ++last) {
      if (last > pos) shared = Intersect(shared, times[last]);
      if (shared.empty()) break;
      for (int t : shared) {
        slots.push_back({pos, last, t});
        recurse(last + 1);
        slots.pop_back();
      }
    }
  };
  if (n > 0) recurse(0);
  const BigCount paths = CountPaths(dd);
  if (n > 0 && paths != BigCount(found)) {
    fail(&PropertyReport::dd1,
         "diagram has " + paths.str() + " paths but " + std::to_string(found) +
             " distinct groupings map onto it");
  }
  return report;
}

DecisionDiagram WithoutArc(const DecisionDiagram& dd, int arc_id) {
  DecisionDiagram copy = dd;
  copy.arcs_.erase(copy.arcs_.begin() + arc_id);
  for (std::size_t i = 0; i < copy.arcs_.size(); ++i) {
    copy.arcs_[i].id = static_cast<int>(i);
  }
  copy.RebuildAdjacency();
  return copy;
}

}  // namespace lastmile::dd

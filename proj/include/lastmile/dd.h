#ifndef LASTMILE_DD_H_
#define LASTMILE_DD_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "lastmile/core.h"

namespace lastmile::dd {

using BigCount = boost::multiprecision::cpp_int;

// A passenger whose admissible departure set is empty.
class InfeasiblePassenger : public Error {
 public:
  InfeasiblePassenger(int passenger, const std::string& what)
      : Error(what), passenger_(passenger) {}
  int passenger() const { return passenger_; }

 private:
  int passenger_;
};

class EnumerationRefused : public Error {
 public:
  using Error::Error;
};

// Departure times from the terminal that land passenger j inside its arrival
// window when riding alone: [max(r - Tw - tau', first train), r + Tw - tau'].
// "First train" is the earliest terminal arrival among trips serving the
// passenger's origin.
struct DepartureWindow {
  int earliest = 0;
  int latest = -1;
  bool empty() const { return earliest > latest; }
  friend bool operator==(const DepartureWindow&,
                         const DepartureWindow&) = default;
};

DepartureWindow ComputeDepartureWindow(const Instance& instance, int passenger);

// Sorted departure times admissible for the passenger under the destination's
// time table (or the static window when it has none).
std::vector<int> AdmissibleTimes(const Instance& instance, int passenger);

enum class ArcKind { kZero, kOne };

struct Node {
  int layer = 0;  // 0 .. n_d; layer L decides the passenger at position L
  int state = 0;  // passengers still waiting for a group before that one
};

struct Arc {
  int id = 0;
  int from = 0;
  int to = 0;
  ArcKind kind = ArcKind::kZero;
  // One-arcs only.
  int start = 0;        // CV departure time
  int travel = 0;       // summed travel time of the group
  double cost = 0.0;    // alpha * travel + (1 - alpha)
  int first = 0;        // group = order[first .. last]
  int last = 0;
  int busy_until = 0;   // last time step the CV is away
};

class DecisionDiagram {
 public:
  int destination() const { return destination_; }
  // Passenger ids sorted by requested arrival, ties by id.
  const std::vector<int>& order() const { return order_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  const std::vector<int>& out_arcs(int node) const { return out_[node]; }
  const std::vector<int>& in_arcs(int node) const { return in_[node]; }
  // Node ids grouped by layer, each layer sorted by state.
  const std::vector<std::vector<int>>& layers() const { return layers_; }
  int root() const { return root_; }
  int terminal() const { return terminal_; }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  int num_passengers() const { return static_cast<int>(order_.size()); }

  // Arc leaving `node` that is a zero-arc, or the one-arc starting at `t`.
  std::optional<int> FindZeroArc(int node) const;
  std::optional<int> FindOneArc(int node, int start) const;

  // Graphviz rendering; one-arcs are labelled "(t, travel)".
  void WriteDot(std::ostream& out) const;

 private:
  friend class DiagramBuilder;
  friend DecisionDiagram WithoutArc(const DecisionDiagram& dd, int arc_id);
  void RebuildAdjacency();

  int destination_ = 0;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
  std::vector<std::vector<int>> layers_;
  int root_ = 0;
  int terminal_ = 0;
};

// Diagram of all contiguous groupings of the destination's passengers with
// every shared departure time, pruned to arcs on some root-terminal path.
// Throws InfeasiblePassenger if a passenger has an empty window.
DecisionDiagram Build(const Instance& instance, int destination, Alpha alpha);

// Variant using the destination's departure-time dependent legs; one-arcs
// exist for every t in the intersection of the group's admissible sets.
DecisionDiagram BuildTimeDependent(const Instance& instance, int destination,
                                   Alpha alpha);

// Build or BuildTimeDependent depending on the destination.
DecisionDiagram BuildFor(const Instance& instance, int destination,
                         Alpha alpha);

struct GroupSlot {
  int first = 0;  // positions in DecisionDiagram::order()
  int last = 0;
  int start = 0;
  friend bool operator==(const GroupSlot&, const GroupSlot&) = default;
};

struct PathColumn {
  int destination = 0;
  std::vector<int> arcs;          // every arc, root to terminal
  std::vector<GroupSlot> groups;  // one per one-arc
  std::int64_t travel = 0;
  std::int64_t trips = 0;
  double cost = 0.0;
  // (t, number of this path's CVs away at t), sorted by t, zeros omitted.
  std::vector<std::pair<int, int>> occupancy;
};

PathColumn MakePath(const DecisionDiagram& dd, std::vector<int> arcs);

// The path realizing the given groups and departure times, if any.
std::optional<std::vector<int>> FindPath(const DecisionDiagram& dd,
                                         std::span<const GroupSlot> groups);

// Schedule fragment for the path, trains chosen by BestTrip.
std::vector<GroupTrip> ToGroups(const Instance& instance,
                                const DecisionDiagram& dd,
                                const PathColumn& path);

BigCount CountPaths(const DecisionDiagram& dd);

struct WeightedPath {
  PathColumn path;
  double length = 0.0;
};

// Minimum-length root-terminal path; equal lengths resolve to the
// lexicographically smallest arc-id sequence.
WeightedPath ShortestPath(const DecisionDiagram& dd,
                          std::span<const double> arc_lengths);

// The k shortest distinct paths in nondecreasing length with the same
// tie-break; fewer if the diagram has fewer paths.
std::vector<WeightedPath> KShortestPaths(const DecisionDiagram& dd,
                                         std::span<const double> arc_lengths,
                                         int k);

struct PropertyReport {
  bool dd1 = true;  // every path covers each passenger exactly once
  bool dd2 = true;  // every one-arc lands its group inside their windows
  bool dd3 = true;  // every contiguous feasible grouping has its path
  std::int64_t groupings_checked = 0;
  std::vector<std::string> failures;
  bool ok() const { return dd1 && dd2 && dd3; }
};

// Structural checks on every arc plus exhaustive enumeration of contiguous
// groupings with all shared departure times. Throws EnumerationRefused when
// the destination has more than `max_passengers` passengers.
PropertyReport CheckProperties(const Instance& instance,
                               const DecisionDiagram& dd,
                               int max_passengers = 15);

// Test hook: copy of `dd` without arc `arc_id` (not re-pruned).
DecisionDiagram WithoutArc(const DecisionDiagram& dd, int arc_id);

}  // namespace lastmile::dd

#endif  // LASTMILE_DD_H_

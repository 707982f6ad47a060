#ifndef LASTMILE_CORE_H_
#define LASTMILE_CORE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lastmile {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An instance that breaks its own invariants (bad ids, short horizon, ...).
class InstanceError : public Error {
 public:
  using Error::Error;
};

// A schedule that references passengers, trips or destinations that do not
// exist. Distinct from constraint violations, which are reported as values.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// best_trip() found no trip serving the origin that reaches the terminal in
// time.
class UnreachableDeparture : public Error {
 public:
  using Error::Error;
};

// Weight of travel time against number of CV trips, kept as an exact
// fraction num/den in [0, 1] so objective comparisons can be done on
// integers.
class Alpha {
 public:
  constexpr Alpha() = default;
  Alpha(std::int64_t num, std::int64_t den);

  // Accepts "0.25", "1", "3/10".
  static Alpha Parse(std::string_view text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / den_; }
  std::string ToString() const;

  friend bool operator==(const Alpha&, const Alpha&) = default;

 private:
  std::int64_t num_ = 1;
  std::int64_t den_ = 1;
};

struct TransitTrip {
  int id = 0;
  // station -> departure time; stations the trip skips are absent.
  std::map<int, int> departures;
  int terminal_arrival = 0;

  std::optional<int> DepartureFrom(int station) const;
};

struct TravelLegs {
  int to = 0;
  int back = 0;
  friend bool operator==(const TravelLegs&, const TravelLegs&) = default;
};

struct Destination {
  int id = 0;
  int to_time = 0;    // terminal -> destination, boarding included
  int stop_time = 0;  // dwell at the destination
  int back_time = 0;  // destination -> terminal
  // Departure-time dependent legs; empty for the static model.
  std::map<int, TravelLegs> time_table;

  bool time_dependent() const { return !time_table.empty(); }
  int ToTimeAt(int depart) const;
  int RoundTripAt(int depart) const;
  int round_trip() const { return to_time + stop_time + back_time; }
};

struct Passenger {
  int id = 0;
  int origin = 0;
  int destination = 0;
  int requested_arrival = 0;
};

struct Instance {
  std::vector<TransitTrip> trips;
  std::vector<Destination> destinations;
  std::vector<Passenger> passengers;
  int fleet_size = 1;
  int cv_capacity = 1;
  int window = 0;
  int horizon = 1;

  // Passenger indices per destination, in id order.
  std::vector<std::vector<int>> PassengersByDestination() const;
  // Earliest terminal arrival among trips serving `station`; nullopt if the
  // station is not served at all.
  std::optional<int> EarliestArrivalServing(int station) const;
};

// Throws InstanceError when `instance` violates a structural invariant: ids
// must equal positions, every passenger origin must be served, departures
// precede terminal arrival, every departure a passenger could take leaves a
// round trip ending by the horizon, and time tables cover the horizon.
void CheckInstance(const Instance& instance);

struct Assignment {
  int passenger = 0;
  int trip = 0;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct GroupTrip {
  int destination = 0;
  int depart = 0;
  std::vector<Assignment> members;
  friend bool operator==(const GroupTrip&, const GroupTrip&) = default;
};

struct Schedule {
  std::vector<GroupTrip> groups;
  std::int64_t travel = 0;  // sum of per-passenger travel times
  std::int64_t trips = 0;   // number of CV trips
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

// alpha * travel + (1 - alpha) * trips.
double Objective(const Schedule& schedule, Alpha alpha);
double Objective(std::int64_t travel, std::int64_t trips, Alpha alpha);
// The objective multiplied by alpha.den(); exact.
std::int64_t ScaledObjective(std::int64_t travel, std::int64_t trips,
                             Alpha alpha);

// (depart + tau'_d) - theta_trip(origin). Throws StructuralError when the
// trip skips the origin or reaches the terminal after `depart`.
int TravelTime(const Instance& instance, int passenger, int depart, int trip);

// Trip serving the passenger's origin with the latest origin departure among
// those at the terminal by `depart`; ties go to the lowest trip id.
int BestTrip(const Instance& instance, int passenger, int depart);
std::optional<int> TryBestTrip(const Instance& instance, int passenger,
                               int depart);

// Recomputes travel and trips from the assignments.
Schedule Summarize(const Instance& instance, Schedule schedule);

enum class ViolationKind {
  kCoverage,
  kGroupSize,
  kDestination,
  kTimeWindow,
  kTrainOrder,
  kFleet,
};

std::string_view ToString(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string message;
  int time = -1;  // set for fleet violations
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool Has(ViolationKind kind) const;
};

// Lists every constraint the schedule breaks. A CV leaving at t is away
// during [t, t + tau_d - 1] and available again at t + tau_d.
ValidationReport Validate(const Instance& instance, const Schedule& schedule);

}  // namespace lastmile

#endif  // LASTMILE_CORE_H_

#include "lastmile/core.h"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <set>
#include <sstream>

namespace lastmile {

Alpha::Alpha(std::int64_t num, std::int64_t den) {
  if (den <= 0 || num < 0 || num > den) {
    throw Error("alpha must be a fraction in [0, 1]");
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

Alpha Alpha::Parse(std::string_view text) {
  auto parse_int = [&](std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw Error("cannot parse alpha '" + std::string(text) + "'");
    }
    return v;
  };
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    return Alpha(parse_int(text.substr(0, slash)),
                 parse_int(text.substr(slash + 1)));
  }
  const auto dot = text.find('.');
  if (dot == std::string_view::npos) return Alpha(parse_int(text), 1);
  const std::string_view whole = text.substr(0, dot);
  const std::string_view frac = text.substr(dot + 1);
  if (frac.size() > 12) throw Error("alpha has too many decimals");
  std::int64_t den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  const std::int64_t w = whole.empty() ? 0 : parse_int(whole);
  const std::int64_t f = frac.empty() ? 0 : parse_int(frac);
  return Alpha(w * den + f, den);
}

std::string Alpha::ToString() const {
  if (den_ == 1) return std::to_string(num_);
  // Exact decimal when the denominator is 2^a 5^b, fraction otherwise.
  std::int64_t d = den_;
  int twos = 0, fives = 0;
  while (d % 2 == 0) d /= 2, ++twos;
  while (d % 5 == 0) d /= 5, ++fives;
  if (d != 1) return std::to_string(num_) + "/" + std::to_string(den_);
  const int digits = std::max(twos, fives);
  std::int64_t scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  const std::int64_t scaled = num_ * (scale / den_);
  std::string frac = std::to_string(scaled % scale);
  frac.insert(0, digits - frac.size(), '0');
  return std::to_string(scaled / scale) + "." + frac;
}

std::optional<int> TransitTrip::DepartureFrom(int station) const {
  auto it = departures.find(station);
  if (it == departures.end()) return std::nullopt;
  return it->second;
}

int Destination::ToTimeAt(int depart) const {
  if (time_table.empty()) return to_time;
  auto it = time_table.find(depart);
  if (it == time_table.end()) {
    throw InstanceError("destination " + std::to_string(id) +
                        " has no time table entry for t=" +
                        std::to_string(depart));
  }
  return it->second.to;
}

int Destination::RoundTripAt(int depart) const {
  if (time_table.empty()) return round_trip();
  auto it = time_table.find(depart);
  if (it == time_table.end()) {
    throw InstanceError("destination " + std::to_string(id) +
                        " has no time table entry for t=" +
                        std::to_string(depart));
  }
  return it->second.to + stop_time + it->second.back;
}

std::vector<std::vector<int>> Instance::PassengersByDestination() const {
  std::vector<std::vector<int>> out(destinations.size());
  for (const Passenger& p : passengers) out[p.destination].push_back(p.id);
  return out;
}

std::optional<int> Instance::EarliestArrivalServing(int station) const {
  std::optional<int> best;
  for (const TransitTrip& c : trips) {
    if (!c.departures.contains(station)) continue;
    if (!best || c.terminal_arrival < *best) best = c.terminal_arrival;
  }
  return best;
}

namespace {

std::string Tag(std::string_view what, int id) {
  return std::string(what) + " " + std::to_string(id);
}

}  // namespace

void CheckInstance(const Instance& instance) {
  if (instance.fleet_size < 0) throw InstanceError("fleet_size must be >= 0");
  if (instance.cv_capacity < 1) throw InstanceError("cv_capacity must be >= 1");
  if (instance.window < 0) throw InstanceError("window must be >= 0");
  if (instance.horizon < 1) throw InstanceError("horizon must be >= 1");

  for (std::size_t i = 0; i < instance.trips.size(); ++i) {
    const TransitTrip& c = instance.trips[i];
    if (c.id != static_cast<int>(i)) {
      throw InstanceError("trip ids must be 0..n-1 in order; found " +
                          std::to_string(c.id) + " at position " +
                          std::to_string(i));
    }
    if (c.terminal_arrival < 1 || c.terminal_arrival > instance.horizon) {
      throw InstanceError(Tag("trip", c.id) +
                          ": terminal_arrival outside [1, horizon]");
    }
    std::set<int> seen;
    for (const auto& [station, t] : c.departures) {
      if (t < 0 || t >= c.terminal_arrival) {
        throw InstanceError(Tag("trip", c.id) + ": departure from station " +
                            std::to_string(station) +
                            " must precede terminal arrival");
      }
      if (!seen.insert(t).second) {
        throw InstanceError(Tag("trip", c.id) + ": repeated departure time");
      }
    }
  }

  for (std::size_t i = 0; i < instance.destinations.size(); ++i) {
    const Destination& d = instance.destinations[i];
    if (d.id != static_cast<int>(i)) {
      throw InstanceError("destination ids must be 0..K-1 in order");
    }
    if (d.to_time < 0 || d.stop_time < 0 || d.back_time < 0 ||
        d.round_trip() < 1) {
      throw InstanceError(Tag("destination", d.id) +
                          ": travel legs must be >= 0 with round trip >= 1");
    }
    if (d.time_dependent()) {
      for (int t = 1; t <= instance.horizon; ++t) {
        auto it = d.time_table.find(t);
        if (it == d.time_table.end()) {
          throw InstanceError(Tag("destination", d.id) +
                              ": time table misses t=" + std::to_string(t));
        }
        if (it->second.to < 0 || it->second.back < 0 ||
            it->second.to + d.stop_time + it->second.back < 1) {
          throw InstanceError(Tag("destination", d.id) +
                              ": bad time table entry at t=" +
                              std::to_string(t));
        }
      }
    }
  }

  for (std::size_t i = 0; i < instance.passengers.size(); ++i) {
    const Passenger& p = instance.passengers[i];
    if (p.id != static_cast<int>(i)) {
      throw InstanceError("passenger ids must be 0..n-1 in order");
    }
    if (p.destination < 0 ||
        p.destination >= static_cast<int>(instance.destinations.size())) {
      throw InstanceError(Tag("passenger", p.id) + ": unknown destination");
    }
    if (!instance.EarliestArrivalServing(p.origin)) {
      throw InstanceError(Tag("passenger", p.id) + ": origin station " +
                          std::to_string(p.origin) + " is not served");
    }
    const Destination& d = instance.destinations[p.destination];
    // Every departure that lands within the window must leave a round trip
    // that ends by the horizon.
    if (!d.time_dependent()) {
      const int latest = p.requested_arrival + instance.window - d.to_time;
      if (latest + d.round_trip() > instance.horizon) {
        throw InstanceError(Tag("passenger", p.id) + ": departure t=" +
                            std::to_string(latest) +
                            " returns after the horizon");
      }
      continue;
    }
    for (int t = 1; t <= instance.horizon; ++t) {
      const int arrive = t + d.ToTimeAt(t);
      if (arrive < p.requested_arrival - instance.window ||
          arrive > p.requested_arrival + instance.window) {
        continue;
      }
      if (t + d.RoundTripAt(t) > instance.horizon) {
        throw InstanceError(Tag("passenger", p.id) + ": departure t=" +
                            std::to_string(t) + " returns after the horizon");
      }
    }
  }
}

double Objective(std::int64_t travel, std::int64_t trips, Alpha alpha) {
  return static_cast<double>(ScaledObjective(travel, trips, alpha)) /
         static_cast<double>(alpha.den());
}

double Objective(const Schedule& schedule, Alpha alpha) {
  return Objective(schedule.travel, schedule.trips, alpha);
}

std::int64_t ScaledObjective(std::int64_t travel, std::int64_t trips,
                             Alpha alpha) {
  return alpha.num() * travel + (alpha.den() - alpha.num()) * trips;
}

int TravelTime(const Instance& instance, int passenger, int depart, int trip) {
  if (passenger < 0 ||
      passenger >= static_cast<int>(instance.passengers.size())) {
    throw StructuralError(Tag("unknown passenger", passenger));
  }
  if (trip < 0 || trip >= static_cast<int>(instance.trips.size())) {
    throw StructuralError(Tag("unknown trip", trip));
  }
  const Passenger& p = instance.passengers[passenger];
  const TransitTrip& c = instance.trips[trip];
  const auto leave = c.DepartureFrom(p.origin);
  if (!leave) {
    throw StructuralError(Tag("trip", trip) + " does not serve station " +
                          std::to_string(p.origin));
  }
  if (c.terminal_arrival > depart) {
    throw StructuralError(Tag("trip", trip) + " reaches the terminal at " +
                          std::to_string(c.terminal_arrival) +
                          ", after departure " + std::to_string(depart));
  }
  const Destination& d = instance.destinations.at(p.destination);
  return depart + d.ToTimeAt(depart) - *leave;
}

std::optional<int> TryBestTrip(const Instance& instance, int passenger,
                               int depart) {
  const Passenger& p = instance.passengers.at(passenger);
  std::optional<int> best;
  int best_leave = 0;
  for (const TransitTrip& c : instance.trips) {
    if (c.terminal_arrival > depart) continue;
    const auto leave = c.DepartureFrom(p.origin);
    if (!leave) continue;
    if (!best || *leave > best_leave) {
      best = c.id;
      best_leave = *leave;
    }
  }
  return best;
}

int BestTrip(const Instance& instance, int passenger, int depart) {
  if (auto trip = TryBestTrip(instance, passenger, depart)) return *trip;
  throw UnreachableDeparture("passenger " + std::to_string(passenger) +
                             " has no trip reaching the terminal by t=" +
                             std::to_string(depart));
}

Schedule Summarize(const Instance& instance, Schedule schedule) {
  schedule.travel = 0;
  schedule.trips = static_cast<std::int64_t>(schedule.groups.size());
  for (const GroupTrip& g : schedule.groups) {
    for (const Assignment& a : g.members) {
      schedule.travel += TravelTime(instance, a.passenger, g.depart, a.trip);
    }
  }
  return schedule;
}

std::string_view ToString(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kCoverage: return "coverage";
    case ViolationKind::kGroupSize: return "group-size";
    case ViolationKind::kDestination: return "destination";
    case ViolationKind::kTimeWindow: return "time-window";
    case ViolationKind::kTrainOrder: return "train-order";
    case ViolationKind::kFleet: return "fleet";
  }
  return "unknown";
}

bool ValidationReport::Has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

ValidationReport Validate(const Instance& instance, const Schedule& schedule) {
  const int n = static_cast<int>(instance.passengers.size());
  const int num_trips = static_cast<int>(instance.trips.size());
  const int num_dest = static_cast<int>(instance.destinations.size());
  for (const GroupTrip& g : schedule.groups) {
    if (g.destination < 0 || g.destination >= num_dest) {
      throw StructuralError(Tag("schedule references unknown destination",
                                g.destination));
    }
    for (const Assignment& a : g.members) {
      if (a.passenger < 0 || a.passenger >= n) {
        throw StructuralError(
            Tag("schedule references unknown passenger", a.passenger));
      }
      if (a.trip < 0 || a.trip >= num_trips) {
        throw StructuralError(Tag("schedule references unknown trip", a.trip));
      }
    }
  }

  ValidationReport report;
  auto add = [&](ViolationKind kind, std::string msg, int t = -1) {
    report.violations.push_back({kind, std::move(msg), t});
  };

  std::vector<int> seen(n, 0);
  for (std::size_t gi = 0; gi < schedule.groups.size(); ++gi) {
    const GroupTrip& g = schedule.groups[gi];
    const Destination& d = instance.destinations[g.destination];
    const std::string group = "group " + std::to_string(gi);
    if (g.members.empty()) {
      add(ViolationKind::kGroupSize, group + " is empty");
    }
    if (static_cast<int>(g.members.size()) > instance.cv_capacity) {
      add(ViolationKind::kGroupSize,
          group + " carries " + std::to_string(g.members.size()) +
              " passengers > capacity " +
              std::to_string(instance.cv_capacity));
    }
    if (d.time_dependent() && !d.time_table.contains(g.depart)) {
      add(ViolationKind::kTimeWindow,
          group + " departs at t=" + std::to_string(g.depart) +
              " outside the time table");
      for (const Assignment& a : g.members) ++seen[a.passenger];
      continue;
    }
    const int arrive = g.depart + d.ToTimeAt(g.depart);
    for (const Assignment& a : g.members) {
      ++seen[a.passenger];
      const Passenger& p = instance.passengers[a.passenger];
      const std::string who = "passenger " + std::to_string(p.id);
      if (p.destination != g.destination) {
        add(ViolationKind::kDestination,
            who + " rides to destination " + std::to_string(g.destination) +
                " but requested " + std::to_string(p.destination));
      }
      if (arrive < p.requested_arrival - instance.window ||
          arrive > p.requested_arrival + instance.window) {
        add(ViolationKind::kTimeWindow,
            who + " arrives at " + std::to_string(arrive) + ", outside [" +
                std::to_string(p.requested_arrival - instance.window) + ", " +
                std::to_string(p.requested_arrival + instance.window) + "]");
      }
      const TransitTrip& c = instance.trips[a.trip];
      const auto leave = c.DepartureFrom(p.origin);
      if (!leave) {
        add(ViolationKind::kTrainOrder,
            who + " assigned to trip " + std::to_string(c.id) +
                " which skips station " + std::to_string(p.origin));
      } else if (c.terminal_arrival > g.depart) {
        add(ViolationKind::kTrainOrder,
            who + " reaches the terminal at " +
                std::to_string(c.terminal_arrival) + " after the CV leaves at " +
                std::to_string(g.depart));
      } else if (g.depart + d.ToTimeAt(g.depart) - *leave < 0) {
        add(ViolationKind::kTrainOrder, who + " has negative travel time");
      }
    }
  }
  for (int j = 0; j < n; ++j) {
    if (seen[j] != 1) {
      add(ViolationKind::kCoverage,
          "passenger " + std::to_string(j) + " is in " +
              std::to_string(seen[j]) + " groups");
    }
  }

  // Fleet availability, swept over every time some CV is away.
  std::map<int, int> delta;
  for (const GroupTrip& g : schedule.groups) {
    const Destination& d = instance.destinations[g.destination];
    if (d.time_dependent() && !d.time_table.contains(g.depart)) continue;
    delta[g.depart] += 1;
    delta[g.depart + d.RoundTripAt(g.depart)] -= 1;
  }
  int active = 0;
  int prev = 0;
  bool first = true;
  for (const auto& [t, change] : delta) {
    if (!first && active > instance.fleet_size) {
      for (int s = prev; s < t; ++s) {
        add(ViolationKind::kFleet,
            "CV capacity exceeded at t=" + std::to_string(s) + ": " +
                std::to_string(active) + " active > m=" +
                std::to_string(instance.fleet_size),
            s);
      }
    }
    active += change;
    prev = t;
    first = false;
  }
  return report;
}

}  // namespace lastmile

#include "lastmile/instgen.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace lastmile {

std::int64_t UniformInt(std::mt19937_64& rng, std::int64_t lo,
                        std::int64_t hi) {
  if (hi < lo) throw Error("UniformInt: empty range");
  const std::uint64_t span =
      static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(rng());  // full 2^64 range
  // Largest multiple of span representable; draws at or above it are
  // rejected.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      (std::numeric_limits<std::uint64_t>::max() % span + 1) % span;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw > limit);
  return lo + static_cast<std::int64_t>(draw % span);
}

namespace {

constexpr int kStations = 4;
constexpr int kEarliestRequest = 90;
constexpr int kLatestRequest = 210;

TransitTrip MakeTrip(int id, std::initializer_list<std::pair<int, int>> stops,
                     int terminal) {
  TransitTrip trip;
  trip.id = id;
  for (auto [station, t] : stops) trip.departures[station] = t;
  trip.terminal_arrival = terminal;
  return trip;
}

}  // namespace

Instance Generate(const GenConfig& config) {
  if (config.num_destinations < 1) {
    throw GenerationError("need at least one destination");
  }
  if (config.passengers_per_destination < 1) {
    throw GenerationError("need at least one passenger per destination");
  }
  if (config.cv_capacity < 1) throw GenerationError("cv_capacity must be >= 1");
  if (config.window < 0) throw GenerationError("window must be >= 0");
  const double fraction = config.fleet_fraction.value_or(
      config.variant == TrainVariant::kExpress ? 0.1 : 0.06);
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw GenerationError("fleet_fraction must lie in (0, 1]");
  }

  std::mt19937_64 rng(config.seed);
  Instance instance;
  instance.cv_capacity = config.cv_capacity;
  instance.window = config.window;

  int max_round_trip = 0;
  for (int d = 0; d < config.num_destinations; ++d) {
    const int base = static_cast<int>(UniformInt(rng, 10, 20));
    Destination dest;
    dest.id = d;
    dest.to_time = base + 1;
    dest.stop_time = 1;
    dest.back_time = base;
    max_round_trip = std::max(max_round_trip, dest.round_trip());
    instance.destinations.push_back(dest);
  }

  int next_id = 0;
  for (int d = 0; d < config.num_destinations; ++d) {
    for (int i = 0; i < config.passengers_per_destination; ++i) {
      Passenger p;
      p.id = next_id++;
      p.destination = d;
      p.origin = static_cast<int>(UniformInt(rng, 1, kStations));
      p.requested_arrival =
          static_cast<int>(UniformInt(rng, kEarliestRequest, kLatestRequest));
      instance.passengers.push_back(p);
    }
  }

  if (config.variant == TrainVariant::kRegular) {
    int id = 0;
    for (int start = 0; start <= 210; start += 30) {
      instance.trips.push_back(MakeTrip(
          id++, {{4, start}, {3, start + 10}, {2, start + 20}, {1, start + 30}},
          start + 40));
    }
  } else {
    int id = 0;
    for (int start = 0; start <= 180; start += 30) {
      instance.trips.push_back(
          MakeTrip(id++, {{4, start}, {2, start + 10}}, start + 20));
    }
    for (int start = 20; start <= 200; start += 30) {
      instance.trips.push_back(
          MakeTrip(id++, {{3, start}, {1, start + 10}}, start + 15));
    }
  }

  const int n = static_cast<int>(instance.passengers.size());
  instance.fleet_size = static_cast<int>(std::lround(fraction * n));
  if (instance.fleet_size < 1) {
    throw GenerationError("fleet rounds to zero vehicles for n=" +
                          std::to_string(n));
  }
  int last_train = 0;
  for (const TransitTrip& c : instance.trips) {
    last_train = std::max(last_train, c.terminal_arrival);
  }
  instance.horizon = config.horizon.value_or(std::max(
      kLatestRequest + config.window + max_round_trip + 1, last_train));

  for (const Passenger& p : instance.passengers) {
    const Destination& d = instance.destinations[p.destination];
    const int latest = p.requested_arrival + config.window - d.to_time;
    const auto earliest_train = instance.EarliestArrivalServing(p.origin);
    if (!earliest_train || *earliest_train > latest) {
      throw GenerationError("passenger " + std::to_string(p.id) +
                            " cannot reach the terminal before its latest "
                            "departure " +
                            std::to_string(latest));
    }
  }
  try {
    CheckInstance(instance);
  } catch (const InstanceError& e) {
    throw GenerationError(std::string("generated instance is invalid: ") +
                          e.what());
  }
  return instance;
}

nlohmann::ordered_json InstanceToJson(const Instance& instance) {
  using nlohmann::ordered_json;
  ordered_json trips = ordered_json::array();
  for (const TransitTrip& c : instance.trips) {
    ordered_json deps = ordered_json::object();
    for (const auto& [station, t] : c.departures) {
      deps[std::to_string(station)] = t;
    }
    trips.push_back({{"id", c.id},
                     {"departures", deps},
                     {"terminal_arrival", c.terminal_arrival}});
  }
  ordered_json dests = ordered_json::array();
  for (const Destination& d : instance.destinations) {
    ordered_json entry = {{"id", d.id},
                          {"to", d.to_time},
                          {"stop", d.stop_time},
                          {"back", d.back_time}};
    if (d.time_dependent()) {
      ordered_json table = ordered_json::object();
      for (const auto& [t, legs] : d.time_table) {
        table[std::to_string(t)] = {legs.to, legs.back};
      }
      entry["time_table"] = table;
    }
    dests.push_back(entry);
  }
  ordered_json passengers = ordered_json::array();
  for (const Passenger& p : instance.passengers) {
    passengers.push_back({{"id", p.id},
                          {"origin", p.origin},
                          {"dest", p.destination},
                          {"arrival", p.requested_arrival}});
  }
  return {{"trips", trips},
          {"destinations", dests},
          {"passengers", passengers},
          {"fleet_size", instance.fleet_size},
          {"cv_capacity", instance.cv_capacity},
          {"window", instance.window},
          {"horizon", instance.horizon}};
}

namespace {

const nlohmann::json& Field(const nlohmann::json& obj, const char* key,
                            const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(where + ": missing field \"" + key + "\"");
  }
  return *it;
}

int IntField(const nlohmann::json& obj, const char* key,
             const std::string& where) {
  const nlohmann::json& v = Field(obj, key, where);
  if (!v.is_number_integer()) {
    throw ParseError(where + ": field \"" + key + "\" must be an integer");
  }
  return v.get<int>();
}

int ParseKey(const std::string& key, const std::string& where) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(key, &used);
    if (used != key.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": key \"" + key + "\" is not an integer");
  }
}

const nlohmann::json& ArrayField(const nlohmann::json& obj, const char* key,
                                 const std::string& where) {
  const nlohmann::json& v = Field(obj, key, where);
  if (!v.is_array()) {
    throw ParseError(where + ": field \"" + key + "\" must be an array");
  }
  return v;
}

}  // namespace

Instance InstanceFromJson(const nlohmann::json& json) {
  Instance instance;
  const std::string root = "instance";
  for (std::size_t i = 0; const auto& t : ArrayField(json, "trips", root)) {
    const std::string where = "trips[" + std::to_string(i++) + "]";
    TransitTrip trip;
    trip.id = IntField(t, "id", where);
    const auto& deps = Field(t, "departures", where);
    if (!deps.is_object()) {
      throw ParseError(where + ": field \"departures\" must be an object");
    }
    for (const auto& [key, value] : deps.items()) {
      if (!value.is_number_integer()) {
        throw ParseError(where + ": departure for station " + key +
                         " must be an integer");
      }
      trip.departures[ParseKey(key, where)] = value.get<int>();
    }
    trip.terminal_arrival = IntField(t, "terminal_arrival", where);
    instance.trips.push_back(std::move(trip));
  }
  for (std::size_t i = 0;
       const auto& d : ArrayField(json, "destinations", root)) {
    const std::string where = "destinations[" + std::to_string(i++) + "]";
    Destination dest;
    dest.id = IntField(d, "id", where);
    dest.to_time = IntField(d, "to", where);
    dest.stop_time = IntField(d, "stop", where);
    dest.back_time = IntField(d, "back", where);
    if (auto it = d.find("time_table"); it != d.end() && !it->is_null()) {
      if (!it->is_object()) {
        throw ParseError(where + ": field \"time_table\" must be an object");
      }
      for (const auto& [key, legs] : it->items()) {
        if (!legs.is_array() || legs.size() != 2 ||
            !legs[0].is_number_integer() || !legs[1].is_number_integer()) {
          throw ParseError(where + ": time_table entry " + key +
                           " must be [to, back]");
        }
        dest.time_table[ParseKey(key, where)] = {legs[0].get<int>(),
                                                 legs[1].get<int>()};
      }
    }
    instance.destinations.push_back(std::move(dest));
  }
  for (std::size_t i = 0;
       const auto& p : ArrayField(json, "passengers", root)) {
    const std::string where = "passengers[" + std::to_string(i++) + "]";
    Passenger passenger;
    passenger.id = IntField(p, "id", where);
    passenger.origin = IntField(p, "origin", where);
    passenger.destination = IntField(p, "dest", where);
    passenger.requested_arrival = IntField(p, "arrival", where);
    instance.passengers.push_back(passenger);
  }
  instance.fleet_size = IntField(json, "fleet_size", root);
  instance.cv_capacity = IntField(json, "cv_capacity", root);
  instance.window = IntField(json, "window", root);
  instance.horizon = IntField(json, "horizon", root);
  try {
    CheckInstance(instance);
  } catch (const InstanceError& e) {
    throw ParseError(std::string("invalid instance: ") + e.what());
  }
  return instance;
}

nlohmann::json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void WriteInstance(const Instance& instance,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << InstanceToJson(instance).dump(1) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

Instance ReadInstance(const std::filesystem::path& path) {
  const nlohmann::json json = ReadJsonFile(path);
  try {
    return InstanceFromJson(json);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

nlohmann::ordered_json ScheduleToJson(const Schedule& schedule) {
  nlohmann::ordered_json groups = nlohmann::ordered_json::array();
  for (const GroupTrip& g : schedule.groups) {
    nlohmann::ordered_json members = nlohmann::ordered_json::array();
    for (const Assignment& a : g.members) {
      members.push_back({{"passenger", a.passenger}, {"trip", a.trip}});
    }
    groups.push_back(
        {{"dest", g.destination}, {"depart", g.depart}, {"members", members}});
  }
  return groups;
}

Schedule ScheduleFromJson(const nlohmann::json& json) {
  const nlohmann::json* groups = &json;
  if (json.is_object()) groups = &Field(json, "schedule", "result");
  if (!groups->is_array()) throw ParseError("schedule must be an array");
  Schedule schedule;
  for (std::size_t i = 0; const auto& g : *groups) {
    const std::string where = "schedule[" + std::to_string(i++) + "]";
    GroupTrip group;
    group.destination = IntField(g, "dest", where);
    group.depart = IntField(g, "depart", where);
    for (std::size_t k = 0; const auto& m : ArrayField(g, "members", where)) {
      const std::string mwhere = where + ".members[" + std::to_string(k++) + "]";
      group.members.push_back(
          {IntField(m, "passenger", mwhere), IntField(m, "trip", mwhere)});
    }
    schedule.groups.push_back(std::move(group));
  }
  schedule.trips = static_cast<std::int64_t>(schedule.groups.size());
  return schedule;
}

Schedule ReadSchedule(const std::filesystem::path& path) {
  const nlohmann::json json = ReadJsonFile(path);
  try {
    return ScheduleFromJson(json);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace lastmile

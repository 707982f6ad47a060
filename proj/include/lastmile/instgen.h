#ifndef LASTMILE_INSTGEN_H_
#define LASTMILE_INSTGEN_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>

#include "lastmile/core.h"
#include "json.hpp"

namespace lastmile {

// Malformed instance or schedule files. The message names the offending
// field and, for syntax errors, the byte offset.
class ParseError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

enum class TrainVariant { kRegular, kExpress };

struct GenConfig {
  int num_destinations = 10;
  int passengers_per_destination = 100;
  // Defaults to 0.06 (regular) or 0.1 (express) when unset.
  std::optional<double> fleet_fraction;
  int cv_capacity = 5;
  int window = 5;
  std::uint64_t seed = 1;
  TrainVariant variant = TrainVariant::kRegular;
  // Defaults to the smallest horizon that fits every passenger window and
  // the last train.
  std::optional<int> horizon;
};

// Uniform integer in [lo, hi] from a std::mt19937_64 stream. Rejection
// sampling on the raw 64-bit output keeps the draw free of modulo bias and
// reproducible across platforms.
std::int64_t UniformInt(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi);

// Random instance of the benchmark families.
//
// Draw order, for reproducing a stream elsewhere: first one value t^d in
// [10, 20] per destination (to = t^d + 1, stop = 1, back = t^d); then, for
// each destination in turn, per passenger an origin in [1, 4] followed by a
// requested arrival in [90, 210].
//
// Regular trains leave station 4 at 0, 30, ..., 210, call at 3, 2, 1 ten
// minutes apart and reach the terminal 40 after leaving station 4. Express
// trains come in two families: {4, 2} leaving station 4 at 0, 30, ..., 180
// (terminal +20), and {3, 1} leaving station 3 at 20, 50, ..., 200
// (terminal +15).
Instance Generate(const GenConfig& config);

nlohmann::ordered_json InstanceToJson(const Instance& instance);
Instance InstanceFromJson(const nlohmann::json& json);

void WriteInstance(const Instance& instance, const std::filesystem::path& path);
Instance ReadInstance(const std::filesystem::path& path);

nlohmann::ordered_json ScheduleToJson(const Schedule& schedule);
// Accepts either a bare schedule array or any object with a "schedule" key.
Schedule ScheduleFromJson(const nlohmann::json& json);
Schedule ReadSchedule(const std::filesystem::path& path);

// Reads and parses a JSON file, mapping syntax errors to ParseError.
nlohmann::json ReadJsonFile(const std::filesystem::path& path);

}  // namespace lastmile

#endif  // LASTMILE_INSTGEN_H_

#ifndef LASTMILE_ORACLE_H_
#define LASTMILE_ORACLE_H_

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "lastmile/core.h"

namespace lastmile::oracle {

// Refusal to enumerate: the search space is over budget or too large.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

struct OracleResult {
  bool feasible = false;
  std::optional<Schedule> schedule;
  double value = 0.0;
  std::int64_t scaled = 0;  // value * alpha.den(), exact
  std::int64_t options = 0;  // per-destination options enumerated
};

// One way to serve a single destination: groups with departure times.
struct Option {
  std::vector<GroupTrip> groups;
  std::int64_t travel = 0;
  std::int64_t trips = 0;
  std::vector<std::pair<int, int>> busy;  // [first, last] step per CV trip
};

// Departure times for which the passenger alone arrives within its window
// and some trip serving its origin is at the terminal. Computed by scanning
// 1..horizon.
std::vector<int> FeasibleTimes(const Instance& instance, int passenger);

// Every partition of the destination's passengers into runs of consecutive
// requested-arrival order (ties by id), with every shared departure time.
std::vector<Option> ContiguousOptions(const Instance& instance,
                                      int destination);
// Every set partition with blocks of at most vcap passengers.
std::vector<Option> AllOptions(const Instance& instance, int destination);

// Exhaustive minimum over contiguous options combined under the fleet limit.
// Throws BudgetExceeded when the total option count or the number of
// combination steps exceeds `budget`.
OracleResult SolveContiguous(const Instance& instance, Alpha alpha,
                             std::int64_t budget = 10'000'000);

// Same over unrestricted partitions. Throws BudgetExceeded when a
// destination has more than `max_per_destination` passengers.
OracleResult SolveUnrestricted(const Instance& instance, Alpha alpha,
                               int max_per_destination = 10,
                               std::int64_t budget = 10'000'000);

// phi(0) = 1, phi(k) = phi(k-1) + ... + phi(k-vcap), phi(<0) = 0.
boost::multiprecision::cpp_int Phi(int n, int vcap);

}  // namespace lastmile::oracle

#endif  // LASTMILE_ORACLE_H_

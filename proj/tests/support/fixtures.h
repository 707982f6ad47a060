#ifndef LASTMILE_TESTS_FIXTURES_H_
#define LASTMILE_TESTS_FIXTURES_H_

#include <filesystem>
#include <string>

#include "lastmile/core.h"
#include "lastmile/instgen.h"

namespace lastmile::testing {

inline std::filesystem::path DataPath(const std::string& name) {
  return std::filesystem::path(LASTMILE_TEST_DATA) / name;
}

// Five passengers to one destination, two trains, m = 2, vcap = 3, Tw = 1.
inline Instance Example1() { return ReadInstance(DataPath("example1.json")); }
// Groups {1,2}@3, {3,4}@5, {5}@7.
inline Schedule PDoublePrime() {
  return ReadSchedule(DataPath("p_double_prime.json"));
}
// Every passenger alone at 2, 3, 3, 6, 6.
inline Schedule PPrime() { return ReadSchedule(DataPath("p_prime.json")); }

}  // namespace lastmile::testing

#endif  // LASTMILE_TESTS_FIXTURES_H_

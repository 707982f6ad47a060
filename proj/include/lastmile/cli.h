#ifndef LASTMILE_CLI_H_
#define LASTMILE_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace lastmile::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitViolations = 1;
inline constexpr int kExitFeasible = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitLimit = 4;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitInternal = 70;

// Column order of sweep reports.
inline const std::vector<std::string> kSweepColumns = {
    "instance", "alpha",      "Tw",      "n",     "K",     "m",
    "travel_total", "trips",  "lower_bound", "gap_percent", "wall_ms",
    "nodes",    "columns",    "status"};

// Runs `lastmile <subcommand> ...`; argv[0] is the program name. Results go
// to `out`, diagnostics to `err`.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace lastmile::cli

#endif  // LASTMILE_CLI_H_

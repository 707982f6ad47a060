#include "lastmile/cli.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "lastmile/bp.h"
#include "lastmile/dd.h"
#include "lastmile/instgen.h"
#include "lastmile/milp_export.h"
#include "lastmile/oracle.h"

namespace lastmile::cli {

namespace {

// Thrown for bad flag combinations that CLI11 cannot express.
class UsageError : public Error {
 public:
  using Error::Error;
};

Alpha ParseAlphaFlag(const std::string& text) {
  try {
    return Alpha::Parse(text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

double DefaultTimeLimit() {
  if (const char* env = std::getenv("LASTMILE_TIME_LIMIT")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && *end == '\0' && v > 0.0) return v;
  }
  return 600.0;
}

int ExitFor(bp::SolveStatus status) {
  switch (status) {
    case bp::SolveStatus::kOptimal:
      return kExitOk;
    case bp::SolveStatus::kFeasible:
      return kExitFeasible;
    case bp::SolveStatus::kInfeasible:
      return kExitInfeasible;
    case bp::SolveStatus::kLimit:
      return kExitLimit;
  }
  return kExitInternal;
}

std::string FormatNumber(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream s;
  s << std::setprecision(15) << v;
  return s.str();
}

void WriteText(const std::string& path, const std::string& text,
               std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path);
  if (!file) throw Error("cannot open " + path + " for writing");
  file << text;
  if (!file) throw Error("write failed for " + path);
}

std::vector<dd::DecisionDiagram> Diagrams(const Instance& instance,
                                          Alpha alpha) {
  std::vector<dd::DecisionDiagram> out;
  for (int d = 0; d < static_cast<int>(instance.destinations.size()); ++d) {
    out.push_back(dd::BuildFor(instance, d, alpha));
  }
  return out;
}

struct SolveFlags {
  std::string engine = "bp";
  std::string alpha = "0.5";
  double time_limit = 600.0;
  bool root_only = false;
  bool no_timing = false;
  std::int64_t budget = 10'000'000;
};

// The oracle reported through the branch-and-price result type, so both
// engines share one JSON schema.
bp::SolveResult SolveWithOracle(const Instance& instance, Alpha alpha,
                                std::int64_t budget) {
  const auto start = std::chrono::steady_clock::now();
  bp::SolveResult result;
  result.lower_bound = std::numeric_limits<double>::quiet_NaN();
  result.root_bound = result.lower_bound;
  try {
    const oracle::OracleResult o =
        oracle::SolveContiguous(instance, alpha, budget);
    if (o.feasible) {
      result.status = bp::SolveStatus::kOptimal;
      result.schedule = o.schedule;
    } else {
      result.status = bp::SolveStatus::kInfeasible;
      result.message = "no contiguous schedule meets every constraint";
    }
  } catch (const oracle::BudgetExceeded& e) {
    result.status = bp::SolveStatus::kLimit;
    result.message = e.what();
  }
  if (result.schedule) {
    *result.schedule = Summarize(instance, *result.schedule);
    const ValidationReport report = Validate(instance, *result.schedule);
    if (!report.ok()) {
      throw Error("internal: oracle schedule failed validation: " +
                  report.violations.front().message);
    }
    result.objective = Objective(*result.schedule, alpha);
    result.upper_bound = result.objective;
    result.lower_bound = result.objective;
    result.root_bound = result.objective;
  }
  result.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return result;
}

bp::SolveResult SolveOne(const Instance& instance, Alpha alpha,
                         const SolveFlags& flags) {
  bp::SolveResult result;
  if (flags.engine == "oracle") {
    result = SolveWithOracle(instance, alpha, flags.budget);
  } else {
    bp::Options options;
    options.time_limit_seconds = flags.time_limit;
    options.root_only = flags.root_only;
    try {
      result = bp::BranchAndPrice(instance, alpha, options);
    } catch (const dd::InfeasiblePassenger& e) {
      result.status = bp::SolveStatus::kInfeasible;
      result.message = e.what();
      result.lower_bound = std::numeric_limits<double>::quiet_NaN();
      result.root_bound = result.lower_bound;
    }
  }
  // Reported objectives come from the schedule, not the solver.
  if (result.schedule) {
    *result.schedule = Summarize(instance, *result.schedule);
    result.objective = Objective(*result.schedule, alpha);
  }
  if (flags.no_timing) result.wall_ms = 0;
  return result;
}

int CmdGenerate(const GenConfig& base, const std::string& variant,
                const std::vector<int>& ks, const std::vector<int>& per_dests,
                int replicates, bool batch, const std::string& out_path,
                std::ostream& out) {
  GenConfig config = base;
  if (variant == "express") {
    config.variant = TrainVariant::kExpress;
  } else if (variant != "regular") {
    throw UsageError("unknown variant \"" + variant + "\"");
  }
  if (!batch) {
    config.num_destinations = ks.front();
    config.passengers_per_destination = per_dests.front();
    const Instance instance = Generate(config);
    if (out_path.empty() || out_path == "-") {
      out << InstanceToJson(instance).dump(2) << '\n';
    } else {
      WriteInstance(instance, out_path);
    }
    return kExitOk;
  }
  if (out_path.empty()) throw UsageError("--batch needs --out <directory>");
  std::filesystem::create_directories(out_path);
  for (int k : ks) {
    for (int per : per_dests) {
      for (int r = 0; r < replicates; ++r) {
        GenConfig c = config;
        c.num_destinations = k;
        c.passengers_per_destination = per;
        c.seed = config.seed + static_cast<std::uint64_t>(r);
        std::ostringstream name;
        name << "inst_K" << k << "_n" << per << "_Tw" << c.window << "_s"
             << c.seed << ".json";
        const std::filesystem::path path =
            std::filesystem::path(out_path) / name.str();
        WriteInstance(Generate(c), path);
        out << path.string() << '\n';
      }
    }
  }
  return kExitOk;
}

int CmdSolve(const std::string& instance_path, const SolveFlags& flags,
             const std::string& out_path, std::ostream& out) {
  const Instance instance = ReadInstance(instance_path);
  const Alpha alpha = ParseAlphaFlag(flags.alpha);
  if (flags.engine == "export-ip" || flags.engine == "export-nf") {
    CheckInstance(instance);
    const milp::MilpModel model =
        flags.engine == "export-ip"
            ? milp::ExportIp(instance, alpha)
            : milp::ExportNf(Diagrams(instance, alpha), instance);
    std::ostringstream text;
    milp::WriteLp(model, text);
    WriteText(out_path, text.str(), out);
    return kExitOk;
  }
  if (flags.engine != "bp" && flags.engine != "oracle") {
    throw UsageError("unknown engine \"" + flags.engine + "\"");
  }
  const bp::SolveResult result = SolveOne(instance, alpha, flags);
  WriteText(out_path, bp::ResultToJson(result).dump(2) + "\n", out);
  return ExitFor(result.status);
}

struct SweepCell {
  std::string instance;
  Alpha alpha;
  std::optional<int> window;
};

std::vector<std::string> SweepRow(const SweepCell& cell,
                                  const SolveFlags& flags, bool scale_trips) {
  std::vector<std::string> row(kSweepColumns.size());
  row[0] = cell.instance;
  row[1] = cell.alpha.ToString();
  try {
    Instance instance = ReadInstance(cell.instance);
    if (cell.window) {
      // A wider window needs a longer horizon by the same amount.
      instance.horizon += std::max(0, *cell.window - instance.window);
      instance.window = *cell.window;
    }
    row[2] = std::to_string(instance.window);
    row[3] = std::to_string(instance.passengers.size());
    row[4] = std::to_string(instance.destinations.size());
    row[5] = std::to_string(instance.fleet_size);
    const bp::SolveResult r = SolveOne(instance, cell.alpha, flags);
    if (r.schedule) {
      row[6] = std::to_string(r.schedule->travel);
      row[7] = std::to_string(r.schedule->trips * (scale_trips ? 100 : 1));
      row[9] = FormatNumber(r.gap_percent);
    }
    row[8] = FormatNumber(r.lower_bound);
    row[10] = std::to_string(r.wall_ms);
    row[11] = std::to_string(r.nodes);
    row[12] = std::to_string(r.columns);
    row[13] = bp::ToString(r.status);
  } catch (const std::exception&) {
    row[13] = "error";
  }
  return row;
}

int CmdSweep(const std::vector<std::string>& instances,
             const std::vector<std::string>& alphas,
             const std::vector<int>& windows, const SolveFlags& flags,
             bool scale_trips, int jobs, const std::string& out_path,
             std::ostream& out) {
  std::vector<SweepCell> cells;
  for (const std::string& path : instances) {
    std::vector<std::optional<int>> ws;
    if (windows.empty()) {
      ws.push_back(std::nullopt);
    } else {
      for (int w : windows) ws.push_back(w);
    }
    for (const auto& w : ws) {
      for (const std::string& a : alphas) {
        cells.push_back({path, ParseAlphaFlag(a), w});
      }
    }
  }
  std::vector<std::vector<std::string>> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      rows[i] = SweepRow(cells[i], flags, scale_trips);
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, cells.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::ostringstream csv;
  for (std::size_t i = 0; i < kSweepColumns.size(); ++i) {
    csv << (i ? "," : "") << kSweepColumns[i];
  }
  csv << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      csv << (i ? "," : "") << row[i];
    }
    csv << '\n';
  }
  WriteText(out_path, csv.str(), out);
  return kExitOk;
}

int CmdValidate(const std::string& instance_path,
                const std::string& schedule_path, std::ostream& out) {
  const Instance instance = ReadInstance(instance_path);
  const Schedule schedule =
      Summarize(instance, ReadSchedule(schedule_path));
  const ValidationReport report = Validate(instance, schedule);
  for (const Violation& v : report.violations) {
    out << ToString(v.kind) << ": " << v.message << '\n';
  }
  if (report.ok()) {
    out << "ok: travel " << schedule.travel << ", trips " << schedule.trips
        << '\n';
    return kExitOk;
  }
  return kExitViolations;
}

int CmdDd(const std::string& instance_path, int destination,
          const std::string& alpha_text, const std::string& dot_path,
          std::ostream& out) {
  const Instance instance = ReadInstance(instance_path);
  CheckInstance(instance);
  if (destination < 0 ||
      destination >= static_cast<int>(instance.destinations.size())) {
    throw UsageError("no destination " + std::to_string(destination));
  }
  const dd::DecisionDiagram diagram =
      dd::BuildFor(instance, destination, ParseAlphaFlag(alpha_text));
  if (!dot_path.empty()) {
    std::ostringstream dot;
    diagram.WriteDot(dot);
    WriteText(dot_path, dot.str(), out);
    if (dot_path == "-") return kExitOk;
  }
  out << "nodes " << diagram.nodes().size() << "\narcs "
      << diagram.arcs().size() << "\npaths " << dd::CountPaths(diagram)
      << '\n';
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Last-mile transit scheduling solvers", "lastmile"};
  app.require_subcommand(1);

  GenConfig gen;
  std::string variant = "regular";
  std::vector<int> ks = {10}, per_dests = {100};
  int replicates = 5;
  bool batch = false;
  std::string gen_out;
  double fleet_fraction = 0.0;
  int horizon = 0;
  CLI::App* generate = app.add_subcommand("generate", "Write a random instance");
  generate->add_option("--K", ks, "Destinations (several with --batch)");
  generate->add_option("--per-dest", per_dests,
                       "Passengers per destination (several with --batch)");
  generate->add_option("--Tw", gen.window, "Time-window half-width");
  generate->add_option("--seed", gen.seed, "Random seed");
  generate->add_option("--vcap", gen.cv_capacity, "CV capacity");
  generate->add_option("--fleet-fraction", fleet_fraction,
                       "m = round(fraction * n)");
  generate->add_option("--horizon", horizon, "Override t_max");
  generate->add_option("--variant", variant, "regular or express");
  generate->add_flag("--batch", batch,
                     "Write the K x per-dest x replicate grid into --out");
  generate->add_option("--replicates", replicates,
                       "Instances per configuration with --batch");
  generate->add_option("--out", gen_out, "Output file (directory with --batch)");

  SolveFlags solve_flags;
  solve_flags.time_limit = DefaultTimeLimit();
  std::string solve_instance, solve_out;
  CLI::App* solve = app.add_subcommand("solve", "Solve one instance");
  solve->add_option("instance", solve_instance, "Instance JSON")->required();
  solve->add_option("--engine", solve_flags.engine,
                    "bp, oracle, export-ip or export-nf");
  solve->add_option("--alpha", solve_flags.alpha, "Weight of travel time");
  solve->add_option("--time-limit", solve_flags.time_limit,
                    "Seconds (default $LASTMILE_TIME_LIMIT or 600)");
  solve->add_flag("--root-only", solve_flags.root_only,
                  "Stop after the root node");
  solve->add_flag("--no-timing", solve_flags.no_timing,
                  "Report wall_ms as 0");
  solve->add_option("--budget", solve_flags.budget, "Oracle enumeration budget");
  solve->add_option("--out", solve_out, "Result or model file (default stdout)");

  SolveFlags sweep_flags;
  sweep_flags.time_limit = DefaultTimeLimit();
  std::vector<std::string> sweep_instances;
  std::vector<std::string> sweep_alphas = {"0",   "0.1", "0.2", "0.3",
                                           "0.4", "0.5", "0.6", "0.7",
                                           "0.8", "0.9", "1"};
  std::vector<int> sweep_windows;
  bool scale_trips = false;
  int jobs = 1;
  std::string sweep_out;
  CLI::App* sweep = app.add_subcommand("sweep", "Solve over an alpha/Tw grid");
  sweep->add_option("instances", sweep_instances, "Instance files")
      ->required();
  sweep->add_option("--alpha", sweep_alphas, "Alpha grid");
  sweep->add_option("--Tw", sweep_windows, "Time-window grid");
  sweep->add_option("--engine", sweep_flags.engine, "bp or oracle");
  sweep->add_option("--time-limit", sweep_flags.time_limit, "Seconds per cell");
  sweep->add_flag("--root-only", sweep_flags.root_only,
                  "Stop each solve after the root node");
  sweep->add_flag("--no-timing", sweep_flags.no_timing,
                  "Report wall_ms as 0");
  sweep->add_flag("--scale-trips", scale_trips, "Report trips x 100");
  sweep->add_option("--jobs", jobs, "Parallel workers")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_out, "CSV file (default stdout)");

  std::string val_instance, val_schedule;
  CLI::App* validate =
      app.add_subcommand("validate", "Check a schedule against an instance");
  validate->add_option("instance", val_instance, "Instance JSON")->required();
  validate->add_option("schedule", val_schedule, "Schedule JSON")->required();

  std::string dd_instance, dd_alpha = "1", dd_dot;
  int dd_dest = 0;
  CLI::App* ddcmd = app.add_subcommand("dd", "Build one decision diagram");
  ddcmd->add_option("instance", dd_instance, "Instance JSON")->required();
  ddcmd->add_option("--dest", dd_dest, "Destination id");
  ddcmd->add_option("--alpha", dd_alpha, "Weight of travel time");
  ddcmd->add_option("--dot", dd_dot, "Graphviz output ('-' for stdout)");

  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1),
                                args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "lastmile: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*generate) {
      if (fleet_fraction > 0.0) gen.fleet_fraction = fleet_fraction;
      if (horizon > 0) gen.horizon = horizon;
      if (ks.empty() || per_dests.empty()) {
        throw UsageError("--K and --per-dest need a value");
      }
      return CmdGenerate(gen, variant, ks, per_dests, replicates, batch,
                         gen_out, out);
    }
    if (*solve) return CmdSolve(solve_instance, solve_flags, solve_out, out);
    if (*sweep) {
      if (sweep_flags.engine != "bp" && sweep_flags.engine != "oracle") {
        throw UsageError("unknown engine \"" + sweep_flags.engine + "\"");
      }
      for (const std::string& a : sweep_alphas) ParseAlphaFlag(a);
      return CmdSweep(sweep_instances, sweep_alphas, sweep_windows,
                      sweep_flags, scale_trips, jobs, sweep_out, out);
    }
    if (*validate) return CmdValidate(val_instance, val_schedule, out);
    if (*ddcmd) return CmdDd(dd_instance, dd_dest, dd_alpha, dd_dot, out);
  } catch (const UsageError& e) {
    err << "lastmile: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "lastmile: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InstanceError& e) {
    err << "lastmile: " << e.what() << '\n';
    return kExitUsage;
  } catch (const StructuralError& e) {
    err << "lastmile: " << e.what() << '\n';
    return kExitUsage;
  } catch (const GenerationError& e) {
    err << "lastmile: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "lastmile: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace lastmile::cli

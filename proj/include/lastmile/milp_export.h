#ifndef LASTMILE_MILP_EXPORT_H_
#define LASTMILE_MILP_EXPORT_H_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lastmile/core.h"
#include "lastmile/dd.h"

namespace lastmile::milp {

// Unparseable solution file, fractional values or an assignment that does
// not describe a schedule.
class ImportError : public Error {
 public:
  using Error::Error;
};

enum class VarKind { kBinary, kInteger, kContinuous };
enum class RowSense { kLessEqual, kGreaterEqual, kEqual };

struct Variable {
  std::string name;
  VarKind kind = VarKind::kContinuous;
  std::int64_t lower = 0;
  std::optional<std::int64_t> upper;  // binaries: 1 unless fixed to 0
};

struct Term {
  int var = 0;
  std::int64_t coef = 0;
};

struct Row {
  std::string name;
  std::vector<Term> terms;
  RowSense sense = RowSense::kEqual;
  std::int64_t rhs = 0;
};

// Minimization model. Row coefficients are integers; only the objective
// carries alpha.
class MilpModel {
 public:
  int AddVariable(std::string name, VarKind kind, std::int64_t lower = 0,
                  std::optional<std::int64_t> upper = std::nullopt);
  // Throws Error on an unknown variable id or a duplicate row name.
  int AddRow(std::string name, std::vector<Term> terms, RowSense sense,
             std::int64_t rhs);
  void AddObjective(int var, double coef);

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Row>& rows() const { return rows_; }
  const std::vector<std::pair<int, double>>& objective() const {
    return objective_;
  }
  std::optional<int> FindVariable(const std::string& name) const;
  std::optional<int> FindRow(const std::string& name) const;

 private:
  std::vector<Variable> variables_;
  std::vector<Row> rows_;
  std::vector<std::pair<int, double>> objective_;
  std::map<std::string, int> var_index_;
  std::map<std::string, int> row_index_;
};

// Monolithic time-indexed model. Variables: w_j, x_j_c, z_j_t (t = 1..H),
// nB_d_t (t = 1..H, general integer), nT_t (t = 0..H). x_j_c is fixed to 0
// when trip c skips the origin of j. Returning CVs are credited at
// t = s + tau_d(s); departures whose return falls past H drop that term.
MilpModel ExportIp(const Instance& instance, Alpha alpha);

// One binary y_d_a per diagram arc, flow rows src_d, sink_d, flow_d_u for
// every other node (none for destinations without passengers), and cap_t for t = 1..H over one-arcs with
// start <= t <= busy_until.
MilpModel ExportNf(const std::vector<dd::DecisionDiagram>& diagrams,
                   const Instance& instance);

// LP format: Minimize, Subject To, Bounds, Binaries, Generals, End. Lines
// never exceed 255 characters.
void WriteLp(const MilpModel& model, std::ostream& out);
void WriteLpFile(const MilpModel& model, const std::filesystem::path& path);

// Value per variable id.
using Assignment = std::vector<std::int64_t>;

// x, z, w from the schedule; nB_d_t = number of groups leaving for d at t;
// nT by the balance rows from nT_0 = m.
Assignment BuildIpAssignment(const MilpModel& model, const Instance& instance,
                             const Schedule& schedule);
// y = 1 along the path realizing each destination's groups. Throws Error if
// some destination's groups have no path in its diagram.
Assignment BuildNfAssignment(const MilpModel& model,
                             const std::vector<dd::DecisionDiagram>& diagrams,
                             const Schedule& schedule);

struct Residual {
  std::string name;  // row or variable name
  std::int64_t lhs = 0;
  std::int64_t rhs = 0;
};

// Rows and bounds the assignment breaks, in integer arithmetic.
std::vector<Residual> CheckAssignment(const MilpModel& model,
                                      const Assignment& values);

// "name value" per line; '#' starts a comment.
std::map<std::string, double> ReadSolution(std::istream& in);
std::map<std::string, double> ReadSolutionFile(
    const std::filesystem::path& path);
void WriteSolution(const MilpModel& model, const Assignment& values,
                   std::ostream& out);

struct Imported {
  Schedule schedule;
  ValidationReport report;
};

// Missing names read as 0. Riders leaving for d at t are split in arrival
// order into nB_d_t groups (at least enough for vcap). Throws ImportError on
// a value more than 1e-6 from an integer or when the values do not describe
// one trip per passenger.
Imported ImportIp(const Instance& instance,
                  const std::map<std::string, double>& values);
// Throws ImportError unless the y = 1 arcs of every diagram form exactly one
// root-terminal path.
Imported ImportNf(const Instance& instance,
                  const std::vector<dd::DecisionDiagram>& diagrams,
                  const std::map<std::string, double>& values);

}  // namespace lastmile::milp

#endif  // LASTMILE_MILP_EXPORT_H_

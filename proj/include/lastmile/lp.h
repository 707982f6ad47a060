#ifndef LASTMILE_LP_H_
#define LASTMILE_LP_H_

#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "lastmile/core.h"

namespace lastmile::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kTolFeas = 1e-7;
inline constexpr double kTolCs = 1e-7;
inline constexpr double kTolOpt = 1e-6;

enum class Sense { kEqual, kLessEqual };
enum class Status { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

std::string ToString(Status status);

struct Entry {
  int row = 0;
  double value = 0.0;
};

struct LpSolution {
  Status status = Status::kInfeasible;
  double objective = 0.0;
  std::vector<double> primal;  // one per column
  std::vector<double> duals;   // one per row, y = c_B B^-1
  std::int64_t iterations = 0;
};

// Minimize c'x subject to rows (= or <=) and 0 <= x <= ub, by a bounded
// revised simplex with a dense LU factor and product-form updates.
//
// Columns may be added and bounds changed between solves. The previous basis
// is reused: directly when still primal feasible, through the dual simplex
// when only dual feasible, otherwise the next solve restarts from the
// slack/artificial basis.
class LpTableau {
 public:
  int AddRow(Sense sense, double rhs);
  // Throws Error if an entry names an unknown row.
  int AddColumn(double cost, const std::vector<Entry>& entries,
                double ub = kInfinity);

  // Tighten the column's bounds to [value, value]. Throws Error when the
  // column is already fixed to a different value.
  void FixColumn(int column, double value);
  // Restore the bounds given at AddColumn.
  void UnfixColumn(int column);
  bool IsFixed(int column) const;
  void UnfixAll();

  const LpSolution& Solve();
  const LpSolution& solution() const { return solution_; }

  // c_j - y'A_j under the duals of the last solve.
  double ReducedCost(int column) const;

  int num_rows() const { return static_cast<int>(rows_.size()); }
  int num_columns() const { return static_cast<int>(columns_.size()); }
  double cost(int column) const { return columns_.at(column).cost; }
  const std::vector<Entry>& entries(int column) const {
    return columns_.at(column).entries;
  }

  void set_iteration_limit(std::int64_t limit) { iteration_limit_ = limit; }

  // Plain-text dump of the basis, primal values and duals.
  void Dump(std::ostream& out) const;

 private:
  enum class VarStatus : std::uint8_t { kBasic, kLower, kUpper };

  struct Row {
    Sense sense;
    double rhs;
  };
  struct Column {
    double cost;
    std::vector<Entry> entries;
    double ub;
    bool fixed = false;
    double fixed_value = 0.0;
  };
  struct Eta {
    int row;
    std::vector<double> column;  // B^-1 a_q at the time of the pivot
  };

  // Variable k: k < n structural, then one logical per row, then one
  // artificial per row.
  int num_vars() const { return num_columns() + 2 * num_rows(); }
  double Lower(int k) const;
  double Upper(int k) const;
  double VarCost(int k) const;
  void ScatterColumn(int k, std::vector<double>& dense) const;
  double DotColumn(int k, const std::vector<double>& y) const;

  enum class WarmState { kNone, kPrimal, kDual };

  void ColdStart();
  // Reuses the last basis: kPrimal when it is still primal feasible, kDual
  // when only dual feasibility survives (bounds changed), else kNone.
  WarmState WarmStart();
  // Dual simplex from a dual feasible basis. Returns kOptimal once primal
  // feasible, kInfeasible when a row admits no entering variable.
  Status DualIterate();
  void Factor();
  void Ftran(std::vector<double>& v) const;
  void Btran(std::vector<double>& v) const;
  void ComputeBasics();
  void ComputeDuals(std::vector<double>& y) const;
  // Runs simplex iterations for the current cost vector. Returns kOptimal,
  // kUnbounded or kIterationLimit.
  Status Iterate();
  // Relaxes the bounds of the basic variables by small random amounts to
  // break a run of degenerate pivots; Solve removes it afterwards.
  void Perturb();

  std::vector<Row> rows_;
  std::vector<Column> columns_;
  std::vector<double> art_sign_;

  bool phase_one_ = false;
  bool artificials_open_ = false;
  bool have_basis_ = false;
  std::vector<int> basis_;           // variable in each basis position
  std::vector<VarStatus> status_;    // per variable
  std::vector<double> x_;            // per variable
  std::vector<double> widen_;        // bound relaxation while perturbed
  bool perturbed_ = false;
  bool allow_perturb_ = true;

  // Dense LU of the basis at the last refactorization: P B = L U.
  std::vector<double> lu_;
  std::vector<int> perm_;
  std::vector<Eta> etas_;

  std::int64_t iteration_limit_ = 5'000'000;
  LpSolution solution_;
};

}  // namespace lastmile::lp

#endif  // LASTMILE_LP_H_

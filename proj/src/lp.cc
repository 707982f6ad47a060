#include "lastmile/lp.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>

namespace lastmile::lp {

namespace {

constexpr double kPivotTol = 1e-7;
constexpr double kTieTol = 1e-12;
constexpr double kHarrisTol = 1e-9;
// Objective change below which a pivot counts as degenerate.
constexpr double kProgressTol = 1e-9;
constexpr int kRefactorEvery = 100;
constexpr int kStallLimit = 200;

}  // namespace

std::string ToString(Status status) {
  switch (status) {
    case Status::kOptimal: return "optimal";
    case Status::kInfeasible: return "infeasible";
    case Status::kUnbounded: return "unbounded";
    case Status::kIterationLimit: return "iteration_limit";
  }
  return "unknown";
}

int LpTableau::AddRow(Sense sense, double rhs) {
  rows_.push_back({sense, rhs});
  art_sign_.push_back(1.0);
  have_basis_ = false;
  return num_rows() - 1;
}

int LpTableau::AddColumn(double cost, const std::vector<Entry>& entries,
                         double ub) {
  for (const Entry& e : entries) {
    if (e.row < 0 || e.row >= num_rows()) {
      throw Error("lp: column entry on unknown row " + std::to_string(e.row));
    }
  }
  const int n = num_columns();
  columns_.push_back({cost, entries, ub});
  if (have_basis_) {
    status_.insert(status_.begin() + n, VarStatus::kLower);
    x_.insert(x_.begin() + n, 0.0);
    for (int& k : basis_) {
      if (k >= n) ++k;
    }
  }
  return n;
}

void LpTableau::FixColumn(int column, double value) {
  Column& c = columns_.at(column);
  if (c.fixed && c.fixed_value != value) {
    throw Error("lp: column " + std::to_string(column) +
                " is already fixed to a different value");
  }
  c.fixed = true;
  c.fixed_value = value;
}

void LpTableau::UnfixColumn(int column) { columns_.at(column).fixed = false; }

bool LpTableau::IsFixed(int column) const { return columns_.at(column).fixed; }

void LpTableau::UnfixAll() {
  for (Column& c : columns_) c.fixed = false;
}

double LpTableau::Lower(int k) const {
  const int n = num_columns();
  const double shift = widen_.empty() ? 0.0 : widen_[k];
  if (k < n) return (columns_[k].fixed ? columns_[k].fixed_value : 0.0) - shift;
  return -shift;
}

double LpTableau::Upper(int k) const {
  const int n = num_columns();
  const int m = num_rows();
  const double shift = widen_.empty() ? 0.0 : widen_[k];
  if (k < n) {
    return (columns_[k].fixed ? columns_[k].fixed_value : columns_[k].ub) +
           shift;
  }
  if (k < n + m) {
    return rows_[k - n].sense == Sense::kLessEqual ? kInfinity : shift;
  }
  return artificials_open_ ? kInfinity : 0.0;
}

double LpTableau::VarCost(int k) const {
  const int n = num_columns();
  if (phase_one_) return k >= n + num_rows() ? 1.0 : 0.0;
  return k < n ? columns_[k].cost : 0.0;
}

void LpTableau::ScatterColumn(int k, std::vector<double>& dense) const {
  std::fill(dense.begin(), dense.end(), 0.0);
  const int n = num_columns();
  const int m = num_rows();
  if (k < n) {
    for (const Entry& e : columns_[k].entries) dense[e.row] += e.value;
  } else if (k < n + m) {
    dense[k - n] = 1.0;
  } else {
    dense[k - n - m] = art_sign_[k - n - m];
  }
}

double LpTableau::DotColumn(int k, const std::vector<double>& y) const {
  const int n = num_columns();
  const int m = num_rows();
  if (k < n) {
    double s = 0.0;
    for (const Entry& e : columns_[k].entries) s += y[e.row] * e.value;
    return s;
  }
  if (k < n + m) return y[k - n];
  return art_sign_[k - n - m] * y[k - n - m];
}

void LpTableau::Factor() {
  const int m = num_rows();
  lu_.assign(static_cast<std::size_t>(m) * m, 0.0);
  std::vector<double> col(m);
  for (int p = 0; p < m; ++p) {
    ScatterColumn(basis_[p], col);
    for (int i = 0; i < m; ++i) lu_[static_cast<std::size_t>(i) * m + p] = col[i];
  }
  perm_.resize(m);
  for (int i = 0; i < m; ++i) perm_[i] = i;
  auto at = [&](int i, int j) -> double& {
    return lu_[static_cast<std::size_t>(i) * m + j];
  };
  for (int k = 0; k < m; ++k) {
    int piv = k;
    for (int i = k + 1; i < m; ++i) {
      if (std::abs(at(i, k)) > std::abs(at(piv, k))) piv = i;
    }
    if (std::abs(at(piv, k)) < 1e-11) throw Error("lp: singular basis");
    if (piv != k) {
      for (int j = 0; j < m; ++j) std::swap(at(k, j), at(piv, j));
      std::swap(perm_[k], perm_[piv]);
    }
    const double d = at(k, k);
    for (int i = k + 1; i < m; ++i) {
      double& l = at(i, k);
      if (l == 0.0) continue;
      l /= d;
      for (int j = k + 1; j < m; ++j) at(i, j) -= l * at(k, j);
    }
  }
  etas_.clear();
}

void LpTableau::Ftran(std::vector<double>& v) const {
  const int m = num_rows();
  std::vector<double> w(m);
  for (int i = 0; i < m; ++i) w[i] = v[perm_[i]];
  for (int i = 0; i < m; ++i) {
    double s = w[i];
    const double* row = &lu_[static_cast<std::size_t>(i) * m];
    for (int j = 0; j < i; ++j) s -= row[j] * w[j];
    w[i] = s;
  }
  for (int i = m - 1; i >= 0; --i) {
    double s = w[i];
    const double* row = &lu_[static_cast<std::size_t>(i) * m];
    for (int j = i + 1; j < m; ++j) s -= row[j] * w[j];
    w[i] = s / row[i];
  }
  for (const Eta& e : etas_) {
    const double pivot = w[e.row] / e.column[e.row];
    if (pivot != 0.0) {
      for (int i = 0; i < m; ++i) w[i] -= e.column[i] * pivot;
    }
    w[e.row] = pivot;
  }
  v = std::move(w);
}

void LpTableau::Btran(std::vector<double>& v) const {
  const int m = num_rows();
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = v[it->row];
    for (int i = 0; i < m; ++i) {
      if (i != it->row) s -= v[i] * it->column[i];
    }
    v[it->row] = s / it->column[it->row];
  }
  // Solve U' a = v, then L' b = a, then undo the permutation.
  std::vector<double> a(m);
  for (int j = 0; j < m; ++j) {
    double s = v[j];
    for (int i = 0; i < j; ++i) s -= lu_[static_cast<std::size_t>(i) * m + j] * a[i];
    a[j] = s / lu_[static_cast<std::size_t>(j) * m + j];
  }
  for (int j = m - 1; j >= 0; --j) {
    double s = a[j];
    for (int i = j + 1; i < m; ++i) s -= lu_[static_cast<std::size_t>(i) * m + j] * a[i];
    a[j] = s;
  }
  for (int i = 0; i < m; ++i) v[perm_[i]] = a[i];
}

void LpTableau::ComputeBasics() {
  const int m = num_rows();
  std::vector<double> r(m);
  for (int i = 0; i < m; ++i) r[i] = rows_[i].rhs;
  std::vector<double> col(m);
  for (int k = 0; k < num_vars(); ++k) {
    if (status_[k] == VarStatus::kBasic || x_[k] == 0.0) continue;
    ScatterColumn(k, col);
    for (int i = 0; i < m; ++i) r[i] -= col[i] * x_[k];
  }
  Ftran(r);
  for (int p = 0; p < m; ++p) x_[basis_[p]] = r[p];
}

void LpTableau::ComputeDuals(std::vector<double>& y) const {
  const int m = num_rows();
  y.assign(m, 0.0);
  for (int p = 0; p < m; ++p) y[p] = VarCost(basis_[p]);
  Btran(y);
}

void LpTableau::ColdStart() {
  const int n = num_columns();
  const int m = num_rows();
  status_.assign(num_vars(), VarStatus::kLower);
  x_.assign(num_vars(), 0.0);
  basis_.assign(m, 0);
  std::vector<double> r(m);
  for (int i = 0; i < m; ++i) r[i] = rows_[i].rhs;
  for (int j = 0; j < n; ++j) {
    x_[j] = Lower(j);
    if (x_[j] == 0.0) continue;
    for (const Entry& e : columns_[j].entries) r[e.row] -= e.value * x_[j];
  }
  for (int i = 0; i < m; ++i) {
    if (rows_[i].sense == Sense::kLessEqual && r[i] >= 0.0) {
      basis_[i] = n + i;
      status_[n + i] = VarStatus::kBasic;
      x_[n + i] = r[i];
      art_sign_[i] = 1.0;
    } else {
      art_sign_[i] = r[i] >= 0.0 ? 1.0 : -1.0;
      basis_[i] = n + m + i;
      status_[n + m + i] = VarStatus::kBasic;
      x_[n + m + i] = std::abs(r[i]);
    }
  }
  have_basis_ = true;
  Factor();
}

LpTableau::WarmState LpTableau::WarmStart() {
  if (!have_basis_) return WarmState::kNone;
  for (int k = 0; k < num_vars(); ++k) {
    if (status_[k] == VarStatus::kBasic) continue;
    if (status_[k] == VarStatus::kUpper && Upper(k) == kInfinity) {
      status_[k] = VarStatus::kLower;
    }
    x_[k] = status_[k] == VarStatus::kUpper ? Upper(k) : Lower(k);
  }
  try {
    Factor();
  } catch (const Error&) {
    return WarmState::kNone;
  }
  ComputeBasics();
  bool primal = true;
  for (int k : basis_) {
    if (x_[k] < Lower(k) - kTolFeas || x_[k] > Upper(k) + kTolFeas) {
      primal = false;
      break;
    }
  }
  if (primal) return WarmState::kPrimal;

  // Put each nonbasic at the bound its reduced cost prefers; the basis is
  // dual feasible when that is always possible.
  std::vector<double> y;
  ComputeDuals(y);
  for (int k = 0; k < num_vars(); ++k) {
    if (status_[k] == VarStatus::kBasic || Upper(k) <= Lower(k)) continue;
    const double d = VarCost(k) - DotColumn(k, y);
    if (d < -kTolOpt) {
      if (Upper(k) == kInfinity) return WarmState::kNone;
      status_[k] = VarStatus::kUpper;
    } else if (d > kTolOpt) {
      status_[k] = VarStatus::kLower;
    }
    x_[k] = status_[k] == VarStatus::kUpper ? Upper(k) : Lower(k);
  }
  ComputeBasics();
  return WarmState::kDual;
}

Status LpTableau::DualIterate() {
  const int m = num_rows();
  const int nv = num_vars();
  std::vector<double> y;
  std::vector<double> rho(m);
  std::vector<double> alpha(m);
  std::vector<double> row(nv, 0.0);
  const std::int64_t limit =
      solution_.iterations + 50 * static_cast<std::int64_t>(m) + 1000;
  for (;;) {
    if (solution_.iterations >= limit) return Status::kIterationLimit;
    // Leaving row: largest bound violation.
    int r = -1;
    double worst = kTolFeas;
    for (int i = 0; i < m; ++i) {
      const int k = basis_[i];
      const double v = std::max(Lower(k) - x_[k], x_[k] - Upper(k));
      if (v > worst) {
        worst = v;
        r = i;
      }
    }
    if (r < 0) return Status::kOptimal;
    const int leaving = basis_[r];
    const bool to_lower = x_[leaving] < Lower(leaving);
    const double target = to_lower ? Lower(leaving) : Upper(leaving);

    std::fill(rho.begin(), rho.end(), 0.0);
    rho[r] = 1.0;
    Btran(rho);
    ComputeDuals(y);

    // Dual ratio test, two-pass with kHarrisTol on the reduced costs.
    auto candidate = [&](int k, double& a, double& d) {
      if (status_[k] == VarStatus::kBasic || Upper(k) <= Lower(k)) return false;
      a = DotColumn(k, rho);
      if (std::abs(a) < kPivotTol) return false;
      const bool up = status_[k] == VarStatus::kLower;
      // x_r moves by -a * dx_k; it must move toward `target`.
      const bool helps = to_lower ? (up ? a < 0.0 : a > 0.0)
                                  : (up ? a > 0.0 : a < 0.0);
      if (!helps) return false;
      d = VarCost(k) - DotColumn(k, y);
      return true;
    };
    double relaxed = kInfinity;
    for (int k = 0; k < nv; ++k) {
      double a, d;
      if (!candidate(k, a, d)) continue;
      row[k] = a;
      relaxed = std::min(relaxed, (std::abs(d) + kHarrisTol) / std::abs(a));
    }
    if (relaxed == kInfinity) return Status::kInfeasible;
    int q = -1;
    for (int k = 0; k < nv; ++k) {
      double a, d;
      if (!candidate(k, a, d)) continue;
      if (std::abs(d) / std::abs(a) > relaxed) continue;
      if (q < 0 || std::abs(a) > std::abs(row[q])) q = k;
    }

    ScatterColumn(q, alpha);
    Ftran(alpha);
    const double step = (x_[leaving] - target) / alpha[r];
    x_[q] += step;
    for (int i = 0; i < m; ++i) x_[basis_[i]] -= step * alpha[i];
    status_[leaving] = to_lower ? VarStatus::kLower : VarStatus::kUpper;
    x_[leaving] = target;
    basis_[r] = q;
    status_[q] = VarStatus::kBasic;
    etas_.push_back({r, alpha});
    if (static_cast<int>(etas_.size()) >= kRefactorEvery) {
      Factor();
      ComputeBasics();
    }
    ++solution_.iterations;
  }
}

void LpTableau::Perturb() {
  perturbed_ = true;
  widen_.assign(num_vars(), 0.0);
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> u(1e-7, 1e-6);
  const int n = num_columns();
  const int m = num_rows();
  for (int i = 0; i < m; ++i) {
    const int k = basis_[i];
    if (k >= n + m) continue;
    widen_[k] = u(rng) * (1.0 + std::abs(x_[k]));
  }
}

Status LpTableau::Iterate() {
  const int m = num_rows();
  const int nv = num_vars();
  std::vector<double> y;
  std::vector<double> alpha(m);
  bool bland = false;
  int stall = 0;
  for (;;) {
    if (solution_.iterations >= iteration_limit_) return Status::kIterationLimit;
    ComputeDuals(y);

    int q = -1;
    double best = 0.0;
    double dq = 0.0;
    for (int k = 0; k < nv; ++k) {
      if (status_[k] == VarStatus::kBasic) continue;
      if (Upper(k) - Lower(k) <= 0.0) continue;
      const double d = VarCost(k) - DotColumn(k, y);
      const bool eligible = status_[k] == VarStatus::kLower ? d < -kTolOpt
                                                            : d > kTolOpt;
      if (!eligible) continue;
      if (bland) {
        q = k;
        dq = d;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        q = k;
        dq = d;
      }
    }
    if (q < 0) return Status::kOptimal;

    ScatterColumn(q, alpha);
    Ftran(alpha);
    const double dir = status_[q] == VarStatus::kLower ? 1.0 : -1.0;
    // Two-pass (Harris) ratio test: the first pass finds the step allowed
    // when every bound is relaxed by kHarrisTol, the second picks, among rows
    // blocking within that step, the largest |alpha| (or the lowest variable
    // index under Bland's rule).
    double theta = Upper(q) - Lower(q);
    int leave = -1;
    bool leave_to_upper = false;
    auto ratio = [&](int i, double slack) {
      const double delta = -dir * alpha[i];
      const int k = basis_[i];
      if (delta < 0.0) return (x_[k] - Lower(k) + slack) / -delta;
      if (Upper(k) == kInfinity) return kInfinity;
      return (Upper(k) - x_[k] + slack) / delta;
    };
    // Bland's rule needs the exact minimum ratio; a relaxed one can cycle.
    double relaxed = theta;
    for (int i = 0; i < m; ++i) {
      if (std::abs(alpha[i]) >= kPivotTol) {
        relaxed = std::min(relaxed,
                           bland ? std::max(ratio(i, 0.0), 0.0) + kTieTol
                                 : ratio(i, kHarrisTol));
      }
    }
    if (relaxed < theta) {
      for (int i = 0; i < m; ++i) {
        if (std::abs(alpha[i]) < kPivotTol) continue;
        const double limit =
            bland ? std::max(ratio(i, 0.0), 0.0) : ratio(i, 0.0);
        if (limit > relaxed) continue;
        const bool take =
            leave < 0 || (bland ? basis_[i] < basis_[leave]
                                : std::abs(alpha[i]) > std::abs(alpha[leave]));
        if (take) {
          leave = i;
          leave_to_upper = -dir * alpha[i] > 0.0;
          theta = std::max(limit, 0.0);
        }
      }
    }
    if (theta == kInfinity) return Status::kUnbounded;

    x_[q] += dir * theta;
    for (int i = 0; i < m; ++i) x_[basis_[i]] -= dir * theta * alpha[i];
    if (leave < 0) {
      status_[q] = status_[q] == VarStatus::kLower ? VarStatus::kUpper
                                                   : VarStatus::kLower;
    } else {
      const int k = basis_[leave];
      status_[k] = leave_to_upper ? VarStatus::kUpper : VarStatus::kLower;
      x_[k] = leave_to_upper ? Upper(k) : Lower(k);
      basis_[leave] = q;
      status_[q] = VarStatus::kBasic;
      etas_.push_back({leave, alpha});
      if (static_cast<int>(etas_.size()) >= kRefactorEvery) {
        Factor();
        ComputeBasics();
      }
    }
    ++solution_.iterations;

    // A stall in phase 2 first perturbs the bounds; a second one switches to
    // Bland's rule for the rest of the solve.
    if (theta * std::abs(dq) > kProgressTol) {
      stall = 0;
    } else if (++stall >= kStallLimit) {
      if (!phase_one_ && !perturbed_ && allow_perturb_) {
        Perturb();
        stall = 0;
      } else {
        bland = true;
      }
    }
  }
}

const LpSolution& LpTableau::Solve() {
  if (columns_.empty()) throw Error("lp: no columns");
  solution_ = LpSolution{};
  const int n = num_columns();
  const int m = num_rows();

  artificials_open_ = false;
  WarmState warm = WarmStart();
  if (warm == WarmState::kDual) {
    const Status s = DualIterate();
    if (s == Status::kInfeasible) {
      solution_.status = s;
      return solution_;
    }
    if (s != Status::kOptimal) warm = WarmState::kNone;
  }
  if (warm == WarmState::kNone) {
    artificials_open_ = true;
    ColdStart();
    phase_one_ = true;
    const Status s = Iterate();
    phase_one_ = false;
    if (s != Status::kOptimal) {
      solution_.status = s;
      return solution_;
    }
    Factor();
    ComputeBasics();
    double infeasibility = 0.0;
    for (int i = 0; i < m; ++i) infeasibility += x_[n + m + i];
    artificials_open_ = false;
    if (infeasibility > kTolFeas) {
      solution_.status = Status::kInfeasible;
      have_basis_ = false;
      return solution_;
    }
    for (int i = 0; i < m; ++i) {
      if (status_[n + m + i] != VarStatus::kBasic) x_[n + m + i] = 0.0;
    }
  }

  perturbed_ = false;
  Status s = Iterate();
  if (!widen_.empty()) {
    widen_.clear();
    for (int k = 0; k < num_vars(); ++k) {
      if (status_[k] != VarStatus::kBasic) {
        x_[k] = status_[k] == VarStatus::kLower ? Lower(k) : Upper(k);
      }
    }
    Factor();
    ComputeBasics();
    if (s == Status::kOptimal) {
      s = DualIterate();
      if (s == Status::kOptimal) s = Iterate();
    }
    if (s != Status::kOptimal && allow_perturb_) {
      // Start over from the slack basis without perturbation.
      have_basis_ = false;
      allow_perturb_ = false;
      const std::int64_t spent = solution_.iterations;
      Solve();
      allow_perturb_ = true;
      solution_.iterations += spent;
      return solution_;
    }
  }
  solution_.status = s;
  if (s != Status::kOptimal) {
    if (s == Status::kInfeasible) have_basis_ = false;
    return solution_;
  }
  Factor();
  ComputeBasics();
  ComputeDuals(solution_.duals);
  solution_.primal.assign(x_.begin(), x_.begin() + n);
  for (int j = 0; j < n; ++j) solution_.objective += columns_[j].cost * x_[j];
  return solution_;
}

double LpTableau::ReducedCost(int column) const {
  return columns_.at(column).cost - DotColumn(column, solution_.duals);
}

void LpTableau::Dump(std::ostream& out) const {
  const int n = num_columns();
  const int m = num_rows();
  out << "lp " << m << " rows " << n << " columns status "
      << ToString(solution_.status) << " objective " << std::setprecision(12)
      << solution_.objective << "\n";
  if (!have_basis_) return;
  for (int p = 0; p < m; ++p) {
    const int k = basis_[p];
    out << "basis[" << p << "] = ";
    if (k < n) {
      out << "x" << k;
    } else if (k < n + m) {
      out << "slack" << k - n;
    } else {
      out << "art" << k - n - m;
    }
    out << " value " << x_[k] << "\n";
  }
  for (int i = 0; i < static_cast<int>(solution_.duals.size()); ++i) {
    out << "dual[" << i << "] = " << solution_.duals[i] << "\n";
  }
}

}  // namespace lastmile::lp

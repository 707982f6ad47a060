#include "lastmile/milp_export.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lastmile::milp {

namespace {

std::string Name(const char* prefix, std::initializer_list<int> ids) {
  std::string s = prefix;
  for (int id : ids) {
    s += '_';
    s += std::to_string(id);
  }
  return s;
}

int Var(const MilpModel& model, const std::string& name) {
  const auto v = model.FindVariable(name);
  if (!v) throw Error("milp: model has no variable " + name);
  return *v;
}

std::string FormatDouble(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// Breaks a stream of tokens into lines of at most kWidth characters.
class LineWriter {
 public:
  explicit LineWriter(std::ostream& out) : out_(out) {}
  void Token(const std::string& token) {
    if (len_ > 0 && len_ + 1 + token.size() > kWidth) Flush();
    if (len_ > 0) {
      out_ << ' ';
      ++len_;
    } else {
      out_ << ' ';
      len_ = 1;
    }
    out_ << token;
    len_ += token.size();
  }
  void Flush() {
    if (len_ > 0) out_ << '\n';
    len_ = 0;
  }

 private:
  static constexpr std::size_t kWidth = 250;
  std::ostream& out_;
  std::size_t len_ = 0;
};

std::int64_t CheckedIntegral(const std::string& name, double v) {
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-6) {
    throw ImportError("milp: fractional value " + FormatDouble(v) + " for " +
                      name);
  }
  return static_cast<std::int64_t>(r);
}

std::int64_t Get(const std::map<std::string, double>& values,
                 const std::string& name) {
  auto it = values.find(name);
  return it == values.end() ? 0 : CheckedIntegral(name, it->second);
}

Imported Finish(const Instance& instance, Schedule schedule) {
  Imported result;
  result.schedule = Summarize(instance, std::move(schedule));
  result.report = Validate(instance, result.schedule);
  return result;
}

}  // namespace

int MilpModel::AddVariable(std::string name, VarKind kind, std::int64_t lower,
                           std::optional<std::int64_t> upper) {
  if (var_index_.contains(name)) {
    throw Error("milp: duplicate variable " + name);
  }
  if (kind == VarKind::kBinary && !upper) upper = 1;
  const int id = static_cast<int>(variables_.size());
  var_index_.emplace(name, id);
  variables_.push_back({std::move(name), kind, lower, upper});
  return id;
}

int MilpModel::AddRow(std::string name, std::vector<Term> terms,
                      RowSense sense, std::int64_t rhs) {
  if (row_index_.contains(name)) throw Error("milp: duplicate row " + name);
  for (const Term& t : terms) {
    if (t.var < 0 || t.var >= static_cast<int>(variables_.size())) {
      throw Error("milp: row " + name + " names an unknown variable");
    }
  }
  const int id = static_cast<int>(rows_.size());
  row_index_.emplace(name, id);
  rows_.push_back({std::move(name), std::move(terms), sense, rhs});
  return id;
}

void MilpModel::AddObjective(int var, double coef) {
  if (var < 0 || var >= static_cast<int>(variables_.size())) {
    throw Error("milp: objective names an unknown variable");
  }
  objective_.emplace_back(var, coef);
}

std::optional<int> MilpModel::FindVariable(const std::string& name) const {
  auto it = var_index_.find(name);
  if (it == var_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> MilpModel::FindRow(const std::string& name) const {
  auto it = row_index_.find(name);
  if (it == row_index_.end()) return std::nullopt;
  return it->second;
}

MilpModel ExportIp(const Instance& instance, Alpha alpha) {
  MilpModel model;
  const int n = static_cast<int>(instance.passengers.size());
  const int h = instance.horizon;
  const int k = static_cast<int>(instance.destinations.size());

  for (int j = 0; j < n; ++j) {
    model.AddVariable(Name("w", {j}), VarKind::kContinuous);
  }
  for (int j = 0; j < n; ++j) {
    const int origin = instance.passengers[j].origin;
    for (const TransitTrip& c : instance.trips) {
      const bool serves = c.departures.contains(origin);
      model.AddVariable(Name("x", {j, c.id}), VarKind::kBinary, 0,
                        serves ? 1 : 0);
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int t = 1; t <= h; ++t) {
      model.AddVariable(Name("z", {j, t}), VarKind::kBinary);
    }
  }
  for (int d = 0; d < k; ++d) {
    for (int t = 1; t <= h; ++t) {
      model.AddVariable(Name("nB", {d, t}), VarKind::kInteger);
    }
  }
  for (int t = 0; t <= h; ++t) {
    model.AddVariable(Name("nT", {t}), VarKind::kContinuous);
  }

  for (int j = 0; j < n; ++j) {
    model.AddObjective(Var(model, Name("w", {j})), alpha.value());
  }
  for (int d = 0; d < k; ++d) {
    for (int t = 1; t <= h; ++t) {
      model.AddObjective(Var(model, Name("nB", {d, t})), 1.0 - alpha.value());
    }
  }

  for (int j = 0; j < n; ++j) {
    const Passenger& p = instance.passengers[j];
    const Destination& dest = instance.destinations[p.destination];
    std::vector<Term> arrive;
    for (int t = 1; t <= h; ++t) {
      arrive.push_back({Var(model, Name("z", {j, t})), t + dest.ToTimeAt(t)});
    }
    std::vector<Term> link = {{Var(model, Name("w", {j})), 1}};
    for (const Term& a : arrive) link.push_back({a.var, -a.coef});
    std::vector<Term> trains;
    for (const TransitTrip& c : instance.trips) {
      const int x = Var(model, Name("x", {j, c.id}));
      trains.push_back({x, 1});
      const auto dep = c.DepartureFrom(p.origin);
      if (dep && *dep != 0) link.push_back({x, *dep});
    }
    model.AddRow(Name("ip2", {j}), link, RowSense::kEqual, 0);
    std::vector<Term> ones;
    for (const Term& a : arrive) ones.push_back({a.var, 1});
    model.AddRow(Name("ip3", {j}), ones, RowSense::kEqual, 1);
    model.AddRow(Name("ip4", {j}), trains, RowSense::kEqual, 1);
    model.AddRow(Name("ip5a", {j}), arrive, RowSense::kGreaterEqual,
                 p.requested_arrival - instance.window);
    model.AddRow(Name("ip5b", {j}), arrive, RowSense::kLessEqual,
                 p.requested_arrival + instance.window);
  }

  for (int t = 1; t <= h; ++t) {
    std::vector<Term> terms = {{Var(model, Name("nT", {t})), 1},
                               {Var(model, Name("nT", {t - 1})), -1}};
    for (int d = 0; d < k; ++d) {
      const Destination& dest = instance.destinations[d];
      for (int s = 1; s < t; ++s) {
        if (s + dest.RoundTripAt(s) == t) {
          terms.push_back({Var(model, Name("nB", {d, s})), -1});
        }
      }
      terms.push_back({Var(model, Name("nB", {d, t})), 1});
    }
    model.AddRow(Name("ip6", {t}), terms, RowSense::kEqual, 0);
  }

  const auto members = instance.PassengersByDestination();
  const std::int64_t vcap = instance.cv_capacity;
  for (int d = 0; d < k; ++d) {
    for (int t = 1; t <= h; ++t) {
      std::vector<Term> terms;
      for (int j : members[d]) terms.push_back({Var(model, Name("z", {j, t})), 1});
      terms.push_back({Var(model, Name("nB", {d, t})), -vcap});
      model.AddRow(Name("ip7", {d, t}), terms, RowSense::kLessEqual, 0);
      model.AddRow(Name("ip8", {d, t}), terms, RowSense::kGreaterEqual,
                   1 - vcap);
    }
  }

  for (int j = 0; j < n; ++j) {
    const int origin = instance.passengers[j].origin;
    for (const TransitTrip& c : instance.trips) {
      if (!c.departures.contains(origin)) continue;
      const int x = Var(model, Name("x", {j, c.id}));
      for (int t = 1; t <= h && t < c.terminal_arrival; ++t) {
        model.AddRow(Name("ip9a", {j, c.id, t}),
                     {{x, 1}, {Var(model, Name("z", {j, t})), 1}},
                     RowSense::kLessEqual, 1);
      }
    }
  }
  model.AddRow("ip14", {{Var(model, Name("nT", {0})), 1}}, RowSense::kEqual,
               instance.fleet_size);
  return model;
}

MilpModel ExportNf(const std::vector<dd::DecisionDiagram>& diagrams,
                   const Instance& instance) {
  MilpModel model;
  std::vector<std::vector<int>> ids(diagrams.size());
  for (std::size_t i = 0; i < diagrams.size(); ++i) {
    const dd::DecisionDiagram& dd = diagrams[i];
    for (const dd::Arc& a : dd.arcs()) {
      ids[i].push_back(model.AddVariable(Name("y", {dd.destination(), a.id}),
                                         VarKind::kBinary));
      if (a.kind == dd::ArcKind::kOne) {
        model.AddObjective(ids[i].back(), a.cost);
      }
    }
  }
  for (std::size_t i = 0; i < diagrams.size(); ++i) {
    const dd::DecisionDiagram& dd = diagrams[i];
    const int d = dd.destination();
    auto sum = [&](const std::vector<int>& arcs, std::int64_t coef,
                   std::vector<Term>& terms) {
      for (int a : arcs) terms.push_back({ids[i][a], coef});
    };
    // A destination nobody travels to has a one-node diagram and no flow.
    if (dd.num_passengers() == 0) continue;
    std::vector<Term> src, sink;
    sum(dd.out_arcs(dd.root()), 1, src);
    sum(dd.in_arcs(dd.terminal()), 1, sink);
    model.AddRow(Name("src", {d}), src, RowSense::kEqual, 1);
    model.AddRow(Name("sink", {d}), sink, RowSense::kEqual, 1);
    for (int u = 0; u < static_cast<int>(dd.nodes().size()); ++u) {
      if (u == dd.root() || u == dd.terminal()) continue;
      std::vector<Term> terms;
      sum(dd.out_arcs(u), 1, terms);
      sum(dd.in_arcs(u), -1, terms);
      model.AddRow(Name("flow", {d, u}), terms, RowSense::kEqual, 0);
    }
  }
  for (int t = 1; t <= instance.horizon; ++t) {
    std::vector<Term> terms;
    for (std::size_t i = 0; i < diagrams.size(); ++i) {
      for (const dd::Arc& a : diagrams[i].arcs()) {
        if (a.kind == dd::ArcKind::kOne && a.start <= t && t <= a.busy_until) {
          terms.push_back({ids[i][a.id], 1});
        }
      }
    }
    model.AddRow(Name("cap", {t}), terms, RowSense::kLessEqual,
                 instance.fleet_size);
  }
  return model;
}

void WriteLp(const MilpModel& model, std::ostream& out) {
  const auto& vars = model.variables();
  auto term = [&](LineWriter& w, std::int64_t coef, int var, bool first) {
    if (coef < 0) {
      w.Token("-");
    } else if (!first) {
      w.Token("+");
    }
    const std::int64_t mag = coef < 0 ? -coef : coef;
    if (mag != 1) w.Token(std::to_string(mag));
    w.Token(vars[var].name);
  };

  out << "\\ lastmile model: " << vars.size() << " variables, "
      << model.rows().size() << " rows\n";
  out << "Minimize\n";
  {
    LineWriter w(out);
    w.Token("obj:");
    bool first = true;
    for (const auto& [var, coef] : model.objective()) {
      if (coef == 0.0) continue;
      if (coef < 0) {
        w.Token("-");
      } else if (!first) {
        w.Token("+");
      }
      w.Token(FormatDouble(std::abs(coef)));
      w.Token(vars[var].name);
      first = false;
    }
    if (first && !vars.empty()) {
      w.Token("0");
      w.Token(vars.front().name);
    }
    w.Flush();
  }
  out << "Subject To\n";
  for (const Row& row : model.rows()) {
    if (row.terms.empty() && vars.empty()) continue;
    LineWriter w(out);
    w.Token(row.name + ":");
    if (row.terms.empty()) {
      w.Token("0");
      w.Token(vars.front().name);
    }
    bool first = true;
    for (const Term& t : row.terms) {
      term(w, t.coef, t.var, first);
      first = false;
    }
    w.Token(row.sense == RowSense::kEqual         ? "="
            : row.sense == RowSense::kLessEqual ? "<="
                                                : ">=");
    w.Token(std::to_string(row.rhs));
    w.Flush();
  }
  out << "Bounds\n";
  for (const Variable& v : vars) {
    if (v.kind == VarKind::kBinary) {
      if (v.upper && *v.upper == 0) out << ' ' << v.name << " = 0\n";
      continue;
    }
    if (v.upper) {
      out << ' ' << v.lower << " <= " << v.name << " <= " << *v.upper << '\n';
    } else if (v.lower != 0) {
      out << ' ' << v.name << " >= " << v.lower << '\n';
    }
  }
  for (VarKind kind : {VarKind::kBinary, VarKind::kInteger}) {
    bool any = false;
    LineWriter w(out);
    for (const Variable& v : vars) {
      if (v.kind != kind) continue;
      if (!any) {
        out << (kind == VarKind::kBinary ? "Binaries\n" : "Generals\n");
        any = true;
      }
      w.Token(v.name);
    }
    w.Flush();
  }
  out << "End\n";
}

void WriteLpFile(const MilpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("milp: cannot open " + path.string());
  WriteLp(model, out);
  if (!out) throw Error("milp: write failed for " + path.string());
}

Assignment BuildIpAssignment(const MilpModel& model, const Instance& instance,
                             const Schedule& schedule) {
  Assignment values(model.variables().size(), 0);
  for (const GroupTrip& g : schedule.groups) {
    for (const auto& a : g.members) {
      values[Var(model, Name("x", {a.passenger, a.trip}))] = 1;
      values[Var(model, Name("z", {a.passenger, g.depart}))] = 1;
      values[Var(model, Name("w", {a.passenger}))] =
          TravelTime(instance, a.passenger, g.depart, a.trip);
    }
    ++values[Var(model, Name("nB", {g.destination, g.depart}))];
  }
  const int k = static_cast<int>(instance.destinations.size());
  std::int64_t parked = instance.fleet_size;
  values[Var(model, Name("nT", {0}))] = parked;
  for (int t = 1; t <= instance.horizon; ++t) {
    for (int d = 0; d < k; ++d) {
      const Destination& dest = instance.destinations[d];
      for (int s = 1; s < t; ++s) {
        if (s + dest.RoundTripAt(s) == t) {
          parked += values[Var(model, Name("nB", {d, s}))];
        }
      }
      parked -= values[Var(model, Name("nB", {d, t}))];
    }
    values[Var(model, Name("nT", {t}))] = parked;
  }
  return values;
}

Assignment BuildNfAssignment(const MilpModel& model,
                             const std::vector<dd::DecisionDiagram>& diagrams,
                             const Schedule& schedule) {
  Assignment values(model.variables().size(), 0);
  for (const dd::DecisionDiagram& dd : diagrams) {
    std::map<int, int> position;
    for (int i = 0; i < dd.num_passengers(); ++i) position[dd.order()[i]] = i;
    std::vector<dd::GroupSlot> slots;
    for (const GroupTrip& g : schedule.groups) {
      if (g.destination != dd.destination()) continue;
      int lo = dd.num_passengers(), hi = -1;
      for (const auto& a : g.members) {
        auto it = position.find(a.passenger);
        if (it == position.end()) {
          throw Error("milp: passenger " + std::to_string(a.passenger) +
                      " is not bound for destination " +
                      std::to_string(dd.destination()));
        }
        lo = std::min(lo, it->second);
        hi = std::max(hi, it->second);
      }
      if (hi - lo + 1 != static_cast<int>(g.members.size())) {
        throw Error("milp: group departing at " + std::to_string(g.depart) +
                    " is not contiguous in arrival order");
      }
      slots.push_back({lo, hi, g.depart});
    }
    std::sort(slots.begin(), slots.end(),
              [](const dd::GroupSlot& a, const dd::GroupSlot& b) {
                return a.first < b.first;
              });
    const auto path = dd::FindPath(dd, slots);
    if (!path) {
      throw Error("milp: destination " + std::to_string(dd.destination()) +
                  " groups have no path in the diagram");
    }
    for (int a : *path) {
      values[Var(model, Name("y", {dd.destination(), a}))] = 1;
    }
  }
  return values;
}

std::vector<Residual> CheckAssignment(const MilpModel& model,
                                      const Assignment& values) {
  if (values.size() != model.variables().size()) {
    throw Error("milp: assignment size does not match the model");
  }
  std::vector<Residual> broken;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Variable& v = model.variables()[i];
    if (values[i] < v.lower) broken.push_back({v.name, values[i], v.lower});
    if (v.upper && values[i] > *v.upper) {
      broken.push_back({v.name, values[i], *v.upper});
    }
  }
  for (const Row& row : model.rows()) {
    std::int64_t lhs = 0;
    for (const Term& t : row.terms) lhs += t.coef * values[t.var];
    const bool ok = row.sense == RowSense::kEqual       ? lhs == row.rhs
                    : row.sense == RowSense::kLessEqual ? lhs <= row.rhs
                                                        : lhs >= row.rhs;
    if (!ok) broken.push_back({row.name, lhs, row.rhs});
  }
  return broken;
}

std::map<std::string, double> ReadSolution(std::istream& in) {
  std::map<std::string, double> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream fields(line);
    std::string name, value, extra;
    if (!(fields >> name)) continue;
    double v = 0.0;
    if (!(fields >> value) || (fields >> extra)) {
      throw ImportError("milp: line " + std::to_string(lineno) +
                        ": expected \"name value\"");
    }
    const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
    if (r.ec != std::errc() || r.ptr != value.data() + value.size()) {
      throw ImportError("milp: line " + std::to_string(lineno) +
                        ": bad number \"" + value + "\"");
    }
    values[name] = v;
  }
  return values;
}

std::map<std::string, double> ReadSolutionFile(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ImportError("milp: cannot open " + path.string());
  return ReadSolution(in);
}

void WriteSolution(const MilpModel& model, const Assignment& values,
                   std::ostream& out) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 0) {
      out << model.variables()[i].name << ' ' << values[i] << '\n';
    }
  }
}

Imported ImportIp(const Instance& instance,
                  const std::map<std::string, double>& values) {
  for (const auto& [name, v] : values) CheckedIntegral(name, v);
  std::map<std::pair<int, int>, std::vector<lastmile::Assignment>> boarding;
  for (const Passenger& p : instance.passengers) {
    std::vector<int> times, trips;
    for (int t = 1; t <= instance.horizon; ++t) {
      const std::int64_t z = Get(values, Name("z", {p.id, t}));
      if (z != 0 && z != 1) {
        throw ImportError("milp: z value out of range for passenger " +
                          std::to_string(p.id));
      }
      if (z == 1) times.push_back(t);
    }
    for (const TransitTrip& c : instance.trips) {
      const std::int64_t x = Get(values, Name("x", {p.id, c.id}));
      if (x != 0 && x != 1) {
        throw ImportError("milp: x value out of range for passenger " +
                          std::to_string(p.id));
      }
      if (x == 1) trips.push_back(c.id);
    }
    if (times.size() != 1 || trips.size() != 1) {
      throw ImportError("milp: passenger " + std::to_string(p.id) + " has " +
                        std::to_string(times.size()) + " departures and " +
                        std::to_string(trips.size()) + " trains");
    }
    boarding[{p.destination, times[0]}].push_back({p.id, trips[0]});
  }
  Schedule schedule;
  for (auto& [key, riders] : boarding) {
    std::stable_sort(riders.begin(), riders.end(),
                     [&](const lastmile::Assignment& a,
                         const lastmile::Assignment& b) {
                       const int ra =
                           instance.passengers[a.passenger].requested_arrival;
                       const int rb =
                           instance.passengers[b.passenger].requested_arrival;
                       return ra != rb ? ra < rb : a.passenger < b.passenger;
                     });
    // nB_d_t says how many CVs leave; which riders share one is not in the
    // model, so consecutive runs of near-equal size are used.
    const std::int64_t size = static_cast<std::int64_t>(riders.size());
    const std::int64_t vcap = instance.cv_capacity;
    std::int64_t cvs = Get(values, Name("nB", {key.first, key.second}));
    cvs = std::clamp<std::int64_t>(cvs, (size + vcap - 1) / vcap, size);
    std::int64_t next = 0;
    for (std::int64_t k = 0; k < cvs; ++k) {
      const std::int64_t take = size / cvs + (k < size % cvs ? 1 : 0);
      GroupTrip g;
      g.destination = key.first;
      g.depart = key.second;
      g.members.assign(riders.begin() + next, riders.begin() + next + take);
      next += take;
      schedule.groups.push_back(std::move(g));
    }
  }
  return Finish(instance, std::move(schedule));
}

Imported ImportNf(const Instance& instance,
                  const std::vector<dd::DecisionDiagram>& diagrams,
                  const std::map<std::string, double>& values) {
  for (const auto& [name, v] : values) CheckedIntegral(name, v);
  Schedule schedule;
  for (const dd::DecisionDiagram& dd : diagrams) {
    const int d = dd.destination();
    std::vector<bool> on(dd.arcs().size(), false);
    int count = 0;
    for (const dd::Arc& a : dd.arcs()) {
      const std::int64_t y = Get(values, Name("y", {d, a.id}));
      if (y != 0 && y != 1) {
        throw ImportError("milp: y value out of range for destination " +
                          std::to_string(d));
      }
      on[a.id] = y == 1;
      count += y == 1;
    }
    std::vector<int> path;
    int node = dd.root();
    while (node != dd.terminal()) {
      int next = -1;
      for (int a : dd.out_arcs(node)) {
        if (!on[a]) continue;
        if (next >= 0) {
          throw ImportError("milp: destination " + std::to_string(d) +
                            " splits its flow");
        }
        next = a;
      }
      if (next < 0) {
        throw ImportError("milp: destination " + std::to_string(d) +
                          " has no complete path");
      }
      path.push_back(next);
      node = dd.arcs()[next].to;
    }
    if (count != static_cast<int>(path.size())) {
      throw ImportError("milp: destination " + std::to_string(d) +
                        " has arcs off its path");
    }
    for (GroupTrip& g :
         dd::ToGroups(instance, dd, dd::MakePath(dd, std::move(path)))) {
      schedule.groups.push_back(std::move(g));
    }
  }
  return Finish(instance, std::move(schedule));
}

}  // namespace lastmile::milp

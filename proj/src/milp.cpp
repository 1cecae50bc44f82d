#include "hublf/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <memory>
#include <numeric>
#include <ostream>
#include <queue>
#include <unordered_set>

#include "hublf/dual_simplex.hpp"
#include "hublf/error.hpp"

namespace hublf {

double LinearRow::activity(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t t = 0; t < index.size(); ++t) s += value[t] * x[static_cast<std::size_t>(index[t])];
  return s;
}

double LinearRow::violation(std::span<const double> x) const {
  const double a = activity(x);
  switch (sense) {
    case RowSense::LessEqual: return std::max(0.0, a - rhs);
    case RowSense::GreaterEqual: return std::max(0.0, rhs - a);
    case RowSense::Equal: return std::abs(a - rhs);
  }
  return 0.0;
}

void LinearRow::normalize() {
  std::vector<std::size_t> order(index.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return index[a] < index[b]; });
  std::vector<int> idx;
  std::vector<double> val;
  for (std::size_t t : order) {
    if (!idx.empty() && idx.back() == index[t]) {
      val.back() += value[t];
    } else {
      idx.push_back(index[t]);
      val.push_back(value[t]);
    }
  }
  index.clear();
  value.clear();
  for (std::size_t t = 0; t < idx.size(); ++t)
    if (val[t] != 0.0) {
      index.push_back(idx[t]);
      value.push_back(val[t]);
    }
}

int MilpProblem::add_variable(std::string name, double lower, double upper, double cost, bool integer) {
  vars_.push_back({std::move(name), lower, upper, cost, integer});
  return static_cast<int>(vars_.size()) - 1;
}

int MilpProblem::add_row(LinearRow row) {
  rows_.push_back(std::move(row));
  return static_cast<int>(rows_.size()) - 1;
}

void MilpProblem::validate() const {
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    const Variable& v = vars_[j];
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper)
      throw ModelError("variable " + v.name + " has inverted bounds");
    if (v.integer && (!std::isfinite(v.lower) || !std::isfinite(v.upper)))
      throw ModelError("integer variable " + v.name + " needs finite bounds");
    if (!std::isfinite(v.cost)) throw ModelError("variable " + v.name + " has a non-finite cost");
  }
  for (const LinearRow& row : rows_) {
    if (row.index.size() != row.value.size()) throw ModelError("row " + row.name + " is malformed");
    for (int j : row.index)
      if (j < 0 || j >= num_variables())
        throw ModelError("row " + row.name + " references undeclared variable " + std::to_string(j));
  }
}

double MilpProblem::objective(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t j = 0; j < vars_.size(); ++j) s += vars_[j].cost * x[j];
  return s;
}

double MilpProblem::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < vars_.size(); ++j)
    worst = std::max({worst, vars_[j].lower - x[j], x[j] - vars_[j].upper});
  for (const LinearRow& row : rows_) worst = std::max(worst, row.violation(x));
  return worst;
}

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::Cutoff: return "cutoff";
    case LpStatus::IterationLimit: return "iteration_limit";
    case LpStatus::NumericFailure: return "numeric_failure";
  }
  return "?";
}

std::string to_string(MilpStatus s) {
  switch (s) {
    case MilpStatus::Optimal: return "optimal";
    case MilpStatus::Infeasible: return "infeasible";
    case MilpStatus::GapLimit: return "gap_limit";
    case MilpStatus::NodeLimit: return "node_limit";
    case MilpStatus::TimeLimit: return "time_limit";
    case MilpStatus::NumericFailure: return "numeric_failure";
  }
  return "?";
}

LpResult solve_lp(const MilpProblem& problem, const LpBasis* hint) {
  problem.validate();
  DualSimplex lp(problem);
  if (hint && !hint->empty()) lp.set_basis(*hint);
  LpResult res;
  res.status = lp.solve();
  res.iterations = lp.last_iterations();
  res.x = lp.primal();
  res.objective = lp.objective();
  res.basis = lp.basis();
  return res;
}

void register_separation(SolverConfig& config, SeparationCallback callback) {
  config.separator = std::move(callback);
}

double MilpSolution::gap() const {
  if (!has_incumbent) return kInf;
  return std::max(0.0, objective - best_bound) / std::max(1e-10, std::abs(objective));
}

// ---------------------------------------------------------------------------
// Branch-and-cut

namespace {

struct BoundChange {
  int var;
  double lower;
  double upper;
};

struct Node {
  double bound;
  long id;
  int depth;
  std::vector<BoundChange> changes;  // cumulative from the root
  LpBasis basis;
};

struct NodeOrder {
  bool operator()(const Node* a, const Node* b) const {
    if (a->bound != b->bound) return a->bound > b->bound;
    return a->id > b->id;
  }
};

std::string row_key(const LinearRow& row) {
  std::string key;
  key.reserve(1 + sizeof(double) * (1 + 2 * row.index.size()));
  key.push_back(static_cast<char>(row.sense));
  auto put = [&key](const void* p, std::size_t n) { key.append(static_cast<const char*>(p), n); };
  put(&row.rhs, sizeof row.rhs);
  for (std::size_t t = 0; t < row.index.size(); ++t) {
    put(&row.index[t], sizeof(int));
    put(&row.value[t], sizeof(double));
  }
  return key;
}

}  // namespace

MilpSolution solve_milp(const MilpProblem& problem, const SolverConfig& config) {
  if (!(config.feasibility_tol > 0.0) || !(config.integrality_tol > 0.0))
    throw ModelError("solver tolerances must be positive");
  if (config.branching_rule != "most_fractional")
    throw ModelError("unknown branching rule '" + config.branching_rule + "'");
  problem.validate();
  const auto started = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  MilpSolution sol;
  DualSimplex lp(problem);
  const int n = problem.num_variables();
  std::vector<double> root_lower(static_cast<std::size_t>(n)), root_upper(static_cast<std::size_t>(n));
  std::vector<int> integer_vars;
  for (int j = 0; j < n; ++j) {
    const Variable& v = problem.variable(j);
    root_lower[static_cast<std::size_t>(j)] = v.lower;
    root_upper[static_cast<std::size_t>(j)] = v.upper;
    if (v.integer) integer_vars.push_back(j);
  }

  std::unordered_set<std::string> known_rows;
  for (const LinearRow& row : problem.rows()) {
    LinearRow copy = row;
    copy.normalize();
    known_rows.insert(row_key(copy));
  }

  std::priority_queue<Node*, std::vector<Node*>, NodeOrder> open;
  std::vector<std::unique_ptr<Node>> storage;
  long next_id = 0;
  auto make_node = [&](double bound, int depth, std::vector<BoundChange> changes, LpBasis basis) {
    storage.push_back(std::make_unique<Node>(Node{bound, next_id++, depth, std::move(changes), std::move(basis)}));
    open.push(storage.back().get());
  };
  make_node(-kInf, 0, {}, {});

  double incumbent = kInf;
  std::vector<double> best;
  std::vector<BoundChange> applied;
  bool numeric_trouble = false;
  MilpStatus stop_status = MilpStatus::Optimal;
  bool stopped = false;

  auto prune_tol = [&] { return 1e-9 * std::max(1.0, std::abs(incumbent)); };

  bool has_continuous = integer_vars.size() < static_cast<std::size_t>(n);
  std::unique_ptr<DualSimplex> probe;
  std::size_t probe_cuts = 0;
  // Fixes the integer entries of a proposal, completes the continuous ones and
  // keeps the result if it is feasible for the model and every cut so far.
  auto try_proposal = [&](std::vector<double> cand, long node_id) {
    if (cand.size() != static_cast<std::size_t>(n)) return;
    for (int j : integer_vars) cand[static_cast<std::size_t>(j)] = std::round(cand[static_cast<std::size_t>(j)]);
    if (has_continuous) {
      if (!probe) probe = std::make_unique<DualSimplex>(problem);
      for (; probe_cuts < sol.cuts.size(); ++probe_cuts) probe->add_row(sol.cuts[probe_cuts]);
      for (int j : integer_vars) probe->set_bounds(j, cand[static_cast<std::size_t>(j)], cand[static_cast<std::size_t>(j)]);
      const LpStatus st = probe->solve(incumbent);
      sol.lp_iterations += probe->last_iterations();
      if (st != LpStatus::Optimal) return;
      const std::vector<double> filled = probe->primal();
      for (int j = 0; j < n; ++j)
        if (!problem.variable(j).integer) cand[static_cast<std::size_t>(j)] = filled[static_cast<std::size_t>(j)];
    }
    double worst = problem.max_violation(cand);
    for (const LinearRow& c : sol.cuts) worst = std::max(worst, c.violation(cand));
    if (worst > config.feasibility_tol) return;
    if (config.separator) {
      for (LinearRow& row : config.separator(cand, SeparationContext{node_id, 0, true}))
        if (row.violation(cand) >= config.violation_tol) return;
    }
    const double value = problem.objective(cand);
    if (!std::isfinite(incumbent) || value < incumbent - prune_tol()) {
      incumbent = value;
      best = std::move(cand);
      if (config.log)
        *config.log << "node " << node_id << ": heuristic incumbent " << incumbent << " (" << elapsed() << " s)\n";
    }
  };
  auto global_bound = [&] {
    double b = open.empty() ? incumbent : open.top()->bound;
    return std::min(b, incumbent);
  };

  while (!open.empty()) {
    if (sol.nodes >= config.node_limit) {
      stop_status = MilpStatus::NodeLimit;
      stopped = true;
      break;
    }
    if (elapsed() > config.time_limit_seconds) {
      stop_status = MilpStatus::TimeLimit;
      stopped = true;
      break;
    }
    if (config.relative_gap > 0.0 && std::isfinite(incumbent)) {
      const double g = std::max(0.0, incumbent - global_bound()) / std::max(1e-10, std::abs(incumbent));
      if (g <= config.relative_gap) {
        stop_status = MilpStatus::GapLimit;
        stopped = true;
        break;
      }
    }

    Node* node = open.top();
    open.pop();
    if (node->bound >= incumbent - prune_tol()) {
      node->basis.status.clear();
      continue;
    }
    ++sol.nodes;

    for (const BoundChange& c : applied)
      lp.set_bounds(c.var, root_lower[static_cast<std::size_t>(c.var)], root_upper[static_cast<std::size_t>(c.var)]);
    for (const BoundChange& c : node->changes) lp.set_bounds(c.var, c.lower, c.upper);
    applied = node->changes;
    if (!node->basis.empty()) lp.set_basis(node->basis);
    node->basis.status.clear();
    node->basis.status.shrink_to_fit();

    bool heuristic_due =
        config.heuristic && (sol.nodes == 1 || sol.nodes % std::max(1L, config.heuristic_frequency) == 0);
    while (true) {
      const LpStatus st = lp.solve(incumbent);
      sol.lp_iterations += lp.last_iterations();
      if (st == LpStatus::Infeasible || st == LpStatus::Cutoff) break;
      if (st != LpStatus::Optimal) {
        numeric_trouble = true;
        if (config.log) *config.log << "node " << node->id << ": LP " << to_string(st) << "\n";
        break;
      }
      const std::vector<double> x = lp.primal();
      const double obj = lp.objective();
      if (obj >= incumbent - prune_tol()) break;

      bool integral = true;
      for (int j : integer_vars) {
        const double v = x[static_cast<std::size_t>(j)];
        if (std::abs(v - std::round(v)) > config.integrality_tol) {
          integral = false;
          break;
        }
      }

      if (config.separator) {
        SeparationContext ctx{node->id, node->depth, integral};
        std::vector<LinearRow> rows = config.separator(x, ctx);
        int added = 0;
        for (LinearRow& row : rows) {
          row.normalize();
          std::string key = row_key(row);
          if (known_rows.count(key)) continue;
          const double viol = row.violation(x);
          if (viol < config.violation_tol) {
            if (config.check_cut_violation)
              throw ContractViolation("separator returned row '" + row.name + "' violated by only " +
                                      std::to_string(viol));
            continue;
          }
          known_rows.insert(std::move(key));
          lp.add_row(row);
          sol.cuts.push_back(row);
          ++added;
        }
        sol.cuts_added += added;
        if (added > 0) continue;
      }

      if (heuristic_due && !integral) {
        heuristic_due = false;
        try_proposal(config.heuristic(x), node->id);
        if (obj >= incumbent - prune_tol()) break;
      }

      if (integral) {
        std::vector<double> cand = x;
        for (int j : integer_vars) cand[static_cast<std::size_t>(j)] = std::round(cand[static_cast<std::size_t>(j)]);
        double worst = problem.max_violation(cand);
        for (const LinearRow& c : sol.cuts) worst = std::max(worst, c.violation(cand));
        if (worst <= config.feasibility_tol) {
          const double value = problem.objective(cand);
          if (value < incumbent) {
            incumbent = value;
            best = std::move(cand);
            if (config.log)
              *config.log << "node " << node->id << ": incumbent " << incumbent << " (" << elapsed() << " s)\n";
          }
          break;
        }
        integral = false;  // rounding broke a row: keep branching on the least integral value
      }

      int branch_var = -1;
      double most = -1.0;
      for (int j : integer_vars) {
        const auto u = static_cast<std::size_t>(j);
        if (lp.lower(j) == lp.upper(j)) continue;
        const double v = x[u];
        const double frac = v - std::floor(v);
        const double score = std::min(frac, 1.0 - frac);
        if (score > most + 1e-12) {
          most = score;
          branch_var = j;
        }
      }
      if (branch_var < 0) {
        numeric_trouble = true;
        break;
      }
      const double v = x[static_cast<std::size_t>(branch_var)];
      LpBasis basis = lp.basis();
      auto down = node->changes;
      down.push_back({branch_var, lp.lower(branch_var), std::floor(v)});
      auto up = node->changes;
      up.push_back({branch_var, std::ceil(v), lp.upper(branch_var)});
      if (std::ceil(v) == std::floor(v)) {
        // Integral within tolerance but rounding was infeasible: split around the value.
        down.back().upper = std::round(v) - 1.0 < lp.lower(branch_var) ? lp.lower(branch_var) : std::round(v) - 1.0;
        up.back().lower = std::round(v);
      }
      make_node(obj, node->depth + 1, std::move(down), basis);
      make_node(obj, node->depth + 1, std::move(up), std::move(basis));
      break;
    }
    const double gb = global_bound();
    sol.best_bound = std::max(sol.best_bound, gb);
    sol.bound_trace.push_back(sol.best_bound);
  }

  sol.seconds = elapsed();
  sol.has_incumbent = std::isfinite(incumbent);
  if (sol.has_incumbent) {
    sol.values = std::move(best);
    sol.objective = incumbent;
  }
  if (!stopped) {
    sol.best_bound = sol.has_incumbent ? incumbent : kInf;
    if (numeric_trouble && !sol.has_incumbent)
      sol.status = MilpStatus::NumericFailure;
    else
      sol.status = sol.has_incumbent ? MilpStatus::Optimal : MilpStatus::Infeasible;
    if (numeric_trouble && sol.has_incumbent) sol.status = MilpStatus::NumericFailure;
  } else {
    sol.best_bound = std::max(sol.best_bound, global_bound());
    sol.status = stop_status;
  }
  if (config.log)
    *config.log << "branch-and-cut: " << to_string(sol.status) << ", nodes " << sol.nodes << ", cuts "
                << sol.cuts_added << ", objective " << sol.objective << ", bound " << sol.best_bound
                << ", gap " << sol.gap() << ", " << sol.seconds << " s\n";
  return sol;
}

// ---------------------------------------------------------------------------
// LP text format

namespace {

std::string lp_name(const std::string& raw, const char* prefix, std::size_t index) {
  if (raw.empty()) return prefix + std::to_string(index);
  std::string s;
  for (char c : raw) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '(' || c == ')' || c == '.')
      s.push_back(c);
    else if (c == '[')
      s.push_back('(');
    else if (c == ']')
      s.push_back(')');
    else
      s.push_back('_');
  }
  if (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '.' || s[0] == 'e' || s[0] == 'E')
    s.insert(s.begin(), '_');
  return s;
}

void write_terms(std::ostream& out, const std::vector<int>& idx, const std::vector<double>& val,
                 const std::vector<std::string>& names) {
  std::size_t on_line = 0;
  for (std::size_t t = 0; t < idx.size(); ++t) {
    const double c = val[t];
    out << (c < 0 ? " - " : (t ? " + " : " ")) << std::abs(c) << " " << names[static_cast<std::size_t>(idx[t])];
    if (++on_line == 8 && t + 1 < idx.size()) {
      out << "\n  ";
      on_line = 0;
    }
  }
  if (idx.empty()) out << " 0 " << (names.empty() ? std::string("x0") : names[0]);
}

}  // namespace

void write_lp_format(const MilpProblem& problem, std::ostream& out) {
  const auto& vars = problem.variables();
  std::vector<std::string> names;
  for (std::size_t j = 0; j < vars.size(); ++j) names.push_back(lp_name(vars[j].name, "x", j));
  const auto old_prec = out.precision(17);

  out << "\\ written by hublf\nMinimize\n obj:";
  std::vector<int> idx;
  std::vector<double> val;
  for (std::size_t j = 0; j < vars.size(); ++j)
    if (vars[j].cost != 0.0) {
      idx.push_back(static_cast<int>(j));
      val.push_back(vars[j].cost);
    }
  write_terms(out, idx, val, names);
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < problem.rows().size(); ++i) {
    LinearRow row = problem.rows()[i];
    row.normalize();
    out << " " << lp_name(row.name, "c", i) << ":";
    write_terms(out, row.index, row.value, names);
    out << (row.sense == RowSense::LessEqual ? " <= " : row.sense == RowSense::GreaterEqual ? " >= " : " = ")
        << row.rhs << "\n";
  }
  out << "Bounds\n";
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const Variable& v = vars[j];
    if (std::isfinite(v.lower) && std::isfinite(v.upper)) {
      out << " " << v.lower << " <= " << names[j] << " <= " << v.upper << "\n";
    } else if (std::isfinite(v.lower)) {
      if (v.lower != 0.0) out << " " << names[j] << " >= " << v.lower << "\n";
    } else if (std::isfinite(v.upper)) {
      out << " -inf <= " << names[j] << " <= " << v.upper << "\n";
    } else {
      out << " " << names[j] << " free\n";
    }
  }
  bool any = false;
  for (std::size_t j = 0; j < vars.size(); ++j)
    if (vars[j].integer && vars[j].lower == 0.0 && vars[j].upper == 1.0) {
      if (!any) out << "Binaries\n";
      any = true;
      out << " " << names[j] << "\n";
    }
  any = false;
  for (std::size_t j = 0; j < vars.size(); ++j)
    if (vars[j].integer && !(vars[j].lower == 0.0 && vars[j].upper == 1.0)) {
      if (!any) out << "Generals\n";
      any = true;
      out << " " << names[j] << "\n";
    }
  out << "End\n";
  out.precision(old_prec);
}

}  // namespace hublf

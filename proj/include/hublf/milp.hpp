#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace hublf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { LessEqual, GreaterEqual, Equal };

/// Sparse linear row `sum value[i] * x[index[i]]  (sense)  rhs`.
struct LinearRow {
  std::vector<int> index;
  std::vector<double> value;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
  std::string name;

  void add(int var, double coef) {
    index.push_back(var);
    value.push_back(coef);
  }
  double activity(std::span<const double> x) const;
  /// Amount by which x violates the row (0 when satisfied).
  double violation(std::span<const double> x) const;
  /// Merges duplicate indices, drops zeros and sorts by variable index.
  void normalize();
};

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  double cost = 0.0;
  bool integer = false;
};

/// Mixed-binary linear program, always minimized.
class MilpProblem {
 public:
  int add_variable(std::string name, double lower, double upper, double cost, bool integer = false);
  int add_binary(std::string name, double cost) { return add_variable(std::move(name), 0.0, 1.0, cost, true); }
  int add_row(LinearRow row);

  int num_variables() const noexcept { return static_cast<int>(vars_.size()); }
  int num_rows() const noexcept { return static_cast<int>(rows_.size()); }
  const std::vector<Variable>& variables() const noexcept { return vars_; }
  const std::vector<LinearRow>& rows() const noexcept { return rows_; }
  Variable& variable(int j) { return vars_.at(static_cast<std::size_t>(j)); }
  const Variable& variable(int j) const { return vars_.at(static_cast<std::size_t>(j)); }

  /// Throws ModelError if a row references an unknown variable, bounds are
  /// inverted, or an integer variable lacks finite bounds.
  void validate() const;

  double objective(std::span<const double> x) const;
  double max_violation(std::span<const double> x) const;

 private:
  std::vector<Variable> vars_;
  std::vector<LinearRow> rows_;
};

// ---------------------------------------------------------------------------
// LP relaxation

enum class LpStatus { Optimal, Infeasible, Unbounded, Cutoff, IterationLimit, NumericFailure };
std::string to_string(LpStatus s);

/// Basis status per column: structurals first, then one logical per row.
struct LpBasis {
  enum : std::int8_t { Basic = 0, AtLower = 1, AtUpper = 2, AtZero = 3 };
  std::vector<std::int8_t> status;
  bool empty() const noexcept { return status.empty(); }
};

struct LpResult {
  LpStatus status = LpStatus::NumericFailure;
  double objective = 0.0;
  std::vector<double> x;
  LpBasis basis;
  long iterations = 0;
};

/// Solves the continuous relaxation (integrality ignored), optionally warm-started.
LpResult solve_lp(const MilpProblem& problem, const LpBasis* hint = nullptr);

// ---------------------------------------------------------------------------
// Branch-and-cut

enum class MilpStatus { Optimal, Infeasible, GapLimit, NodeLimit, TimeLimit, NumericFailure };
std::string to_string(MilpStatus s);

struct SeparationContext {
  long node = 0;
  int depth = 0;
  bool integral = false;  // all integer variables integral at this point
};

/// Returns rows violated by the point; an empty result means "no cut found".
using SeparationCallback =
    std::function<std::vector<LinearRow>(std::span<const double> point, const SeparationContext&)>;

/// Proposes a full point from an LP solution. Only the integer entries are
/// used: the solver fixes them and re-optimizes the continuous columns.
/// An empty result means no proposal.
using HeuristicCallback = std::function<std::vector<double>(std::span<const double> point)>;

#ifdef NDEBUG
inline constexpr bool kDebugBuild = false;
#else
inline constexpr bool kDebugBuild = true;
#endif

struct SolverConfig {
  double feasibility_tol = 1e-6;
  double integrality_tol = 1e-6;
  double relative_gap = 0.0;
  long node_limit = 1'000'000;
  double time_limit_seconds = kInf;
  /// Only "most_fractional" (ties by lowest index) is implemented.
  std::string branching_rule = "most_fractional";
  /// Minimum violation for a separated row to be accepted.
  double violation_tol = 1e-6;
  /// Throw ContractViolation when the separator hands back a non-violated row.
  bool check_cut_violation = kDebugBuild;
  SeparationCallback separator;
  /// Primal heuristic, called at the root and then every `heuristic_frequency` nodes.
  HeuristicCallback heuristic;
  long heuristic_frequency = 100;
  /// Optional progress log (one line per event); null = silent.
  std::ostream* log = nullptr;
};

void register_separation(SolverConfig& config, SeparationCallback callback);

struct MilpSolution {
  MilpStatus status = MilpStatus::NumericFailure;
  std::vector<double> values;
  double objective = kInf;
  double best_bound = -kInf;
  bool has_incumbent = false;
  long nodes = 0;
  long cuts_added = 0;
  long lp_iterations = 0;
  double seconds = 0.0;
  /// Rows appended by the separator, in order of addition.
  std::vector<LinearRow> cuts;
  /// Global lower bound after each processed node (non-decreasing).
  std::vector<double> bound_trace;

  double gap() const;
};

MilpSolution solve_milp(const MilpProblem& problem, const SolverConfig& config);

/// Writes the problem in CPLEX LP text format.
void write_lp_format(const MilpProblem& problem, std::ostream& out);

}  // namespace hublf

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hublf/instance.hpp"
#include "hublf/milp.hpp"

namespace hublf {

enum class ModelVariant { M0, M1, M1Clustered, M2 };
std::string to_string(ModelVariant v);
/// Accepts m0, m1, m1c, m2 (case-insensitive).
ModelVariant parse_model_variant(const std::string& s);

struct ModelSpec {
  ModelVariant variant = ModelVariant::M0;
  int lambda = 2;     // M2 only
  double beta = 1.0;  // M2 only
  /// Keep only the cheaper orientation of each non-loop arc per commodity.
  bool apply_prop1_reduction = true;
  /// Per commodity and node: x_kk + sum_l (x_kl + x_lk) <= z_k, same for the backup.
  bool apply_marin_inequalities = false;
  /// Per commodity: sum of P over all arcs <= max failure probability.
  bool apply_P_bound = false;
  /// Drop the backup's own edge from the linearization sum.
  bool tight_linearization = false;
  /// Extra rows on the backup cost terms. M1: sum_a P_a >= sum p x and
  /// P_a <= pmax xbar_a. Clustered: per cluster s, sum_a xi_as equals and each
  /// xi_as stays below the original arc's membership in s.
  bool strengthen_backup_cost = true;
  /// Refuse the clustered encoding above this many distinct probabilities.
  int max_clusters = 16;
};

struct Arc {
  int from = -1;
  int to = -1;
  friend bool operator==(const Arc&, const Arc&) = default;
};

/// Undirected edge key with k <= l.
inline std::pair<int, int> edge_of(const Arc& a) { return {std::min(a.from, a.to), std::max(a.from, a.to)}; }

struct CostBreakdown {
  double hub_setup = 0.0;
  double edge_setup = 0.0;
  double routing = 0.0;  // expected routing cost under the model's own cost rule
  double setup() const { return hub_setup + edge_setup; }
  double total() const { return hub_setup + edge_setup + routing; }
};

struct DesignSolution {
  ModelSpec spec;
  int n = 0;
  std::vector<int> hubs;                    // ascending
  std::vector<std::pair<int, int>> edges;   // k <= l, ascending, loops included
  std::vector<Arc> original;                // one per commodity
  std::vector<Arc> backup;                  // M1 variants only, else empty
  CostBreakdown cost;
  double objective = 0.0;
  std::string instance_hash;

  bool is_hub(int k) const;
  bool has_edge(int k, int l) const;
  int num_loops() const;
};

/// Index map from model entities to MilpProblem columns; -1 marks an absent column.
struct VariableMap {
  int n = 0;
  std::vector<int> z;                        // per node
  std::vector<int> y;                        // per edge, see edge_slot()
  std::vector<std::vector<int>> x;           // [r][k*n+l]
  std::vector<std::vector<int>> xbar;        // M1 variants
  std::vector<std::vector<int>> p;           // M1: P per arc
  std::vector<std::vector<std::vector<int>>> xi;  // M1 clustered, K >= 2: [r][arc][s]

  int edge_slot(int k, int l) const;
  int y_of(int k, int l) const { return y[static_cast<std::size_t>(edge_slot(k, l))]; }
  int x_of(std::size_t r, int k, int l) const { return x[r][static_cast<std::size_t>(k * n + l)]; }
};

struct BuiltModel {
  ModelSpec spec;
  MilpProblem problem;
  VariableMap vars;
  /// Connectivity separator for M2; empty otherwise.
  SeparationCallback separator;
  /// Distinct probabilities used by the clustered encoding.
  std::vector<double> clusters;
};

BuiltModel build_m0(const Instance& inst);
BuiltModel build_m0(const Instance& inst, const ModelSpec& spec);
BuiltModel build_m1(const Instance& inst, const ModelSpec& spec);
BuiltModel build_m1_clustered(const Instance& inst, const ModelSpec& spec);
BuiltModel build_m2(const Instance& inst, const ModelSpec& spec);
/// Dispatches on spec.variant.
BuiltModel build_model(const Instance& inst, const ModelSpec& spec);

/// Routing cost per commodity under the model's objective rule:
/// M0: C orig; M1: (1-p) C orig + p C backup; M2: (1 + beta p) C orig.
double model_routing_cost(const Instance& inst, const ModelSpec& spec, std::size_t r, const Arc& original,
                          const std::optional<Arc>& backup);

/// Fills cost and objective of a design from first principles.
void evaluate_design(const Instance& inst, DesignSolution& sol);

/// Checks the design invariants; throws DecodeError naming the broken one.
void validate_design(const Instance& inst, const DesignSolution& sol);

/// Rounds solver values, validates, recomputes the objective and compares it
/// with the solver's within 1e-5 relative.
DesignSolution decode(const Instance& inst, const BuiltModel& model, const MilpSolution& solution);

/// Primal heuristic for the model: rounds the LP design up, routes each
/// commodity on its cheapest open arc (or arc pair), then closes hubs and
/// edges or opens edges between open hubs while the total drops.
HeuristicCallback rounding_heuristic(const Instance& inst, const BuiltModel& model);

struct SolveOutcome {
  MilpSolution milp;
  std::optional<DesignSolution> design;
};

/// Build, solve (registering the M2 separator and, unless the config has one,
/// the rounding heuristic) and decode.
SolveOutcome solve_model(const Instance& inst, const ModelSpec& spec, SolverConfig config = {});

std::string serialize_solution(const DesignSolution& sol, const MilpSolution* stats = nullptr);
DesignSolution parse_solution(const std::string& text);
void save_solution(const DesignSolution& sol, const std::filesystem::path& path, const MilpSolution* stats = nullptr);
DesignSolution load_solution(const std::filesystem::path& path);

}  // namespace hublf

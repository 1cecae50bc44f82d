#pragma once

#include <span>
#include <vector>

#include "hublf/instance.hpp"
#include "hublf/milp.hpp"

namespace hublf {

/// Undirected capacitated graph on nodes 0..n-1 without self-loops.
/// Parallel additions accumulate on the same edge.
class SupportGraph {
 public:
  explicit SupportGraph(int n = 0) : n_(n), cap_(static_cast<std::size_t>(n)) {}

  /// Edges {k,l}, k < l, with y(k,l) > threshold; the diagonal of y is ignored.
  static SupportGraph from_point(const SquareMatrix& y, double threshold = 1e-7);

  int num_nodes() const noexcept { return n_; }
  void add_edge(int u, int v, double capacity);
  double capacity(int u, int v) const { return cap_(static_cast<std::size_t>(u), static_cast<std::size_t>(v)); }
  /// Nodes incident to at least one edge, ascending.
  std::vector<int> support_nodes() const;
  /// Total capacity of edges with exactly one endpoint in `side`.
  double cut_value(const std::vector<bool>& side) const;

 private:
  int n_;
  SquareMatrix cap_;
};

struct MinCut {
  double value = 0.0;
  std::vector<bool> source_side;  // indexed by node, contains s
};

/// Edmonds-Karp max flow between s and t. `value` is the capacity of the
/// returned cut (the reachable set of the final residual graph).
MinCut max_flow(const SupportGraph& graph, int s, int t);

/// Gomory-Hu cut tree over a node subset (Gusfield's method). Tree edge
/// (nodes[i], nodes[parent[i]]) carries flow[i]; the root has parent -1.
struct GomoryHuTree {
  std::vector<int> nodes;
  std::vector<int> parent;
  std::vector<double> flow;

  /// Smallest flow on the tree path between two graph nodes.
  double pair_value(int u, int v) const;
  /// Graph nodes on the child side of tree edge i (subtree rooted at nodes[i]).
  std::vector<int> subtree(int i) const;
};

/// Cut tree over `nodes` (support nodes when empty).
GomoryHuTree gomory_hu(const SupportGraph& graph, std::vector<int> nodes = {});

enum class CutForm { SmallSet, Pairwise };

/// Violated connectivity row:
///   SmallSet: y(delta(S)) + y_kk >= lambda z_k
///   Pairwise: y(delta(S)) + y_kk >= lambda (z_k + z_l - 1)
struct SeparationResult {
  std::vector<int> set;  // S, ascending
  int hub = -1;          // k in S
  int partner = -1;      // l outside S (Pairwise only)
  CutForm form = CutForm::SmallSet;
  double violation = 0.0;
};

/// Fractional backbone: z per node, symmetric y with loops on the diagonal.
struct DesignPoint {
  std::vector<double> z;
  SquareMatrix y;
};

double cut_row_violation(const DesignPoint& point, const SeparationResult& cut, int lambda);

/// Scans both sides of every cut-tree edge and every singleton.
std::vector<SeparationResult> separate(const DesignPoint& point, int lambda, double tolerance = 1e-6,
                                       double threshold = 1e-7);

struct ConnectivityViolation {
  int hub = -1;
  int other = -1;      // -1 for the singleton row
  double value = 0.0;  // min cut (or degree) plus the loop of `hub`
};

/// Checks an integral backbone: every open hub k has deg(k) + y_kk >= lambda,
/// and every open pair k != l has mincut(k,l) + y_kk >= lambda.
std::vector<ConnectivityViolation> audit_connectivity(const DesignPoint& point, int lambda);

}  // namespace hublf

#pragma once

#include <cstdint>
#include <vector>

#include "hublf/milp.hpp"

namespace hublf {

/// Bounded-variable dual simplex over `A x - s = 0`, one logical s_i per row
/// carrying the row's activity bounds. The basis inverse is kept in product
/// form (eta file) and rebuilt every `kRefactorInterval` pivots.
///
/// All state survives between solve() calls, so appending rows or tightening
/// bounds and calling solve() again continues from the current basis.
class DualSimplex {
 public:
  explicit DualSimplex(const MilpProblem& problem);

  int num_structural() const noexcept { return n_; }
  int num_rows() const noexcept { return m_; }

  void add_row(const LinearRow& row);
  void set_bounds(int j, double lower, double upper);
  double lower(int j) const { return lower_[static_cast<std::size_t>(j)]; }
  double upper(int j) const { return upper_[static_cast<std::size_t>(j)]; }

  LpBasis basis() const;
  /// Installs a basis; missing trailing logicals (rows added later) become basic.
  void set_basis(const LpBasis& basis);

  /// Runs dual simplex until optimal / infeasible. Stops with Cutoff as soon as
  /// the dual objective exceeds `cutoff`.
  LpStatus solve(double cutoff = kInf);

  double objective() const;
  std::vector<double> primal() const;
  long iterations() const noexcept { return total_iterations_; }
  long last_iterations() const noexcept { return last_iterations_; }

 private:
  enum : std::int8_t { kBasic = 0, kAtLower = 1, kAtUpper = 2, kAtZero = 3 };

  struct Entry {
    int index;
    double value;
  };

  void refactor();
  void compute_primal();
  void compute_duals();
  bool repair_dual_infeasibility();
  void ftran(std::vector<double>& v) const;
  void btran(std::vector<double>& v) const;
  void push_eta(int pivot_row, const std::vector<double>& column);
  double nonbasic_value(int j) const;
  void place_nonbasic(int j);
  int choose_leaving_row() const;
  double dual_objective() const;

  int n_ = 0;  // structural columns
  int m_ = 0;  // rows
  std::vector<std::vector<Entry>> cols_;  // structural columns
  std::vector<std::vector<Entry>> rows_;  // structural part of each row
  std::vector<double> cost_, lower_, upper_;
  std::vector<std::int8_t> status_;
  std::vector<bool> boxed_;  // a finite artificial bound replaces an infinite one
  std::vector<double> x_, d_;
  std::vector<int> head_;    // basic variable at each row position
  std::vector<int> where_;   // row position of a basic variable, -1 otherwise
  std::vector<double> dse_;  // dual steepest-edge weights per row position

  // Eta file: pivot row, pivot value and off-pivot entries of each eta column.
  std::vector<int> eta_row_;
  std::vector<double> eta_pivot_;
  std::vector<int> eta_start_;
  std::vector<Entry> eta_entries_;
  int etas_since_refactor_ = 0;
  bool need_refactor_ = true;

  long total_iterations_ = 0;
  long last_iterations_ = 0;
  bool bland_ = false;
};

}  // namespace hublf

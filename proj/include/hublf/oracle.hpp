#pragma once

#include "hublf/connectivity.hpp"
#include "hublf/formulations.hpp"

namespace hublf {

/// Exhaustive enumeration limits; larger inputs raise OracleGuardError.
inline constexpr int kOracleMaxNodes = 6;
inline constexpr std::size_t kOracleMaxCommodities = 12;

struct OracleResult {
  bool feasible = false;
  double objective = kInf;
  DesignSolution design;
  long designs = 0;  // (H, E_H) pairs examined
};

/// Best design over every hub set H and edge set E_H within E[H], loops included.
OracleResult oracle_m0(const Instance& inst);
OracleResult oracle_m1(const Instance& inst);
OracleResult oracle_m2(const Instance& inst, int lambda, double beta);

/// Connectivity test by enumeration of every node subset: for each activated
/// pair k != l and every S with k in S, l outside, y(delta(S)) + y_kk >= lambda;
/// plus y(delta(k)) + y_kk >= lambda for every activated k.
bool oracle_lambda_connected(const DesignPoint& integral_point, int lambda);

/// True when some S, k in S (and l outside S when |S| >= lambda) gives a
/// connectivity row violated by more than `tolerance`.
bool oracle_cut_violated(const DesignPoint& point, int lambda, double tolerance = 1e-6);

}  // namespace hublf

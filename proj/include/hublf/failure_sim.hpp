#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hublf/formulations.hpp"
#include "hublf/instance.hpp"
#include "hublf/rng.hpp"

namespace hublf {

/// FS1: edges fail. FS2: hubs fail with their stars. FS3: edges fail, then
/// loops with inflated probability. FS4: edges fail, then hubs that lost
/// a gamma fraction of their inter-hub edges.
enum class FailureScenario { FS1, FS2, FS3, FS4 };
std::string to_string(FailureScenario s);
FailureScenario parse_failure_scenario(const std::string& s);
inline constexpr FailureScenario kAllScenarios[] = {FailureScenario::FS1, FailureScenario::FS2, FailureScenario::FS3,
                                                    FailureScenario::FS4};

struct FailureScenarioConfig {
  FailureScenario kind = FailureScenario::FS1;
  int trials = 10000;
  double gamma = 0.75;
  double loop_inflation = 1.5;
  std::uint64_t seed = 1;

  /// Throws ContractViolation on trials < 1 or gamma outside (0,1].
  void validate() const;
};

using EdgeList = std::vector<std::pair<int, int>>;

/// Surviving subset of sol.edges (same order) after one random draw.
EdgeList draw_after_failure(const DesignSolution& sol, const Instance& inst, const FailureScenarioConfig& config,
                            SplitMix64& rng);

struct TrialOutcome {
  bool all_routable = false;
  int unroutable = 0;   // commodities without any path
  double routing = 0.0;  // sum of path costs, meaningful when all_routable
};

/// Original arc when its edge survives, else the cheapest surviving path.
TrialOutcome evaluate_trial(const DesignSolution& sol, const Instance& inst, const EdgeList& surviving);

struct SimulationReport {
  FailureScenarioConfig config;
  int successes = 0;
  double tau = 0.0;
  double mean_routing = 0.0;  // over successful trials, 0 without any
  double mean_failed_edges = 0.0;
  double var_failed_edges = 0.0;  // population variance over trials
  std::vector<int> failed_histogram;  // [count of failed edges] -> trials
  double setup = 0.0;
  double direct_cost = 0.0;  // sum of w_r c-bar_{o_r d_r}

  /// setup + tau R + (1 - tau)(1 + q) direct.
  double phi(double q) const;
};

/// Trials in index order, each with SplitMix64::for_trial(seed, t).
SimulationReport simulate(const DesignSolution& sol, const Instance& inst, const FailureScenarioConfig& config);

std::vector<double> default_q_grid();
std::vector<std::pair<double, double>> phi_curve(const SimulationReport& report, const std::vector<double>& q_grid);

double direct_delivery_cost(const Instance& inst);

}  // namespace hublf

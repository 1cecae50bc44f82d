#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "hublf/formulations.hpp"
#include "hublf/instance.hpp"

namespace hublf {

/// o_r -> hubs[0] -> ... -> hubs.back() -> d_r. A single entry means the loop
/// at that hub was used.
struct HubPath {
  std::vector<int> hubs;
  double cost = 0.0;  // w_r (c-bar_{o h0} + sum of inter-hub costs + c-bar_{h_last d})
};

/// Cheapest path for commodity r that uses at least one edge of `edges`
/// (k <= l pairs, loops as {h,h}). Visiting one hub only is allowed when its
/// loop is present and pays c_hh. Ties break toward the lexicographically
/// smaller hub sequence.
std::optional<HubPath> shortest_hub_path(const Instance& inst, std::size_t r, const std::vector<int>& hubs,
                                         const std::vector<std::pair<int, int>>& edges);

/// Path for commodity r on the design's backbone without `failed_edge`.
/// Throws std::out_of_range for a bad commodity index.
std::optional<HubPath> recover_backup_path(const DesignSolution& sol, const Instance& inst, std::size_t r,
                                           std::pair<int, int> failed_edge);

struct NetworkMetrics {
  int num_hubs = 0;
  int num_links = 0;  // loops included
  int num_loops = 0;
  double i1 = 0.0;
  std::optional<double> i2;  // empty with a single hub
  double routing_share = 0.0;     // percent of the objective
  double hub_setup_share = 0.0;
  double link_setup_share = 0.0;
};

/// Counts and indices straight from the counts; shares from sol.cost.
NetworkMetrics network_metrics(const DesignSolution& sol);
NetworkMetrics network_metrics(int num_hubs, int num_links, int num_loops, const CostBreakdown& cost = {});

/// Percent increase of hub plus edge set-up cost over the base design; empty
/// when the base has no set-up cost.
std::optional<double> price_of_robustness(const DesignSolution& base, const DesignSolution& protected_design);

}  // namespace hublf

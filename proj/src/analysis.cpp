#include "hublf/analysis.hpp"

#include <algorithm>
#include <stdexcept>

#include "hublf/error.hpp"
#include "hublf/milp.hpp"

namespace hublf {

namespace {

struct Label {
  double cost = kInf;
  std::vector<int> path;
  bool done = false;
};

bool better(double cost, const std::vector<int>& path, const Label& than) {
  if (cost != than.cost) return cost < than.cost;
  return path < than.path;
}

}  // namespace

// Two layers per hub: A = reached by the access arc only, B = at least one
// inter-hub arc used. A -> B at the same hub needs the loop; delivery leaves
// from B.
std::optional<HubPath> shortest_hub_path(const Instance& inst, std::size_t r, const std::vector<int>& hubs,
                                         const std::vector<std::pair<int, int>>& edges) {
  if (r >= inst.num_commodities()) throw std::out_of_range("commodity index out of range");
  const Commodity& com = inst.commodities[r];
  const std::size_t H = hubs.size();
  if (H == 0) return std::nullopt;
  std::vector<int> slot(static_cast<std::size_t>(inst.n), -1);
  for (std::size_t i = 0; i < H; ++i) slot[static_cast<std::size_t>(hubs[i])] = static_cast<int>(i);
  std::vector<char> adj(H * H, 0);
  for (auto [k, l] : edges) {
    const int a = slot[static_cast<std::size_t>(k)], b = slot[static_cast<std::size_t>(l)];
    if (a < 0 || b < 0) throw ContractViolation("edge endpoint is not a hub");
    adj[static_cast<std::size_t>(a) * H + static_cast<std::size_t>(b)] = 1;
    adj[static_cast<std::size_t>(b) * H + static_cast<std::size_t>(a)] = 1;
  }

  const auto o = static_cast<std::size_t>(com.origin);
  const auto d = static_cast<std::size_t>(com.destination);
  std::vector<Label> lab(2 * H);  // [0,H) layer A, [H,2H) layer B
  for (std::size_t i = 0; i < H; ++i) {
    lab[i].cost = inst.access_cost(o, static_cast<std::size_t>(hubs[i]));
    lab[i].path = {hubs[i]};
  }

  for (;;) {
    std::size_t u = lab.size();
    for (std::size_t s = 0; s < lab.size(); ++s)
      if (!lab[s].done && lab[s].cost < kInf && (u == lab.size() || better(lab[s].cost, lab[s].path, lab[u]))) u = s;
    if (u == lab.size()) break;
    lab[u].done = true;
    const std::size_t i = u % H;
    const auto hi = static_cast<std::size_t>(hubs[i]);
    if (u < H && adj[i * H + i]) {
      Label& to = lab[H + i];
      const double c = lab[u].cost + inst.interhub_cost(hi, hi);
      if (!to.done && better(c, lab[u].path, to)) {
        to.cost = c;
        to.path = lab[u].path;
      }
    }
    for (std::size_t j = 0; j < H; ++j) {
      if (j == i || !adj[i * H + j]) continue;
      Label& to = lab[H + j];
      const double c = lab[u].cost + inst.interhub_cost(hi, static_cast<std::size_t>(hubs[j]));
      std::vector<int> path = lab[u].path;
      path.push_back(hubs[j]);
      if (!to.done && better(c, path, to)) {
        to.cost = c;
        to.path = std::move(path);
      }
    }
  }

  Label best;
  for (std::size_t i = 0; i < H; ++i) {
    const Label& at = lab[H + i];
    if (at.cost == kInf) continue;
    const double c = at.cost + inst.access_cost(static_cast<std::size_t>(hubs[i]), d);
    if (better(c, at.path, best)) {
      best.cost = c;
      best.path = at.path;
    }
  }
  if (best.cost == kInf) return std::nullopt;
  return HubPath{std::move(best.path), com.demand * best.cost};
}

std::optional<HubPath> recover_backup_path(const DesignSolution& sol, const Instance& inst, std::size_t r,
                                           std::pair<int, int> failed_edge) {
  if (r >= inst.num_commodities()) throw std::out_of_range("commodity index out of range");
  if (failed_edge.first > failed_edge.second) std::swap(failed_edge.first, failed_edge.second);
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : sol.edges)
    if (e != failed_edge) edges.push_back(e);
  return shortest_hub_path(inst, r, sol.hubs, edges);
}

NetworkMetrics network_metrics(int num_hubs, int num_links, int num_loops, const CostBreakdown& cost) {
  if (num_hubs < 1) throw ContractViolation("metrics need at least one hub");
  NetworkMetrics m;
  m.num_hubs = num_hubs;
  m.num_links = num_links;
  m.num_loops = num_loops;
  const double h = num_hubs;
  m.i1 = 2.0 * num_links / (h * (h + 1.0));
  if (num_hubs >= 2) m.i2 = 2.0 * (num_links - num_loops) / (h * (h - 1.0));
  const double total = cost.total();
  if (total > 0.0) {
    m.hub_setup_share = 100.0 * cost.hub_setup / total;
    m.link_setup_share = 100.0 * cost.edge_setup / total;
    m.routing_share = 100.0 - m.hub_setup_share - m.link_setup_share;
  }
  return m;
}

NetworkMetrics network_metrics(const DesignSolution& sol) {
  return network_metrics(static_cast<int>(sol.hubs.size()), static_cast<int>(sol.edges.size()), sol.num_loops(),
                         sol.cost);
}

std::optional<double> price_of_robustness(const DesignSolution& base, const DesignSolution& protected_design) {
  if (!base.instance_hash.empty() && !protected_design.instance_hash.empty() &&
      base.instance_hash != protected_design.instance_hash)
    throw ContractViolation("designs belong to different instances");
  const double b = base.cost.setup();
  if (b == 0.0) return std::nullopt;
  return 100.0 * (protected_design.cost.setup() - b) / b;
}

}  // namespace hublf

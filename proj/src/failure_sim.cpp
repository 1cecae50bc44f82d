#include "hublf/failure_sim.hpp"

#include <algorithm>
#include <cctype>

#include "hublf/analysis.hpp"
#include "hublf/error.hpp"

namespace hublf {

std::string to_string(FailureScenario s) {
  switch (s) {
    case FailureScenario::FS1: return "FS1";
    case FailureScenario::FS2: return "FS2";
    case FailureScenario::FS3: return "FS3";
    case FailureScenario::FS4: return "FS4";
  }
  return "?";
}

FailureScenario parse_failure_scenario(const std::string& s) {
  std::string u = s;
  for (char& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (FailureScenario f : kAllScenarios)
    if (to_string(f) == u) return f;
  throw ParseError("scenario", "unknown failure scenario '" + s + "'");
}

void FailureScenarioConfig::validate() const {
  if (trials < 1) throw ContractViolation("trials must be at least 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ContractViolation("gamma must lie in (0,1]");
  if (!(loop_inflation >= 0.0)) throw ContractViolation("loop inflation must be nonnegative");
}

namespace {

bool fails(SplitMix64& rng, double p) { return unit_uniform(rng) < p; }

double prob(const Instance& inst, int k, int l) {
  return inst.fail_prob(static_cast<std::size_t>(k), static_cast<std::size_t>(l));
}

}  // namespace

EdgeList draw_after_failure(const DesignSolution& sol, const Instance& inst, const FailureScenarioConfig& config,
                            SplitMix64& rng) {
  const auto& E = sol.edges;
  std::vector<char> down(E.size(), 0);
  const auto n = static_cast<std::size_t>(inst.n);

  switch (config.kind) {
    case FailureScenario::FS1:
      for (std::size_t e = 0; e < E.size(); ++e) down[e] = fails(rng, prob(inst, E[e].first, E[e].second));
      break;
    case FailureScenario::FS2: {
      std::vector<char> hub_down(n, 0);
      for (int k : sol.hubs) hub_down[static_cast<std::size_t>(k)] = fails(rng, prob(inst, k, k));
      for (std::size_t e = 0; e < E.size(); ++e)
        down[e] = hub_down[static_cast<std::size_t>(E[e].first)] || hub_down[static_cast<std::size_t>(E[e].second)];
      break;
    }
    case FailureScenario::FS3: {
      std::vector<char> touched(n, 0);
      for (std::size_t e = 0; e < E.size(); ++e) {
        if (E[e].first == E[e].second) continue;
        down[e] = fails(rng, prob(inst, E[e].first, E[e].second));
        if (down[e]) touched[static_cast<std::size_t>(E[e].first)] = touched[static_cast<std::size_t>(E[e].second)] = 1;
      }
      for (std::size_t e = 0; e < E.size(); ++e) {
        if (E[e].first != E[e].second) continue;
        double p = prob(inst, E[e].first, E[e].first);
        if (touched[static_cast<std::size_t>(E[e].first)]) p = std::min(1.0, config.loop_inflation * p);
        down[e] = fails(rng, p);
      }
      break;
    }
    case FailureScenario::FS4: {
      std::vector<int> degree(n, 0), lost(n, 0);
      for (std::size_t e = 0; e < E.size(); ++e) {
        down[e] = fails(rng, prob(inst, E[e].first, E[e].second));
        if (E[e].first == E[e].second) continue;
        for (int v : {E[e].first, E[e].second}) {
          ++degree[static_cast<std::size_t>(v)];
          if (down[e]) ++lost[static_cast<std::size_t>(v)];
        }
      }
      std::vector<char> collapsed(n, 0);
      for (std::size_t k = 0; k < n; ++k)
        collapsed[k] = degree[k] > 0 && lost[k] >= config.gamma * degree[k];
      for (std::size_t e = 0; e < E.size(); ++e)
        if (collapsed[static_cast<std::size_t>(E[e].first)] || collapsed[static_cast<std::size_t>(E[e].second)])
          down[e] = 1;
      break;
    }
  }

  EdgeList alive;
  for (std::size_t e = 0; e < E.size(); ++e)
    if (!down[e]) alive.push_back(E[e]);
  return alive;
}

TrialOutcome evaluate_trial(const DesignSolution& sol, const Instance& inst, const EdgeList& surviving) {
  TrialOutcome out;
  for (std::size_t r = 0; r < inst.num_commodities(); ++r) {
    const Arc& a = sol.original.at(r);
    const auto e = edge_of(a);
    if (std::find(surviving.begin(), surviving.end(), e) != surviving.end()) {
      out.routing += routing_cost(inst, r, a.from, a.to);
      continue;
    }
    const auto path = shortest_hub_path(inst, r, sol.hubs, surviving);
    if (path)
      out.routing += path->cost;
    else
      ++out.unroutable;
  }
  out.all_routable = out.unroutable == 0;
  return out;
}

double SimulationReport::phi(double q) const {
  return setup + tau * mean_routing + (1.0 - tau) * (1.0 + q) * direct_cost;
}

double direct_delivery_cost(const Instance& inst) {
  double s = 0.0;
  for (const Commodity& c : inst.commodities)
    s += c.demand * inst.access_cost(static_cast<std::size_t>(c.origin), static_cast<std::size_t>(c.destination));
  return s;
}

SimulationReport simulate(const DesignSolution& sol, const Instance& inst, const FailureScenarioConfig& config) {
  config.validate();
  if (sol.edges.empty()) throw ContractViolation("simulation needs a non-empty backbone");
  SimulationReport rep;
  rep.config = config;
  rep.setup = sol.cost.setup();
  rep.direct_cost = direct_delivery_cost(inst);
  rep.failed_histogram.assign(sol.edges.size() + 1, 0);

  double routing_sum = 0.0, failed_sum = 0.0, failed_sq = 0.0;
  for (int t = 0; t < config.trials; ++t) {
    SplitMix64 rng = SplitMix64::for_trial(config.seed, static_cast<std::uint64_t>(t));
    const EdgeList alive = draw_after_failure(sol, inst, config, rng);
    const auto failed = static_cast<double>(sol.edges.size() - alive.size());
    ++rep.failed_histogram[sol.edges.size() - alive.size()];
    failed_sum += failed;
    failed_sq += failed * failed;
    const TrialOutcome o = evaluate_trial(sol, inst, alive);
    if (o.all_routable) {
      ++rep.successes;
      routing_sum += o.routing;
    }
  }
  const double T = config.trials;
  rep.tau = rep.successes / T;
  rep.mean_routing = rep.successes > 0 ? routing_sum / rep.successes : 0.0;
  rep.mean_failed_edges = failed_sum / T;
  rep.var_failed_edges = std::max(0.0, failed_sq / T - rep.mean_failed_edges * rep.mean_failed_edges);
  return rep;
}

std::vector<double> default_q_grid() {
  std::vector<double> q;
  for (int i = 0; i <= 20; ++i) q.push_back(i * 0.05);
  return q;
}

std::vector<std::pair<double, double>> phi_curve(const SimulationReport& report, const std::vector<double>& q_grid) {
  if (q_grid.empty()) throw ContractViolation("q grid is empty");
  std::vector<std::pair<double, double>> out;
  for (double q : q_grid) {
    if (q < 0.0) throw ContractViolation("q must be nonnegative");
    out.emplace_back(q, report.phi(q));
  }
  return out;
}

}  // namespace hublf

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "hublf/analysis.hpp"
#include "hublf/error.hpp"
#include "hublf/failure_sim.hpp"
#include "hublf/formulations.hpp"

using namespace hublf;

namespace {

Instance blank(int n) {
  Instance inst;
  inst.n = n;
  inst.alpha = 1.0;
  inst.base_cost = SquareMatrix(static_cast<std::size_t>(n), 1.0);
  inst.access_cost = SquareMatrix(static_cast<std::size_t>(n), 10.0);
  inst.interhub_cost = SquareMatrix(static_cast<std::size_t>(n), 1.0);
  for (int i = 0; i < n; ++i) {
    inst.base_cost(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) = 0.0;
    inst.access_cost(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) = 0.0;
  }
  inst.hub_setup.assign(static_cast<std::size_t>(n), 1.0);
  inst.edge_setup = SquareMatrix(static_cast<std::size_t>(n), 1.0);
  inst.fail_prob = SquareMatrix(static_cast<std::size_t>(n), 0.0);
  return inst;
}

void set_sym(SquareMatrix& m, int a, int b, double v) {
  m(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) = v;
  m(static_cast<std::size_t>(b), static_cast<std::size_t>(a)) = v;
}

// Four hubs k=0, l=1, m=2, q=3 with edges kl, kq, lm, qm and loops ll, mm.
constexpr int K = 0, L = 1, M = 2, Q = 3;

DesignSolution four_hub_design() {
  DesignSolution sol;
  sol.n = 4;
  sol.hubs = {K, L, M, Q};
  sol.edges = {{K, L}, {K, Q}, {L, L}, {L, M}, {M, M}, {M, Q}};
  sol.cost.hub_setup = 4.0;
  sol.cost.edge_setup = 6.0;
  return sol;
}

std::set<std::pair<int, int>> as_set(const EdgeList& e) { return {e.begin(), e.end()}; }

EdgeList draw_once(const DesignSolution& sol, const Instance& inst, FailureScenario kind, std::uint64_t seed = 7) {
  FailureScenarioConfig cfg;
  cfg.kind = kind;
  SplitMix64 rng(seed);
  return draw_after_failure(sol, inst, cfg, rng);
}

// Cheapest walk by enumerating every hub sequence up to `max_len`; a repeated
// hub in consecutive positions is its loop.
double brute_path(const Instance& inst, std::size_t r, const std::vector<int>& hubs,
                  const std::vector<std::pair<int, int>>& edges, int max_len) {
  std::set<std::pair<int, int>> E(edges.begin(), edges.end());
  const auto has = [&](int a, int b) { return E.count({std::min(a, b), std::max(a, b)}) > 0; };
  const Commodity& c = inst.commodities[r];
  double best = kInf;
  std::vector<int> seq;
  auto rec = [&](auto&& self, double acc) -> void {
    if (seq.size() >= 2) {
      const double total = acc + inst.access_cost(static_cast<std::size_t>(seq.back()), static_cast<std::size_t>(c.destination));
      best = std::min(best, total);
    }
    if (static_cast<int>(seq.size()) == max_len) return;
    for (int h : hubs) {
      double step;
      if (seq.empty()) {
        step = inst.access_cost(static_cast<std::size_t>(c.origin), static_cast<std::size_t>(h));
      } else {
        if (!has(seq.back(), h)) continue;
        step = inst.interhub_cost(static_cast<std::size_t>(seq.back()), static_cast<std::size_t>(h));
      }
      seq.push_back(h);
      self(self, acc + step);
      seq.pop_back();
    }
  };
  rec(rec, 0.0);
  return best == kInf ? kInf : c.demand * best;
}

Instance small(int n, std::uint64_t seed, double rho, std::size_t max_r = 8) {
  ProbabilityScenario sc;
  sc.kind = ScenarioKind::SP;
  sc.rho = rho;
  sc.seed = seed + 100;
  CostScalingParams cp;
  cp.max_commodities = max_r;
  return synthesize_instance(n, seed, sc, cp);
}

DesignSolution solve_or_die(const Instance& inst, ModelVariant v, int lambda = 2) {
  ModelSpec spec;
  spec.variant = v;
  spec.lambda = lambda;
  auto out = solve_model(inst, spec);
  if (!out.design) throw std::runtime_error("no design");
  return *out.design;
}

}  // namespace

TEST(BackupPath, DetourThroughTheOtherEdge) {
  // o=4, d=5; original through {k,l}, alternative {q,m}
  Instance inst = blank(6);
  set_sym(inst.access_cost, 4, K, 1.0);
  set_sym(inst.access_cost, L, 5, 1.0);
  set_sym(inst.access_cost, 4, Q, 2.0);
  set_sym(inst.access_cost, M, 5, 3.0);
  set_sym(inst.interhub_cost, Q, M, 4.0);
  inst.commodities = {{4, 5, 2.5}};
  DesignSolution sol;
  sol.n = 6;
  sol.hubs = {K, L, M, Q};
  sol.edges = {{K, L}, {M, Q}};
  auto path = recover_backup_path(sol, inst, 0, {L, K});
  ASSERT_TRUE(path);
  EXPECT_EQ(path->hubs, (std::vector<int>{Q, M}));
  EXPECT_DOUBLE_EQ(path->cost, 2.5 * (2.0 + 4.0 + 3.0));
}

TEST(BackupPath, ChainOfTwoInterHubArcs) {
  Instance inst = blank(6);
  set_sym(inst.access_cost, 4, K, 1.0);
  set_sym(inst.access_cost, L, 5, 1.0);
  set_sym(inst.access_cost, M, 5, 2.0);
  set_sym(inst.interhub_cost, K, Q, 3.0);
  set_sym(inst.interhub_cost, Q, M, 4.0);
  inst.commodities = {{4, 5, 1.0}};
  DesignSolution sol;
  sol.n = 6;
  sol.hubs = {K, L, M, Q};
  sol.edges = {{K, L}, {K, Q}, {M, Q}};
  auto path = recover_backup_path(sol, inst, 0, {K, L});
  ASSERT_TRUE(path);
  EXPECT_EQ(path->hubs, (std::vector<int>{K, Q, M}));
  EXPECT_DOUBLE_EQ(path->cost, 1.0 + 3.0 + 4.0 + 2.0);
}

TEST(BackupPath, NothingLeft) {
  Instance inst = blank(4);
  inst.commodities = {{2, 3, 1.0}};
  DesignSolution sol;
  sol.n = 4;
  sol.hubs = {0, 1};
  sol.edges = {{0, 1}};
  EXPECT_FALSE(recover_backup_path(sol, inst, 0, {0, 1}));
  EXPECT_THROW(recover_backup_path(sol, inst, 3, {0, 1}), std::out_of_range);
}

TEST(BackupPath, SingleHubNeedsItsLoop) {
  Instance inst = blank(3);
  inst.interhub_cost(0, 0) = 0.5;
  inst.commodities = {{1, 2, 1.0}};
  EXPECT_FALSE(shortest_hub_path(inst, 0, {0}, {}));
  auto p = shortest_hub_path(inst, 0, {0}, {{0, 0}});
  ASSERT_TRUE(p);
  EXPECT_EQ(p->hubs, (std::vector<int>{0}));
  EXPECT_DOUBLE_EQ(p->cost, 10.0 + 0.5 + 10.0);
}

TEST(BackupPath, MatchesWalkEnumeration) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> cost(0.0, 5.0);
  for (int rep = 0; rep < 300; ++rep) {
    const int n = 5;
    Instance inst = blank(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        inst.access_cost(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) = a == b ? 0.0 : cost(gen);
        inst.interhub_cost(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) = cost(gen);
      }
    const int o = static_cast<int>(gen() % n);
    const int d = (o + 1 + static_cast<int>(gen() % (n - 1))) % n;
    inst.commodities = {{o, d, 1.0 + cost(gen)}};
    std::vector<int> hubs;
    for (int k = 0; k < n; ++k)
      if (gen() % 3 != 0) hubs.push_back(k);
    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i < hubs.size(); ++i)
      for (std::size_t j = i; j < hubs.size(); ++j)
        if (gen() % 2) edges.emplace_back(hubs[i], hubs[j]);
    const auto got = shortest_hub_path(inst, 0, hubs, edges);
    const double want = brute_path(inst, 0, hubs, edges, 2 * static_cast<int>(hubs.size()));
    if (want == kInf) {
      EXPECT_FALSE(got) << "rep " << rep;
    } else {
      ASSERT_TRUE(got) << "rep " << rep;
      EXPECT_NEAR(got->cost, want, 1e-9) << "rep " << rep;
    }
  }
}

TEST(BackupPath, EverySingleEdgeRemovalFromM2LeavesAPath) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed)
    for (int lambda : {2, 3}) {
      Instance inst = small(5, seed, 0.2);
      DesignSolution sol = solve_or_die(inst, ModelVariant::M2, lambda);
      for (const auto& e : sol.edges)
        for (std::size_t r = 0; r < inst.num_commodities(); ++r)
          EXPECT_TRUE(recover_backup_path(sol, inst, r, e)) << "seed " << seed << " lambda " << lambda;
    }
}

TEST(Metrics, IndicesFromCounts) {
  auto a = network_metrics(4, 6, 2);
  EXPECT_DOUBLE_EQ(a.i1, 0.6);
  ASSERT_TRUE(a.i2);
  EXPECT_NEAR(*a.i2, 8.0 / 12.0, 1e-15);
  auto b = network_metrics(5, 10, 0);
  EXPECT_NEAR(b.i1, 20.0 / 30.0, 1e-15);
  EXPECT_DOUBLE_EQ(*b.i2, 1.0);
  auto c = network_metrics(1, 1, 1);
  EXPECT_DOUBLE_EQ(c.i1, 1.0);
  EXPECT_FALSE(c.i2);
  EXPECT_THROW(network_metrics(0, 0, 0), ContractViolation);
}

TEST(Metrics, SharesAddUp) {
  Instance inst = small(5, 2, 0.1);
  for (ModelVariant v : {ModelVariant::M0, ModelVariant::M1, ModelVariant::M2}) {
    DesignSolution sol = solve_or_die(inst, v);
    auto m = network_metrics(sol);
    EXPECT_NEAR(m.routing_share + m.hub_setup_share + m.link_setup_share, 100.0, 1e-9);
    EXPECT_GE(m.i1, 0.0);
    EXPECT_LE(m.i1, 1.0);
    if (m.i2) {
      EXPECT_GE(*m.i2, 0.0);
      EXPECT_LE(*m.i2, 1.0);
    }
    EXPECT_EQ(m.num_loops, sol.num_loops());
  }
}

TEST(Metrics, PriceOfRobustness) {
  DesignSolution base, prot;
  base.cost.hub_setup = 60.0;
  base.cost.edge_setup = 40.0;
  prot.cost.hub_setup = 90.0;
  prot.cost.edge_setup = 60.0;
  EXPECT_DOUBLE_EQ(*price_of_robustness(base, prot), 50.0);
  EXPECT_DOUBLE_EQ(*price_of_robustness(base, base), 0.0);
  EXPECT_FALSE(price_of_robustness(DesignSolution{}, prot));
  base.instance_hash = "a";
  prot.instance_hash = "b";
  EXPECT_THROW(price_of_robustness(base, prot), ContractViolation);
}

TEST(Draw, NoFailuresKeepEverything) {
  Instance inst = blank(4);
  DesignSolution sol = four_hub_design();
  for (FailureScenario f : kAllScenarios) EXPECT_EQ(draw_once(sol, inst, f), sol.edges) << to_string(f);
}

TEST(Draw, CertainFailureRemovesEverything) {
  Instance inst = blank(4);
  inst.fail_prob = SquareMatrix(4, 1.0);
  DesignSolution sol = four_hub_design();
  EXPECT_TRUE(draw_once(sol, inst, FailureScenario::FS1).empty());
}

TEST(Draw, HubFailureTakesItsStar) {
  Instance inst = blank(4);
  inst.fail_prob(M, M) = 1.0;
  DesignSolution sol = four_hub_design();
  EXPECT_EQ(as_set(draw_once(sol, inst, FailureScenario::FS2)),
            (std::set<std::pair<int, int>>{{K, L}, {K, Q}, {L, L}}));
}

TEST(Draw, LoopInflatedAfterNeighbourEdgeFails) {
  Instance inst = blank(4);
  set_sym(inst.fail_prob, Q, M, 1.0);
  inst.fail_prob(M, M) = 0.7;  // 1.05 after inflation, capped at 1
  DesignSolution sol = four_hub_design();
  for (std::uint64_t s = 0; s < 50; ++s)
    EXPECT_EQ(as_set(draw_once(sol, inst, FailureScenario::FS3, s)),
              (std::set<std::pair<int, int>>{{K, L}, {K, Q}, {L, L}, {L, M}}));
  // without a failed neighbour edge the loop keeps its own probability
  Instance calm = blank(4);
  calm.fail_prob(M, M) = 0.7;
  int lost = 0;
  const int T = 4000;
  for (int t = 0; t < T; ++t) {
    auto alive = as_set(draw_once(sol, calm, FailureScenario::FS3, static_cast<std::uint64_t>(t)));
    lost += alive.count({M, M}) == 0;
  }
  EXPECT_NEAR(lost / double(T), 0.7, 4.0 * std::sqrt(0.21 / T));
}

TEST(Draw, CascadeCountsOnlyInterHubEdges) {
  DesignSolution sol = four_hub_design();
  // l loses both of its inter-hub edges and collapses, loop included;
  // m loses one of two and stays.
  Instance a = blank(4);
  set_sym(a.fail_prob, K, L, 1.0);
  set_sym(a.fail_prob, L, M, 1.0);
  a.fail_prob(M, M) = 1.0;
  EXPECT_EQ(as_set(draw_once(sol, a, FailureScenario::FS4)), (std::set<std::pair<int, int>>{{K, Q}, {M, Q}}));
  // m loses lm and qm, so mm goes too; k, l and q each lost half
  Instance b = blank(4);
  set_sym(b.fail_prob, L, M, 1.0);
  set_sym(b.fail_prob, Q, M, 1.0);
  EXPECT_EQ(as_set(draw_once(sol, b, FailureScenario::FS4)), (std::set<std::pair<int, int>>{{K, L}, {K, Q}, {L, L}}));
}

TEST(Draw, HubFailuresRemoveWholeStars) {
  Instance inst = blank(4);
  for (int k = 0; k < 4; ++k) inst.fail_prob(static_cast<std::size_t>(k), static_cast<std::size_t>(k)) = 0.4;
  DesignSolution sol = four_hub_design();
  for (std::uint64_t s = 0; s < 500; ++s) {
    auto alive = as_set(draw_once(sol, inst, FailureScenario::FS2, s));
    std::set<std::pair<int, int>> removed;
    for (const auto& e : sol.edges)
      if (!alive.count(e)) removed.insert(e);
    std::set<std::pair<int, int>> stars;
    for (int k : sol.hubs) {
      bool whole = true;
      for (const auto& e : sol.edges)
        if ((e.first == k || e.second == k) && !removed.count(e)) whole = false;
      if (whole)
        for (const auto& e : sol.edges)
          if (e.first == k || e.second == k) stars.insert(e);
    }
    EXPECT_EQ(removed, stars) << "seed " << s;
  }
}

TEST(Trial, NoFailureCostsTheOriginalRoutes) {
  Instance inst = small(5, 3, 0.2);
  DesignSolution sol = solve_or_die(inst, ModelVariant::M2);
  auto o = evaluate_trial(sol, inst, sol.edges);
  double want = 0.0;
  for (std::size_t r = 0; r < inst.num_commodities(); ++r)
    want += routing_cost(inst, r, sol.original[r].from, sol.original[r].to);
  EXPECT_TRUE(o.all_routable);
  EXPECT_NEAR(o.routing, want, 1e-9 * want);
  auto none = evaluate_trial(sol, inst, {});
  EXPECT_FALSE(none.all_routable);
  EXPECT_EQ(none.unroutable, static_cast<int>(inst.num_commodities()));
}

TEST(Trial, ReroutesAroundTheFailedEdge) {
  Instance inst = blank(6);
  set_sym(inst.access_cost, 4, K, 1.0);
  set_sym(inst.access_cost, L, 5, 1.0);
  set_sym(inst.access_cost, 4, Q, 2.0);
  set_sym(inst.access_cost, M, 5, 3.0);
  set_sym(inst.interhub_cost, Q, M, 4.0);
  inst.commodities = {{4, 5, 1.0}};
  DesignSolution sol;
  sol.n = 6;
  sol.hubs = {K, L, M, Q};
  sol.edges = {{K, L}, {M, Q}};
  sol.original = {{K, L}};
  auto o = evaluate_trial(sol, inst, {{M, Q}});
  EXPECT_TRUE(o.all_routable);
  EXPECT_DOUBLE_EQ(o.routing, 9.0);
}

TEST(Simulation, PhiArithmetic) {
  SimulationReport r;
  r.tau = 0.5;
  r.setup = 10.0;
  r.mean_routing = 20.0;
  r.direct_cost = 8.0;
  EXPECT_DOUBLE_EQ(r.phi(0.25), 25.0);
  r.tau = 1.0;
  EXPECT_DOUBLE_EQ(r.phi(0.0), r.phi(1.0));
  r.tau = 0.0;
  EXPECT_DOUBLE_EQ(r.phi(0.5) - r.phi(0.0), 0.5 * 8.0);
  auto grid = default_q_grid();
  ASSERT_EQ(grid.size(), 21u);
  EXPECT_DOUBLE_EQ(grid.back(), 1.0);
  EXPECT_THROW(phi_curve(r, {}), ContractViolation);
}

TEST(Simulation, ConfigValidation) {
  FailureScenarioConfig c;
  c.trials = 0;
  EXPECT_THROW(c.validate(), ContractViolation);
  c.trials = 1;
  c.gamma = 0.0;
  EXPECT_THROW(c.validate(), ContractViolation);
  EXPECT_EQ(parse_failure_scenario("fs3"), FailureScenario::FS3);
  EXPECT_THROW(parse_failure_scenario("fs5"), ParseError);
}

TEST(Simulation, Reproducible) {
  Instance inst = small(5, 4, 0.3);
  DesignSolution sol = solve_or_die(inst, ModelVariant::M2);
  FailureScenarioConfig cfg;
  cfg.trials = 2000;
  cfg.seed = 99;
  for (FailureScenario f : kAllScenarios) {
    cfg.kind = f;
    auto a = simulate(sol, inst, cfg), b = simulate(sol, inst, cfg);
    EXPECT_EQ(a.successes, b.successes);
    EXPECT_EQ(a.mean_routing, b.mean_routing);
    EXPECT_EQ(a.failed_histogram, b.failed_histogram);
  }
}

TEST(Simulation, FailedEdgeCountMatchesRate) {
  const double rho = 0.3;
  Instance inst = small(5, 5, rho);
  DesignSolution sol = solve_or_die(inst, ModelVariant::M2, 3);
  FailureScenarioConfig cfg;
  cfg.trials = 10000;
  auto rep = simulate(sol, inst, cfg);
  const double E = static_cast<double>(sol.edges.size());
  EXPECT_NEAR(rep.mean_failed_edges, rho * E, 4.0 * std::sqrt(E * rho * (1 - rho) / cfg.trials));
  EXPECT_NEAR(rep.var_failed_edges, E * rho * (1 - rho), 0.1 * E * rho * (1 - rho));
  int total = 0;
  for (int h : rep.failed_histogram) total += h;
  EXPECT_EQ(total, cfg.trials);
}

TEST(Simulation, LowerProbabilitiesNeverHurt) {
  Instance inst = small(5, 6, 0.4);
  DesignSolution sol = solve_or_die(inst, ModelVariant::M0);
  FailureScenarioConfig cfg;
  cfg.trials = 10000;
  for (FailureScenario f : kAllScenarios) {
    cfg.kind = f;
    const double base = simulate(sol, inst, cfg).tau;
    for (double s : {0.0, 0.5}) {
      Instance scaled = inst;
      for (double& p : scaled.fail_prob.data()) p *= s;
      const double tau = simulate(sol, scaled, cfg).tau;
      const double sigma = std::sqrt(std::max(base * (1 - base), tau * (1 - tau)) / cfg.trials);
      EXPECT_GE(tau, base - 3.0 * sigma) << to_string(f) << " s=" << s;
    }
  }
}

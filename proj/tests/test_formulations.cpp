#include <gtest/gtest.h>

#include <random>

#include "hublf/connectivity.hpp"
#include "hublf/dual_simplex.hpp"
#include "hublf/error.hpp"
#include "hublf/formulations.hpp"
#include "hublf/oracle.hpp"

using namespace hublf;

namespace {

Instance small(int n, std::uint64_t seed, ScenarioKind kind = ScenarioKind::SP, double rho = 0.1, double alpha = 0.5,
               std::size_t max_r = 6) {
  ProbabilityScenario sc;
  sc.kind = kind;
  sc.rho = rho;
  sc.seed = seed + 100;
  CostScalingParams cp;
  cp.alpha = alpha;
  cp.max_commodities = max_r;
  return synthesize_instance(n, seed, sc, cp);
}

ModelSpec spec_of(ModelVariant v, bool prop1 = true) {
  ModelSpec s;
  s.variant = v;
  s.apply_prop1_reduction = prop1;
  return s;
}

// Two nodes, one commodity 0 -> 1; loops are prohibitively expensive.
Instance two_nodes() {
  Instance inst;
  inst.n = 2;
  inst.alpha = 1.0;
  inst.base_cost = SquareMatrix(2);
  inst.base_cost(0, 1) = inst.base_cost(1, 0) = 1.0;
  inst.access_cost = inst.base_cost;
  inst.interhub_cost = SquareMatrix(2);
  inst.interhub_cost(0, 1) = inst.interhub_cost(1, 0) = 1.0;
  inst.interhub_cost(0, 0) = inst.interhub_cost(1, 1) = 50.0;
  inst.hub_setup = {1.0, 1.0};
  inst.edge_setup = SquareMatrix(2, 1.0);
  inst.fail_prob = SquareMatrix(2, 0.0);
  inst.commodities = {{0, 1, 1.0}};
  return inst;
}

}  // namespace

TEST(BuildM0, SingleNodeWithoutDemand) {
  Instance inst = two_nodes();
  inst.n = 1;
  for (SquareMatrix* m : {&inst.base_cost, &inst.access_cost, &inst.interhub_cost, &inst.edge_setup, &inst.fail_prob})
    *m = SquareMatrix(1, 1.0);
  inst.fail_prob = SquareMatrix(1, 0.0);
  inst.hub_setup = {1.0};
  inst.commodities.clear();
  auto out = solve_model(inst, spec_of(ModelVariant::M0));
  ASSERT_TRUE(out.design);
  EXPECT_EQ(out.milp.objective, 0.0);
  EXPECT_TRUE(out.design->hubs.empty());
}

TEST(BuildM0, TwoNodesUseTheEdge) {
  Instance inst = two_nodes();
  auto out = solve_model(inst, spec_of(ModelVariant::M0));
  ASSERT_TRUE(out.design);
  // hubs 2 + edge 1 + routing (0 + 1 + 0)
  EXPECT_NEAR(out.milp.objective, 4.0, 1e-9);
  EXPECT_EQ(out.design->hubs, (std::vector<int>{0, 1}));
  EXPECT_EQ(out.design->original[0], (Arc{0, 1}));
  EXPECT_NEAR(oracle_m0(inst).objective, 4.0, 1e-12);
}

TEST(BuildM0, FreeDesignRoutesEachCommodityCheapest) {
  Instance inst = small(4, 3);
  std::fill(inst.hub_setup.begin(), inst.hub_setup.end(), 0.0);
  inst.edge_setup = SquareMatrix(4, 0.0);
  double expect = 0.0;
  for (std::size_t r = 0; r < inst.commodities.size(); ++r) {
    double best = kInf;
    for (int k = 0; k < 4; ++k)
      for (int l = 0; l < 4; ++l) best = std::min(best, routing_cost(inst, r, k, l));
    expect += best;
  }
  auto out = solve_model(inst, spec_of(ModelVariant::M0));
  EXPECT_NEAR(out.milp.objective, expect, 1e-9);
}

TEST(BuildM0, MatchesOracle) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    Instance inst = small(3 + static_cast<int>(seed % 3), seed, ScenarioKind::SP, 0.1, 0.2 + 0.3 * (seed % 3));
    auto out = solve_model(inst, spec_of(ModelVariant::M0));
    ASSERT_EQ(out.milp.status, MilpStatus::Optimal);
    EXPECT_NEAR(out.milp.objective, oracle_m0(inst).objective, 1e-6) << "seed " << seed;
  }
}

TEST(BuildM1, MatchesOracleWithAndWithoutReduction) {
  const ScenarioKind kinds[] = {ScenarioKind::RP, ScenarioKind::CP, ScenarioKind::SP};
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    Instance inst = small(3 + static_cast<int>(seed % 2), seed, kinds[seed % 3], 0.3);
    const double expect = oracle_m1(inst).objective;
    auto on = solve_model(inst, spec_of(ModelVariant::M1, true));
    auto off = solve_model(inst, spec_of(ModelVariant::M1, false));
    EXPECT_NEAR(on.milp.objective, expect, 1e-6) << "seed " << seed;
    EXPECT_NEAR(off.milp.objective, expect, 1e-6) << "seed " << seed;
  }
}

TEST(BuildM1, OptionalRowsKeepTheOptimum) {
  Instance inst = small(4, 9, ScenarioKind::RP, 0.3);
  const double expect = oracle_m1(inst).objective;
  ModelSpec s = spec_of(ModelVariant::M1);
  s.apply_marin_inequalities = true;
  s.apply_P_bound = true;
  EXPECT_NEAR(solve_model(inst, s).milp.objective, expect, 1e-6);
  s.tight_linearization = true;
  EXPECT_NEAR(solve_model(inst, s).milp.objective, expect, 1e-6);
}

TEST(BuildM1, ZeroFailureGivesPlainCosts) {
  Instance inst = small(3, 4, ScenarioKind::SP, 0.0);
  auto out = solve_model(inst, spec_of(ModelVariant::M1));
  ASSERT_TRUE(out.design);
  double plain = out.design->cost.setup();
  for (std::size_t r = 0; r < inst.commodities.size(); ++r)
    plain += routing_cost(inst, r, out.design->original[r].from, out.design->original[r].to);
  EXPECT_NEAR(out.milp.objective, plain, 1e-9);
  EXPECT_GE(out.milp.objective, oracle_m0(inst).objective - 1e-9);
}

// Fix every binary of an M1 point and let the LP choose P.
TEST(BuildM1, LinearizationIsExactAtIntegerPoints) {
  Instance inst = small(4, 5, ScenarioKind::RP, 0.3);
  BuiltModel m = build_m1(inst, spec_of(ModelVariant::M1, false));
  const int n = inst.n;
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    MilpProblem lp = m.problem;
    for (int j = 0; j < lp.num_variables(); ++j)
      if (lp.variable(j).integer) lp.variable(j).upper = lp.variable(j).lower = 0.0;
    for (int k = 0; k < n; ++k) lp.variable(m.vars.z[k]).lower = lp.variable(m.vars.z[k]).upper = 1.0;
    for (int k = 0; k < n; ++k)
      for (int l = k; l < n; ++l) lp.variable(m.vars.y_of(k, l)).lower = lp.variable(m.vars.y_of(k, l)).upper = 1.0;
    double expect = 0.0;
    for (std::size_t r = 0; r < inst.commodities.size(); ++r) {
      const int a = static_cast<int>(rng() % (n * n));
      int b = static_cast<int>(rng() % (n * n));
      auto same_edge = [&](int u, int v) {
        return std::min(u / n, u % n) == std::min(v / n, v % n) && std::max(u / n, u % n) == std::max(v / n, v % n);
      };
      while (same_edge(a, b)) b = static_cast<int>(rng() % (n * n));
      lp.variable(m.vars.x[r][a]).lower = lp.variable(m.vars.x[r][a]).upper = 1.0;
      lp.variable(m.vars.xbar[r][b]).lower = lp.variable(m.vars.xbar[r][b]).upper = 1.0;
      const double p = inst.fail_prob(a / n, a % n);
      expect += (1 - p) * routing_cost(inst, r, a / n, a % n) + p * routing_cost(inst, r, b / n, b % n);
    }
    auto res = solve_lp(lp);
    ASSERT_EQ(res.status, LpStatus::Optimal);
    double setup = 0.0;
    for (int k = 0; k < n; ++k) setup += inst.hub_setup[k];
    for (int k = 0; k < n; ++k)
      for (int l = k; l < n; ++l) setup += inst.edge_setup(k, l);
    EXPECT_NEAR(res.objective - setup, expect, 1e-9 * std::max(1.0, expect));
  }
}

TEST(BuildM1Clustered, MatchesM1) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    for (ScenarioKind kind : {ScenarioKind::CP, ScenarioKind::SP}) {
      Instance inst = small(4, seed, kind, 0.1);
      auto a = solve_model(inst, spec_of(ModelVariant::M1));
      auto b = solve_model(inst, spec_of(ModelVariant::M1Clustered));
      EXPECT_NEAR(a.milp.objective, b.milp.objective, 1e-6) << "seed " << seed;
    }
  }
}

TEST(BuildM1Clustered, RefusesTooManyValues) {
  Instance inst = small(6, 2, ScenarioKind::RP, 0.3);
  EXPECT_THROW(build_m1_clustered(inst, spec_of(ModelVariant::M1Clustered)), ModelError);
}

TEST(BuildM2, MatchesOracle) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed)
    for (int lambda : {2, 3}) {
      Instance inst = small(4, seed, ScenarioKind::CP);
      ModelSpec s = spec_of(ModelVariant::M2);
      s.lambda = lambda;
      s.beta = 0.5;
      auto out = solve_model(inst, s);
      ASSERT_TRUE(out.design);
      auto ora = oracle_m2(inst, lambda, 0.5);
      EXPECT_NEAR(out.milp.objective, ora.objective, 1e-6) << "seed " << seed << " lambda " << lambda;
      EXPECT_GE(static_cast<int>(out.design->hubs.size()), lambda);
    }
}

TEST(BuildM2, BetaZeroIsPlainRouting) {
  Instance inst = small(4, 7, ScenarioKind::RP, 0.3);
  ModelSpec s = spec_of(ModelVariant::M2);
  s.beta = 0.0;
  auto out = solve_model(inst, s);
  ASSERT_TRUE(out.design);
  double plain = 0.0;
  for (std::size_t r = 0; r < inst.commodities.size(); ++r)
    plain += routing_cost(inst, r, out.design->original[r].from, out.design->original[r].to);
  EXPECT_NEAR(out.design->cost.routing, plain, 1e-9);
}

TEST(BuildM2, TooFewNodes) {
  Instance inst = small(3, 1);
  ModelSpec s = spec_of(ModelVariant::M2);
  s.lambda = 4;
  EXPECT_THROW(build_m2(inst, s), ModelError);
}

TEST(BuildModel, RejectsSelfCommodity) {
  Instance inst = small(3, 1);
  inst.commodities.push_back({1, 1, 5.0});
  EXPECT_THROW(build_m0(inst), ModelError);
}

TEST(Rounding, ProposalsAreFeasibleDesigns) {
  const ModelVariant variants[] = {ModelVariant::M0, ModelVariant::M1, ModelVariant::M1Clustered, ModelVariant::M2};
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    Instance inst = small(4 + static_cast<int>(seed % 2), seed, ScenarioKind::CP, 0.0);
    for (ModelVariant v : variants) {
      ModelSpec s = spec_of(v, seed % 2 == 0);
      s.lambda = 2 + static_cast<int>(seed % 3);
      const BuiltModel m = build_model(inst, s);
      const LpResult lp = solve_lp(m.problem);
      ASSERT_EQ(lp.status, LpStatus::Optimal);
      const std::vector<double> cand = rounding_heuristic(inst, m)(lp.x);
      ASSERT_EQ(cand.size(), static_cast<std::size_t>(m.problem.num_variables())) << to_string(v);
      if (v == ModelVariant::M0 || v == ModelVariant::M2) {
        // no continuous columns: the proposal itself must be feasible
        EXPECT_EQ(m.problem.max_violation(cand), 0.0);
        if (m.separator) EXPECT_TRUE(m.separator(cand, SeparationContext{0, 0, true}).empty());
      }
      // complete the continuous part through the solver, then check as a design
      SolverConfig cfg;
      cfg.node_limit = 1;
      cfg.heuristic = [&](std::span<const double>) { return cand; };
      if (m.separator) register_separation(cfg, m.separator);
      const MilpSolution fake = solve_milp(m.problem, cfg);
      ASSERT_TRUE(fake.has_incumbent) << to_string(v) << " seed " << seed;
      const DesignSolution d = decode(inst, m, fake);
      EXPECT_NO_THROW(validate_design(inst, d));
      for (int j = 0; j < m.problem.num_variables(); ++j)
        if (m.problem.variable(j).integer && fake.status == MilpStatus::NodeLimit)
          EXPECT_EQ(fake.values[static_cast<std::size_t>(j)], cand[static_cast<std::size_t>(j)]);
    }
  }
}

TEST(Rounding, CompleteLpDesignGivesTheCheapestRoutes) {
  // with every hub and edge fractionally open and set-up free, rounding keeps
  // the optimum: each commodity on its cheapest arc
  Instance inst = small(4, 3);
  inst.hub_setup.assign(4, 0.0);
  inst.edge_setup = SquareMatrix(4, 0.0);
  const BuiltModel m = build_m0(inst);
  std::vector<double> pt(static_cast<std::size_t>(m.problem.num_variables()), 0.5);
  const std::vector<double> cand = rounding_heuristic(inst, m)(pt);
  ASSERT_FALSE(cand.empty());
  EXPECT_NEAR(m.problem.objective(cand), oracle_m0(inst).objective, 1e-9);
}

TEST(Decode, BackupOnOriginalEdgeIsRejected) {
  Instance inst = small(3, 2, ScenarioKind::SP, 0.2);
  auto out = solve_model(inst, spec_of(ModelVariant::M1));
  ASSERT_TRUE(out.design);
  DesignSolution bad = *out.design;
  bad.backup[0] = bad.original[0];
  EXPECT_THROW(validate_design(inst, bad), DecodeError);
}

TEST(Decode, ObjectiveMismatchIsRejected) {
  Instance inst = small(3, 2);
  BuiltModel m = build_m0(inst);
  MilpSolution s = solve_milp(m.problem, {});
  ASSERT_NO_THROW(decode(inst, m, s));
  s.objective += 1.0;
  EXPECT_THROW(decode(inst, m, s), DecodeError);
}

TEST(Decode, M0HasNoBackup) {
  auto out = solve_model(small(3, 2), spec_of(ModelVariant::M0));
  ASSERT_TRUE(out.design);
  EXPECT_TRUE(out.design->backup.empty());
}

TEST(Solution, RoundTrip) {
  Instance inst = small(4, 3, ScenarioKind::CP);
  auto out = solve_model(inst, spec_of(ModelVariant::M1));
  ASSERT_TRUE(out.design);
  DesignSolution back = parse_solution(serialize_solution(*out.design, &out.milp));
  EXPECT_EQ(back.hubs, out.design->hubs);
  EXPECT_EQ(back.edges, out.design->edges);
  EXPECT_EQ(back.original, out.design->original);
  EXPECT_EQ(back.backup, out.design->backup);
  EXPECT_EQ(back.objective, out.design->objective);
  EXPECT_EQ(back.instance_hash, instance_hash(inst));
  EXPECT_THROW(parse_solution("{\"format\": 3}"), ParseError);
}

// Command line front end: generate, solve, simulate, report.
//
// Exit codes: 0 success (optimal for solve), 1 usage or input error,
// 2 solve stopped at a limit, 3 model infeasible, 4 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "hublf/analysis.hpp"
#include "hublf/error.hpp"
#include "hublf/failure_sim.hpp"
#include "hublf/formulations.hpp"
#include "hublf/instance.hpp"

using namespace hublf;

namespace {

enum Exit { kOk = 0, kUsage = 1, kLimit = 2, kInfeasible = 3, kNumeric = 4 };

std::string model_label(const ModelSpec& s) {
  if (s.variant == ModelVariant::M2) return "m2_" + std::to_string(s.lambda);
  return to_string(s.variant);
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  return f;
}

/// "a:step:b" or a comma-separated list.
std::vector<double> parse_q_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double a, step, b;
    char c1, c2;
    std::istringstream is(text);
    if (!(is >> a >> c1 >> step >> c2 >> b) || c1 != ':' || c2 != ':' || step <= 0.0 || b < a)
      throw ParseError("--q-grid", "expected start:step:end");
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= count; ++i) out.push_back(a + static_cast<double>(i) * step);
    return out;
  }
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ParseError("--q-grid", "bad number '" + tok + "'");
    }
  }
  if (out.empty()) throw ParseError("--q-grid", "empty grid");
  return out;
}

struct GenerateArgs {
  int n = 10;
  std::uint64_t seed = 1;
  std::string scenario = "sp";
  double rho = 0.1;
  std::vector<double> clusters{0.1, 0.2, 0.3};
  std::uint64_t prob_seed = 0;
  double alpha = 0.5;
  double hub_setup = 100.0;
  double demand_scale = 1.0;
  std::size_t max_commodities = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  ProbabilityScenario sc;
  sc.kind = parse_scenario_kind(a.scenario);
  sc.rho = a.rho;
  sc.cluster_values = a.clusters;
  sc.seed = a.prob_seed != 0 ? a.prob_seed : a.seed + 1;
  CostScalingParams cp;
  cp.alpha = a.alpha;
  cp.hub_setup_default = a.hub_setup;
  cp.demand_scale = a.demand_scale;
  cp.max_commodities = a.max_commodities;
  const Instance inst = synthesize_instance(a.n, a.seed, sc, cp);
  save_instance(inst, a.out);
  std::cerr << "generated n=" << inst.n << " commodities=" << inst.num_commodities() << " alpha=" << inst.alpha
            << " scenario=" << to_string(sc.kind) << " distinct_p=" << distinct_probabilities(inst).size()
            << " hash=" << instance_hash(inst) << " -> " << a.out << "\n";
  return kOk;
}

struct SolveArgs {
  std::string instance;
  std::string model = "m0";
  int lambda = 2;
  double beta = 1.0;
  double time_limit = 0.0;
  long node_limit = 0;
  double gap = 0.0;
  bool no_prop1 = false;
  bool marin = false;
  bool p_bound = false;
  bool tight = false;
  std::string lp_dump;
  std::string out;
};

int cmd_solve(const SolveArgs& a) {
  const Instance inst = load_instance(a.instance);
  ModelSpec spec;
  spec.variant = parse_model_variant(a.model);
  spec.lambda = a.lambda;
  spec.beta = a.beta;
  spec.apply_prop1_reduction = !a.no_prop1;
  spec.apply_marin_inequalities = a.marin;
  spec.apply_P_bound = a.p_bound;
  spec.tight_linearization = a.tight;
  if (spec.variant == ModelVariant::M2 && spec.lambda > inst.n) {
    std::cerr << "infeasible: lambda=" << spec.lambda << " needs at least that many hubs, instance has n=" << inst.n
              << "\n";
    return kInfeasible;
  }
  if (!a.lp_dump.empty()) {
    const BuiltModel model = build_model(inst, spec);
    auto f = open_out(a.lp_dump);
    write_lp_format(model.problem, f);
    std::cerr << "wrote " << a.lp_dump << " (" << model.problem.num_variables() << " columns, "
              << model.problem.num_rows() << " rows)\n";
  }
  SolverConfig cfg;
  if (a.time_limit > 0.0) cfg.time_limit_seconds = a.time_limit;
  if (a.node_limit > 0) cfg.node_limit = a.node_limit;
  cfg.relative_gap = a.gap;
  const SolveOutcome res = solve_model(inst, spec, cfg);
  const MilpSolution& m = res.milp;
  std::cerr << "model=" << model_label(spec) << " status=" << to_string(m.status) << " objective=" << num(m.objective)
            << " bound=" << num(m.best_bound) << " gap=" << num(m.gap()) << " nodes=" << m.nodes
            << " cuts=" << m.cuts_added << " lp_iterations=" << m.lp_iterations << " seconds=" << num(m.seconds)
            << "\n";
  if (res.design) save_solution(*res.design, a.out, &m);
  switch (m.status) {
    case MilpStatus::Optimal: return kOk;
    case MilpStatus::Infeasible: return kInfeasible;
    case MilpStatus::GapLimit:
    case MilpStatus::NodeLimit:
    case MilpStatus::TimeLimit: return kLimit;
    case MilpStatus::NumericFailure: return kNumeric;
  }
  return kNumeric;
}

std::vector<DesignSolution> load_checked(const std::vector<std::string>& paths, const Instance* inst) {
  std::vector<DesignSolution> out;
  const std::string hash = inst ? instance_hash(*inst) : std::string();
  for (const auto& p : paths) {
    DesignSolution s = load_solution(p);
    if (inst && s.instance_hash != hash)
      throw ValidationError(p + ": solution was computed for instance " + s.instance_hash + ", not " + hash);
    out.push_back(std::move(s));
  }
  return out;
}

struct SimulateArgs {
  std::string instance;
  std::vector<std::string> solutions;
  std::vector<std::string> scenarios;
  int trials = 10000;
  std::uint64_t seed = 1;
  double gamma = 0.75;
  double loop_inflation = 1.5;
  std::string q_grid = "0:0.05:1";
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  const Instance inst = load_instance(a.instance);
  const auto sols = load_checked(a.solutions, &inst);
  const auto grid = parse_q_grid(a.q_grid);
  std::vector<FailureScenario> kinds;
  for (const auto& s : a.scenarios) kinds.push_back(parse_failure_scenario(s));
  if (kinds.empty()) kinds.assign(std::begin(kAllScenarios), std::end(kAllScenarios));

  auto f = open_out(a.out);
  f << "model,scenario,trials,seed,tau,unroutable_rate,mean_routing,setup,direct_cost,mean_failed_edges,q,phi\n";
  for (const auto& sol : sols)
    for (FailureScenario kind : kinds) {
      FailureScenarioConfig cfg;
      cfg.kind = kind;
      cfg.trials = a.trials;
      cfg.seed = a.seed;
      cfg.gamma = a.gamma;
      cfg.loop_inflation = a.loop_inflation;
      const SimulationReport rep = simulate(sol, inst, cfg);
      std::cerr << model_label(sol.spec) << " " << to_string(kind) << " tau=" << num(rep.tau)
                << " R=" << num(rep.mean_routing) << "\n";
      for (const auto& [q, phi] : phi_curve(rep, grid))
        f << model_label(sol.spec) << ',' << to_string(kind) << ',' << cfg.trials << ',' << cfg.seed << ','
          << num(rep.tau) << ',' << num(1.0 - rep.tau) << ',' << num(rep.mean_routing) << ',' << num(rep.setup) << ','
          << num(rep.direct_cost) << ',' << num(rep.mean_failed_edges) << ',' << num(q) << ',' << num(phi) << '\n';
    }
  return kOk;
}

struct ReportArgs {
  std::string instance;
  std::vector<std::string> solutions;
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  std::optional<Instance> inst;
  if (!a.instance.empty()) inst = load_instance(a.instance);
  const auto sols = load_checked(a.solutions, inst ? &*inst : nullptr);
  const DesignSolution* base = nullptr;
  for (const auto& s : sols)
    if (s.spec.variant == ModelVariant::M0) {
      base = &s;
      break;
    }
  const std::string hash0 = sols.front().instance_hash;
  for (const auto& s : sols)
    if (s.instance_hash != hash0) throw ValidationError("solutions belong to different instances");

  auto f = open_out(a.out);
  f << "model,objective,hubs,links,loops,I1,I2,routing_share,hub_setup_share,link_setup_share,setup,"
       "price_of_robustness\n";
  for (const auto& s : sols) {
    if (s.hubs.empty()) throw ValidationError("solution without hubs has no metrics");
    const NetworkMetrics m = network_metrics(s);
    const auto por = base ? price_of_robustness(*base, s) : std::nullopt;
    f << model_label(s.spec) << ',' << num(s.objective) << ',' << m.num_hubs << ',' << m.num_links << ','
      << m.num_loops << ',' << num(m.i1) << ',' << (m.i2 ? num(*m.i2) : "NA") << ',' << num(m.routing_share) << ','
      << num(m.hub_setup_share) << ',' << num(m.link_setup_share) << ',' << num(s.cost.setup()) << ','
      << (por ? num(*por) : "NA") << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hub network design with failing inter-hub edges"};
  app.require_subcommand(1);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "write a random instance");
  gen->add_option("--n", ga.n, "number of nodes")->required()->check(CLI::Range(2, 200));
  gen->add_option("--seed", ga.seed, "geometry and demand seed");
  gen->add_option("--scenario", ga.scenario, "failure probabilities: rp, cp or sp");
  gen->add_option("--rho", ga.rho, "rp upper bound or sp value")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--clusters", ga.clusters, "cp values")->delimiter(',');
  gen->add_option("--prob-seed", ga.prob_seed, "probability seed (default seed+1)");
  gen->add_option("--alpha", ga.alpha, "inter-hub discount")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--hub-setup", ga.hub_setup, "set-up cost of every hub");
  gen->add_option("--demand-scale", ga.demand_scale, "multiply every demand")->check(CLI::PositiveNumber);
  gen->add_option("--max-commodities", ga.max_commodities, "keep a seeded subset of commodities (0 = all)");
  gen->add_option("--out", ga.out, "instance file")->required();

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "solve one model");
  solve->add_option("--instance", sa.instance)->required()->check(CLI::ExistingFile);
  solve->add_option("--model", sa.model, "m0, m1, m1c or m2");
  solve->add_option("--lambda", sa.lambda, "backbone connectivity for m2")->check(CLI::PositiveNumber);
  solve->add_option("--beta", sa.beta, "failure penalty weight for m2")->check(CLI::NonNegativeNumber);
  solve->add_option("--time-limit", sa.time_limit, "seconds (0 = none)");
  solve->add_option("--node-limit", sa.node_limit, "branch-and-bound nodes (0 = default)");
  solve->add_option("--gap", sa.gap, "relative gap to stop at");
  solve->add_flag("--no-prop1", sa.no_prop1, "keep both orientations of every arc");
  solve->add_flag("--marin", sa.marin, "add per-node allocation inequalities");
  solve->add_flag("--p-bound", sa.p_bound, "bound the backup cost terms");
  solve->add_flag("--tight", sa.tight, "tighter linearization of the backup cost");
  solve->add_option("--lp-dump", sa.lp_dump, "also write the model in LP format");
  solve->add_option("--out", sa.out, "solution file")->required();

  SimulateArgs ma;
  auto* sim = app.add_subcommand("simulate", "failure simulation of one or more solutions");
  sim->add_option("--instance", ma.instance)->required()->check(CLI::ExistingFile);
  sim->add_option("--solution", ma.solutions)->required()->check(CLI::ExistingFile);
  sim->add_option("--scenario", ma.scenarios, "FS1..FS4 (default all)")->delimiter(',');
  sim->add_option("--trials", ma.trials)->check(CLI::PositiveNumber);
  sim->add_option("--seed", ma.seed);
  sim->add_option("--gamma", ma.gamma)->check(CLI::Range(0.0, 1.0));
  sim->add_option("--loop-inflation", ma.loop_inflation)->check(CLI::NonNegativeNumber);
  sim->add_option("--q-grid", ma.q_grid, "start:step:end or comma list");
  sim->add_option("--out", ma.out, "CSV report")->required();

  ReportArgs ra;
  auto* rep = app.add_subcommand("report", "network metrics of a solution set");
  rep->add_option("--instance", ra.instance, "optional, enables the hash check")->check(CLI::ExistingFile);
  rep->add_option("--solution", ra.solutions)->required()->check(CLI::ExistingFile);
  rep->add_option("--out", ra.out, "CSV report")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_generate(ga);
    if (*solve) return cmd_solve(sa);
    if (*sim) return cmd_simulate(ma);
    if (*rep) return cmd_report(ra);
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

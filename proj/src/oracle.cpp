#include "hublf/oracle.hpp"

#include <algorithm>
#include <bit>

#include "hublf/error.hpp"

namespace hublf {

namespace {

void guard(const Instance& inst) {
  inst.validate();
  if (inst.n > kOracleMaxNodes)
    throw OracleGuardError("oracle enumeration is limited to n <= " + std::to_string(kOracleMaxNodes) + " (got " +
                           std::to_string(inst.n) + ")");
  if (inst.commodities.size() > kOracleMaxCommodities)
    throw OracleGuardError("oracle enumeration is limited to " + std::to_string(kOracleMaxCommodities) +
                           " commodities (got " + std::to_string(inst.commodities.size()) + ")");
}

struct Edge {
  int k, l;
};

double cut_weight(const DesignPoint& p, unsigned set) {
  const std::size_t n = p.z.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if ((set >> i & 1u) && !(set >> j & 1u)) s += p.y(i, j);
  return s;
}

// Per-commodity routing choice for a fixed backbone. Returns false when the
// commodity cannot be served.
using RoutingRule = bool (*)(const Instance&, std::size_t r, const std::vector<Edge>&, double beta, double& cost,
                             Arc& orig, Arc& backup);

double prob(const Instance& inst, int k, int l) {
  return inst.fail_prob(static_cast<std::size_t>(k), static_cast<std::size_t>(l));
}

bool route_m0(const Instance& inst, std::size_t r, const std::vector<Edge>& edges, double, double& cost, Arc& orig,
              Arc&) {
  bool any = false;
  for (const Edge& e : edges)
    for (const Arc a : {Arc{e.k, e.l}, Arc{e.l, e.k}}) {
      const double c = routing_cost(inst, r, a.from, a.to);
      if (!any || c < cost) {
        cost = c;
        orig = a;
        any = true;
      }
      if (e.k == e.l) break;
    }
  return any;
}

bool route_m2(const Instance& inst, std::size_t r, const std::vector<Edge>& edges, double beta, double& cost, Arc& orig,
              Arc&) {
  bool any = false;
  for (const Edge& e : edges)
    for (const Arc a : {Arc{e.k, e.l}, Arc{e.l, e.k}}) {
      const double c = (1.0 + beta * prob(inst, a.from, a.to)) * routing_cost(inst, r, a.from, a.to);
      if (!any || c < cost) {
        cost = c;
        orig = a;
        any = true;
      }
      if (e.k == e.l) break;
    }
  return any;
}

bool route_m1(const Instance& inst, std::size_t r, const std::vector<Edge>& edges, double, double& cost, Arc& orig,
              Arc& backup) {
  bool any = false;
  for (std::size_t a = 0; a < edges.size(); ++a)
    for (const Arc o : {Arc{edges[a].k, edges[a].l}, Arc{edges[a].l, edges[a].k}}) {
      const double p = prob(inst, o.from, o.to);
      const double co = routing_cost(inst, r, o.from, o.to);
      for (std::size_t b = 0; b < edges.size(); ++b) {
        if (b == a) continue;
        for (const Arc bk : {Arc{edges[b].k, edges[b].l}, Arc{edges[b].l, edges[b].k}}) {
          const double c = (1.0 - p) * co + p * routing_cost(inst, r, bk.from, bk.to);
          if (!any || c < cost) {
            cost = c;
            orig = o;
            backup = bk;
            any = true;
          }
          if (edges[b].k == edges[b].l) break;
        }
      }
      if (edges[a].k == edges[a].l) break;
    }
  return any;
}

OracleResult enumerate(const Instance& inst, ModelVariant variant, int lambda, double beta) {
  guard(inst);
  const int n = inst.n;
  const std::size_t R = inst.commodities.size();
  RoutingRule rule = variant == ModelVariant::M0 ? route_m0 : variant == ModelVariant::M1 ? route_m1 : route_m2;
  OracleResult best;
  std::vector<Arc> orig(R), back(R), best_orig, best_back;

  for (unsigned hubs = 0; hubs < (1u << n); ++hubs) {
    std::vector<Edge> candidates;
    double hub_cost = 0.0;
    for (int k = 0; k < n; ++k) {
      if (!(hubs >> k & 1u)) continue;
      hub_cost += inst.hub_setup[static_cast<std::size_t>(k)];
      for (int l = k; l < n; ++l)
        if (hubs >> l & 1u) candidates.push_back({k, l});
    }
    const std::size_t m = candidates.size();
    for (unsigned long subset = 0; subset < (1ul << m); ++subset) {
      ++best.designs;
      std::vector<Edge> edges;
      double total = hub_cost;
      for (std::size_t e = 0; e < m; ++e)
        if (subset >> e & 1ul) {
          edges.push_back(candidates[e]);
          total += inst.edge_setup(static_cast<std::size_t>(candidates[e].k), static_cast<std::size_t>(candidates[e].l));
        }
      if (total >= best.objective) continue;
      if (variant == ModelVariant::M2) {
        DesignPoint p{std::vector<double>(static_cast<std::size_t>(n), 0.0), SquareMatrix(static_cast<std::size_t>(n))};
        for (int k = 0; k < n; ++k) p.z[static_cast<std::size_t>(k)] = (hubs >> k & 1u) ? 1.0 : 0.0;
        for (const Edge& e : edges) {
          p.y(static_cast<std::size_t>(e.k), static_cast<std::size_t>(e.l)) = 1.0;
          p.y(static_cast<std::size_t>(e.l), static_cast<std::size_t>(e.k)) = 1.0;
        }
        if (!oracle_lambda_connected(p, lambda)) continue;
      }
      bool ok = true;
      for (std::size_t r = 0; r < R && ok; ++r) {
        double c = 0.0;
        ok = rule(inst, r, edges, beta, c, orig[r], back[r]);
        total += c;
      }
      if (!ok || total >= best.objective) continue;
      best.feasible = true;
      best.objective = total;
      best.design.hubs.clear();
      for (int k = 0; k < n; ++k)
        if (hubs >> k & 1u) best.design.hubs.push_back(k);
      best.design.edges.clear();
      for (const Edge& e : edges) best.design.edges.emplace_back(e.k, e.l);
      best_orig = orig;
      best_back = back;
    }
  }
  if (best.feasible) {
    DesignSolution& d = best.design;
    d.spec.variant = variant;
    d.spec.lambda = lambda;
    d.spec.beta = beta;
    d.n = n;
    d.original = best_orig;
    if (variant == ModelVariant::M1) d.backup = best_back;
    std::sort(d.edges.begin(), d.edges.end());
    d.instance_hash = instance_hash(inst);
    evaluate_design(inst, d);
  }
  return best;
}

}  // namespace

OracleResult oracle_m0(const Instance& inst) { return enumerate(inst, ModelVariant::M0, 2, 0.0); }

OracleResult oracle_m1(const Instance& inst) { return enumerate(inst, ModelVariant::M1, 2, 0.0); }

OracleResult oracle_m2(const Instance& inst, int lambda, double beta) {
  if (lambda < 2) throw ModelError("lambda must be at least 2");
  return enumerate(inst, ModelVariant::M2, lambda, beta);
}

bool oracle_lambda_connected(const DesignPoint& p, int lambda) {
  const std::size_t n = p.z.size();
  const double eps = 1e-9;
  for (std::size_t k = 0; k < n; ++k) {
    if (p.z[k] < 0.5) continue;
    if (cut_weight(p, 1u << k) + p.y(k, k) < lambda - eps) return false;
  }
  for (unsigned s = 1; s + 1 < (1u << n); ++s) {
    const double cut = cut_weight(p, s);
    for (std::size_t k = 0; k < n; ++k) {
      if (!(s >> k & 1u) || p.z[k] < 0.5) continue;
      for (std::size_t l = 0; l < n; ++l)
        if (!(s >> l & 1u) && p.z[l] > 0.5 && cut + p.y(k, k) < lambda - eps) return false;
    }
  }
  return true;
}

bool oracle_cut_violated(const DesignPoint& p, int lambda, double tolerance) {
  const std::size_t n = p.z.size();
  for (unsigned s = 1; s + 1 < (1u << n); ++s) {
    const double cut = cut_weight(p, s);
    const int size = std::popcount(s);
    for (std::size_t k = 0; k < n; ++k) {
      if (!(s >> k & 1u)) continue;
      if (size <= lambda - 1) {
        if (lambda * p.z[k] - p.y(k, k) - cut > tolerance) return true;
        continue;
      }
      for (std::size_t l = 0; l < n; ++l)
        if (!(s >> l & 1u) && lambda * (p.z[k] + p.z[l] - 1.0) - p.y(k, k) - cut > tolerance) return true;
    }
  }
  return false;
}

}  // namespace hublf

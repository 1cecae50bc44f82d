#include "hublf/formulations.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "hublf/connectivity.hpp"
#include "hublf/error.hpp"

namespace hublf {

namespace {

// Slightly above the solver's default acceptance threshold so every emitted
// row clears it regardless of summation order.
constexpr double kSeparationTolerance = 2e-6;

std::string idx(std::initializer_list<int> parts) {
  std::string s = "[";
  bool first = true;
  for (int p : parts) {
    if (!first) s += ",";
    s += std::to_string(p);
    first = false;
  }
  return s + "]";
}

double prob(const Instance& inst, int k, int l) {
  return inst.fail_prob(static_cast<std::size_t>(k), static_cast<std::size_t>(l));
}

class Builder {
 public:
  Builder(const Instance& inst, const ModelSpec& spec) : inst_(inst), n_(inst.n) {
    inst.validate();
    for (std::size_t r = 0; r < inst.commodities.size(); ++r) {
      const Commodity& c = inst.commodities[r];
      if (c.origin == c.destination)
        throw ModelError("commodity " + std::to_string(r) + " has identical origin and destination");
    }
    m_.spec = spec;
    m_.vars.n = n_;
    add_design();
  }

  BuiltModel take() { return std::move(m_); }
  MilpProblem& problem() { return m_.problem; }
  VariableMap& vars() { return m_.vars; }
  int n() const { return n_; }
  std::size_t num_commodities() const { return inst_.commodities.size(); }

  // True when arc (k,l) keeps its column for commodity r. `coef` is the
  // objective coefficient used to pick the cheaper orientation.
  template <class Coef>
  bool keep_arc(std::size_t r, int k, int l, Coef coef) const {
    if (!m_.spec.apply_prop1_reduction || k == l) return true;
    const double a = coef(r, k, l), b = coef(r, l, k);
    return a < b || (a == b && k < l);
  }

  // Adds one binary per kept arc and returns the [k*n+l] map.
  template <class Coef, class Keep>
  std::vector<int> add_arc_family(const char* name, std::size_t r, Coef cost, Keep keep) {
    std::vector<int> col(static_cast<std::size_t>(n_ * n_), -1);
    for (int k = 0; k < n_; ++k)
      for (int l = 0; l < n_; ++l)
        if (keep(r, k, l))
          col[static_cast<std::size_t>(k * n_ + l)] =
              m_.problem.add_binary(name + idx({static_cast<int>(r), k, l}), cost(r, k, l));
    return col;
  }

  void add_assignment(const std::vector<int>& col, const std::string& name) {
    LinearRow row;
    for (int j : col)
      if (j >= 0) row.add(j, 1.0);
    row.sense = RowSense::Equal;
    row.rhs = 1.0;
    row.name = name;
    m_.problem.add_row(std::move(row));
  }

  // x_kl + x_lk (+ backup counterparts) <= y_kl, loops included.
  void add_edge_usage(std::size_t r, const std::vector<const std::vector<int>*>& families) {
    for (int k = 0; k < n_; ++k)
      for (int l = k; l < n_; ++l) {
        LinearRow row;
        for (const auto* fam : families) {
          const int a = (*fam)[static_cast<std::size_t>(k * n_ + l)];
          if (a >= 0) row.add(a, 1.0);
          if (k != l) {
            const int b = (*fam)[static_cast<std::size_t>(l * n_ + k)];
            if (b >= 0) row.add(b, 1.0);
          }
        }
        if (row.index.empty()) continue;
        row.add(m_.vars.y_of(k, l), -1.0);
        row.name = "use" + idx({static_cast<int>(r), k, l});
        m_.problem.add_row(std::move(row));
      }
  }

  void add_marin(std::size_t r, const std::vector<int>& col, const char* tag) {
    for (int k = 0; k < n_; ++k) {
      LinearRow row;
      for (int l = 0; l < n_; ++l) {
        const int a = col[static_cast<std::size_t>(k * n_ + l)];
        if (a >= 0) row.add(a, 1.0);
        if (l != k) {
          const int b = col[static_cast<std::size_t>(l * n_ + k)];
          if (b >= 0) row.add(b, 1.0);
        }
      }
      if (row.index.empty()) continue;
      row.add(m_.vars.z[static_cast<std::size_t>(k)], -1.0);
      row.name = std::string(tag) + idx({static_cast<int>(r), k});
      m_.problem.add_row(std::move(row));
    }
  }

  double routing(std::size_t r, int k, int l) const { return routing_cost(inst_, r, k, l); }

 private:
  void add_design() {
    VariableMap& v = m_.vars;
    for (int k = 0; k < n_; ++k)
      v.z.push_back(m_.problem.add_binary("z" + idx({k}), inst_.hub_setup[static_cast<std::size_t>(k)]));
    v.y.assign(static_cast<std::size_t>(n_ * (n_ + 1) / 2), -1);
    for (int k = 0; k < n_; ++k)
      for (int l = k; l < n_; ++l)
        v.y[static_cast<std::size_t>(v.edge_slot(k, l))] = m_.problem.add_binary(
            "y" + idx({k, l}), inst_.edge_setup(static_cast<std::size_t>(k), static_cast<std::size_t>(l)));
    for (int k = 0; k < n_; ++k)
      for (int l = k; l < n_; ++l) {
        for (int end : {k, l}) {
          LinearRow row;
          row.add(v.y_of(k, l), 1.0);
          row.add(v.z[static_cast<std::size_t>(end)], -1.0);
          row.name = "hub" + idx({k, l, end});
          m_.problem.add_row(std::move(row));
          if (k == l) break;
        }
      }
  }

  const Instance& inst_;
  int n_;
  BuiltModel m_;
};

}  // namespace

std::string to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::M0: return "m0";
    case ModelVariant::M1: return "m1";
    case ModelVariant::M1Clustered: return "m1c";
    case ModelVariant::M2: return "m2";
  }
  return "?";
}

ModelVariant parse_model_variant(const std::string& s) {
  std::string t;
  for (char c : s) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "m0") return ModelVariant::M0;
  if (t == "m1") return ModelVariant::M1;
  if (t == "m1c" || t == "m1_clustered") return ModelVariant::M1Clustered;
  if (t == "m2") return ModelVariant::M2;
  throw ModelError("unknown model '" + s + "' (expected m0, m1, m1c or m2)");
}

int VariableMap::edge_slot(int k, int l) const {
  if (k > l) std::swap(k, l);
  return k * n - k * (k - 1) / 2 + (l - k);
}

bool DesignSolution::is_hub(int k) const { return std::binary_search(hubs.begin(), hubs.end(), k); }

bool DesignSolution::has_edge(int k, int l) const {
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(std::min(k, l), std::max(k, l)));
}

int DesignSolution::num_loops() const {
  return static_cast<int>(std::count_if(edges.begin(), edges.end(), [](const auto& e) { return e.first == e.second; }));
}

// ---------------------------------------------------------------------------

BuiltModel build_m0(const Instance& inst) { return build_m0(inst, ModelSpec{}); }

BuiltModel build_m0(const Instance& inst, const ModelSpec& spec_in) {
  ModelSpec spec = spec_in;
  spec.variant = ModelVariant::M0;
  Builder b(inst, spec);
  auto cost = [&](std::size_t r, int k, int l) { return b.routing(r, k, l); };
  auto keep = [&](std::size_t r, int k, int l) { return b.keep_arc(r, k, l, cost); };
  for (std::size_t r = 0; r < b.num_commodities(); ++r) {
    b.vars().x.push_back(b.add_arc_family("x", r, cost, keep));
    b.add_assignment(b.vars().x.back(), "assign" + idx({static_cast<int>(r)}));
    b.add_edge_usage(r, {&b.vars().x.back()});
  }
  return b.take();
}

BuiltModel build_m1(const Instance& inst, const ModelSpec& spec_in) {
  ModelSpec spec = spec_in;
  spec.variant = ModelVariant::M1;
  Builder b(inst, spec);
  const int n = b.n();
  double max_p = 0.0;
  for (double v : inst.fail_prob.data()) max_p = std::max(max_p, v);

  auto plain = [&](std::size_t r, int k, int l) { return b.routing(r, k, l); };
  auto keep = [&](std::size_t r, int k, int l) { return b.keep_arc(r, k, l, plain); };
  auto orig_cost = [&](std::size_t r, int k, int l) { return (1.0 - prob(inst, k, l)) * b.routing(r, k, l); };
  auto zero = [](std::size_t, int, int) { return 0.0; };

  for (std::size_t r = 0; r < b.num_commodities(); ++r) {
    const int ri = static_cast<int>(r);
    auto& v = b.vars();
    v.x.push_back(b.add_arc_family("x", r, orig_cost, keep));
    v.xbar.push_back(b.add_arc_family("xb", r, zero, keep));
    const auto& x = v.x.back();
    const auto& xb = v.xbar.back();
    b.add_assignment(x, "assign" + idx({ri}));
    b.add_assignment(xb, "backup" + idx({ri}));
    b.add_edge_usage(r, {&x, &xb});
    if (spec.apply_marin_inequalities) {
      b.add_marin(r, x, "marin");
      b.add_marin(r, xb, "marinb");
    }

    std::vector<int> pcol(static_cast<std::size_t>(n * n), -1);
    LinearRow bound;
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        const int a = xb[static_cast<std::size_t>(k * n + l)];
        if (a < 0) continue;
        const int pv = b.problem().add_variable("P" + idx({ri, k, l}), 0.0, kInf, b.routing(r, k, l));
        pcol[static_cast<std::size_t>(k * n + l)] = pv;
        bound.add(pv, 1.0);
        LinearRow row;
        row.add(pv, 1.0);
        for (int kk = 0; kk < n; ++kk)
          for (int ll = 0; ll < n; ++ll) {
            const int xa = x[static_cast<std::size_t>(kk * n + ll)];
            if (xa < 0) continue;
            if (spec.tight_linearization && std::min(kk, ll) == std::min(k, l) && std::max(kk, ll) == std::max(k, l))
              continue;
            row.add(xa, -prob(inst, kk, ll));
          }
        row.add(a, -1.0);
        row.sense = RowSense::GreaterEqual;
        row.rhs = -1.0;
        row.name = "lin" + idx({ri, k, l});
        row.normalize();
        b.problem().add_row(std::move(row));
      }
    if (spec.strengthen_backup_cost) {
      // At an optimum P is exactly xbar times the original arc's probability:
      // the P column sums to that probability and each P_a stays below pmax xbar_a.
      LinearRow total;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const auto a = static_cast<std::size_t>(k * n + l);
          if (pcol[a] >= 0) {
            total.add(pcol[a], 1.0);
            LinearRow cap;
            cap.add(pcol[a], 1.0);
            cap.add(xb[a], -max_p);
            cap.name = "pcap" + idx({ri, k, l});
            b.problem().add_row(std::move(cap));
          }
          if (x[a] >= 0) total.add(x[a], -prob(inst, k, l));
        }
      total.sense = RowSense::GreaterEqual;
      total.name = "pmass" + idx({ri});
      total.normalize();
      b.problem().add_row(std::move(total));
    }
    v.p.push_back(std::move(pcol));
    if (spec.apply_P_bound) {
      bound.rhs = max_p;
      bound.name = "pbound" + idx({ri});
      b.problem().add_row(std::move(bound));
    }
  }
  return b.take();
}

BuiltModel build_m1_clustered(const Instance& inst, const ModelSpec& spec_in) {
  ModelSpec spec = spec_in;
  spec.variant = ModelVariant::M1Clustered;
  const std::vector<double> rho = distinct_probabilities(inst);
  if (static_cast<int>(rho.size()) > spec.max_clusters)
    throw ModelError("instance has " + std::to_string(rho.size()) + " distinct failure probabilities, above the cap of " +
                     std::to_string(spec.max_clusters) + "; use the m1 model instead");
  Builder b(inst, spec);
  const int n = b.n();
  const int K = static_cast<int>(rho.size());
  auto cluster_of = [&](int k, int l) {
    const double p = prob(inst, k, l);
    int best = 0;
    for (int s = 1; s < K; ++s)
      if (std::abs(rho[static_cast<std::size_t>(s)] - p) < std::abs(rho[static_cast<std::size_t>(best)] - p)) best = s;
    return best;
  };

  auto plain = [&](std::size_t r, int k, int l) { return b.routing(r, k, l); };
  auto keep = [&](std::size_t r, int k, int l) { return b.keep_arc(r, k, l, plain); };
  auto orig_cost = [&](std::size_t r, int k, int l) {
    return (1.0 - rho[static_cast<std::size_t>(cluster_of(k, l))]) * b.routing(r, k, l);
  };
  auto backup_cost = [&](std::size_t r, int k, int l) { return K == 1 ? rho[0] * b.routing(r, k, l) : 0.0; };

  for (std::size_t r = 0; r < b.num_commodities(); ++r) {
    const int ri = static_cast<int>(r);
    auto& v = b.vars();
    v.x.push_back(b.add_arc_family("x", r, orig_cost, keep));
    v.xbar.push_back(b.add_arc_family("xb", r, backup_cost, keep));
    const auto& x = v.x.back();
    const auto& xb = v.xbar.back();
    b.add_assignment(x, "assign" + idx({ri}));
    b.add_assignment(xb, "backup" + idx({ri}));
    b.add_edge_usage(r, {&x, &xb});
    if (spec.apply_marin_inequalities) {
      b.add_marin(r, x, "marin");
      b.add_marin(r, xb, "marinb");
    }
    std::vector<std::vector<int>> xi(static_cast<std::size_t>(n * n));
    if (K >= 2) {
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const int a = xb[static_cast<std::size_t>(k * n + l)];
          if (a < 0) continue;
          auto& cols = xi[static_cast<std::size_t>(k * n + l)];
          LinearRow coupling;
          for (int s = 0; s < K; ++s) {
            const int c = b.problem().add_variable("xi" + idx({ri, k, l, s}), 0.0, kInf,
                                                   rho[static_cast<std::size_t>(s)] * b.routing(r, k, l));
            cols.push_back(c);
            coupling.add(c, 1.0);
            LinearRow row;
            row.add(c, 1.0);
            for (int kk = 0; kk < n; ++kk)
              for (int ll = 0; ll < n; ++ll) {
                const int xa = x[static_cast<std::size_t>(kk * n + ll)];
                if (xa >= 0 && cluster_of(kk, ll) == s) row.add(xa, -1.0);
              }
            row.add(a, -1.0);
            row.sense = RowSense::GreaterEqual;
            row.rhs = -1.0;
            row.name = "clu" + idx({ri, k, l, s});
            b.problem().add_row(std::move(row));
          }
          coupling.add(a, -1.0);
          coupling.sense = RowSense::Equal;
          coupling.name = "xisum" + idx({ri, k, l});
          b.problem().add_row(std::move(coupling));
        }
      if (spec.strengthen_backup_cost) {
        // At integer points xi[a][s] = xbar_a when the original arc lies in
        // cluster s, else 0: column s sums to, and each entry stays below,
        // the original's membership in s.
        for (int s = 0; s < K; ++s) {
          LinearRow member;
          for (int kk = 0; kk < n; ++kk)
            for (int ll = 0; ll < n; ++ll) {
              const int xa = x[static_cast<std::size_t>(kk * n + ll)];
              if (xa >= 0 && cluster_of(kk, ll) == s) member.add(xa, -1.0);
            }
          LinearRow mass = member;
          for (int a = 0; a < n * n; ++a) {
            const auto& cols = xi[static_cast<std::size_t>(a)];
            if (cols.empty()) continue;
            const int c = cols[static_cast<std::size_t>(s)];
            mass.add(c, 1.0);
            LinearRow cap = member;
            cap.add(c, 1.0);
            cap.name = "xicap" + idx({ri, a / n, a % n, s});
            b.problem().add_row(std::move(cap));
          }
          mass.sense = RowSense::Equal;
          mass.name = "ximass" + idx({ri, s});
          b.problem().add_row(std::move(mass));
        }
      }
    }
    v.xi.push_back(std::move(xi));
  }
  BuiltModel m = b.take();
  m.clusters = rho;
  return m;
}

BuiltModel build_m2(const Instance& inst, const ModelSpec& spec_in) {
  ModelSpec spec = spec_in;
  spec.variant = ModelVariant::M2;
  if (spec.lambda < 2) throw ModelError("lambda must be at least 2");
  if (!(spec.beta >= 0.0)) throw ModelError("beta must be non-negative");
  if (inst.n < spec.lambda)
    throw ModelError("no design is " + std::to_string(spec.lambda) + "-connected on " + std::to_string(inst.n) +
                     " nodes (infeasible by construction)");
  Builder b(inst, spec);
  const int n = b.n();
  const int lambda = spec.lambda;
  auto cost = [&](std::size_t r, int k, int l) { return (1.0 + spec.beta * prob(inst, k, l)) * b.routing(r, k, l); };
  auto keep = [&](std::size_t r, int k, int l) { return b.keep_arc(r, k, l, cost); };
  for (std::size_t r = 0; r < b.num_commodities(); ++r) {
    b.vars().x.push_back(b.add_arc_family("x", r, cost, keep));
    b.add_assignment(b.vars().x.back(), "assign" + idx({static_cast<int>(r)}));
    b.add_edge_usage(r, {&b.vars().x.back()});
  }
  for (int k = 0; k < n; ++k) {
    LinearRow row;
    for (int l = 0; l < n; ++l) row.add(b.vars().y_of(k, l), 1.0);
    row.add(b.vars().z[static_cast<std::size_t>(k)], -static_cast<double>(lambda));
    row.sense = RowSense::GreaterEqual;
    row.name = "degree" + idx({k});
    b.problem().add_row(std::move(row));
  }

  BuiltModel m = b.take();
  const VariableMap vars = m.vars;
  m.separator = [vars, lambda](std::span<const double> point, const SeparationContext&) {
    const int nn = vars.n;
    DesignPoint dp{std::vector<double>(static_cast<std::size_t>(nn)), SquareMatrix(static_cast<std::size_t>(nn))};
    for (int k = 0; k < nn; ++k) {
      dp.z[static_cast<std::size_t>(k)] = point[static_cast<std::size_t>(vars.z[static_cast<std::size_t>(k)])];
      for (int l = 0; l < nn; ++l)
        dp.y(static_cast<std::size_t>(k), static_cast<std::size_t>(l)) =
            point[static_cast<std::size_t>(vars.y_of(k, l))];
    }
    std::vector<LinearRow> rows;
    for (const SeparationResult& cut : separate(dp, lambda, kSeparationTolerance)) {
      std::vector<bool> in_s(static_cast<std::size_t>(nn), false);
      for (int k : cut.set) in_s[static_cast<std::size_t>(k)] = true;
      LinearRow row;
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < nn; ++j)
          if (in_s[static_cast<std::size_t>(i)] && !in_s[static_cast<std::size_t>(j)]) row.add(vars.y_of(i, j), 1.0);
      row.add(vars.y_of(cut.hub, cut.hub), 1.0);
      row.add(vars.z[static_cast<std::size_t>(cut.hub)], -static_cast<double>(lambda));
      row.sense = RowSense::GreaterEqual;
      if (cut.form == CutForm::Pairwise) {
        row.add(vars.z[static_cast<std::size_t>(cut.partner)], -static_cast<double>(lambda));
        row.rhs = -static_cast<double>(lambda);
        row.name = "cutset" + idx({cut.hub, cut.partner});
      } else {
        row.name = "cutset" + idx({cut.hub});
      }
      rows.push_back(std::move(row));
    }
    return rows;
  };
  return m;
}

BuiltModel build_model(const Instance& inst, const ModelSpec& spec) {
  switch (spec.variant) {
    case ModelVariant::M0: return build_m0(inst, spec);
    case ModelVariant::M1: return build_m1(inst, spec);
    case ModelVariant::M1Clustered: return build_m1_clustered(inst, spec);
    case ModelVariant::M2: return build_m2(inst, spec);
  }
  throw ModelError("unknown model variant");
}

// ---------------------------------------------------------------------------

double model_routing_cost(const Instance& inst, const ModelSpec& spec, std::size_t r, const Arc& original,
                          const std::optional<Arc>& backup) {
  const double c = routing_cost(inst, r, original.from, original.to);
  const double p = prob(inst, original.from, original.to);
  switch (spec.variant) {
    case ModelVariant::M0: return c;
    case ModelVariant::M1:
    case ModelVariant::M1Clustered:
      if (!backup) throw DecodeError("commodity " + std::to_string(r) + " has no backup arc");
      return (1.0 - p) * c + p * routing_cost(inst, r, backup->from, backup->to);
    case ModelVariant::M2: return (1.0 + spec.beta * p) * c;
  }
  return c;
}

void evaluate_design(const Instance& inst, DesignSolution& sol) {
  CostBreakdown cost;
  for (int k : sol.hubs) cost.hub_setup += inst.hub_setup[static_cast<std::size_t>(k)];
  for (const auto& [k, l] : sol.edges) cost.edge_setup += inst.edge_setup(static_cast<std::size_t>(k), static_cast<std::size_t>(l));
  const bool has_backup = !sol.backup.empty();
  for (std::size_t r = 0; r < sol.original.size(); ++r)
    cost.routing += model_routing_cost(inst, sol.spec, r, sol.original[r],
                                       has_backup ? std::optional<Arc>(sol.backup[r]) : std::nullopt);
  sol.cost = cost;
  sol.objective = cost.total();
}

void validate_design(const Instance& inst, const DesignSolution& sol) {
  const std::size_t R = inst.commodities.size();
  if (sol.n != inst.n) throw DecodeError("design has " + std::to_string(sol.n) + " nodes, instance " + std::to_string(inst.n));
  if (sol.original.size() != R) throw DecodeError("one original arc per commodity is required (assignment rows)");
  const bool m1 = sol.spec.variant == ModelVariant::M1 || sol.spec.variant == ModelVariant::M1Clustered;
  if (m1 && sol.backup.size() != R) throw DecodeError("one backup arc per commodity is required (backup rows)");
  if (!m1 && !sol.backup.empty()) throw DecodeError("backup arcs only exist in the single-backup model");
  for (int k : sol.hubs)
    if (k < 0 || k >= sol.n) throw DecodeError("hub index out of range");
  for (const auto& [k, l] : sol.edges) {
    if (k > l || k < 0 || l >= sol.n) throw DecodeError("edge list is not canonical");
    if (!sol.is_hub(k) || !sol.is_hub(l))
      throw DecodeError("edge {" + std::to_string(k) + "," + std::to_string(l) + "} has an endpoint that is not a hub (edge-hub linking)");
  }
  auto check_arc = [&](const Arc& a, std::size_t r, const char* what) {
    if (a.from < 0 || a.to < 0 || a.from >= sol.n || a.to >= sol.n)
      throw DecodeError(std::string(what) + " arc of commodity " + std::to_string(r) + " is out of range");
    if (!sol.has_edge(a.from, a.to))
      throw DecodeError(std::string(what) + " arc (" + std::to_string(a.from) + "," + std::to_string(a.to) +
                        ") of commodity " + std::to_string(r) + " uses an edge that is not activated (edge usage row)");
  };
  for (std::size_t r = 0; r < R; ++r) {
    check_arc(sol.original[r], r, "original");
    if (m1) {
      check_arc(sol.backup[r], r, "backup");
      if (edge_of(sol.original[r]) == edge_of(sol.backup[r]))
        throw DecodeError("backup of commodity " + std::to_string(r) + " reuses its original edge (edge usage row)");
    }
  }
  if (sol.spec.variant == ModelVariant::M2) {
    DesignPoint dp{std::vector<double>(static_cast<std::size_t>(sol.n), 0.0), SquareMatrix(static_cast<std::size_t>(sol.n))};
    for (int k : sol.hubs) dp.z[static_cast<std::size_t>(k)] = 1.0;
    for (const auto& [k, l] : sol.edges) {
      dp.y(static_cast<std::size_t>(k), static_cast<std::size_t>(l)) = 1.0;
      dp.y(static_cast<std::size_t>(l), static_cast<std::size_t>(k)) = 1.0;
    }
    const auto bad = audit_connectivity(dp, sol.spec.lambda);
    if (!bad.empty())
      throw DecodeError("backbone is not " + std::to_string(sol.spec.lambda) + "-connected at hub " +
                        std::to_string(bad.front().hub) + " (connectivity rows)");
  }
}

DesignSolution decode(const Instance& inst, const BuiltModel& model, const MilpSolution& solution) {
  if (!solution.has_incumbent) throw DecodeError("solver returned no integer solution");
  const auto& val = solution.values;
  const VariableMap& v = model.vars;
  auto on = [&](int j) { return j >= 0 && val[static_cast<std::size_t>(j)] > 0.5; };

  DesignSolution sol;
  sol.spec = model.spec;
  sol.n = inst.n;
  sol.instance_hash = instance_hash(inst);
  for (int k = 0; k < inst.n; ++k)
    if (on(v.z[static_cast<std::size_t>(k)])) sol.hubs.push_back(k);
  for (int k = 0; k < inst.n; ++k)
    for (int l = k; l < inst.n; ++l)
      if (on(v.y_of(k, l))) sol.edges.emplace_back(k, l);

  auto pick = [&](const std::vector<int>& col, std::size_t r, const char* what) {
    std::optional<Arc> found;
    for (int k = 0; k < inst.n; ++k)
      for (int l = 0; l < inst.n; ++l)
        if (on(col[static_cast<std::size_t>(k * inst.n + l)])) {
          if (found)
            throw DecodeError(std::string("commodity ") + std::to_string(r) + " uses two " + what + " arcs (assignment row)");
          found = Arc{k, l};
        }
    if (!found) throw DecodeError(std::string("commodity ") + std::to_string(r) + " has no " + what + " arc (assignment row)");
    return *found;
  };
  for (std::size_t r = 0; r < v.x.size(); ++r) sol.original.push_back(pick(v.x[r], r, "original"));
  for (std::size_t r = 0; r < v.xbar.size(); ++r) sol.backup.push_back(pick(v.xbar[r], r, "backup"));

  validate_design(inst, sol);
  evaluate_design(inst, sol);
  const double tol = 1e-5 * std::max(1.0, std::abs(solution.objective));
  if (std::abs(sol.objective - solution.objective) > tol) {
    std::ostringstream os;
    os.precision(12);
    os << "recomputed objective " << sol.objective << " differs from the solver objective " << solution.objective;
    throw DecodeError(os.str());
  }
  return sol;
}

namespace {

// Design state for the rounding heuristic: hub flags and a symmetric edge matrix.
struct OpenDesign {
  std::vector<char> hub;
  std::vector<char> edge;  // [k*n+l], kept symmetric
};

class DesignRounding {
 public:
  DesignRounding(const Instance& inst, const BuiltModel& model)
      : inst_(std::make_shared<const Instance>(inst)),
        spec_(model.spec),
        vars_(model.vars),
        num_vars_(model.problem.num_variables()) {}

  std::vector<double> operator()(std::span<const double> point) const {
    const int n = vars_.n;
    const auto at = [&](int col) { return point[static_cast<std::size_t>(col)]; };
    OpenDesign d{std::vector<char>(static_cast<std::size_t>(n), 0), std::vector<char>(static_cast<std::size_t>(n * n), 0)};
    for (int k = 0; k < n; ++k) d.hub[static_cast<std::size_t>(k)] = at(vars_.z[static_cast<std::size_t>(k)]) > kOpenTol;
    for (int k = 0; k < n; ++k)
      for (int l = k; l < n; ++l)
        if (d.hub[static_cast<std::size_t>(k)] && d.hub[static_cast<std::size_t>(l)] && at(vars_.y_of(k, l)) > kOpenTol)
          set_edge(d, k, l, true);
    if (spec_.variant == ModelVariant::M2 && !connected(d)) complete_backbone(d);

    std::vector<Arc> orig, backup;
    double best = evaluate(d, &orig, &backup);
    if (!std::isfinite(best)) return {};
    // Close hubs and edges, or open edges between open hubs, one at a time
    // while the total drops.
    for (bool improved = true; improved;) {
      improved = false;
      for (int k = 0; k < n && !improved; ++k) {
        if (!d.hub[static_cast<std::size_t>(k)]) continue;
        OpenDesign t = d;
        t.hub[static_cast<std::size_t>(k)] = 0;
        for (int l = 0; l < n; ++l) set_edge(t, k, l, false);
        improved = try_move(std::move(t), d, best);
      }
      for (int k = 0; k < n && !improved; ++k)
        for (int l = k; l < n && !improved; ++l) {
          if (!d.edge[static_cast<std::size_t>(k * n + l)]) continue;
          OpenDesign t = d;
          set_edge(t, k, l, false);
          improved = try_move(std::move(t), d, best);
        }
      for (int k = 0; k < n && !improved; ++k)
        for (int l = k; l < n && !improved; ++l) {
          if (d.edge[static_cast<std::size_t>(k * n + l)] || !d.hub[static_cast<std::size_t>(k)] ||
              !d.hub[static_cast<std::size_t>(l)])
            continue;
          OpenDesign t = d;
          set_edge(t, k, l, true);
          improved = try_move(std::move(t), d, best);
        }
    }
    evaluate(d, &orig, &backup);

    std::vector<double> out(static_cast<std::size_t>(num_vars_), 0.0);
    for (int k = 0; k < n; ++k) {
      if (d.hub[static_cast<std::size_t>(k)]) out[static_cast<std::size_t>(vars_.z[static_cast<std::size_t>(k)])] = 1.0;
      for (int l = k; l < n; ++l)
        if (d.edge[static_cast<std::size_t>(k * n + l)]) out[static_cast<std::size_t>(vars_.y_of(k, l))] = 1.0;
    }
    for (std::size_t r = 0; r < orig.size(); ++r) {
      out[static_cast<std::size_t>(vars_.x_of(r, orig[r].from, orig[r].to))] = 1.0;
      if (!backup.empty())
        out[static_cast<std::size_t>(vars_.xbar[r][static_cast<std::size_t>(backup[r].from * n + backup[r].to)])] = 1.0;
    }
    return out;
  }

 private:
  static constexpr double kOpenTol = 1e-6;

  void set_edge(OpenDesign& d, int k, int l, bool on) const {
    const int n = vars_.n;
    d.edge[static_cast<std::size_t>(k * n + l)] = on;
    d.edge[static_cast<std::size_t>(l * n + k)] = on;
  }

  bool try_move(OpenDesign t, OpenDesign& d, double& best) const {
    if (spec_.variant == ModelVariant::M2 && !connected(t)) return false;
    const double v = evaluate(t, nullptr, nullptr);
    if (!(v < best - 1e-9 * std::max(1.0, std::abs(best)))) return false;
    best = v;
    d = std::move(t);
    return true;
  }

  bool connected(const OpenDesign& d) const {
    const int n = vars_.n;
    DesignPoint dp{std::vector<double>(static_cast<std::size_t>(n), 0.0), SquareMatrix(static_cast<std::size_t>(n))};
    bool any = false;
    for (int k = 0; k < n; ++k) {
      dp.z[static_cast<std::size_t>(k)] = d.hub[static_cast<std::size_t>(k)];
      any = any || d.hub[static_cast<std::size_t>(k)];
      for (int l = 0; l < n; ++l) dp.y(static_cast<std::size_t>(k), static_cast<std::size_t>(l)) = d.edge[static_cast<std::size_t>(k * n + l)];
    }
    return any && audit_connectivity(dp, spec_.lambda).empty();
  }

  // All hub pairs and loops open, with the cheapest extra hubs when fewer than lambda are open.
  void complete_backbone(OpenDesign& d) const {
    const int n = vars_.n;
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return inst_->hub_setup[static_cast<std::size_t>(a)] < inst_->hub_setup[static_cast<std::size_t>(b)];
    });
    int count = static_cast<int>(std::count(d.hub.begin(), d.hub.end(), 1));
    for (int k : order)
      if (count < spec_.lambda && !d.hub[static_cast<std::size_t>(k)]) {
        d.hub[static_cast<std::size_t>(k)] = 1;
        ++count;
      }
    for (int k = 0; k < n; ++k)
      for (int l = k; l < n; ++l)
        set_edge(d, k, l, d.hub[static_cast<std::size_t>(k)] && d.hub[static_cast<std::size_t>(l)]);
  }

  // Set-up plus cheapest routing on the open design; infinity when some commodity has no route.
  double evaluate(const OpenDesign& d, std::vector<Arc>* orig, std::vector<Arc>* backup) const {
    const int n = vars_.n;
    const Instance& inst = *inst_;
    const bool m1 = spec_.variant == ModelVariant::M1 || spec_.variant == ModelVariant::M1Clustered;
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
      if (d.hub[static_cast<std::size_t>(k)]) total += inst.hub_setup[static_cast<std::size_t>(k)];
      for (int l = k; l < n; ++l)
        if (d.edge[static_cast<std::size_t>(k * n + l)])
          total += inst.edge_setup(static_cast<std::size_t>(k), static_cast<std::size_t>(l));
    }
    if (orig) orig->clear();
    if (backup) backup->clear();
    for (std::size_t r = 0; r < vars_.x.size(); ++r) {
      std::vector<Arc> arcs;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          if (d.edge[static_cast<std::size_t>(k * n + l)] && vars_.x_of(r, k, l) >= 0) arcs.push_back({k, l});
      double best = kInf;
      Arc bo{}, bb{};
      for (const Arc& a : arcs) {
        if (!m1) {
          const double c = model_routing_cost(inst, spec_, r, a, std::nullopt);
          if (c < best) {
            best = c;
            bo = a;
          }
          continue;
        }
        for (const Arc& b : arcs) {
          if (edge_of(a) == edge_of(b)) continue;
          const double c = model_routing_cost(inst, spec_, r, a, b);
          if (c < best) {
            best = c;
            bo = a;
            bb = b;
          }
        }
      }
      if (!std::isfinite(best)) return kInf;
      total += best;
      if (orig) orig->push_back(bo);
      if (backup && m1) backup->push_back(bb);
    }
    return total;
  }

  std::shared_ptr<const Instance> inst_;
  ModelSpec spec_;
  VariableMap vars_;
  int num_vars_;
};

}  // namespace

HeuristicCallback rounding_heuristic(const Instance& inst, const BuiltModel& model) {
  return DesignRounding(inst, model);
}

SolveOutcome solve_model(const Instance& inst, const ModelSpec& spec, SolverConfig config) {
  BuiltModel model = build_model(inst, spec);
  if (model.separator) register_separation(config, model.separator);
  if (!config.heuristic) config.heuristic = rounding_heuristic(inst, model);
  SolveOutcome out;
  out.milp = solve_milp(model.problem, config);
  if (out.milp.has_incumbent) out.design = decode(inst, model, out.milp);
  return out;
}

// ---------------------------------------------------------------------------

using nlohmann::json;

std::string serialize_solution(const DesignSolution& sol, const MilpSolution* stats) {
  json doc;
  doc["format"] = "hublf-solution";
  doc["version"] = 1;
  doc["instance_hash"] = sol.instance_hash;
  doc["model"] = {{"variant", to_string(sol.spec.variant)},
                  {"lambda", sol.spec.lambda},
                  {"beta", sol.spec.beta},
                  {"prop1_reduction", sol.spec.apply_prop1_reduction},
                  {"marin_inequalities", sol.spec.apply_marin_inequalities},
                  {"p_bound", sol.spec.apply_P_bound},
                  {"tight_linearization", sol.spec.tight_linearization}};
  doc["n"] = sol.n;
  doc["hubs"] = sol.hubs;
  json edges = json::array(), orig = json::array(), back = json::array();
  for (const auto& [k, l] : sol.edges) edges.push_back({k, l});
  for (const Arc& a : sol.original) orig.push_back({a.from, a.to});
  for (const Arc& a : sol.backup) back.push_back({a.from, a.to});
  doc["edges"] = edges;
  doc["original"] = orig;
  doc["backup"] = back;
  doc["cost"] = {{"hub_setup", sol.cost.hub_setup},
                 {"edge_setup", sol.cost.edge_setup},
                 {"routing", sol.cost.routing},
                 {"total", sol.cost.total()}};
  doc["objective"] = sol.objective;
  if (stats)
    doc["solver"] = {{"status", to_string(stats->status)},
                     {"objective", stats->objective},
                     {"bound", stats->best_bound},
                     {"gap", stats->gap()},
                     {"nodes", stats->nodes},
                     {"cuts", stats->cuts_added},
                     {"lp_iterations", stats->lp_iterations},
                     {"seconds", stats->seconds}};
  return doc.dump(2) + "\n";
}

DesignSolution parse_solution(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), e.what());
  }
  try {
    if (doc.value("format", std::string()) != "hublf-solution") throw ParseError("field 'format'", "not a solution file");
    DesignSolution sol;
    sol.instance_hash = doc.at("instance_hash").get<std::string>();
    const json& m = doc.at("model");
    sol.spec.variant = parse_model_variant(m.at("variant").get<std::string>());
    sol.spec.lambda = m.at("lambda").get<int>();
    sol.spec.beta = m.at("beta").get<double>();
    sol.spec.apply_prop1_reduction = m.value("prop1_reduction", true);
    sol.spec.apply_marin_inequalities = m.value("marin_inequalities", false);
    sol.spec.apply_P_bound = m.value("p_bound", false);
    sol.spec.tight_linearization = m.value("tight_linearization", false);
    sol.n = doc.at("n").get<int>();
    sol.hubs = doc.at("hubs").get<std::vector<int>>();
    for (const auto& e : doc.at("edges")) sol.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    for (const auto& a : doc.at("original")) sol.original.push_back({a.at(0).get<int>(), a.at(1).get<int>()});
    for (const auto& a : doc.at("backup")) sol.backup.push_back({a.at(0).get<int>(), a.at(1).get<int>()});
    const json& c = doc.at("cost");
    sol.cost.hub_setup = c.at("hub_setup").get<double>();
    sol.cost.edge_setup = c.at("edge_setup").get<double>();
    sol.cost.routing = c.at("routing").get<double>();
    sol.objective = doc.at("objective").get<double>();
    std::sort(sol.hubs.begin(), sol.hubs.end());
    std::sort(sol.edges.begin(), sol.edges.end());
    return sol;
  } catch (const json::exception& e) {
    throw ParseError("solution document", e.what());
  } catch (const ModelError& e) {
    throw ParseError("field 'model.variant'", e.what());
  }
}

void save_solution(const DesignSolution& sol, const std::filesystem::path& path, const MilpSolution* stats) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << serialize_solution(sol, stats);
}

DesignSolution load_solution(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_solution(ss.str());
}

}  // namespace hublf

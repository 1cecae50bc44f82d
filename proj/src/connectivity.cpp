#include "hublf/connectivity.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <tuple>

#include "hublf/error.hpp"

namespace hublf {

namespace {
constexpr double kResidualEps = 1e-12;
}

SupportGraph SupportGraph::from_point(const SquareMatrix& y, double threshold) {
  const int n = static_cast<int>(y.size());
  SupportGraph g(n);
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) {
      const double v = y(static_cast<std::size_t>(k), static_cast<std::size_t>(l));
      if (v > threshold) g.add_edge(k, l, v);
    }
  return g;
}

void SupportGraph::add_edge(int u, int v, double capacity) {
  if (u == v) throw ContractViolation("support graph has no self-loops");
  if (u < 0 || v < 0 || u >= n_ || v >= n_) throw ContractViolation("support graph node out of range");
  cap_(static_cast<std::size_t>(u), static_cast<std::size_t>(v)) += capacity;
  cap_(static_cast<std::size_t>(v), static_cast<std::size_t>(u)) += capacity;
}

std::vector<int> SupportGraph::support_nodes() const {
  std::vector<int> out;
  for (int u = 0; u < n_; ++u)
    for (int v = 0; v < n_; ++v)
      if (capacity(u, v) > 0.0) {
        out.push_back(u);
        break;
      }
  return out;
}

double SupportGraph::cut_value(const std::vector<bool>& side) const {
  double s = 0.0;
  for (int u = 0; u < n_; ++u)
    if (side[static_cast<std::size_t>(u)])
      for (int v = 0; v < n_; ++v)
        if (!side[static_cast<std::size_t>(v)]) s += capacity(u, v);
  return s;
}

MinCut max_flow(const SupportGraph& graph, int s, int t) {
  const int n = graph.num_nodes();
  if (s == t) throw ContractViolation("max_flow needs distinct terminals");
  if (s < 0 || t < 0 || s >= n || t >= n) throw ContractViolation("max_flow terminal out of range");
  const auto N = static_cast<std::size_t>(n);
  std::vector<double> residual(N * N);
  for (std::size_t u = 0; u < N; ++u)
    for (std::size_t v = 0; v < N; ++v) residual[u * N + v] = graph.capacity(static_cast<int>(u), static_cast<int>(v));

  std::vector<int> pred(N);
  auto bfs = [&] {
    std::fill(pred.begin(), pred.end(), -1);
    pred[static_cast<std::size_t>(s)] = s;
    std::deque<int> queue{s};
    while (!queue.empty()) {
      const auto u = static_cast<std::size_t>(queue.front());
      queue.pop_front();
      for (std::size_t v = 0; v < N; ++v)
        if (pred[v] < 0 && residual[u * N + v] > kResidualEps) {
          pred[v] = static_cast<int>(u);
          queue.push_back(static_cast<int>(v));
        }
    }
    return pred[static_cast<std::size_t>(t)] >= 0;
  };

  while (bfs()) {
    double bottleneck = kInf;
    for (int v = t; v != s; v = pred[static_cast<std::size_t>(v)])
      bottleneck = std::min(bottleneck, residual[static_cast<std::size_t>(pred[static_cast<std::size_t>(v)]) * N +
                                                 static_cast<std::size_t>(v)]);
    for (int v = t; v != s; v = pred[static_cast<std::size_t>(v)]) {
      const auto u = static_cast<std::size_t>(pred[static_cast<std::size_t>(v)]);
      residual[u * N + static_cast<std::size_t>(v)] -= bottleneck;
      residual[static_cast<std::size_t>(v) * N + u] += bottleneck;
    }
  }

  MinCut cut;
  cut.source_side.assign(N, false);
  for (std::size_t v = 0; v < N; ++v) cut.source_side[v] = pred[v] >= 0;
  cut.value = graph.cut_value(cut.source_side);
  return cut;
}

double GomoryHuTree::pair_value(int u, int v) const {
  const auto pos = [&](int node) {
    auto it = std::find(nodes.begin(), nodes.end(), node);
    if (it == nodes.end()) throw ContractViolation("node not in cut tree");
    return static_cast<int>(it - nodes.begin());
  };
  int a = pos(u), b = pos(v);
  if (a == b) return kInf;
  std::vector<int> depth(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (int j = static_cast<int>(i); parent[static_cast<std::size_t>(j)] >= 0; j = parent[static_cast<std::size_t>(j)])
      ++depth[i];
  double best = kInf;
  while (a != b) {
    if (depth[static_cast<std::size_t>(a)] < depth[static_cast<std::size_t>(b)]) std::swap(a, b);
    best = std::min(best, flow[static_cast<std::size_t>(a)]);
    a = parent[static_cast<std::size_t>(a)];
  }
  return best;
}

std::vector<int> GomoryHuTree::subtree(int i) const {
  std::vector<int> out;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    int a = static_cast<int>(j);
    while (a >= 0 && a != i) a = parent[static_cast<std::size_t>(a)];
    if (a == i) out.push_back(nodes[j]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

GomoryHuTree gomory_hu(const SupportGraph& graph, std::vector<int> nodes) {
  if (nodes.empty()) nodes = graph.support_nodes();
  GomoryHuTree tree;
  const std::size_t N = nodes.size();
  tree.nodes = std::move(nodes);
  tree.parent.assign(N, 0);
  tree.flow.assign(N, 0.0);
  if (N == 0) return tree;
  tree.parent[0] = -1;
  auto& p = tree.parent;
  auto& fl = tree.flow;
  for (std::size_t s = 1; s < N; ++s) {
    const auto t = static_cast<std::size_t>(p[s]);
    const MinCut cut = max_flow(graph, tree.nodes[s], tree.nodes[t]);
    const auto in_x = [&](std::size_t i) { return cut.source_side[static_cast<std::size_t>(tree.nodes[i])]; };
    fl[s] = cut.value;
    for (std::size_t i = 0; i < N; ++i)
      if (i != s && in_x(i) && p[i] == static_cast<int>(t)) p[i] = static_cast<int>(s);
    if (p[t] >= 0 && in_x(static_cast<std::size_t>(p[t]))) {
      p[s] = p[t];
      p[t] = static_cast<int>(s);
      fl[s] = fl[t];
      fl[t] = cut.value;
    }
  }
  return tree;
}

namespace {

double crossing(const SquareMatrix& y, const std::vector<bool>& in_s) {
  double s = 0.0;
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i)
    if (in_s[i])
      for (std::size_t j = 0; j < n; ++j)
        if (!in_s[j]) s += y(i, j);
  return s;
}

}  // namespace

double cut_row_violation(const DesignPoint& point, const SeparationResult& cut, int lambda) {
  std::vector<bool> in_s(point.z.size(), false);
  for (int k : cut.set) in_s[static_cast<std::size_t>(k)] = true;
  const auto k = static_cast<std::size_t>(cut.hub);
  double rhs = lambda * point.z[k];
  if (cut.form == CutForm::Pairwise) rhs = lambda * (point.z[k] + point.z[static_cast<std::size_t>(cut.partner)] - 1.0);
  return rhs - crossing(point.y, in_s) - point.y(k, k);
}

std::vector<SeparationResult> separate(const DesignPoint& point, int lambda, double tolerance, double threshold) {
  const std::size_t n = point.z.size();
  if (point.y.size() != n) throw ContractViolation("separation point has mismatched sizes");
  std::vector<SeparationResult> out;
  std::set<std::tuple<int, std::vector<int>, int, int>> seen;

  auto consider = [&](const std::vector<bool>& in_s) {
    std::vector<int> members;
    for (std::size_t i = 0; i < n; ++i)
      if (in_s[i]) members.push_back(static_cast<int>(i));
    if (members.empty() || members.size() == n) return;
    const double cut = crossing(point.y, in_s);
    int k = -1;
    double best = -kInf;
    for (int i : members) {
      const auto u = static_cast<std::size_t>(i);
      const double score = lambda * point.z[u] - point.y(u, u);
      if (score > best) {
        best = score;
        k = i;
      }
    }
    if (!(cut < best - tolerance)) return;
    SeparationResult res;
    res.set = members;
    res.hub = k;
    if (static_cast<int>(members.size()) <= lambda - 1) {
      res.form = CutForm::SmallSet;
      res.violation = best - cut;
    } else {
      int l = -1;
      for (std::size_t i = 0; i < n; ++i)
        if (!in_s[i] && (l < 0 || point.z[i] > point.z[static_cast<std::size_t>(l)])) l = static_cast<int>(i);
      if (l < 0) return;
      res.form = CutForm::Pairwise;
      res.partner = l;
      res.violation = cut_row_violation(point, res, lambda);
      if (!(res.violation > tolerance)) return;
    }
    if (seen.emplace(static_cast<int>(res.form), res.set, res.hub, res.partner).second) out.push_back(std::move(res));
  };

  const SupportGraph graph = SupportGraph::from_point(point.y, threshold);
  const GomoryHuTree tree = gomory_hu(graph);
  for (std::size_t i = 1; i < tree.nodes.size(); ++i) {
    std::vector<bool> side(n, false), other(n, false);
    for (int v : tree.subtree(static_cast<int>(i))) side[static_cast<std::size_t>(v)] = true;
    for (int v : tree.nodes)
      if (!side[static_cast<std::size_t>(v)]) other[static_cast<std::size_t>(v)] = true;
    consider(side);
    consider(other);
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<bool> single(n, false);
    single[k] = true;
    consider(single);
  }
  return out;
}

std::vector<ConnectivityViolation> audit_connectivity(const DesignPoint& point, int lambda) {
  const std::size_t n = point.z.size();
  const SupportGraph graph = SupportGraph::from_point(point.y, 0.5);
  std::vector<ConnectivityViolation> out;
  const double eps = 1e-9;
  for (std::size_t k = 0; k < n; ++k) {
    if (point.z[k] < 0.5) continue;
    double deg = 0.0;
    for (std::size_t l = 0; l < n; ++l)
      if (l != k) deg += point.y(k, l);
    if (deg + point.y(k, k) < lambda - eps)
      out.push_back({static_cast<int>(k), -1, deg + point.y(k, k)});
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = k + 1; l < n; ++l) {
      if (point.z[k] < 0.5 || point.z[l] < 0.5) continue;
      const double cut = max_flow(graph, static_cast<int>(k), static_cast<int>(l)).value;
      if (cut + point.y(k, k) < lambda - eps) out.push_back({static_cast<int>(k), static_cast<int>(l), cut + point.y(k, k)});
      if (cut + point.y(l, l) < lambda - eps) out.push_back({static_cast<int>(l), static_cast<int>(k), cut + point.y(l, l)});
    }
  return out;
}

}  // namespace hublf

#include "hublf/instance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "hublf/error.hpp"
#include "hublf/rng.hpp"
#include "json.hpp"

namespace hublf {

bool SquareMatrix::is_symmetric(double tol) const {
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
  return true;
}

double routing_cost(const Instance& inst, std::size_t r, int k, int l) {
  const Commodity& c = inst.commodities[r];
  return c.demand * (inst.access_cost(c.origin, k) + inst.interhub_cost(k, l) +
                     inst.access_cost(l, c.destination));
}

namespace {

constexpr double kSymmetryTol = 1e-12;

void check_matrix(const SquareMatrix& m, int n, const char* name, bool nonneg) {
  if (m.size() != static_cast<std::size_t>(n))
    throw ValidationError(std::string(name) + ": expected " + std::to_string(n) + "x" +
                          std::to_string(n) + " matrix, got size " + std::to_string(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double v = m(i, j);
      if (!std::isfinite(v))
        throw ValidationError(std::string(name) + "[" + std::to_string(i) + "][" +
                              std::to_string(j) + "] is not finite");
      if (nonneg && v < 0.0)
        throw ValidationError(std::string(name) + "[" + std::to_string(i) + "][" +
                              std::to_string(j) + "] is negative");
    }
}

}  // namespace

void Instance::validate() const {
  if (n < 1) throw ValidationError("n must be at least 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0,1]");
  check_matrix(base_cost, n, "base_cost", true);
  check_matrix(access_cost, n, "access_cost", true);
  check_matrix(interhub_cost, n, "interhub_cost", true);
  check_matrix(edge_setup, n, "edge_setup", true);
  check_matrix(fail_prob, n, "fail_prob", true);
  if (hub_setup.size() != static_cast<std::size_t>(n))
    throw ValidationError("hub_setup: expected " + std::to_string(n) + " entries");
  for (std::size_t k = 0; k < hub_setup.size(); ++k)
    if (!std::isfinite(hub_setup[k]) || hub_setup[k] < 0.0)
      throw ValidationError("hub_setup[" + std::to_string(k) + "] must be finite and >= 0");
  for (std::size_t i = 0; i < fail_prob.size(); ++i)
    for (std::size_t j = 0; j < fail_prob.size(); ++j)
      if (fail_prob(i, j) > 1.0)
        throw ValidationError("fail_prob[" + std::to_string(i) + "][" + std::to_string(j) +
                              "] = " + std::to_string(fail_prob(i, j)) + " is outside [0,1]");
  if (!edge_setup.is_symmetric(kSymmetryTol)) throw ValidationError("edge_setup is not symmetric");
  if (!fail_prob.is_symmetric(kSymmetryTol)) throw ValidationError("fail_prob is not symmetric");
  for (std::size_t r = 0; r < commodities.size(); ++r) {
    const Commodity& c = commodities[r];
    if (c.origin < 0 || c.origin >= n || c.destination < 0 || c.destination >= n)
      throw ValidationError("commodity " + std::to_string(r) + " has a node outside [0, n)");
    if (!std::isfinite(c.demand) || c.demand < 0.0)
      throw ValidationError("commodity " + std::to_string(r) + " has a negative demand");
  }
}

std::vector<double> collection_costs(const SquareMatrix& base_cost) {
  const std::size_t n = base_cost.size();
  std::vector<double> a(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == k) continue;
      best = std::min({best, base_cost(k, j), base_cost(j, k)});
    }
    a[k] = std::isfinite(best) ? best : 0.0;
  }
  return a;
}

SquareMatrix interhub_costs(const SquareMatrix& base_cost, double alpha) {
  const std::size_t n = base_cost.size();
  const std::vector<double> a = collection_costs(base_cost);
  SquareMatrix c(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l)
      c(k, l) = alpha * (a[k] + base_cost(k, l) + a[l]);
  return c;
}

Instance synthesize_instance(int n, std::uint64_t geometry_seed, const ProbabilityScenario& scenario,
                             const CostScalingParams& params) {
  if (n < 2) throw InvalidInstance("synthesize_instance needs n >= 2, got " + std::to_string(n));
  if (!(params.alpha >= 0.0 && params.alpha <= 1.0))
    throw InvalidInstance("alpha must lie in [0,1]");
  if (params.beta < 0.0) throw InvalidInstance("beta must be >= 0");
  if (!(params.demand_scale > 0.0)) throw InvalidInstance("demand scale must be positive");
  if (scenario.kind == ScenarioKind::CP) {
    if (scenario.cluster_values.empty()) throw InvalidInstance("CP scenario needs cluster values");
    for (double v : scenario.cluster_values)
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidInstance("cluster values must lie in [0,1]");
  } else if (!(scenario.rho >= 0.0 && scenario.rho <= 1.0)) {
    throw InvalidInstance("rho must lie in [0,1]");
  }

  const auto un = static_cast<std::size_t>(n);
  std::mt19937_64 geo(geometry_seed);
  std::vector<double> px(un), py(un);
  for (std::size_t i = 0; i < un; ++i) {
    px[i] = unit_uniform(geo);
    py[i] = unit_uniform(geo);
  }

  Instance inst;
  inst.n = n;
  inst.alpha = params.alpha;
  inst.base_cost = SquareMatrix(un);
  for (std::size_t i = 0; i < un; ++i)
    for (std::size_t j = 0; j < un; ++j)
      inst.base_cost(i, j) = i == j ? 0.0 : std::hypot(px[i] - px[j], py[i] - py[j]);
  inst.access_cost = inst.base_cost;
  inst.interhub_cost = interhub_costs(inst.base_cost, params.alpha);
  inst.hub_setup.assign(un, params.hub_setup_default);

  // Gravity flows: w_od = round(1000 u_o u_d), u in (0.1, 1].
  std::vector<double> mass(un);
  for (auto& u : mass) u = 1.0 - 0.9 * unit_uniform(geo);
  SquareMatrix flow(un);
  double total = 0.0;
  for (std::size_t o = 0; o < un; ++o)
    for (std::size_t d = 0; d < un; ++d)
      if (o != d) {
        flow(o, d) = std::round(1000.0 * mass[o] * mass[d]);
        total += flow(o, d);
      }

  // Edge set-up: h_kl = 100 (c_kl / W_kl) / MAXW, loops use the mean of W.
  inst.edge_setup = SquareMatrix(un);
  if (params.edge_setup_rule == EdgeSetupRule::PaperFormula && total > 0.0) {
    SquareMatrix w(un);
    double sum = 0.0;
    for (std::size_t i = 0; i < un; ++i)
      for (std::size_t j = 0; j < un; ++j) {
        w(i, j) = flow(i, j) / total;
        sum += w(i, j);
      }
    const double mean = sum / static_cast<double>(un * un);
    double maxw = 0.0;
    for (std::size_t i = 0; i < un; ++i)
      for (std::size_t j = 0; j < un; ++j)
        if (w(i, j) > 0.0) maxw = std::max(maxw, inst.interhub_cost(i, j) / w(i, j));
    if (maxw > 0.0) {
      for (std::size_t k = 0; k < un; ++k)
        for (std::size_t l = k; l < un; ++l) {
          double h = 0.0;
          if (k == l) {
            h = 100.0 * (inst.interhub_cost(k, k) / mean) / maxw;
          } else if (w(k, l) > 0.0) {
            h = 100.0 * (inst.interhub_cost(k, l) / w(k, l)) / maxw;
          } else {
            h = 100.0;  // no flow on the pair: the cap of the formula
          }
          inst.edge_setup(k, l) = h;
          inst.edge_setup(l, k) = h;
        }
    }
  }

  // Failure probabilities, upper triangle (loops included) mirrored.
  std::mt19937_64 prob_rng(scenario.seed);
  inst.fail_prob = SquareMatrix(un);
  for (std::size_t k = 0; k < un; ++k)
    for (std::size_t l = k; l < un; ++l) {
      double p = 0.0;
      switch (scenario.kind) {
        case ScenarioKind::RP:
          p = scenario.rho * unit_uniform(prob_rng);
          break;
        case ScenarioKind::CP: {
          const auto idx = static_cast<std::size_t>(
              unit_uniform(prob_rng) * static_cast<double>(scenario.cluster_values.size()));
          p = scenario.cluster_values[std::min(idx, scenario.cluster_values.size() - 1)];
          break;
        }
        case ScenarioKind::SP:
          p = scenario.rho;
          break;
      }
      inst.fail_prob(k, l) = p;
      inst.fail_prob(l, k) = p;
    }

  std::vector<Commodity> all;
  for (int o = 0; o < n; ++o)
    for (int d = 0; d < n; ++d)
      if (o != d) all.push_back({o, d, params.demand_scale * flow(o, d)});
  if (params.max_commodities > 0 && params.max_commodities < all.size()) {
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 pick(geometry_seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(unit_uniform(pick) * static_cast<double>(i + 1));
      std::swap(order[i], order[std::min(j, i)]);
    }
    order.resize(params.max_commodities);
    std::sort(order.begin(), order.end());
    std::vector<Commodity> kept;
    for (auto idx : order) kept.push_back(all[idx]);
    all = std::move(kept);
  }
  inst.commodities = std::move(all);
  return inst;
}

std::vector<double> distinct_probabilities(const Instance& inst, double tol) {
  std::vector<double> values;
  for (int k = 0; k < inst.n; ++k)
    for (int l = k; l < inst.n; ++l) values.push_back(inst.fail_prob(k, l));
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  for (double v : values)
    if (out.empty() || v - out.back() > tol) out.push_back(v);
  return out;
}

ScenarioKind parse_scenario_kind(const std::string& s) {
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (t == "rp") return ScenarioKind::RP;
  if (t == "cp") return ScenarioKind::CP;
  if (t == "sp") return ScenarioKind::SP;
  throw InvalidInstance("unknown probability scenario '" + s + "' (expected rp, cp or sp)");
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::RP: return "RP";
    case ScenarioKind::CP: return "CP";
    case ScenarioKind::SP: return "SP";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Canonical text format

namespace {

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix(std::ostringstream& os, const char* name, const SquareMatrix& m) {
  os << "  \"" << name << "\": [";
  for (std::size_t i = 0; i < m.size(); ++i) {
    os << (i ? ",\n    [" : "\n    [");
    for (std::size_t j = 0; j < m.size(); ++j) os << (j ? ", " : "") << fmt_real(m(i, j));
    os << "]";
  }
  os << "\n  ],\n";
}

using nlohmann::json;

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

const json& field(const json& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end()) throw ParseError(std::string("field '") + name + "'", "missing");
  return *it;
}

double as_real(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ParseError(where, "expected an integer");
  return v.get<int>();
}

SquareMatrix read_matrix(const json& doc, const char* name, int n) {
  const json& m = field(doc, name);
  const std::string base = std::string("field '") + name + "'";
  if (!m.is_array() || m.size() != static_cast<std::size_t>(n))
    throw ParseError(base, "expected an array of " + std::to_string(n) + " rows");
  SquareMatrix out(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < m.size(); ++i) {
    const json& row = m[i];
    const std::string rw = base + " row " + std::to_string(i);
    if (!row.is_array() || row.size() != static_cast<std::size_t>(n))
      throw ParseError(rw, "expected " + std::to_string(n) + " entries");
    for (std::size_t j = 0; j < row.size(); ++j)
      out(i, j) = as_real(row[j], rw + " column " + std::to_string(j));
  }
  return out;
}

}  // namespace

std::string serialize_instance(const Instance& inst) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"format\": \"hublf-instance\",\n";
  os << "  \"version\": 1,\n";
  os << "  \"n\": " << inst.n << ",\n";
  os << "  \"alpha\": " << fmt_real(inst.alpha) << ",\n";
  write_matrix(os, "base_cost", inst.base_cost);
  write_matrix(os, "access_cost", inst.access_cost);
  write_matrix(os, "interhub_cost", inst.interhub_cost);
  os << "  \"hub_setup\": [";
  for (std::size_t k = 0; k < inst.hub_setup.size(); ++k)
    os << (k ? ", " : "") << fmt_real(inst.hub_setup[k]);
  os << "],\n";
  write_matrix(os, "edge_setup", inst.edge_setup);
  write_matrix(os, "fail_prob", inst.fail_prob);
  os << "  \"commodities\": [";
  for (std::size_t r = 0; r < inst.commodities.size(); ++r) {
    const Commodity& c = inst.commodities[r];
    os << (r ? ",\n    [" : "\n    [") << c.origin << ", " << c.destination << ", "
       << fmt_real(c.demand) << "]";
  }
  os << (inst.commodities.empty() ? "]\n" : "\n  ]\n");
  os << "}\n";
  return os.str();
}

Instance parse_instance(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("line " + std::to_string(line_of(text, e.byte)), e.what());
  }
  if (!doc.is_object()) throw ParseError("document", "expected a JSON object");

  Instance inst;
  inst.n = as_int(field(doc, "n"), "field 'n'");
  if (inst.n < 1) throw ParseError("field 'n'", "must be at least 1");
  inst.alpha = as_real(field(doc, "alpha"), "field 'alpha'");
  inst.base_cost = read_matrix(doc, "base_cost", inst.n);
  inst.access_cost = read_matrix(doc, "access_cost", inst.n);
  inst.interhub_cost = read_matrix(doc, "interhub_cost", inst.n);
  inst.edge_setup = read_matrix(doc, "edge_setup", inst.n);
  inst.fail_prob = read_matrix(doc, "fail_prob", inst.n);

  const json& f = field(doc, "hub_setup");
  if (!f.is_array() || f.size() != static_cast<std::size_t>(inst.n))
    throw ParseError("field 'hub_setup'", "expected " + std::to_string(inst.n) + " entries");
  for (std::size_t k = 0; k < f.size(); ++k)
    inst.hub_setup.push_back(as_real(f[k], "field 'hub_setup' entry " + std::to_string(k)));

  const json& com = field(doc, "commodities");
  if (!com.is_array()) throw ParseError("field 'commodities'", "expected an array");
  static constexpr const char* kColumns[] = {"origin", "destination", "demand"};
  for (std::size_t r = 0; r < com.size(); ++r) {
    const json& row = com[r];
    const std::string where = "commodities[" + std::to_string(r) + "]";
    if (!row.is_array()) throw ParseError(where, "expected [origin, destination, demand]");
    for (std::size_t c = row.size(); c < 3; ++c)
      throw ParseError(where + "." + kColumns[c], "missing " + std::string(kColumns[c]) + " column");
    if (row.size() > 3) throw ParseError(where, "expected exactly 3 columns");
    Commodity c;
    c.origin = as_int(row[0], where + ".origin");
    c.destination = as_int(row[1], where + ".destination");
    c.demand = as_real(row[2], where + ".demand");
    inst.commodities.push_back(c);
  }
  inst.validate();
  return inst;
}

void save_instance(const Instance& inst, const std::filesystem::path& path) {
  inst.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << serialize_instance(inst);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open instance file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str());
}

std::string instance_hash(const Instance& inst) {
  return fnv1a_hex(serialize_instance(inst));
}

}  // namespace hublf

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hublf {

/// Dense row-major n x n matrix of doubles.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }
  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  bool is_symmetric(double tol) const;
  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct Commodity {
  int origin = 0;
  int destination = 0;
  double demand = 0.0;
  friend bool operator==(const Commodity&, const Commodity&) = default;
};

/// Problem data for hub network design with failing inter-hub edges.
///
/// Nodes are 0..n-1 and every node is a potential hub. Edge-indexed data
/// (edge_setup, fail_prob) is symmetric and includes the diagonal loops.
struct Instance {
  int n = 0;
  double alpha = 1.0;
  SquareMatrix base_cost;      // raw unit transport cost c'
  SquareMatrix access_cost;    // access / delivery unit cost c-bar
  SquareMatrix interhub_cost;  // inter-hub unit cost c, diagonal = loop cost
  std::vector<double> hub_setup;
  SquareMatrix edge_setup;
  SquareMatrix fail_prob;
  std::vector<Commodity> commodities;

  std::size_t num_commodities() const noexcept { return commodities.size(); }

  /// Throws ValidationError naming the first broken invariant.
  void validate() const;

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// C^r_kl = w_r (c-bar_{o_r k} + c_kl + c-bar_{l d_r}); k == l is the loop path.
double routing_cost(const Instance& inst, std::size_t r, int k, int l);

enum class ScenarioKind { RP, CP, SP };

struct ProbabilityScenario {
  ScenarioKind kind = ScenarioKind::SP;
  double rho = 0.1;
  std::vector<double> cluster_values{0.1, 0.2, 0.3};
  std::uint64_t seed = 1;
};

enum class EdgeSetupRule { PaperFormula, FromFile };

struct CostScalingParams {
  double alpha = 0.5;
  double beta = 1.0;
  double hub_setup_default = 100.0;
  EdgeSetupRule edge_setup_rule = EdgeSetupRule::PaperFormula;
  /// Multiplies every demand; set-up costs are unaffected.
  double demand_scale = 1.0;
  /// Keep only this many commodities (a seeded subset); 0 keeps every ordered pair.
  std::size_t max_commodities = 0;
};

/// Random instance on n points of the unit square. Deterministic in the seeds.
Instance synthesize_instance(int n, std::uint64_t geometry_seed, const ProbabilityScenario& scenario,
                             const CostScalingParams& params);

/// a_k = d_k = min over j != k of min(c'_kj, c'_jk).
std::vector<double> collection_costs(const SquareMatrix& base_cost);

/// c_kl = alpha (a_k + c'_kl + d_l).
SquareMatrix interhub_costs(const SquareMatrix& base_cost, double alpha);

/// Distinct values of the upper triangle (loops included) of fail_prob, ascending.
std::vector<double> distinct_probabilities(const Instance& inst, double tol = 1e-12);

ScenarioKind parse_scenario_kind(const std::string& s);
std::string to_string(ScenarioKind kind);

// Canonical text format (JSON document, reals with 17 significant digits).
std::string serialize_instance(const Instance& inst);
Instance parse_instance(const std::string& text);
void save_instance(const Instance& inst, const std::filesystem::path& path);
Instance load_instance(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical serialization, as 16 hex digits.
std::string instance_hash(const Instance& inst);

}  // namespace hublf

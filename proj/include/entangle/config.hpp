#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "entangle/coalition.hpp"
#include "entangle/consensus.hpp"
#include "entangle/simulation.hpp"
#include "entangle/topology.hpp"

namespace entangle {

/// Everything a command-line run needs. JSON layout:
///   {scenario, seed, out, topology{...}, link_model{...}, link_defaults{...},
///    tree_link{...}, game{...}, weights{w_f, w_c}, sim{...}, sweep{...}}
/// Every section and key is optional; unknown keys are rejected.
struct RunConfig {
  int scenario = 1;
  std::uint64_t seed = 1;
  std::string out = "out";

  Scenario1Params scenario1;
  std::vector<int> tree_sizes{5, 4};
  double cost_unit_us = 1.0;

  LinkModelParams link_model;
  LinkParams link_defaults{50.0, 10000.0, 1e-4, 0.98, 50.0, 0.95};  // scenario 1 links
  LinkParams tree_link{50.0, 10000.0, 0.0, 0.95, 50.0, 1.0};        // scenario 2 links; cost/payoff from weights

  std::string variant = "classical";
  double gamma = std::numbers::pi / 2;
  std::optional<NodeId> source;
  std::optional<NodeId> destination;
  double target_throughput = 500.0;
  double hop_cost = 0.05;
  double attempt_rate_hz = 1e6 / 300.0;
  std::string payoff_split = "equal";
  double tie_epsilon = 1e-6;
  double coin_angle = 0.0;
  int max_rounds = 0;

  UtilityWeights weights;

  double sync_step_us = 300.0;
  double qubit_lifetime_us = 500.0;
  int trials = 1000;

  std::vector<int> node_counts{2, 4, 6, 8, 10};
  std::vector<std::string> regimes{"NoGameClassicalNet", "ClassicalGameClassicalNet", "ClassicalGameQuantumNet",
                                   "QuantumGameQuantumNet"};
  std::vector<double> rates{1e-4, 1e-3, 1e-2};

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses and validates; throws ParameterError naming the offending field.
RunConfig parse_run_config(const std::string& json_text);
std::string to_json(const RunConfig& cfg);

/// Field-level checks shared by parsing and flag overrides.
void validate(const RunConfig& cfg);

NetworkTopology build_topology(const RunConfig& cfg);
Scenario2Params scenario2_params(const RunConfig& cfg);
SimConfig sim_config(const RunConfig& cfg);
CoalitionGameConfig coalition_config(const RunConfig& cfg, const NetworkTopology& topology);
ConsensusConfig consensus_config(const RunConfig& cfg, const NetworkTopology& topology);

}  // namespace entangle

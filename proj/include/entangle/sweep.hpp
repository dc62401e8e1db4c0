#pragma once

#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "entangle/coalition.hpp"
#include "entangle/consensus.hpp"
#include "entangle/simulation.hpp"
#include "entangle/topology.hpp"

namespace entangle {

struct SweepCell {
  double x = 0.0;
  Regime regime = Regime::NoGameClassicalNet;
  std::string metric;
  MetricSummary summary;
};

struct SweepResult {
  std::string kind;  // "nodes" or "decoherence"
  std::vector<double> x_values;
  std::vector<SweepCell> cells;  // sorted by (x, regime name, metric)

  const SweepCell& at(double x, Regime regime, const std::string& metric) const;
};

struct NodeSweepOptions {
  LinkParams link_defaults{50.0, 10000.0, 1e-4, 0.98, 50.0, 0.95};
  bool probabilistic_links = false;
  LinkModelParams model;
  CoalitionGameConfig game;  // endpoints are chosen by the sweep
  double gamma = std::numbers::pi / 2;
};

/// Scenario 1 with two leaders; count n puts n - 2 repeaters between them so that
/// n nodes relay each source-destination pair. Paths per regime: shortest hop
/// count without a game, the classical coalition, or the quantum coalition (which
/// needs more than two players and otherwise uses the classical one).
SweepResult sweep_nodes(const SimConfig& base, const std::vector<int>& counts, const std::vector<Regime>& regimes,
                        std::uint64_t seed, const NodeSweepOptions& options = {});

struct DecoherenceSweepOptions {
  Scenario2Params scenario;
  UtilityWeights weights;
  double gamma = std::numbers::pi / 2;
  double coin_angle = 0.0;
};

/// Regime reported for each consensus variant (both run on a quantum network).
Regime regime_for(ConsensusVariant v);

/// Scenario 2 fixture with every link's decoherence rate set to x, a consensus run per
/// variant, then trials over the converged path.
SweepResult sweep_decoherence(const SimConfig& base, const std::vector<double>& rates,
                              const std::vector<ConsensusVariant>& variants, std::uint64_t seed,
                              const DecoherenceSweepOptions& options = {});

/// Header `x,regime,metric,mean,stddev,n`.
std::string to_csv(const SweepResult& r);
std::string to_json(const SweepResult& r);

}  // namespace entangle

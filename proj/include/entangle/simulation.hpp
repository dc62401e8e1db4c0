#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "entangle/rng.hpp"
#include "entangle/topology.hpp"

namespace entangle {

enum class Regime { NoGameClassicalNet, ClassicalGameClassicalNet, ClassicalGameQuantumNet, QuantumGameQuantumNet };

const char* to_string(Regime r);
Regime regime_from_string(const std::string& s);
bool is_quantum_network(Regime r);
bool uses_quantum_game(Regime r);

struct SimConfig {
  double sync_step_us = 300.0;
  double qubit_lifetime_us = 500.0;
  int trials = 1000;
  Regime regime = Regime::QuantumGameQuantumNet;
  std::uint64_t seed = 1;
};

void validate(const SimConfig& cfg);

struct TrialMetrics {
  double total_latency_us = 0.0;
  int hops = 0;
  double normalized_delay = 0.0;
  double end_to_end_fidelity = 0.0;
  int ebits_delivered = 0;
  double entanglement_rate = 0.0;  // e-bits per second of simulated time
  bool success = false;
  double max_idle_us = 0.0;        // longest any stored qubit waited
  bool lifetime_exceeded = false;
};

/// One end-to-end distribution attempt along `path` (hop by hop).
///
/// Each hop retries generation every sync step until it succeeds with the link's
/// gen_prob, then the pair arrives after the link latency. On quantum networks a
/// link pair starts as a Werner state whose fidelity equals the link payoff and
/// depolarizes during flight; the stored pair depolarizes while it waits for the
/// next hop, which aborts the trial once the wait exceeds the qubit lifetime.
/// Every repeater costs one sync step (swap on quantum networks, forwarding on
/// classical ones). Classical networks report the product of link payoffs.
TrialMetrics run_trial(const NetworkTopology& topology, const std::vector<NodeId>& path, const SimConfig& cfg,
                       Rng& rng);

/// `cfg.trials` independent trials; trial i uses the stream derive_seed(cfg.seed, i).
/// Runs on up to ENTANGLE_GAMES_THREADS threads, results are in trial order.
std::vector<TrialMetrics> run_trials(const NetworkTopology& topology, const std::vector<NodeId>& path,
                                     const SimConfig& cfg);

/// Fidelity of the path under nominal timing (first attempt succeeds on every hop).
double nominal_path_fidelity(const NetworkTopology& topology, const std::vector<NodeId>& path, const SimConfig& cfg,
                             bool quantum_network = true);

/// Noise-free Werner composition of the link payoffs along `path`.
double werner_chain_fidelity(const NetworkTopology& topology, const std::vector<NodeId>& path);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single trial
  std::size_t n = 0;
};

/// Mean and sample standard deviation per metric. Keys are the metric names
/// used in sweep output ("normalized_delay", "end_to_end_fidelity", ...).
std::map<std::string, MetricSummary> aggregate(const std::vector<TrialMetrics>& trials);

const std::vector<std::string>& metric_names();

}  // namespace entangle

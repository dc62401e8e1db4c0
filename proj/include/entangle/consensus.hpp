#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "entangle/rng.hpp"
#include "entangle/topology.hpp"

namespace entangle {

struct HopEstimate {
  double latency_cost = 0.0;
  double fidelity_payoff = 0.0;
};

struct UtilityWeights {
  double fidelity = 1.0;
  double cost = 1.0;

  friend bool operator==(const UtilityWeights&, const UtilityWeights&) = default;
};

void validate(const UtilityWeights& w);

/// w_f * payoff - w_c * cost / max_cost, where max_cost is the largest cost in the
/// node's choice set.
double hop_utility(const HopEstimate& est, const UtilityWeights& w, double max_cost);

/// Estimates for both options of `choice`, read from the topology's links.
std::array<HopEstimate, 2> option_estimates(const NetworkTopology& topology, const ChoiceSet& choice);

enum class ConsensusVariant { Classical, Quantum };

const char* to_string(ConsensusVariant v);
ConsensusVariant consensus_variant_from_string(const std::string& s);

struct ConsensusConfig {
  NodeId source = 0;
  NodeId destination = 0;
  UtilityWeights weights;
  ConsensusVariant variant = ConsensusVariant::Classical;
  double gamma = 0.0;        // EWL entanglement for accept/decline
  double coin_angle = 0.0;   // polarizer rotation for tie-breaking coin flips
  double tie_epsilon = 1e-6;
  int max_rounds = 0;        // 0: twice the node count
  std::uint64_t seed = 1;
};

struct Switch {
  NodeId node = 0;
  NodeId from = 0;
  NodeId to = 0;
  double d_cost = 0.0;
  double d_payoff = 0.0;
  double d_utility = 0.0;
  bool coin = false;     // decided by a coin flip on a utility tie
  bool blocked = false;  // rejected because it would close a cycle
};

struct RoundResult {
  std::vector<ChoiceSet> state;
  std::vector<Switch> switches;  // applied and blocked, in node order
};

/// Strictly improving next-hop switches in ascending node order, judged on the
/// pre-round state; a switch that would close a cycle is blocked.
RoundResult classical_consensus_round(const NetworkTopology& topology, const std::vector<ChoiceSet>& state,
                                      const UtilityWeights& w);

/// As the classical round, but each improving switch is an EWL accept/decline between
/// the node and its new hop, and near-ties are settled by a shared coin flip.
RoundResult quantum_consensus_round(const NetworkTopology& topology, const std::vector<ChoiceSet>& state,
                                    const UtilityWeights& w, double gamma, double coin_angle, double tie_epsilon,
                                    Rng& rng);

/// Whether the new hop accepts a switch worth `d_utility` to both parties, decided by
/// the profit-maximising pure equilibrium of the EWL game at `gamma`.
bool ewl_accept(double d_utility, double gamma);

/// Route implied by `state`: up from source to its leader, across the leader link, and
/// down to destination. Throws UnreachableError when the pointers do not connect.
std::vector<NodeId> consensus_path(const NetworkTopology& topology, const std::vector<ChoiceSet>& state,
                                   NodeId source, NodeId destination);

struct ConsensusRound {
  int round = 0;
  std::vector<Switch> switches;
  double total_cost = 0.0;
  double fidelity = 0.0;
};

struct ConsensusOutcome {
  std::vector<NodeId> path;
  std::vector<Switch> switches;  // applied switches over the whole run
  std::vector<ConsensusRound> trace;
  std::vector<ChoiceSet> final_state;
  double total_cost = 0.0;
  double end_to_end_fidelity = 0.0;
  bool converged = false;
  int rounds = 0;
};

ConsensusOutcome run_consensus(const NetworkTopology& topology, const ConsensusConfig& cfg);

double path_cost(const NetworkTopology& topology, const std::vector<NodeId>& path);

std::string to_json(const ConsensusOutcome& outcome);
/// One JSON object per line and round.
std::string trace_jsonl(const ConsensusOutcome& outcome);

}  // namespace entangle

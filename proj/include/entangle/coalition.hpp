#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "entangle/quantum.hpp"
#include "entangle/rng.hpp"
#include "entangle/topology.hpp"

namespace entangle {

enum class PayoffSplit { Equal, ProportionalToDegree };

const char* to_string(PayoffSplit s);
PayoffSplit payoff_split_from_string(const std::string& s);

struct CoalitionGameConfig {
  NodeId source = 0;
  NodeId destination = 1;
  double target_throughput = 500.0;          // e-bits per second
  double hop_cost = 0.05;                    // utility per hop
  double attempt_rate_hz = 1e6 / 300.0;      // generation attempts per second per link
  PayoffSplit payoff_split = PayoffSplit::Equal;
};

/// Throws ParameterError for bad numbers, PreconditionError for bad endpoints.
void validate(const CoalitionGameConfig& cfg, const NetworkTopology& topology);

struct Coalition {
  std::set<NodeId> members;
  double value = 0.0;
};

/// Best source-destination path using only nodes of `members`.
struct PathValue {
  std::vector<NodeId> path;  // empty when none exists
  double value = 0.0;
};

/// Value-maximising simple path inside `members`; ties go to fewer hops, then the
/// lexicographically smaller node sequence.
PathValue best_internal_path(const std::set<NodeId>& members, const CoalitionGameConfig& cfg,
                             const NetworkTopology& topology);

/// v(S) = min(target, attempt_rate * min gen_prob) + Werner-chain fidelity - hop_cost * hops
/// for the best S-internal source-destination path, and 0 without one.
double characteristic_value(const std::set<NodeId>& members, const CoalitionGameConfig& cfg,
                            const NetworkTopology& topology);

/// Nodes other than the endpoints that lie on at least one simple source-destination path.
std::vector<NodeId> candidate_nodes(const NetworkTopology& topology, NodeId source, NodeId destination);

struct QuantumRound {
  int round = 0;
  std::vector<quantum::SingleQubitUnitary> strategies;  // player order
  std::string measured;                                  // one bit per player, 1 = join
};

struct CoalitionOutcome {
  Coalition stable_coalition;
  std::vector<NodeId> path;
  std::map<NodeId, double> per_node_payoff;
  int rounds = 0;
  std::vector<std::vector<std::set<NodeId>>> partitions;  // classical: partition after each operation
  std::vector<NodeId> players;                           // quantum: qubit order
  std::vector<QuantumRound> trace;                       // quantum: one record per round
  NodeId referee = 0;
  bool classical_fallback = false;
};

/// Shares of v among the path nodes; members off the path get 0.
std::map<NodeId, double> split_payoff(const Coalition& coalition, const std::vector<NodeId>& path,
                                      PayoffSplit split, const NetworkTopology& topology);

/// Merge-and-split over the candidate nodes plus the two endpoints, starting from
/// singletons. A merge must strictly raise the summed value; a split is taken when
/// it does not lower it. The stable coalition is the most valuable one. `seed` is
/// accepted for interface symmetry; the procedure is deterministic.
CoalitionOutcome classical_coalition_form(const CoalitionGameConfig& cfg, const NetworkTopology& topology,
                                          std::uint64_t seed = 0);

/// Cluster-type entangler on n qubits: a product of exp(i gamma/2 D_k D_{k+1}) over
/// neighbouring pairs. gamma = 0 is the identity; gamma = pi/2 maps |0..0> to a
/// state locally equivalent to the linear cluster state.
quantum::StateVector coalition_entangle(quantum::StateVector psi, double gamma);

/// Joint distribution of the measured join bits: E^dagger (U_1 (x) ... (x) U_n) E |0..0>.
/// Index bit order matches `bitstring` (player 0 is the most significant bit).
std::vector<double> coalition_round_distribution(const std::vector<quantum::SingleQubitUnitary>& strategies,
                                                 double gamma);

/// One measured round; returns the outcome index.
std::size_t sample_coalition_round(const std::vector<quantum::SingleQubitUnitary>& strategies, double gamma,
                                   Rng& rng);

struct QuantumCoalitionOptions {
  int max_rounds = 500;
  int confirmation_window = 0;  // 0: max(3, players)
};

/// Referee protocol with sequential best responses over a 9x9 (theta, phi) grid.
/// Players are the candidate nodes; missing strategies default to U(pi, 0) (join).
/// Fewer than two players falls back to the classical game.
CoalitionOutcome quantum_coalition_form(const CoalitionGameConfig& cfg, const NetworkTopology& topology,
                                        const std::map<NodeId, quantum::SingleQubitUnitary>& strategies,
                                        double gamma, std::uint64_t seed,
                                        const QuantumCoalitionOptions& options = {});

std::string to_json(const CoalitionOutcome& outcome);

}  // namespace entangle

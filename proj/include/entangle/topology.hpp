#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace entangle {

using NodeId = std::size_t;

enum class NodeRole { Leader, Repeater, EndNode, Leaf };
enum class ScenarioTag { Scenario1, Scenario2, Custom };

const char* to_string(NodeRole role);
const char* to_string(ScenarioTag tag);
NodeRole node_role_from_string(const std::string& s);
ScenarioTag scenario_from_string(const std::string& s);

/// Physical and game-facing parameters of one undirected link.
struct LinkParams {
  double latency_us = 50.0;
  double coherence_us = 10000.0;
  double decoherence_rate = 0.0;  // per microsecond
  double gen_prob = 1.0;          // per sync-step attempt
  double cost = 50.0;             // latency-based cost, abstract units
  double payoff = 1.0;            // fidelity-based payoff in [0, 1]

  friend bool operator==(const LinkParams&, const LinkParams&) = default;
};

/// Distance-decay link model p(d) = mu exp(-d / (delta lambda)).
struct LinkModelParams {
  double mu = 0.5;
  double lambda = 0.5;
  double delta = 1.0;  // maximum node distance; builders overwrite it with the measured one

  friend bool operator==(const LinkModelParams&, const LinkModelParams&) = default;
};

void validate(const LinkModelParams& p);

/// Probability that a link exists between two nodes at Euclidean distance `d`.
double link_probability(double d, const LinkModelParams& params);

struct Node {
  NodeId id = 0;
  NodeRole role = NodeRole::Repeater;
  double x = 0.0;
  double y = 0.0;
};

struct Link {
  NodeId a = 0;
  NodeId b = 0;
  LinkParams params;

  NodeId other(NodeId v) const { return v == a ? b : a; }
};

/// A node's two candidate next hops and the one it currently uses.
struct ChoiceSet {
  NodeId node = 0;
  std::array<NodeId, 2> options{};
  int current = 0;

  NodeId current_hop() const { return options[static_cast<std::size_t>(current)]; }
  NodeId alternative_hop() const { return options[static_cast<std::size_t>(1 - current)]; }
};

/// Undirected typed graph. Construction helpers do not reject malformed input;
/// `validate` reports every rule a topology breaks.
class NetworkTopology {
 public:
  explicit NetworkTopology(ScenarioTag tag = ScenarioTag::Custom) : tag_(tag) {}

  NodeId add_node(NodeRole role, double x, double y);
  /// Appends a link as given (self-loops and duplicates included).
  void add_link(NodeId a, NodeId b, const LinkParams& params);
  void add_choice(const ChoiceSet& choice) { choices_.push_back(choice); }

  ScenarioTag scenario() const noexcept { return tag_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t link_count() const noexcept { return links_.size(); }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Link>& links() const noexcept { return links_; }
  const std::vector<ChoiceSet>& choices() const noexcept { return choices_; }
  const Node& node(NodeId id) const { return nodes_.at(id); }

  /// Link joining a and b (either orientation), or nullptr.
  const Link* find_link(NodeId a, NodeId b) const;
  LinkParams& link_params(NodeId a, NodeId b);
  /// Neighbours in ascending id order.
  const std::vector<NodeId>& neighbors(NodeId v) const { return adjacency_.at(v); }
  std::size_t degree(NodeId v) const { return adjacency_.at(v).size(); }

  std::vector<NodeId> nodes_with_role(NodeRole role) const;
  /// Leader owning an end node / leaf (its unique leader neighbour), if any.
  std::optional<NodeId> leader_of(NodeId v) const;

 private:
  ScenarioTag tag_;
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::map<std::pair<NodeId, NodeId>, std::size_t> link_index_;
  std::vector<ChoiceSet> choices_;
};

enum class LeaderAdjacency { Auto, Complete, Ring };

struct Scenario1Params {
  int leaders = 3;
  int end_nodes_per_leader = 4;
  int repeaters_per_pair = 2;
  LeaderAdjacency adjacency = LeaderAdjacency::Auto;  // Auto: complete for N <= 3, ring above
  bool probabilistic_links = false;

  friend bool operator==(const Scenario1Params&, const Scenario1Params&) = default;
};

/// Leaders with M end nodes each; every adjacent leader pair is joined by a chain
/// of L repeaters. Optional distance-decay links are added on top of the skeleton.
NetworkTopology build_scenario1(const Scenario1Params& params, const LinkParams& link_defaults,
                                const LinkModelParams& model, std::uint64_t seed);

/// Adjacent leader pairs used by build_scenario1, in construction order.
std::vector<std::pair<int, int>> leader_pairs(int leaders, LeaderAdjacency adjacency);

struct HopWeight {
  double cost = 80.0;
  double payoff = 0.5;
};

struct Scenario2Params {
  std::vector<int> tree_sizes = {5, 4};
  /// Per-edge (cost, payoff) overrides; keys are (min id, max id).
  std::map<std::pair<NodeId, NodeId>, HopWeight> weights;
  /// Latency in microseconds per unit of cost.
  double cost_unit_us = 1.0;
  LinkParams link_template{50.0, 10000.0, 0.0, 0.95, 50.0, 1.0};
  bool probabilistic_links = false;
  LinkModelParams model;
};

/// Tree scenario. Tree 0 holds the source leaf (id 0) and leader id 1; tree 1's
/// last leaf is the destination. Exactly one leader-leader link joins trees 0 and 1.
/// Every non-leader node with a sibling gets a two-way choice {leader, sibling}.
NetworkTopology build_scenario2(const Scenario2Params& params, std::uint64_t seed);

/// Edge weights of the reference two-tree fixture (tree sizes 5 and 4).
std::map<std::pair<NodeId, NodeId>, HopWeight> reference_scenario2_weights();

struct Scenario2Layout {
  std::vector<NodeId> leaders;
  std::vector<std::vector<NodeId>> leaves;  // chain order per tree
  NodeId source = 0;
  NodeId destination = 0;
};
Scenario2Layout scenario2_layout(const std::vector<int>& tree_sizes);

struct Violation {
  std::string subject;  // e.g. "link 3-3", "node 7"
  std::string rule;
  std::string message;
};

std::vector<Violation> validate(const NetworkTopology& topology);

/// Fewest-hop path from a to b (ties resolved toward lower ids), empty if none.
std::vector<NodeId> shortest_hop_path(const NetworkTopology& topology, NodeId a, NodeId b);

std::string to_json(const NetworkTopology& topology);
NetworkTopology topology_from_json(const std::string& text);

}  // namespace entangle

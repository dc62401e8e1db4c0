#include "entangle/topology.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <set>

#include "entangle/errors.hpp"
#include "entangle/rng.hpp"

namespace entangle {
namespace {

std::pair<NodeId, NodeId> key(NodeId a, NodeId b) { return {std::min(a, b), std::max(a, b)}; }

double distance(const Node& m, const Node& n) { return std::hypot(m.x - n.x, m.y - n.y); }

double max_pairwise_distance(const NetworkTopology& t) {
  double best = 0.0;
  const auto& ns = t.nodes();
  for (std::size_t i = 0; i < ns.size(); ++i)
    for (std::size_t j = i + 1; j < ns.size(); ++j) best = std::max(best, distance(ns[i], ns[j]));
  return best;
}

// Adds distance-decay links between every unlinked pair. Skeleton links are never removed.
void add_probabilistic_links(NetworkTopology& t, LinkModelParams model, const LinkParams& params, Rng& rng) {
  const double delta = max_pairwise_distance(t);
  if (delta <= 0.0) return;
  model.delta = delta;
  const auto& ns = t.nodes();
  for (std::size_t i = 0; i < ns.size(); ++i)
    for (std::size_t j = i + 1; j < ns.size(); ++j) {
      const double u = uniform01(rng);
      if (t.find_link(i, j)) continue;
      if (u < link_probability(distance(ns[i], ns[j]), model)) t.add_link(i, j, params);
    }
}

void check_positive(int value, int minimum, const char* field) {
  if (value < minimum) throw ParameterError(field, "must be >= " + std::to_string(minimum));
}

}  // namespace

const char* to_string(NodeRole role) {
  switch (role) {
    case NodeRole::Leader: return "leader";
    case NodeRole::Repeater: return "repeater";
    case NodeRole::EndNode: return "end_node";
    case NodeRole::Leaf: return "leaf";
  }
  return "?";
}

const char* to_string(ScenarioTag tag) {
  switch (tag) {
    case ScenarioTag::Scenario1: return "scenario1";
    case ScenarioTag::Scenario2: return "scenario2";
    case ScenarioTag::Custom: return "custom";
  }
  return "?";
}

NodeRole node_role_from_string(const std::string& s) {
  if (s == "leader") return NodeRole::Leader;
  if (s == "repeater") return NodeRole::Repeater;
  if (s == "end_node") return NodeRole::EndNode;
  if (s == "leaf") return NodeRole::Leaf;
  throw ParameterError("role", "unknown node role '" + s + "'");
}

ScenarioTag scenario_from_string(const std::string& s) {
  if (s == "scenario1") return ScenarioTag::Scenario1;
  if (s == "scenario2") return ScenarioTag::Scenario2;
  if (s == "custom") return ScenarioTag::Custom;
  throw ParameterError("scenario", "unknown scenario tag '" + s + "'");
}

void validate(const LinkModelParams& p) {
  if (!(p.mu > 0.0 && p.mu <= 1.0)) throw ParameterError("mu", "must lie in (0, 1]");
  if (!(p.lambda > 0.0 && p.lambda <= 1.0)) throw ParameterError("lambda", "must lie in (0, 1]");
  if (!(p.delta > 0.0) || !std::isfinite(p.delta)) throw ParameterError("delta", "must be positive");
}

double link_probability(double d, const LinkModelParams& params) {
  validate(params);
  if (!(d >= 0.0)) throw ParameterError("distance", "must be non-negative");
  return params.mu * std::exp(-d / (params.delta * params.lambda));
}

// ---------------------------------------------------------------------------

NodeId NetworkTopology::add_node(NodeRole role, double x, double y) {
  const NodeId id = nodes_.size();
  nodes_.push_back(Node{id, role, x, y});
  adjacency_.emplace_back();
  return id;
}

void NetworkTopology::add_link(NodeId a, NodeId b, const LinkParams& params) {
  links_.push_back(Link{a, b, params});
  link_index_.emplace(key(a, b), links_.size() - 1);
  if (a < adjacency_.size() && b < adjacency_.size() && a != b) {
    for (auto [u, v] : {std::pair{a, b}, std::pair{b, a}}) {
      auto& adj = adjacency_[u];
      auto it = std::lower_bound(adj.begin(), adj.end(), v);
      if (it == adj.end() || *it != v) adj.insert(it, v);
    }
  }
}

const Link* NetworkTopology::find_link(NodeId a, NodeId b) const {
  auto it = link_index_.find(key(a, b));
  return it == link_index_.end() ? nullptr : &links_[it->second];
}

LinkParams& NetworkTopology::link_params(NodeId a, NodeId b) {
  auto it = link_index_.find(key(a, b));
  if (it == link_index_.end())
    throw PreconditionError("no link " + std::to_string(a) + "-" + std::to_string(b));
  return links_[it->second].params;
}

std::vector<NodeId> NetworkTopology::nodes_with_role(NodeRole role) const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_)
    if (n.role == role) out.push_back(n.id);
  return out;
}

std::optional<NodeId> NetworkTopology::leader_of(NodeId v) const {
  for (NodeId u : neighbors(v))
    if (nodes_[u].role == NodeRole::Leader) return u;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

std::vector<std::pair<int, int>> leader_pairs(int leaders, LeaderAdjacency adjacency) {
  if (adjacency == LeaderAdjacency::Auto)
    adjacency = leaders <= 3 ? LeaderAdjacency::Complete : LeaderAdjacency::Ring;
  std::vector<std::pair<int, int>> pairs;
  if (adjacency == LeaderAdjacency::Complete) {
    for (int i = 0; i < leaders; ++i)
      for (int j = i + 1; j < leaders; ++j) pairs.emplace_back(i, j);
  } else {
    for (int i = 0; i < leaders; ++i) {
      const int j = (i + 1) % leaders;
      if (leaders == 2 && i == 1) break;
      pairs.emplace_back(std::min(i, j), std::max(i, j));
    }
    std::sort(pairs.begin(), pairs.end());
  }
  return pairs;
}

NetworkTopology build_scenario1(const Scenario1Params& params, const LinkParams& link_defaults,
                                const LinkModelParams& model, std::uint64_t seed) {
  check_positive(params.leaders, 2, "N");
  check_positive(params.end_nodes_per_leader, 1, "M");
  check_positive(params.repeaters_per_pair, 0, "L");
  validate(model);
  Rng rng(seed);

  const int n = params.leaders;
  const int m = params.end_nodes_per_leader;
  const double pi = std::numbers::pi;
  NetworkTopology t(ScenarioTag::Scenario1);

  auto leader_xy = [&](int l) {
    const double ang = pi / 2 + 2 * pi * l / n;
    return std::pair{0.5 + 0.3 * std::cos(ang), 0.5 + 0.3 * std::sin(ang)};
  };
  for (int l = 0; l < n; ++l) {
    auto [x, y] = leader_xy(l);
    t.add_node(NodeRole::Leader, x, y);
  }
  for (int l = 0; l < n; ++l) {
    auto [lx, ly] = leader_xy(l);
    const double out = std::atan2(ly - 0.5, lx - 0.5);
    for (int k = 0; k < m; ++k) {
      const double ang = out + (m == 1 ? 0.0 : (k - (m - 1) / 2.0) * (pi / 2) / (m - 1));
      const NodeId e = t.add_node(NodeRole::EndNode, lx + 0.12 * std::cos(ang), ly + 0.12 * std::sin(ang));
      t.add_link(static_cast<NodeId>(l), e, link_defaults);
    }
  }
  for (auto [i, j] : leader_pairs(n, params.adjacency)) {
    auto [ix, iy] = leader_xy(i);
    auto [jx, jy] = leader_xy(j);
    NodeId prev = static_cast<NodeId>(i);
    const int reps = params.repeaters_per_pair;
    for (int k = 0; k < reps; ++k) {
      const double f = (k + 1.0) / (reps + 1.0);
      const NodeId r = t.add_node(NodeRole::Repeater, ix + f * (jx - ix), iy + f * (jy - iy));
      t.add_link(prev, r, link_defaults);
      prev = r;
    }
    t.add_link(prev, static_cast<NodeId>(j), link_defaults);
  }

  if (params.probabilistic_links) {
    // Random geometry for the distance-decay model; the skeleton stays as built.
    NetworkTopology placed(ScenarioTag::Scenario1);
    for (const auto& node : t.nodes()) {
      const double x = uniform01(rng);
      const double y = uniform01(rng);
      placed.add_node(node.role, x, y);
    }
    for (const auto& link : t.links()) placed.add_link(link.a, link.b, link.params);
    add_probabilistic_links(placed, model, link_defaults, rng);
    return placed;
  }
  return t;
}

// ---------------------------------------------------------------------------

Scenario2Layout scenario2_layout(const std::vector<int>& tree_sizes) {
  if (tree_sizes.size() < 2) throw ShapeError("scenario 2 needs at least two trees");
  for (int s : tree_sizes)
    if (s < 1) throw ShapeError("every tree needs at least one leaf");

  Scenario2Layout lay;
  NodeId next = 0;
  for (std::size_t t = 0; t < tree_sizes.size(); ++t) {
    const auto size = static_cast<NodeId>(tree_sizes[t]);
    std::vector<NodeId> chain;
    if (t == 0) {
      // source leaf first, then the leader, then the remaining leaves
      lay.source = next;
      chain.push_back(next++);
      lay.leaders.push_back(next++);
      for (NodeId k = 1; k < size; ++k) chain.push_back(next++);
    } else {
      lay.leaders.push_back(next++);
      for (NodeId k = 0; k < size; ++k) chain.push_back(next++);
      // tree 1: destination is the last id; its chain starts at the destination
      if (t == 1) std::reverse(chain.begin(), chain.end());
    }
    lay.leaves.push_back(std::move(chain));
  }
  lay.destination = lay.leaves[1].front();
  return lay;
}

std::map<std::pair<NodeId, NodeId>, HopWeight> reference_scenario2_weights() {
  return {
      {{0, 1}, {90, 0.4}},  {{0, 2}, {60, 0.7}},  {{1, 2}, {100, 0.3}}, {{2, 3}, {60, 0.8}},
      {{1, 3}, {60, 0.8}},  {{3, 4}, {90, 0.4}},  {{1, 4}, {80, 0.5}},  {{4, 5}, {70, 0.6}},
      {{1, 5}, {90, 0.4}},  {{1, 6}, {60, 0.9}},  {{6, 10}, {80, 0.5}}, {{9, 10}, {60, 0.7}},
      {{6, 9}, {70, 0.6}},  {{8, 9}, {100, 0.3}}, {{6, 8}, {90, 0.5}},  {{7, 8}, {60, 0.5}},
      {{6, 7}, {60, 0.7}},
  };
}

NetworkTopology build_scenario2(const Scenario2Params& params, std::uint64_t seed) {
  const Scenario2Layout lay = scenario2_layout(params.tree_sizes);
  if (!(params.cost_unit_us > 0.0)) throw ParameterError("cost_unit_us", "must be positive");
  Rng rng(seed);

  const bool reference = params.tree_sizes == std::vector<int>{5, 4};
  std::map<std::pair<NodeId, NodeId>, HopWeight> weights;
  if (reference) weights = reference_scenario2_weights();
  for (const auto& [k, w] : params.weights) weights[key(k.first, k.second)] = w;

  auto weight_for = [&](NodeId a, NodeId b) {
    auto it = weights.find(key(a, b));
    if (it != weights.end()) return it->second;
    // Unlisted edges draw from the reference label ranges: cost 60..100, payoff 0.3..0.8.
    const double cost = 60.0 + 10.0 * static_cast<double>(rng() % 5);
    const double payoff = 0.3 + 0.1 * static_cast<double>(rng() % 6);
    HopWeight w{cost, std::round(payoff * 10.0) / 10.0};
    weights.emplace(key(a, b), w);
    return w;
  };

  NetworkTopology t(ScenarioTag::Scenario2);
  const std::size_t total = [&] {
    std::size_t s = 0;
    for (int v : params.tree_sizes) s += static_cast<std::size_t>(v) + 1;
    return s;
  }();
  std::vector<std::pair<NodeRole, std::pair<double, double>>> placement(total);
  const std::size_t trees = params.tree_sizes.size();
  for (std::size_t tr = 0; tr < trees; ++tr) {
    const double cx = (tr + 0.5) / static_cast<double>(trees);
    placement[lay.leaders[tr]] = {NodeRole::Leader, {cx, 0.75}};
    const auto& chain = lay.leaves[tr];
    for (std::size_t k = 0; k < chain.size(); ++k) {
      const double spread = 0.8 / static_cast<double>(trees);
      const double x = cx - spread / 2 + spread * (k + 0.5) / static_cast<double>(chain.size());
      placement[chain[k]] = {NodeRole::Leaf, {x, 0.25}};
    }
  }
  for (const auto& [role, xy] : placement) t.add_node(role, xy.first, xy.second);

  auto make_link = [&](NodeId a, NodeId b) {
    if (t.find_link(a, b)) return;
    const HopWeight w = weight_for(a, b);
    LinkParams p = params.link_template;
    p.cost = w.cost;
    p.payoff = w.payoff;
    p.latency_us = w.cost * params.cost_unit_us;
    t.add_link(std::min(a, b), std::max(a, b), p);
  };

  for (std::size_t tr = 0; tr < trees; ++tr) {
    const NodeId leader = lay.leaders[tr];
    const auto& chain = lay.leaves[tr];
    for (std::size_t k = 0; k < chain.size(); ++k) {
      make_link(chain[k], leader);
      if (chain.size() < 2) continue;
      const NodeId sibling = k + 1 < chain.size() ? chain[k + 1] : chain[k - 1];
      make_link(chain[k], sibling);
      t.add_choice(ChoiceSet{chain[k], {leader, sibling}, 0});
    }
  }
  make_link(lay.leaders[0], lay.leaders[1]);

  if (params.probabilistic_links) {
    LinkParams extra = params.link_template;
    add_probabilistic_links(t, params.model, extra, rng);
  }
  std::vector<ChoiceSet> sorted = t.choices();
  std::sort(sorted.begin(), sorted.end(), [](const ChoiceSet& a, const ChoiceSet& b) { return a.node < b.node; });
  NetworkTopology out(ScenarioTag::Scenario2);
  for (const auto& n : t.nodes()) out.add_node(n.role, n.x, n.y);
  for (const auto& l : t.links()) out.add_link(l.a, l.b, l.params);
  for (const auto& c : sorted) out.add_choice(c);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Violation> validate(const NetworkTopology& topology) {
  std::vector<Violation> out;
  const auto& nodes = topology.nodes();
  const std::size_t n = nodes.size();
  auto link_name = [](const Link& l) { return "link " + std::to_string(l.a) + "-" + std::to_string(l.b); };

  for (std::size_t i = 0; i < n; ++i)
    if (nodes[i].id != i)
      out.push_back({"node " + std::to_string(i), "dense-ids", "node id does not match its position"});

  for (const auto& node : nodes) {
    const bool s1 = topology.scenario() == ScenarioTag::Scenario1;
    const bool s2 = topology.scenario() == ScenarioTag::Scenario2;
    if (s1 && node.role == NodeRole::Leaf)
      out.push_back({"node " + std::to_string(node.id), "scenario1-roles", "leaf role in a scenario 1 topology"});
    if (s2 && (node.role == NodeRole::Repeater || node.role == NodeRole::EndNode))
      out.push_back({"node " + std::to_string(node.id), "scenario2-roles", "scenario 2 allows only leaders and leaves"});
  }

  std::set<std::pair<NodeId, NodeId>> seen;
  std::size_t leader_links = 0;
  for (const auto& l : topology.links()) {
    const std::string name = link_name(l);
    if (l.a >= n || l.b >= n) {
      out.push_back({name, "endpoint-exists", "link references a missing node"});
      continue;
    }
    if (l.a == l.b) out.push_back({name, "no-self-loop", "link joins a node to itself"});
    if (!seen.insert(key(l.a, l.b)).second) out.push_back({name, "no-duplicate", "duplicate link"});
    const auto& p = l.params;
    if (!(p.latency_us > 0.0)) out.push_back({name, "latency-positive", "latency must be > 0"});
    if (!(p.coherence_us > 0.0)) out.push_back({name, "coherence-positive", "coherence time must be > 0"});
    if (!(p.latency_us < p.coherence_us))
      out.push_back({name, "usable-link", "latency must be below the coherence time"});
    if (!(p.decoherence_rate >= 0.0) || !std::isfinite(p.decoherence_rate))
      out.push_back({name, "decoherence-rate", "decoherence rate must be finite and >= 0"});
    if (!(p.gen_prob > 0.0 && p.gen_prob <= 1.0))
      out.push_back({name, "gen-prob", "generation probability must lie in (0, 1]"});
    if (!(p.payoff >= 0.0 && p.payoff <= 1.0)) out.push_back({name, "payoff-range", "payoff must lie in [0, 1]"});
    if (nodes[l.a].role == NodeRole::Leader && nodes[l.b].role == NodeRole::Leader) ++leader_links;
  }

  if (topology.scenario() == ScenarioTag::Scenario1) {
    for (const auto& node : nodes)
      if (node.role == NodeRole::EndNode && !topology.leader_of(node.id))
        out.push_back({"node " + std::to_string(node.id), "end-node-leader", "end node is not attached to a leader"});
  }

  if (topology.scenario() == ScenarioTag::Scenario2) {
    if (leader_links != 1)
      out.push_back({"topology", "single-leader-link",
                     "expected exactly one leader-leader link, found " + std::to_string(leader_links)});
    std::vector<std::optional<NodeId>> parent(n);
    for (const auto& c : topology.choices()) {
      const std::string name = "choice " + std::to_string(c.node);
      if (c.node >= n || c.options[0] >= n || c.options[1] >= n) {
        out.push_back({name, "choice-nodes", "choice references a missing node"});
        continue;
      }
      if (c.options[0] == c.options[1]) out.push_back({name, "choice-distinct", "options must differ"});
      if (c.current != 0 && c.current != 1) out.push_back({name, "choice-current", "current must be 0 or 1"});
      for (NodeId o : c.options)
        if (!topology.find_link(c.node, o)) out.push_back({name, "choice-link", "option has no link"});
      parent[c.node] = c.current_hop();
    }
    // The active next-hop graph must be a forest rooted at leaders.
    for (const auto& node : nodes) {
      if (node.role != NodeRole::Leaf) continue;
      std::optional<NodeId> cur = node.id;
      std::size_t steps = 0;
      while (cur && nodes[*cur].role != NodeRole::Leader && steps <= n) {
        auto next = parent[*cur];
        if (!next) next = topology.leader_of(*cur);
        cur = next;
        ++steps;
      }
      if (!cur || steps > n)
        out.push_back({"node " + std::to_string(node.id), "active-forest",
                       "active next hops do not lead to a leader without a cycle"});
    }
  }
  return out;
}

std::vector<NodeId> shortest_hop_path(const NetworkTopology& topology, NodeId a, NodeId b) {
  const std::size_t n = topology.node_count();
  if (a >= n || b >= n) throw PreconditionError("path endpoint out of range");
  std::vector<std::optional<NodeId>> prev(n);
  std::vector<bool> seen(n, false);
  std::deque<NodeId> q{a};
  seen[a] = true;
  while (!q.empty()) {
    const NodeId v = q.front();
    q.pop_front();
    if (v == b) break;
    for (NodeId u : topology.neighbors(v))
      if (!seen[u]) {
        seen[u] = true;
        prev[u] = v;
        q.push_back(u);
      }
  }
  if (!seen[b]) return {};
  std::vector<NodeId> path{b};
  while (path.back() != a) path.push_back(*prev[path.back()]);
  std::reverse(path.begin(), path.end());
  return path;
}

// ---------------------------------------------------------------------------

std::string to_json(const NetworkTopology& topology) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema"] = 1;
  j["scenario"] = to_string(topology.scenario());
  ordered_json nodes = ordered_json::array();
  for (const auto& n : topology.nodes())
    nodes.push_back(ordered_json{{"id", n.id}, {"role", to_string(n.role)}, {"x", n.x}, {"y", n.y}});
  j["nodes"] = std::move(nodes);
  ordered_json links = ordered_json::array();
  for (const auto& l : topology.links())
    links.push_back(ordered_json{{"a", l.a},
                                 {"b", l.b},
                                 {"latency_us", l.params.latency_us},
                                 {"coherence_us", l.params.coherence_us},
                                 {"decoherence_rate", l.params.decoherence_rate},
                                 {"gen_prob", l.params.gen_prob},
                                 {"cost", l.params.cost},
                                 {"payoff", l.params.payoff}});
  j["links"] = std::move(links);
  if (!topology.choices().empty()) {
    ordered_json choices = ordered_json::array();
    for (const auto& c : topology.choices())
      choices.push_back(ordered_json{{"node", c.node}, {"options", {c.options[0], c.options[1]}}, {"current", c.current}});
    j["choices"] = std::move(choices);
  }
  return j.dump(2) + "\n";
}

NetworkTopology topology_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError("topology", std::string("invalid JSON: ") + e.what());
  }
  try {
    if (j.at("schema").get<int>() != 1) throw ParameterError("schema", "unsupported topology schema");
    NetworkTopology t(scenario_from_string(j.value("scenario", std::string("custom"))));
    for (const auto& n : j.at("nodes")) {
      const NodeId id = t.add_node(node_role_from_string(n.at("role").get<std::string>()), n.at("x").get<double>(),
                                   n.at("y").get<double>());
      if (n.at("id").get<NodeId>() != id) throw ParameterError("nodes", "node ids must be dense and ordered");
    }
    for (const auto& l : j.at("links")) {
      LinkParams p;
      p.latency_us = l.at("latency_us").get<double>();
      p.coherence_us = l.at("coherence_us").get<double>();
      p.decoherence_rate = l.at("decoherence_rate").get<double>();
      p.gen_prob = l.at("gen_prob").get<double>();
      p.cost = l.at("cost").get<double>();
      p.payoff = l.at("payoff").get<double>();
      t.add_link(l.at("a").get<NodeId>(), l.at("b").get<NodeId>(), p);
    }
    if (j.contains("choices"))
      for (const auto& c : j.at("choices"))
        t.add_choice(ChoiceSet{c.at("node").get<NodeId>(),
                               {c.at("options").at(0).get<NodeId>(), c.at("options").at(1).get<NodeId>()},
                               c.at("current").get<int>()});
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError("topology", std::string("malformed topology document: ") + e.what());
  }
}

}  // namespace entangle

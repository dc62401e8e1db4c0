#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"

#include "entangle/errors.hpp"
#include "entangle/topology.hpp"

using namespace entangle;

namespace {

bool has_rule(const std::vector<Violation>& v, const std::string& rule) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.rule == rule; });
}

NetworkTopology default_scenario1(std::uint64_t seed = 1, bool probabilistic = false) {
  Scenario1Params p;
  p.probabilistic_links = probabilistic;
  return build_scenario1(p, LinkParams{}, LinkModelParams{}, seed);
}

}  // namespace

TEST_CASE("link probability decays exponentially with distance") {
  const LinkModelParams m{0.8, 0.5, 2.0};
  CHECK(link_probability(0.0, m) == doctest::Approx(0.8));
  CHECK(link_probability(1.0, m) == doctest::Approx(0.8 * std::exp(-1.0)));
  CHECK(link_probability(3.0, m) < link_probability(2.0, m));
}

TEST_CASE("link model parameters are range checked by name") {
  auto field_of = [](LinkModelParams p) {
    try {
      validate(p);
    } catch (const ParameterError& e) {
      return e.field();
    }
    return std::string();
  };
  CHECK(field_of({1.5, 0.5, 1.0}) == "mu");
  CHECK(field_of({0.0, 0.5, 1.0}) == "mu");
  CHECK(field_of({0.5, 0.0, 1.0}) == "lambda");
  CHECK(field_of({0.5, 0.5, -1.0}) == "delta");
  CHECK(field_of({1.0, 1.0, 1.0}).empty());
}

TEST_CASE("scenario 1 node and link counts") {
  // N leaders + N*M end nodes + pairs*L repeaters; links N*M + pairs*(L+1).
  const NetworkTopology t = default_scenario1();
  CHECK(t.node_count() == 21);
  CHECK(t.link_count() == 21);
  CHECK(t.nodes_with_role(NodeRole::Leader).size() == 3);
  CHECK(t.nodes_with_role(NodeRole::EndNode).size() == 12);
  CHECK(t.nodes_with_role(NodeRole::Repeater).size() == 6);
  CHECK(validate(t).empty());

  Scenario1Params ring;
  ring.leaders = 5;
  ring.end_nodes_per_leader = 2;
  ring.repeaters_per_pair = 1;
  const NetworkTopology r = build_scenario1(ring, LinkParams{}, LinkModelParams{}, 1);
  CHECK(leader_pairs(5, LeaderAdjacency::Auto).size() == 5);
  CHECK(r.node_count() == 5 + 10 + 5);
  CHECK(validate(r).empty());
  CHECK(leader_pairs(5, LeaderAdjacency::Complete).size() == 10);
}

TEST_CASE("scenario 1 shape errors name the parameter") {
  Scenario1Params p;
  p.leaders = 1;
  CHECK_THROWS_AS(build_scenario1(p, LinkParams{}, LinkModelParams{}, 1), ParameterError);
  p = Scenario1Params{};
  CHECK_THROWS_AS(build_scenario1(p, LinkParams{}, LinkModelParams{1.5, 0.5, 1.0}, 1), ParameterError);
}

TEST_CASE("end nodes hang off exactly one leader") {
  const NetworkTopology t = default_scenario1();
  for (NodeId e : t.nodes_with_role(NodeRole::EndNode)) {
    REQUIRE(t.leader_of(e).has_value());
    CHECK(t.node(*t.leader_of(e)).role == NodeRole::Leader);
    CHECK(t.degree(e) == 1);
  }
}

TEST_CASE("probabilistic links keep the skeleton and are seed-deterministic") {
  const NetworkTopology base = default_scenario1();
  const NetworkTopology a = default_scenario1(9, true);
  const NetworkTopology b = default_scenario1(9, true);
  CHECK(to_json(a) == to_json(b));
  CHECK(a.link_count() >= base.link_count());
  for (const Link& l : base.links()) CHECK(a.find_link(l.a, l.b) != nullptr);
  for (const Node& n : a.nodes()) {
    CHECK(n.x >= 0.0);
    CHECK(n.x < 1.0);
  }
  std::set<std::size_t> counts;
  for (std::uint64_t s = 1; s <= 10; ++s) counts.insert(default_scenario1(s, true).link_count());
  CHECK(counts.size() > 1);
}

TEST_CASE("validation reports each broken rule") {
  NetworkTopology t;
  const NodeId a = t.add_node(NodeRole::Leader, 0, 0);
  const NodeId b = t.add_node(NodeRole::Repeater, 1, 0);
  t.add_link(a, a, LinkParams{});
  t.add_link(a, b, LinkParams{});
  t.add_link(b, a, LinkParams{});
  LinkParams slow;
  slow.latency_us = 20000;
  t.add_link(b, 7, LinkParams{});
  const NodeId c = t.add_node(NodeRole::Repeater, 2, 0);
  t.add_link(b, c, slow);
  const auto v = validate(t);
  CHECK(has_rule(v, "no-self-loop"));
  CHECK(has_rule(v, "no-duplicate"));
  CHECK(has_rule(v, "endpoint-exists"));
  CHECK(has_rule(v, "usable-link"));

  NetworkTopology u;
  u.add_node(NodeRole::Leader, 0, 0);
  u.add_node(NodeRole::Repeater, 1, 0);
  LinkParams bad;
  bad.gen_prob = 0.0;
  bad.payoff = 1.5;
  bad.decoherence_rate = -1;
  u.add_link(0, 1, bad);
  const auto w = validate(u);
  CHECK(has_rule(w, "gen-prob"));
  CHECK(has_rule(w, "payoff-range"));
  CHECK(has_rule(w, "decoherence-rate"));
}

TEST_CASE("scenario 2 reference fixture") {
  const NetworkTopology t = build_scenario2(Scenario2Params{}, 1);
  CHECK(t.node_count() == 11);
  CHECK(validate(t).empty());
  const Scenario2Layout lay = scenario2_layout({5, 4});
  CHECK(lay.source == 0);
  CHECK(lay.destination == 10);
  CHECK(lay.leaders == std::vector<NodeId>{1, 6});

  const Link* l12 = t.find_link(1, 2);
  REQUIRE(l12);
  CHECK(l12->params.cost == 100);
  CHECK(l12->params.payoff == 0.3);
  const Link* l23 = t.find_link(2, 3);
  REQUIRE(l23);
  CHECK(l23->params.cost == 60);
  CHECK(l23->params.payoff == 0.8);
  CHECK(l23->params.latency_us == 60);

  int leader_links = 0;
  for (const Link& l : t.links())
    leader_links += t.node(l.a).role == NodeRole::Leader && t.node(l.b).role == NodeRole::Leader;
  CHECK(leader_links == 1);

  const auto& choices = t.choices();
  auto two = std::find_if(choices.begin(), choices.end(), [](const ChoiceSet& c) { return c.node == 2; });
  REQUIRE(two != choices.end());
  CHECK(two->options[0] == 1);
  CHECK(two->options[1] == 3);
  CHECK(two->current_hop() == 1);
  CHECK(std::is_sorted(choices.begin(), choices.end(),
                       [](const ChoiceSet& x, const ChoiceSet& y) { return x.node < y.node; }));
}

TEST_CASE("scenario 2 shapes") {
  CHECK_THROWS_AS(scenario2_layout({5}), ShapeError);
  CHECK_THROWS_AS(scenario2_layout({3, 0}), ShapeError);
  Scenario2Params minimal;
  minimal.tree_sizes = {1, 1};
  const NetworkTopology t = build_scenario2(minimal, 3);
  CHECK(t.node_count() == 4);
  CHECK(t.choices().empty());
  CHECK(validate(t).empty());
  Scenario2Params three;
  three.tree_sizes = {2, 3, 2};
  CHECK(validate(build_scenario2(three, 3)).empty());
}

TEST_CASE("shortest hop path") {
  const NetworkTopology t = build_scenario2(Scenario2Params{}, 1);
  CHECK(shortest_hop_path(t, 0, 10) == std::vector<NodeId>{0, 1, 6, 10});
  NetworkTopology split;
  split.add_node(NodeRole::Leader, 0, 0);
  split.add_node(NodeRole::Leader, 1, 0);
  CHECK(shortest_hop_path(split, 0, 1).empty());
}

TEST_CASE("topology JSON round-trips") {
  for (const NetworkTopology& t : {default_scenario1(4, true), build_scenario2(Scenario2Params{}, 2)}) {
    const std::string text = to_json(t);
    const NetworkTopology back = topology_from_json(text);
    CHECK(to_json(back) == text);
    CHECK(back.scenario() == t.scenario());
  }
  CHECK_THROWS_AS(topology_from_json("{not json"), ParameterError);
  CHECK_THROWS_AS(topology_from_json(R"({"schema": 2, "scenario": "Custom", "nodes": [], "links": []})"),
                  ParameterError);
}

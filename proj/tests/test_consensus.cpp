#include <algorithm>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "entangle/consensus.hpp"
#include "entangle/errors.hpp"

using namespace entangle;

namespace {

constexpr double kPi = std::numbers::pi;

NetworkTopology reference_trees() { return build_scenario2(Scenario2Params{}, 1); }

ConsensusConfig reference_config(ConsensusVariant v = ConsensusVariant::Classical) {
  const Scenario2Layout lay = scenario2_layout({5, 4});
  ConsensusConfig c;
  c.source = lay.source;
  c.destination = lay.destination;
  c.variant = v;
  c.gamma = kPi / 2;
  return c;
}

// Source 0 sees its leader 1 and sibling 2 at identical cost and payoff.
NetworkTopology tied_trees() {
  Scenario2Params p;
  p.tree_sizes = {2, 1};
  p.weights[{0, 1}] = HopWeight{80.0, 0.5};
  p.weights[{0, 2}] = HopWeight{80.0, 0.5};
  p.weights[{1, 2}] = HopWeight{60.0, 0.9};
  return build_scenario2(p, 1);
}

const Switch* find_switch(const std::vector<Switch>& s, NodeId node) {
  auto it = std::find_if(s.begin(), s.end(), [&](const Switch& x) { return x.node == node; });
  return it == s.end() ? nullptr : &*it;
}

}  // namespace

TEST_CASE("hop utility normalises cost by the largest option") {
  const UtilityWeights w;
  CHECK(hop_utility({100, 0.3}, w, 100) == doctest::Approx(-0.7));
  CHECK(hop_utility({60, 0.8}, w, 100) == doctest::Approx(0.2));
  CHECK(hop_utility({60, 0.8}, UtilityWeights{1.0, 0.0}, 100) == doctest::Approx(0.8));
  CHECK(hop_utility({60, 0.8}, UtilityWeights{0.0, 2.0}, 100) == doctest::Approx(-1.2));
  CHECK_THROWS_AS(validate(UtilityWeights{-1.0, 1.0}), ParameterError);
  CHECK_THROWS_AS(validate(UtilityWeights{1.0, -1.0}), ParameterError);
}

TEST_CASE("option estimates read the choice links") {
  const NetworkTopology t = reference_trees();
  const auto& c = t.choices();
  auto two = std::find_if(c.begin(), c.end(), [](const ChoiceSet& x) { return x.node == 2; });
  REQUIRE(two != c.end());
  const auto est = option_estimates(t, *two);
  CHECK(est[0].latency_cost == 100);
  CHECK(est[0].fidelity_payoff == 0.3);
  CHECK(est[1].latency_cost == 60);
  CHECK(est[1].fidelity_payoff == 0.8);
}

TEST_CASE("reference trees: first classical round") {
  const NetworkTopology t = reference_trees();
  const RoundResult r = classical_consensus_round(t, t.choices(), UtilityWeights{});

  const Switch* s0 = find_switch(r.switches, 0);
  REQUIRE(s0);
  CHECK(s0->from == 1);
  CHECK(s0->to == 2);
  CHECK_FALSE(s0->blocked);

  const Switch* s2 = find_switch(r.switches, 2);
  REQUIRE(s2);
  CHECK(s2->from == 1);
  CHECK(s2->to == 3);
  CHECK(s2->d_cost == doctest::Approx(-40.0));
  CHECK(s2->d_payoff == doctest::Approx(0.5));
  CHECK(s2->d_utility == doctest::Approx(0.9));

  const Switch* s5 = find_switch(r.switches, 5);
  REQUIRE(s5);
  CHECK(s5->blocked);
  for (const Switch& s : r.switches) CHECK((s.blocked || s.d_utility > 0.0));
  CHECK(std::is_sorted(r.switches.begin(), r.switches.end(),
                       [](const Switch& a, const Switch& b) { return a.node < b.node; }));
}

TEST_CASE("reference trees converge to a fixed point") {
  const NetworkTopology t = reference_trees();
  const ConsensusOutcome o = run_consensus(t, reference_config());
  CHECK(o.converged);
  CHECK(o.rounds == 2);
  CHECK(o.path == std::vector<NodeId>{0, 2, 3, 1, 6, 9, 10});
  CHECK(o.total_cost == doctest::Approx(path_cost(t, o.path)));
  CHECK(o.end_to_end_fidelity > 0.0);
  CHECK(o.end_to_end_fidelity <= 1.0);
  for (const Switch& s : o.trace.back().switches) CHECK(s.blocked);

  // Another round from the final state changes nothing.
  const RoundResult again = classical_consensus_round(t, o.final_state, UtilityWeights{});
  for (const Switch& s : again.switches) CHECK(s.blocked);
  for (std::size_t i = 0; i < o.final_state.size(); ++i) CHECK(again.state[i].current == o.final_state[i].current);
}

TEST_CASE("without ties the quantum variant agrees with the classical one") {
  const NetworkTopology t = reference_trees();
  const ConsensusOutcome c = run_consensus(t, reference_config());
  for (std::uint64_t seed : {1, 2, 3}) {
    ConsensusConfig q = reference_config(ConsensusVariant::Quantum);
    q.seed = seed;
    const ConsensusOutcome o = run_consensus(t, q);
    CHECK(o.path == c.path);
    CHECK(o.total_cost == c.total_cost);
    CHECK(o.rounds == c.rounds);
  }
}

TEST_CASE("accept and decline through the EWL game") {
  for (double d : {-1.0, -1e-3, 1e-3, 0.5, 2.0}) {
    CHECK(ewl_accept(d, 0.0) == (d > 0.0));
    CHECK(ewl_accept(d, kPi / 2) == (d > 0.0));
  }
}

TEST_CASE("ties are settled by coin flips") {
  const NetworkTopology t = tied_trees();
  ConsensusConfig cfg;
  cfg.source = 0;
  cfg.destination = 4;

  // Classical rounds never act on a tie.
  const RoundResult classical = classical_consensus_round(t, t.choices(), UtilityWeights{});
  CHECK(find_switch(classical.switches, 0) == nullptr);

  int switched = 0, kept = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Rng rng(seed);
    const RoundResult r = quantum_consensus_round(t, t.choices(), UtilityWeights{}, kPi / 2, 0.0, 1e-6, rng);
    const Switch* s = find_switch(r.switches, 0);
    if (s) {
      CHECK(s->coin);
      CHECK(s->d_utility == 0.0);
      ++switched;
    } else {
      ++kept;
    }
  }
  CHECK(switched > 0);
  CHECK(kept > 0);

  cfg.variant = ConsensusVariant::Quantum;
  cfg.gamma = kPi / 2;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    cfg.seed = seed;
    const ConsensusOutcome o = run_consensus(t, cfg);
    CHECK(o.converged);
    CHECK(o.path.front() == 0);
    CHECK(o.path.back() == 4);
  }
}

TEST_CASE("a tree without choices converges immediately") {
  Scenario2Params p;
  p.tree_sizes = {1, 1};
  const NetworkTopology t = build_scenario2(p, 1);
  const Scenario2Layout lay = scenario2_layout(p.tree_sizes);
  ConsensusConfig cfg;
  cfg.source = lay.source;
  cfg.destination = lay.destination;
  const ConsensusOutcome o = run_consensus(t, cfg);
  CHECK(o.converged);
  CHECK(o.rounds <= 1);
  CHECK(o.path.size() == 4);
}

TEST_CASE("invalid endpoints and unlinked trees") {
  const NetworkTopology t = reference_trees();
  ConsensusConfig cfg = reference_config();
  cfg.source = 1;  // a leader
  CHECK_THROWS_AS(run_consensus(t, cfg), PreconditionError);
  cfg = reference_config();
  cfg.destination = 2;  // same tree
  CHECK_THROWS_AS(run_consensus(t, cfg), PreconditionError);
  cfg = reference_config(ConsensusVariant::Quantum);
  cfg.gamma = 2.0;
  CHECK_THROWS_AS(run_consensus(t, cfg), ParameterError);

  Scenario2Params three;
  three.tree_sizes = {2, 2, 2};
  const NetworkTopology t3 = build_scenario2(three, 1);
  const Scenario2Layout lay = scenario2_layout(three.tree_sizes);
  ConsensusConfig far;
  far.source = lay.source;
  far.destination = lay.leaves[2][0];
  CHECK_THROWS_AS(run_consensus(t3, far), UnreachableError);
}

TEST_CASE("trace lines are one JSON object per round") {
  const ConsensusOutcome o = run_consensus(reference_trees(), reference_config());
  std::istringstream in(trace_jsonl(o));
  std::string line;
  int n = 0;
  bool saw_blocked = false;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("round").get<int>() == ++n);
    CHECK(j.contains("switches"));
    CHECK(j.contains("total_cost"));
    CHECK(j.contains("fidelity"));
    saw_blocked = saw_blocked || j.contains("blocked");
  }
  CHECK(n == o.rounds);
  CHECK(saw_blocked);
  const auto out = nlohmann::json::parse(to_json(o));
  for (const char* key : {"path", "total_cost", "end_to_end_fidelity", "converged", "rounds", "switches"})
    CHECK(out.contains(key));
}

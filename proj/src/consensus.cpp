#include "entangle/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "json.hpp"

#include "entangle/errors.hpp"
#include "entangle/quantum.hpp"
#include "entangle/simulation.hpp"

namespace entangle {
namespace {

// Differences of decimal link labels, cleaned of binary noise (0.8 - 0.3 -> 0.5).
double tidy(double x) { return std::round(x * 1e12) / 1e12; }

const ChoiceSet* find_choice(const std::vector<ChoiceSet>& state, NodeId v) {
  for (const auto& c : state)
    if (c.node == v) return &c;
  return nullptr;
}

// True when pointing `node` at `to` would let the next-hop chain return to `node`.
bool closes_cycle(const std::vector<ChoiceSet>& state, NodeId node, NodeId to) {
  NodeId cur = to;
  for (std::size_t steps = 0; steps <= state.size(); ++steps) {
    if (cur == node) return true;
    const ChoiceSet* c = find_choice(state, cur);
    if (!c) return false;
    cur = c->current_hop();
  }
  return true;
}

struct Evaluation {
  double d_utility = 0.0;
  Switch proposal;
};

Evaluation evaluate(const NetworkTopology& topology, const ChoiceSet& c, const UtilityWeights& w) {
  const auto est = option_estimates(topology, c);
  const double max_cost = std::max(est[0].latency_cost, est[1].latency_cost);
  const auto cur = static_cast<std::size_t>(c.current);
  const std::size_t alt = 1 - cur;
  Evaluation e;
  e.d_utility = hop_utility(est[alt], w, max_cost) - hop_utility(est[cur], w, max_cost);
  e.proposal.node = c.node;
  e.proposal.from = c.current_hop();
  e.proposal.to = c.alternative_hop();
  e.proposal.d_cost = tidy(est[alt].latency_cost - est[cur].latency_cost);
  e.proposal.d_payoff = tidy(est[alt].fidelity_payoff - est[cur].fidelity_payoff);
  e.proposal.d_utility = e.d_utility;
  return e;
}

// Applies `sw` to `next` unless it closes a cycle; records it either way.
void apply(std::vector<ChoiceSet>& next, Switch sw, RoundResult& out) {
  if (closes_cycle(next, sw.node, sw.to)) {
    sw.blocked = true;
  } else {
    for (auto& c : next)
      if (c.node == sw.node) c.current = 1 - c.current;
  }
  out.switches.push_back(sw);
}

template <typename Decide>
RoundResult round_impl(const NetworkTopology& topology, const std::vector<ChoiceSet>& state, const UtilityWeights& w,
                       Decide decide) {
  validate(w);
  std::vector<ChoiceSet> snapshot = state;
  std::sort(snapshot.begin(), snapshot.end(), [](const ChoiceSet& a, const ChoiceSet& b) { return a.node < b.node; });
  RoundResult out;
  out.state = snapshot;
  for (const auto& c : snapshot) {
    Evaluation e = evaluate(topology, c, w);
    if (decide(e)) apply(out.state, e.proposal, out);
  }
  return out;
}

}  // namespace

void validate(const UtilityWeights& w) {
  if (!(w.fidelity >= 0.0) || !std::isfinite(w.fidelity)) throw ParameterError("w_f", "must be >= 0");
  if (!(w.cost >= 0.0) || !std::isfinite(w.cost)) throw ParameterError("w_c", "must be >= 0");
  if (w.fidelity == 0.0 && w.cost == 0.0) throw ParameterError("w_f", "weights must not both be zero");
}

double hop_utility(const HopEstimate& est, const UtilityWeights& w, double max_cost) {
  const double normalized = max_cost > 0.0 ? est.latency_cost / max_cost : 0.0;
  return w.fidelity * est.fidelity_payoff - w.cost * normalized;
}

std::array<HopEstimate, 2> option_estimates(const NetworkTopology& topology, const ChoiceSet& choice) {
  std::array<HopEstimate, 2> out;
  for (std::size_t k = 0; k < 2; ++k) {
    const Link* l = topology.find_link(choice.node, choice.options[k]);
    if (!l)
      throw PreconditionError("choice of node " + std::to_string(choice.node) + " names a missing link to " +
                              std::to_string(choice.options[k]));
    out[k] = HopEstimate{l->params.cost, l->params.payoff};
  }
  return out;
}

const char* to_string(ConsensusVariant v) { return v == ConsensusVariant::Classical ? "classical" : "quantum"; }

ConsensusVariant consensus_variant_from_string(const std::string& s) {
  if (s == "classical") return ConsensusVariant::Classical;
  if (s == "quantum") return ConsensusVariant::Quantum;
  throw ParameterError("variant", "expected 'classical' or 'quantum', got '" + s + "'");
}

bool ewl_accept(double d_utility, double gamma) {
  using quantum::SingleQubitUnitary;
  std::vector<SingleQubitUnitary> moves = {{std::numbers::pi, 0.0}, {0.0, 0.0}};  // decline, accept
  if (gamma > 0.0) moves.push_back({0.0, std::numbers::pi / 2});
  quantum::PayoffMatrix payoffs = quantum::PayoffMatrix::Zero();
  payoffs.row(0).setConstant(d_utility);

  const std::size_t m = moves.size();
  std::vector<quantum::EwlResult> table(m * m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) table[a * m + b] = quantum::ewl_game(gamma, moves[a], moves[b], payoffs);

  const quantum::EwlResult* chosen = nullptr;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      const auto& r = table[a * m + b];
      bool nash = true;
      for (std::size_t d = 0; d < m && nash; ++d)
        nash = table[d * m + b].payoff_a <= r.payoff_a + 1e-12 && table[a * m + d].payoff_b <= r.payoff_b + 1e-12;
      if (nash && (!chosen || r.payoff_a + r.payoff_b > chosen->payoff_a + chosen->payoff_b + 1e-12)) chosen = &r;
    }
  return chosen && chosen->outcome_probabilities[0] > 0.5;
}

RoundResult classical_consensus_round(const NetworkTopology& topology, const std::vector<ChoiceSet>& state,
                                      const UtilityWeights& w) {
  return round_impl(topology, state, w, [](const Evaluation& e) { return e.d_utility > 0.0; });
}

RoundResult quantum_consensus_round(const NetworkTopology& topology, const std::vector<ChoiceSet>& state,
                                    const UtilityWeights& w, double gamma, double coin_angle, double tie_epsilon,
                                    Rng& rng) {
  if (!(tie_epsilon >= 0.0)) throw ParameterError("tie_epsilon", "must be >= 0");
  return round_impl(topology, state, w, [&](Evaluation& e) {
    if (std::abs(e.d_utility) <= tie_epsilon) {
      const quantum::CoinFlip flip = quantum::coin_flip_consensus(rng, coin_angle);
      e.proposal.coin = true;
      return flip.agree && flip.bit_a == 1;
    }
    return e.d_utility > 0.0 && ewl_accept(e.d_utility, gamma);
  });
}

std::vector<NodeId> consensus_path(const NetworkTopology& topology, const std::vector<ChoiceSet>& state,
                                   NodeId source, NodeId destination) {
  auto climb = [&](NodeId start) {
    std::vector<NodeId> up{start};
    NodeId cur = start;
    while (topology.node(cur).role != NodeRole::Leader) {
      if (up.size() > topology.node_count()) throw UnreachableError("next-hop pointers form a cycle");
      const ChoiceSet* c = find_choice(state, cur);
      std::optional<NodeId> next = c ? std::optional<NodeId>(c->current_hop()) : topology.leader_of(cur);
      if (!next) throw UnreachableError("node " + std::to_string(cur) + " has no route to a leader");
      cur = *next;
      up.push_back(cur);
    }
    return up;
  };
  std::vector<NodeId> path = climb(source);
  std::vector<NodeId> down = climb(destination);
  if (path.back() != down.back() && !topology.find_link(path.back(), down.back()))
    throw UnreachableError("leaders " + std::to_string(path.back()) + " and " + std::to_string(down.back()) +
                           " are not linked");
  if (path.back() == down.back()) down.pop_back();
  path.insert(path.end(), down.rbegin(), down.rend());
  const std::set<NodeId> unique(path.begin(), path.end());
  if (unique.size() != path.size()) throw UnreachableError("source and destination routes overlap");
  return path;
}

double path_cost(const NetworkTopology& topology, const std::vector<NodeId>& path) {
  double c = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Link* l = topology.find_link(path[i], path[i + 1]);
    if (!l) throw PreconditionError("path uses a missing link");
    c += l->params.cost;
  }
  return c;
}

ConsensusOutcome run_consensus(const NetworkTopology& topology, const ConsensusConfig& cfg) {
  validate(cfg.weights);
  const std::size_t n = topology.node_count();
  if (cfg.source >= n || cfg.destination >= n) throw PreconditionError("endpoint out of range");
  if (cfg.source == cfg.destination) throw PreconditionError("source and destination must differ");
  for (NodeId v : {cfg.source, cfg.destination})
    if (topology.node(v).role != NodeRole::Leaf)
      throw PreconditionError("node " + std::to_string(v) + " is not a leaf");
  const auto la = topology.leader_of(cfg.source);
  const auto lb = topology.leader_of(cfg.destination);
  if (la && lb && *la == *lb) throw PreconditionError("source and destination share a tree");
  if (cfg.variant == ConsensusVariant::Quantum) {
    if (!(cfg.gamma >= 0.0 && cfg.gamma <= std::numbers::pi / 2 + 1e-12))
      throw ParameterError("gamma", "must lie in [0, pi/2]");
  }
  const int max_rounds = cfg.max_rounds > 0 ? cfg.max_rounds : static_cast<int>(2 * n);

  const SimConfig nominal;
  auto snapshot = [&](int round, std::vector<Switch> switches, const std::vector<ChoiceSet>& state) {
    ConsensusRound r;
    r.round = round;
    r.switches = std::move(switches);
    const auto path = consensus_path(topology, state, cfg.source, cfg.destination);
    r.total_cost = path_cost(topology, path);
    r.fidelity = nominal_path_fidelity(topology, path, nominal, true);
    return r;
  };

  ConsensusOutcome out;
  std::vector<ChoiceSet> state = topology.choices();
  consensus_path(topology, state, cfg.source, cfg.destination);  // reachability up front
  Rng rng(cfg.seed);
  for (int r = 1; r <= max_rounds; ++r) {
    RoundResult res = cfg.variant == ConsensusVariant::Classical
                          ? classical_consensus_round(topology, state, cfg.weights)
                          : quantum_consensus_round(topology, state, cfg.weights, cfg.gamma, cfg.coin_angle,
                                                    cfg.tie_epsilon, rng);
    state = std::move(res.state);
    std::size_t applied = 0;
    for (const auto& s : res.switches)
      if (!s.blocked) {
        out.switches.push_back(s);
        ++applied;
      }
    out.trace.push_back(snapshot(r, std::move(res.switches), state));
    out.rounds = r;
    if (applied == 0) {
      out.converged = true;
      break;
    }
  }
  out.final_state = state;
  out.path = consensus_path(topology, state, cfg.source, cfg.destination);
  out.total_cost = path_cost(topology, out.path);
  out.end_to_end_fidelity = nominal_path_fidelity(topology, out.path, nominal, true);
  return out;
}

namespace {

nlohmann::ordered_json switch_json(const Switch& s) {
  nlohmann::ordered_json j{{"node", s.node}, {"from", s.from}, {"to", s.to}, {"d_cost", s.d_cost},
                           {"d_payoff", s.d_payoff}};
  if (s.coin) j["coin"] = true;
  return j;
}

nlohmann::ordered_json round_json(const ConsensusRound& r) {
  nlohmann::ordered_json sw = nlohmann::ordered_json::array();
  nlohmann::ordered_json blocked = nlohmann::ordered_json::array();
  for (const auto& s : r.switches) (s.blocked ? blocked : sw).push_back(switch_json(s));
  nlohmann::ordered_json j{{"round", r.round}, {"switches", std::move(sw)}, {"total_cost", r.total_cost},
                           {"fidelity", r.fidelity}};
  if (!blocked.empty()) j["blocked"] = std::move(blocked);
  return j;
}

}  // namespace

std::string to_json(const ConsensusOutcome& o) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["path"] = o.path;
  j["total_cost"] = o.total_cost;
  j["end_to_end_fidelity"] = o.end_to_end_fidelity;
  j["converged"] = o.converged;
  j["rounds"] = o.rounds;
  ordered_json sw = ordered_json::array();
  for (const auto& s : o.switches) sw.push_back(switch_json(s));
  j["switches"] = std::move(sw);
  ordered_json choices = ordered_json::array();
  for (const auto& c : o.final_state)
    choices.push_back({{"node", c.node}, {"options", {c.options[0], c.options[1]}}, {"current", c.current}});
  j["final_choices"] = std::move(choices);
  return j.dump(2) + "\n";
}

std::string trace_jsonl(const ConsensusOutcome& o) {
  std::string out;
  for (const auto& r : o.trace) out += round_json(r).dump() + "\n";
  return out;
}

}  // namespace entangle

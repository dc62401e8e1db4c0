#include "entangle/config.hpp"

#include <cmath>
#include <set>

#include "json.hpp"

#include "entangle/errors.hpp"

namespace entangle {
namespace {

using nlohmann::ordered_json;

// Reads known keys from one JSON object and rejects the rest.
class Section {
 public:
  Section(const ordered_json& parent, const std::string& name) : path_(name) {
    if (!parent.contains(name)) return;
    j_ = &parent.at(name);
    if (!j_->is_object()) throw ParameterError(name, "must be an object");
  }
  explicit Section(const ordered_json& root) : j_(&root) {
    if (!root.is_object()) throw ParameterError("config", "top level must be an object");
  }

  template <typename T>
  void get(const std::string& key, T& dst) {
    known_.insert(key);
    if (!j_ || !j_->contains(key)) return;
    try {
      dst = j_->at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ParameterError(key, "has the wrong type in " + where());
    }
  }

  void get_optional(const std::string& key, std::optional<NodeId>& dst) {
    known_.insert(key);
    if (!j_ || !j_->contains(key)) return;
    NodeId v = 0;
    get(key, v);
    dst = v;
  }

  void finish() const {
    if (!j_) return;
    for (const auto& [key, value] : j_->items())
      if (!known_.count(key)) throw ParameterError(path_.empty() ? key : path_ + "." + key, "unknown config key");
  }

  void mark(const std::string& key) { known_.insert(key); }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const ordered_json* j_ = nullptr;
  std::string path_;
  std::set<std::string> known_;
};

void read_link(const ordered_json& root, const std::string& name, LinkParams& p) {
  Section s(root, name);
  s.get("latency_us", p.latency_us);
  s.get("coherence_us", p.coherence_us);
  s.get("decoherence_rate", p.decoherence_rate);
  s.get("gen_prob", p.gen_prob);
  s.get("cost", p.cost);
  s.get("payoff", p.payoff);
  s.finish();
}

ordered_json link_json(const LinkParams& p) {
  return {{"latency_us", p.latency_us}, {"coherence_us", p.coherence_us}, {"decoherence_rate", p.decoherence_rate},
          {"gen_prob", p.gen_prob},     {"cost", p.cost},                 {"payoff", p.payoff}};
}

void validate_link(const LinkParams& p) {
  if (!(p.latency_us > 0.0)) throw ParameterError("latency_us", "must be positive");
  if (!(p.coherence_us > p.latency_us)) throw ParameterError("coherence_us", "must exceed latency_us");
  if (!(p.decoherence_rate >= 0.0) || !std::isfinite(p.decoherence_rate))
    throw ParameterError("decoherence_rate", "must be finite and >= 0");
  if (!(p.gen_prob > 0.0 && p.gen_prob <= 1.0)) throw ParameterError("gen_prob", "must lie in (0, 1]");
  if (!(p.cost >= 0.0)) throw ParameterError("cost", "must be >= 0");
  if (!(p.payoff >= 0.0 && p.payoff <= 1.0)) throw ParameterError("payoff", "must lie in [0, 1]");
}

const char* adjacency_name(LeaderAdjacency a) {
  switch (a) {
    case LeaderAdjacency::Auto: return "auto";
    case LeaderAdjacency::Complete: return "complete";
    case LeaderAdjacency::Ring: return "ring";
  }
  return "auto";
}

LeaderAdjacency adjacency_from(const std::string& s) {
  for (auto a : {LeaderAdjacency::Auto, LeaderAdjacency::Complete, LeaderAdjacency::Ring})
    if (s == adjacency_name(a)) return a;
  throw ParameterError("adjacency", "expected auto, complete or ring");
}

NodeId first_end_node(const NetworkTopology& t, NodeId leader, const char* field) {
  if (leader < t.node_count())
    for (NodeId v : t.neighbors(leader))
      if (t.node(v).role == NodeRole::EndNode) return v;
  throw ParameterError(field, "no default endpoint in this topology; set it explicitly");
}

}  // namespace

void validate(const RunConfig& c) {
  if (c.scenario != 1 && c.scenario != 2) throw ParameterError("scenario", "must be 1 or 2");
  if (c.out.empty()) throw ParameterError("out", "must not be empty");
  if (c.scenario1.leaders < 2) throw ParameterError("leaders", "must be >= 2");
  if (c.scenario1.end_nodes_per_leader < 1) throw ParameterError("end_nodes_per_leader", "must be >= 1");
  if (c.scenario1.repeaters_per_pair < 0) throw ParameterError("repeaters_per_pair", "must be >= 0");
  if (c.tree_sizes.size() < 2) throw ParameterError("tree_sizes", "needs at least two trees");
  for (int s : c.tree_sizes)
    if (s < 1) throw ParameterError("tree_sizes", "every tree needs at least one leaf");
  if (!(c.cost_unit_us > 0.0)) throw ParameterError("cost_unit_us", "must be positive");
  validate(c.link_model);
  validate_link(c.link_defaults);
  validate_link(c.tree_link);

  consensus_variant_from_string(c.variant);
  if (!(c.gamma >= 0.0 && c.gamma <= std::numbers::pi / 2 + 1e-12))
    throw ParameterError("gamma", "must lie in [0, pi/2]");
  if (!(c.target_throughput > 0.0)) throw ParameterError("target_throughput", "must be positive");
  if (!(c.hop_cost >= 0.0)) throw ParameterError("hop_cost", "must be >= 0");
  if (!(c.attempt_rate_hz > 0.0)) throw ParameterError("attempt_rate_hz", "must be positive");
  payoff_split_from_string(c.payoff_split);
  if (!(c.tie_epsilon >= 0.0)) throw ParameterError("tie_epsilon", "must be >= 0");
  if (!(c.coin_angle >= 0.0 && c.coin_angle <= std::numbers::pi / 2 + 1e-12))
    throw ParameterError("coin_angle", "must lie in [0, pi/2]");
  if (c.max_rounds < 0) throw ParameterError("max_rounds", "must be >= 0");
  validate(c.weights);
  validate(sim_config(c));

  if (c.node_counts.empty()) throw ParameterError("node_counts", "must not be empty");
  for (std::size_t i = 0; i < c.node_counts.size(); ++i) {
    if (c.node_counts[i] < 2) throw ParameterError("node_counts", "every count must be >= 2");
    if (i && c.node_counts[i] <= c.node_counts[i - 1]) throw ParameterError("node_counts", "must be ascending");
  }
  if (c.regimes.empty()) throw ParameterError("regimes", "must not be empty");
  for (const auto& r : c.regimes) regime_from_string(r);
  if (c.rates.empty()) throw ParameterError("rates", "must not be empty");
  for (std::size_t i = 0; i < c.rates.size(); ++i) {
    if (!(c.rates[i] >= 0.0) || !std::isfinite(c.rates[i])) throw ParameterError("rates", "must be finite and >= 0");
    if (i && c.rates[i] <= c.rates[i - 1]) throw ParameterError("rates", "must be ascending");
  }
}

RunConfig parse_run_config(const std::string& text) {
  ordered_json root;
  try {
    root = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParameterError("config", std::string("invalid JSON: ") + e.what());
  }
  RunConfig c;
  Section top(root);
  top.get("scenario", c.scenario);
  top.get("seed", c.seed);
  top.get("out", c.out);
  for (const char* name : {"topology", "link_model", "link_defaults", "tree_link", "game", "weights", "sim", "sweep"})
    top.mark(name);
  top.finish();

  Section topo(root, "topology");
  topo.get("leaders", c.scenario1.leaders);
  topo.get("end_nodes_per_leader", c.scenario1.end_nodes_per_leader);
  topo.get("repeaters_per_pair", c.scenario1.repeaters_per_pair);
  std::string adjacency = adjacency_name(c.scenario1.adjacency);
  topo.get("adjacency", adjacency);
  c.scenario1.adjacency = adjacency_from(adjacency);
  topo.get("probabilistic_links", c.scenario1.probabilistic_links);
  topo.get("tree_sizes", c.tree_sizes);
  topo.get("cost_unit_us", c.cost_unit_us);
  topo.finish();

  Section model(root, "link_model");
  model.get("mu", c.link_model.mu);
  model.get("lambda", c.link_model.lambda);
  model.get("delta", c.link_model.delta);
  model.finish();

  read_link(root, "link_defaults", c.link_defaults);
  read_link(root, "tree_link", c.tree_link);

  Section game(root, "game");
  game.get("variant", c.variant);
  game.get("gamma", c.gamma);
  game.get_optional("source", c.source);
  game.get_optional("destination", c.destination);
  game.get("target_throughput", c.target_throughput);
  game.get("hop_cost", c.hop_cost);
  game.get("attempt_rate_hz", c.attempt_rate_hz);
  game.get("payoff_split", c.payoff_split);
  game.get("tie_epsilon", c.tie_epsilon);
  game.get("coin_angle", c.coin_angle);
  game.get("max_rounds", c.max_rounds);
  game.finish();

  Section weights(root, "weights");
  weights.get("w_f", c.weights.fidelity);
  weights.get("w_c", c.weights.cost);
  weights.finish();

  Section sim(root, "sim");
  sim.get("sync_step_us", c.sync_step_us);
  sim.get("qubit_lifetime_us", c.qubit_lifetime_us);
  sim.get("trials", c.trials);
  sim.finish();

  Section sweep(root, "sweep");
  sweep.get("node_counts", c.node_counts);
  sweep.get("regimes", c.regimes);
  sweep.get("rates", c.rates);
  sweep.finish();

  validate(c);
  return c;
}

std::string to_json(const RunConfig& c) {
  ordered_json game{{"variant", c.variant}, {"gamma", c.gamma}};
  if (c.source) game["source"] = *c.source;
  if (c.destination) game["destination"] = *c.destination;
  game["target_throughput"] = c.target_throughput;
  game["hop_cost"] = c.hop_cost;
  game["attempt_rate_hz"] = c.attempt_rate_hz;
  game["payoff_split"] = c.payoff_split;
  game["tie_epsilon"] = c.tie_epsilon;
  game["coin_angle"] = c.coin_angle;
  game["max_rounds"] = c.max_rounds;

  ordered_json j;
  j["scenario"] = c.scenario;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["topology"] = {{"leaders", c.scenario1.leaders},
                   {"end_nodes_per_leader", c.scenario1.end_nodes_per_leader},
                   {"repeaters_per_pair", c.scenario1.repeaters_per_pair},
                   {"adjacency", adjacency_name(c.scenario1.adjacency)},
                   {"probabilistic_links", c.scenario1.probabilistic_links},
                   {"tree_sizes", c.tree_sizes},
                   {"cost_unit_us", c.cost_unit_us}};
  j["link_model"] = {{"mu", c.link_model.mu}, {"lambda", c.link_model.lambda}, {"delta", c.link_model.delta}};
  j["link_defaults"] = link_json(c.link_defaults);
  j["tree_link"] = link_json(c.tree_link);
  j["game"] = std::move(game);
  j["weights"] = {{"w_f", c.weights.fidelity}, {"w_c", c.weights.cost}};
  j["sim"] = {{"sync_step_us", c.sync_step_us}, {"qubit_lifetime_us", c.qubit_lifetime_us}, {"trials", c.trials}};
  j["sweep"] = {{"node_counts", c.node_counts}, {"regimes", c.regimes}, {"rates", c.rates}};
  return j.dump(2) + "\n";
}

Scenario2Params scenario2_params(const RunConfig& c) {
  Scenario2Params p;
  p.tree_sizes = c.tree_sizes;
  p.cost_unit_us = c.cost_unit_us;
  p.link_template = c.tree_link;
  p.probabilistic_links = c.scenario1.probabilistic_links;
  p.model = c.link_model;
  return p;
}

NetworkTopology build_topology(const RunConfig& c) {
  if (c.scenario == 1) return build_scenario1(c.scenario1, c.link_defaults, c.link_model, c.seed);
  return build_scenario2(scenario2_params(c), c.seed);
}

SimConfig sim_config(const RunConfig& c) {
  SimConfig s;
  s.sync_step_us = c.sync_step_us;
  s.qubit_lifetime_us = c.qubit_lifetime_us;
  s.trials = c.trials;
  s.seed = c.seed;
  return s;
}

CoalitionGameConfig coalition_config(const RunConfig& c, const NetworkTopology& t) {
  CoalitionGameConfig g;
  g.source = c.source ? *c.source : first_end_node(t, 0, "source");
  g.destination = c.destination ? *c.destination : first_end_node(t, 1, "destination");
  g.target_throughput = c.target_throughput;
  g.hop_cost = c.hop_cost;
  g.attempt_rate_hz = c.attempt_rate_hz;
  g.payoff_split = payoff_split_from_string(c.payoff_split);
  return g;
}

ConsensusConfig consensus_config(const RunConfig& c, const NetworkTopology& t) {
  ConsensusConfig k;
  if (!c.source || !c.destination) {
    const Scenario2Layout lay = scenario2_layout(c.tree_sizes);
    k.source = lay.source;
    k.destination = lay.destination;
  }
  if (c.source) k.source = *c.source;
  if (c.destination) k.destination = *c.destination;
  if (k.source >= t.node_count() || k.destination >= t.node_count())
    throw ParameterError("source", "endpoint is not a node of the topology");
  k.weights = c.weights;
  k.variant = consensus_variant_from_string(c.variant);
  k.gamma = c.gamma;
  k.coin_angle = c.coin_angle;
  k.tie_epsilon = c.tie_epsilon;
  k.max_rounds = c.max_rounds;
  k.seed = c.seed;
  return k;
}

}  // namespace entangle

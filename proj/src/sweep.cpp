#include "entangle/sweep.hpp"

#include <algorithm>
#include <cstdio>
#include <tuple>

#include "json.hpp"

#include "entangle/errors.hpp"

namespace entangle {
namespace {

void check_ascending(const std::vector<double>& xs, const char* field) {
  if (xs.empty()) throw ParameterError(field, "must not be empty");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) throw ParameterError(field, "must be strictly ascending");
}

void add_cells(SweepResult& out, double x, Regime regime, const std::vector<TrialMetrics>& trials) {
  for (const auto& [metric, summary] : aggregate(trials)) out.cells.push_back(SweepCell{x, regime, metric, summary});
}

void finish(SweepResult& out) {
  std::sort(out.cells.begin(), out.cells.end(), [](const SweepCell& a, const SweepCell& b) {
    return std::make_tuple(a.x, std::string(to_string(a.regime)), a.metric) <
           std::make_tuple(b.x, std::string(to_string(b.regime)), b.metric);
  });
}

NodeId first_end_node(const NetworkTopology& t, NodeId leader) {
  for (NodeId v : t.neighbors(leader))
    if (t.node(v).role == NodeRole::EndNode) return v;
  throw ShapeError("leader " + std::to_string(leader) + " has no end node");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

const SweepCell& SweepResult::at(double x, Regime regime, const std::string& metric) const {
  for (const auto& c : cells)
    if (c.x == x && c.regime == regime && c.metric == metric) return c;
  throw PreconditionError("no sweep cell for x=" + fmt(x) + " regime=" + to_string(regime) + " metric=" + metric);
}

SweepResult sweep_nodes(const SimConfig& base, const std::vector<int>& counts, const std::vector<Regime>& regimes,
                        std::uint64_t seed, const NodeSweepOptions& options) {
  validate(base);
  if (regimes.empty()) throw ParameterError("regimes", "must not be empty");
  std::vector<double> xs(counts.begin(), counts.end());
  check_ascending(xs, "node_counts");
  for (int n : counts)
    if (n < 2) throw ShapeError("node count must be >= 2, got " + std::to_string(n));

  SweepResult out;
  out.kind = "nodes";
  out.x_values = xs;
  for (int n : counts) {
    Scenario1Params sp;
    sp.leaders = 2;
    sp.end_nodes_per_leader = 4;
    sp.repeaters_per_pair = n - 2;
    sp.probabilistic_links = options.probabilistic_links;
    const NetworkTopology topo = build_scenario1(sp, options.link_defaults, options.model, seed);
    CoalitionGameConfig game = options.game;
    game.source = first_end_node(topo, 0);
    game.destination = first_end_node(topo, 1);

    std::vector<NodeId> classical_path, quantum_path;
    auto classical = [&]() -> const std::vector<NodeId>& {
      if (classical_path.empty()) classical_path = classical_coalition_form(game, topo, seed).path;
      return classical_path;
    };
    for (Regime regime : regimes) {
      std::vector<NodeId> path;
      switch (regime) {
        case Regime::NoGameClassicalNet:
          path = shortest_hop_path(topo, game.source, game.destination);
          break;
        case Regime::ClassicalGameClassicalNet:
        case Regime::ClassicalGameQuantumNet:
          path = classical();
          break;
        case Regime::QuantumGameQuantumNet:
          if (n <= 2) {
            path = classical();
          } else {
            if (quantum_path.empty()) quantum_path = quantum_coalition_form(game, topo, {}, options.gamma, seed).path;
            path = quantum_path;
          }
          break;
      }
      if (path.empty()) throw UnreachableError("no path for node count " + std::to_string(n));
      SimConfig cfg = base;
      cfg.regime = regime;
      cfg.seed = seed;
      add_cells(out, n, regime, run_trials(topo, path, cfg));
    }
  }
  finish(out);
  return out;
}

Regime regime_for(ConsensusVariant v) {
  return v == ConsensusVariant::Classical ? Regime::ClassicalGameQuantumNet : Regime::QuantumGameQuantumNet;
}

SweepResult sweep_decoherence(const SimConfig& base, const std::vector<double>& rates,
                              const std::vector<ConsensusVariant>& variants, std::uint64_t seed,
                              const DecoherenceSweepOptions& options) {
  validate(base);
  if (variants.empty()) throw ParameterError("variants", "must not be empty");
  check_ascending(rates, "rates");
  if (!(rates.front() >= 0.0)) throw ParameterError("rates", "must be >= 0");

  const Scenario2Layout layout = scenario2_layout(options.scenario.tree_sizes);
  SweepResult out;
  out.kind = "decoherence";
  out.x_values = rates;
  for (double rate : rates) {
    NetworkTopology topo = build_scenario2(options.scenario, seed);
    for (const Link& l : std::vector<Link>(topo.links())) topo.link_params(l.a, l.b).decoherence_rate = rate;
    for (ConsensusVariant v : variants) {
      ConsensusConfig cc;
      cc.source = layout.source;
      cc.destination = layout.destination;
      cc.weights = options.weights;
      cc.variant = v;
      cc.gamma = options.gamma;
      cc.coin_angle = options.coin_angle;
      cc.seed = seed;
      const ConsensusOutcome oc = run_consensus(topo, cc);
      SimConfig cfg = base;
      cfg.regime = regime_for(v);
      cfg.seed = seed;
      add_cells(out, rate, cfg.regime, run_trials(topo, oc.path, cfg));
    }
  }
  finish(out);
  return out;
}

std::string to_csv(const SweepResult& r) {
  std::string s = "x,regime,metric,mean,stddev,n\n";
  for (const auto& c : r.cells)
    s += fmt(c.x) + "," + to_string(c.regime) + "," + c.metric + "," + fmt(c.summary.mean) + "," +
         fmt(c.summary.stddev) + "," + std::to_string(c.summary.n) + "\n";
  return s;
}

std::string to_json(const SweepResult& r) {
  using nlohmann::ordered_json;
  ordered_json rows = ordered_json::array();
  for (const auto& c : r.cells)
    rows.push_back({{"x", c.x},
                    {"regime", to_string(c.regime)},
                    {"metric", c.metric},
                    {"mean", c.summary.mean},
                    {"stddev", c.summary.stddev},
                    {"n", c.summary.n}});
  ordered_json j{{"kind", r.kind}, {"x_values", r.x_values}, {"rows", std::move(rows)}};
  return j.dump(2) + "\n";
}

}  // namespace entangle

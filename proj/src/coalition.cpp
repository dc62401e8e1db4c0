#include "entangle/coalition.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <functional>
#include <numbers>
#include <optional>
#include <unordered_map>

#include "json.hpp"

#include "entangle/errors.hpp"
#include "entangle/simulation.hpp"

namespace entangle {
namespace {

using quantum::SingleQubitUnitary;
using quantum::StateVector;

constexpr double kValueTol = 1e-12;
constexpr std::size_t kMaxPaths = 200'000;
constexpr int kMaxEntities = 20;

// Biconnected blocks (as node lists) by the edge-stack variant of Tarjan's algorithm.
std::vector<std::vector<NodeId>> biconnected_blocks(const NetworkTopology& t) {
  const std::size_t n = t.node_count();
  std::vector<int> disc(n, 0), low(n, 0);
  std::vector<std::pair<NodeId, NodeId>> stack;
  std::vector<std::vector<NodeId>> blocks;
  int time = 0;

  std::function<void(NodeId, std::optional<NodeId>)> dfs = [&](NodeId u, std::optional<NodeId> parent) {
    disc[u] = low[u] = ++time;
    for (NodeId v : t.neighbors(u)) {
      if (parent && v == *parent) continue;
      if (!disc[v]) {
        stack.emplace_back(u, v);
        dfs(v, u);
        low[u] = std::min(low[u], low[v]);
        if (low[v] >= disc[u]) {
          std::vector<NodeId> block;
          while (true) {
            const auto e = stack.back();
            stack.pop_back();
            block.push_back(e.first);
            block.push_back(e.second);
            if (e == std::make_pair(u, v)) break;
          }
          std::sort(block.begin(), block.end());
          block.erase(std::unique(block.begin(), block.end()), block.end());
          blocks.push_back(std::move(block));
        }
      } else if (disc[v] < disc[u]) {
        stack.emplace_back(u, v);
        low[u] = std::min(low[u], disc[v]);
      }
    }
  };
  for (NodeId v = 0; v < n; ++v)
    if (!disc[v]) dfs(v, std::nullopt);
  return blocks;
}

double path_value(const std::vector<NodeId>& path, const CoalitionGameConfig& cfg, const NetworkTopology& t) {
  double min_gen = 1.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) min_gen = std::min(min_gen, t.find_link(path[i], path[i + 1])->params.gen_prob);
  const double rate = std::min(cfg.target_throughput, cfg.attempt_rate_hz * min_gen);
  const auto hops = static_cast<double>(path.size() - 1);
  return rate + werner_chain_fidelity(t, path) - cfg.hop_cost * hops;
}

std::set<NodeId> members_of(std::uint32_t mask, const std::vector<NodeId>& entities) {
  std::set<NodeId> s;
  for (std::size_t i = 0; i < entities.size(); ++i)
    if (mask >> i & 1u) s.insert(entities[i]);
  return s;
}

// Calls f(indices) for every k-subset of [0, n) in lexicographic order; stops when f returns true.
bool for_each_combination(int n, int k, const std::function<bool(const std::vector<int>&)>& f) {
  if (k > n) return false;
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    if (f(idx)) return true;
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return false;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

void sort_partition(std::vector<std::uint32_t>& partition) {
  std::sort(partition.begin(), partition.end(),
            [](std::uint32_t a, std::uint32_t b) { return std::countr_zero(a) < std::countr_zero(b); });
}

SingleQubitUnitary grid_strategy(int k) {
  return SingleQubitUnitary{(k / 9) * std::numbers::pi / 8, (k % 9) * std::numbers::pi / 8};
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= std::numbers::pi / 2 + 1e-12))
    throw ParameterError("gamma", "entanglement level must lie in [0, pi/2]");
}

}  // namespace

const char* to_string(PayoffSplit s) { return s == PayoffSplit::Equal ? "equal" : "proportional_to_degree"; }

PayoffSplit payoff_split_from_string(const std::string& s) {
  if (s == "equal") return PayoffSplit::Equal;
  if (s == "proportional_to_degree") return PayoffSplit::ProportionalToDegree;
  throw ParameterError("payoff_split", "unknown split '" + s + "'");
}

void validate(const CoalitionGameConfig& cfg, const NetworkTopology& topology) {
  if (!(cfg.target_throughput > 0.0) || !std::isfinite(cfg.target_throughput))
    throw ParameterError("target_throughput", "must be positive");
  if (!(cfg.hop_cost >= 0.0) || !std::isfinite(cfg.hop_cost)) throw ParameterError("hop_cost", "must be >= 0");
  if (!(cfg.attempt_rate_hz > 0.0) || !std::isfinite(cfg.attempt_rate_hz))
    throw ParameterError("attempt_rate_hz", "must be positive");
  if (cfg.source >= topology.node_count()) throw PreconditionError("source is not a topology node");
  if (cfg.destination >= topology.node_count()) throw PreconditionError("destination is not a topology node");
  if (cfg.source == cfg.destination) throw PreconditionError("source and destination must differ");
}

PathValue best_internal_path(const std::set<NodeId>& members, const CoalitionGameConfig& cfg,
                             const NetworkTopology& topology) {
  PathValue best;
  if (!members.count(cfg.source) || !members.count(cfg.destination)) return best;
  std::vector<NodeId> path{cfg.source};
  std::vector<bool> on_path(topology.node_count(), false);
  on_path[cfg.source] = true;
  std::size_t found = 0;

  std::function<void(NodeId)> dfs = [&](NodeId u) {
    if (u == cfg.destination) {
      if (++found > kMaxPaths) throw CapacityError("too many simple paths inside coalition");
      const double v = path_value(path, cfg, topology);
      // Paths arrive in lexicographic order, so equal value and length keeps the first.
      const bool better = best.path.empty() || v > best.value + kValueTol ||
                          (std::abs(v - best.value) <= kValueTol && path.size() < best.path.size());
      if (better) best = PathValue{path, v};
      return;
    }
    for (NodeId w : topology.neighbors(u)) {
      if (on_path[w] || !members.count(w)) continue;
      on_path[w] = true;
      path.push_back(w);
      dfs(w);
      path.pop_back();
      on_path[w] = false;
    }
  };
  dfs(cfg.source);
  return best;
}

double characteristic_value(const std::set<NodeId>& members, const CoalitionGameConfig& cfg,
                            const NetworkTopology& topology) {
  if (members.empty()) throw PreconditionError("coalition must be non-empty");
  return best_internal_path(members, cfg, topology).value;
}

std::vector<NodeId> candidate_nodes(const NetworkTopology& topology, NodeId source, NodeId destination) {
  const std::size_t n = topology.node_count();
  if (source >= n || destination >= n) throw PreconditionError("endpoint out of range");
  const auto blocks = biconnected_blocks(topology);
  // Vertex-block incidence graph is a tree; its source-destination path names the blocks
  // every simple path must cross, and each node of those blocks lies on one.
  const std::size_t total = n + blocks.size();
  std::vector<std::vector<std::size_t>> adj(total);
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (NodeId v : blocks[b]) {
      adj[v].push_back(n + b);
      adj[n + b].push_back(v);
    }
  std::vector<std::optional<std::size_t>> prev(total);
  std::vector<bool> seen(total, false);
  std::deque<std::size_t> q{source};
  seen[source] = true;
  while (!q.empty()) {
    const std::size_t v = q.front();
    q.pop_front();
    for (std::size_t u : adj[v])
      if (!seen[u]) {
        seen[u] = true;
        prev[u] = v;
        q.push_back(u);
      }
  }
  if (!seen[destination]) return {};
  std::set<NodeId> out;
  for (std::size_t v = destination; prev[v]; v = *prev[v])
    if (v >= n)
      for (NodeId m : blocks[v - n]) out.insert(m);
  out.erase(source);
  out.erase(destination);
  return {out.begin(), out.end()};
}

std::map<NodeId, double> split_payoff(const Coalition& coalition, const std::vector<NodeId>& path,
                                      PayoffSplit split, const NetworkTopology& topology) {
  std::map<NodeId, double> out;
  for (NodeId m : coalition.members) out[m] = 0.0;
  if (path.empty()) return out;
  double total_weight = 0.0;
  std::vector<double> weight;
  for (NodeId v : path) {
    const double w = split == PayoffSplit::Equal ? 1.0 : static_cast<double>(topology.degree(v));
    weight.push_back(w);
    total_weight += w;
  }
  for (std::size_t i = 0; i < path.size(); ++i) out[path[i]] = coalition.value * weight[i] / total_weight;
  return out;
}

CoalitionOutcome classical_coalition_form(const CoalitionGameConfig& cfg, const NetworkTopology& topology,
                                          std::uint64_t /*seed*/) {
  validate(cfg, topology);
  std::vector<NodeId> entities = candidate_nodes(topology, cfg.source, cfg.destination);
  entities.push_back(cfg.source);
  entities.push_back(cfg.destination);
  std::sort(entities.begin(), entities.end());
  if (entities.size() > static_cast<std::size_t>(kMaxEntities))
    throw CapacityError("coalition game supports at most " + std::to_string(kMaxEntities) + " participants");

  std::unordered_map<std::uint32_t, double> cache;
  auto value = [&](std::uint32_t mask) {
    auto it = cache.find(mask);
    if (it != cache.end()) return it->second;
    const double v = best_internal_path(members_of(mask, entities), cfg, topology).value;
    cache.emplace(mask, v);
    return v;
  };
  const auto full = static_cast<std::uint32_t>((std::uint64_t{1} << entities.size()) - 1);
  if (best_internal_path(members_of(full, entities), cfg, topology).path.empty())
    throw UnreachableError("destination " + std::to_string(cfg.destination) + " is unreachable from source " +
                           std::to_string(cfg.source));

  std::vector<std::uint32_t> partition;
  for (std::size_t i = 0; i < entities.size(); ++i) partition.push_back(std::uint32_t{1} << i);

  CoalitionOutcome out;
  auto record = [&] {
    std::vector<std::set<NodeId>> p;
    for (auto m : partition) p.push_back(members_of(m, entities));
    out.partitions.push_back(std::move(p));
  };

  const int guard = 64 * kMaxEntities * kMaxEntities;
  for (int op = 0; op < guard; ++op) {
    // Merge: smallest group size with a strictly profitable union, best gain first.
    bool merged = false;
    const int parts = static_cast<int>(partition.size());
    for (int k = 2; k <= parts && !merged; ++k) {
      double best_gain = kValueTol;
      std::vector<int> best;
      for_each_combination(parts, k, [&](const std::vector<int>& idx) {
        std::uint32_t u = 0;
        double sum = 0.0;
        for (int i : idx) {
          u |= partition[static_cast<std::size_t>(i)];
          sum += value(partition[static_cast<std::size_t>(i)]);
        }
        const double gain = value(u) - sum;
        if (gain > best_gain) {
          best_gain = gain;
          best = idx;
        }
        return false;
      });
      if (!best.empty()) {
        std::uint32_t u = 0;
        for (auto it = best.rbegin(); it != best.rend(); ++it) {
          u |= partition[static_cast<std::size_t>(*it)];
          partition.erase(partition.begin() + *it);
        }
        partition.push_back(u);
        sort_partition(partition);
        merged = true;
      }
    }
    if (merged) {
      ++out.rounds;
      record();
      continue;
    }

    // Split: first coalition that can shed a part without losing value, smallest part first.
    bool split = false;
    for (std::size_t c = 0; c < partition.size() && !split; ++c) {
      const std::uint32_t whole = partition[c];
      const int size = std::popcount(whole);
      if (size < 2) continue;
      std::vector<int> bits;
      for (int b = 0; b < 32; ++b)
        if (whole >> b & 1u) bits.push_back(b);
      const double v_whole = value(whole);
      for (int k = 1; k < size && !split; ++k) {
        for_each_combination(size, k, [&](const std::vector<int>& idx) {
          std::uint32_t s1 = 0;
          for (int i : idx) s1 |= std::uint32_t{1} << bits[static_cast<std::size_t>(i)];
          const std::uint32_t s2 = whole & ~s1;
          if (value(s1) + value(s2) >= v_whole - kValueTol) {
            partition[c] = s1;
            partition.push_back(s2);
            sort_partition(partition);
            split = true;
          }
          return split;
        });
      }
    }
    if (!split) break;
    ++out.rounds;
    record();
  }

  std::uint32_t stable = partition.front();
  for (auto m : partition)
    if (value(m) > value(stable) + kValueTol) stable = m;
  out.stable_coalition.members = members_of(stable, entities);
  const PathValue pv = best_internal_path(out.stable_coalition.members, cfg, topology);
  out.stable_coalition.value = pv.value;
  out.path = pv.path;
  out.per_node_payoff = split_payoff(out.stable_coalition, out.path, cfg.payoff_split, topology);
  if (auto leader = topology.leader_of(cfg.source)) out.referee = *leader;
  return out;
}

StateVector coalition_entangle(StateVector psi, double gamma) {
  const Eigen::Matrix4cd g = quantum::ewl_entangler(gamma);
  for (int k = 0; k + 1 < psi.qubits(); ++k) quantum::apply_two_qubit_inplace(psi, k, k + 1, g);
  return psi;
}

std::vector<double> coalition_round_distribution(const std::vector<SingleQubitUnitary>& strategies, double gamma) {
  check_gamma(gamma);
  const int n = static_cast<int>(strategies.size());
  if (n > quantum::kMaxQubits) throw CapacityError("at most 12 players fit the referee state");
  StateVector psi = coalition_entangle(StateVector(n), gamma);
  for (int k = 0; k < n; ++k) psi.apply_inplace(k, strategies[static_cast<std::size_t>(k)].matrix());
  // The pair factors commute, so the inverse is the same product at -gamma.
  psi = coalition_entangle(std::move(psi), -gamma);
  return quantum::outcome_probabilities(psi);
}

std::size_t sample_coalition_round(const std::vector<SingleQubitUnitary>& strategies, double gamma, Rng& rng) {
  return quantum::sample_index(coalition_round_distribution(strategies, gamma), rng);
}

CoalitionOutcome quantum_coalition_form(const CoalitionGameConfig& cfg, const NetworkTopology& topology,
                                        const std::map<NodeId, SingleQubitUnitary>& strategies, double gamma,
                                        std::uint64_t seed, const QuantumCoalitionOptions& options) {
  validate(cfg, topology);
  check_gamma(gamma);
  if (options.max_rounds < 1) throw ParameterError("max_rounds", "must be >= 1");
  const std::vector<NodeId> players = candidate_nodes(topology, cfg.source, cfg.destination);
  if (players.size() > static_cast<std::size_t>(quantum::kMaxQubits))
    throw CapacityError(std::to_string(players.size()) + " candidate players exceed the 12-qubit referee state");
  if (players.size() < 2) {
    CoalitionOutcome out = classical_coalition_form(cfg, topology, seed);
    out.classical_fallback = true;
    return out;
  }

  const int n = static_cast<int>(players.size());
  std::vector<SingleQubitUnitary> strat;
  for (NodeId p : players) {
    auto it = strategies.find(p);
    const SingleQubitUnitary u = it != strategies.end() ? it->second : SingleQubitUnitary{std::numbers::pi, 0.0};
    quantum::validate(u);
    strat.push_back(u);
  }

  auto coalition_of = [&](std::size_t mask) {
    std::set<NodeId> m{cfg.source, cfg.destination};
    for (int k = 0; k < n; ++k)
      if (mask >> (n - 1 - k) & 1u) m.insert(players[static_cast<std::size_t>(k)]);
    return m;
  };
  std::unordered_map<std::size_t, std::vector<double>> share_cache;
  auto shares = [&](std::size_t mask) -> const std::vector<double>& {
    auto it = share_cache.find(mask);
    if (it != share_cache.end()) return it->second;
    Coalition c{coalition_of(mask), 0.0};
    const PathValue pv = best_internal_path(c.members, cfg, topology);
    c.value = pv.value;
    const auto pay = split_payoff(c, pv.path, cfg.payoff_split, topology);
    std::vector<double> s(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k) {
      auto it = pay.find(players[static_cast<std::size_t>(k)]);
      if (it != pay.end()) s[static_cast<std::size_t>(k)] = it->second;
    }
    return share_cache.emplace(mask, std::move(s)).first->second;
  };
  auto expected_share = [&](const std::vector<SingleQubitUnitary>& s, int player) {
    const auto dist = coalition_round_distribution(s, gamma);
    double e = 0.0;
    for (std::size_t m = 0; m < dist.size(); ++m)
      if (dist[m] > 0.0) e += dist[m] * shares(m)[static_cast<std::size_t>(player)];
    return e;
  };

  CoalitionOutcome out;
  out.players = players;
  if (auto leader = topology.leader_of(cfg.source)) out.referee = *leader;
  const int window = options.confirmation_window > 0 ? options.confirmation_window : std::max(3, n);
  Rng rng(seed);
  std::vector<std::size_t> masks;
  int quiet = 0;  // consecutive rounds without a strategy change and with the same mask
  bool stable = false;

  for (int r = 0; r < options.max_rounds; ++r) {
    const std::size_t mask = sample_coalition_round(strat, gamma, rng);
    out.trace.push_back(QuantumRound{r, strat, quantum::bitstring(mask, n)});

    const int j = r % n;
    double best = expected_share(strat, j);
    std::optional<SingleQubitUnitary> choice;
    std::vector<SingleQubitUnitary> trial = strat;
    for (int k = 0; k < 81; ++k) {
      trial[static_cast<std::size_t>(j)] = grid_strategy(k);
      const double e = expected_share(trial, j);
      if (e > best + kValueTol) {
        best = e;
        choice = trial[static_cast<std::size_t>(j)];
      }
    }
    if (choice) strat[static_cast<std::size_t>(j)] = *choice;

    if (choice)
      quiet = 0;
    else if (quiet > 0 && masks.back() == mask)
      ++quiet;
    else
      quiet = 1;
    masks.push_back(mask);
    out.rounds = r + 1;
    if (quiet >= window) {
      stable = true;
      break;
    }
  }

  std::size_t final_mask = masks.back();
  if (!stable) {
    std::map<std::size_t, int> counts;
    for (auto m : masks) ++counts[m];
    int top = -1;
    for (const auto& [m, c] : counts)
      if (c > top) {
        top = c;
        final_mask = m;
      }
  }
  out.stable_coalition.members = coalition_of(final_mask);
  const PathValue pv = best_internal_path(out.stable_coalition.members, cfg, topology);
  if (pv.path.empty())
    throw UnreachableError("measured coalition " + quantum::bitstring(final_mask, n) +
                           " holds no source-destination path");
  out.stable_coalition.value = pv.value;
  out.path = pv.path;
  out.per_node_payoff = split_payoff(out.stable_coalition, out.path, cfg.payoff_split, topology);
  return out;
}

std::string to_json(const CoalitionOutcome& o) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["stable_coalition"] = {{"members", o.stable_coalition.members}, {"value", o.stable_coalition.value}};
  j["path"] = o.path;
  ordered_json pay = ordered_json::array();
  for (const auto& [node, p] : o.per_node_payoff) pay.push_back({{"node", node}, {"payoff", p}});
  j["per_node_payoff"] = std::move(pay);
  j["rounds"] = o.rounds;
  j["referee"] = o.referee;
  j["classical_fallback"] = o.classical_fallback;
  if (!o.partitions.empty()) {
    ordered_json parts = ordered_json::array();
    for (const auto& p : o.partitions) {
      ordered_json one = ordered_json::array();
      for (const auto& c : p) one.push_back(c);
      parts.push_back(std::move(one));
    }
    j["partitions"] = std::move(parts);
  }
  if (!o.players.empty()) {
    j["players"] = o.players;
    ordered_json trace = ordered_json::array();
    for (const auto& r : o.trace) {
      ordered_json s = ordered_json::array();
      for (const auto& u : r.strategies) s.push_back({{"theta", u.theta}, {"phi", u.phi}});
      trace.push_back({{"round", r.round}, {"strategies", std::move(s)}, {"measured", r.measured}});
    }
    j["trace"] = std::move(trace);
  }
  return j.dump(2) + "\n";
}

}  // namespace entangle

// Acceptance gate: one line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "entangle/coalition.hpp"
#include "entangle/consensus.hpp"
#include "entangle/equilibrium.hpp"
#include "entangle/quantum.hpp"
#include "entangle/simulation.hpp"
#include "entangle/sweep.hpp"

namespace fs = std::filesystem;
using namespace entangle;
using quantum::DensityMatrix;
using quantum::SingleQubitUnitary;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

Verdict chsh() {
  Verdict v;
  const double classical = quantum::chsh_classical_optimum();
  const double q = quantum::chsh_win_probability(quantum::QuantumOptimal{});
  const double target = std::pow(std::cos(kPi / 8), 2);
  v.require(classical == 0.75, "classical optimum " + fmt("%.12f", classical));
  v.require(std::abs(q - target) <= 1e-9, "quantum optimum " + fmt("%.12f", q));
  if (v.pass) v.detail = "classical 0.750000, quantum " + fmt("%.9f", q);
  return v;
}

// Five nodes: endpoints 0 and 1, repeaters 2, 3, 4 on two routes 0-2-3-1 and 0-2-4-1.
NetworkTopology five_node_fixture() {
  NetworkTopology t;
  t.add_node(NodeRole::Leader, 0.0, 0.0);
  t.add_node(NodeRole::Leader, 1.0, 0.0);
  for (int i = 0; i < 3; ++i) t.add_node(NodeRole::Repeater, 0.3 + 0.2 * i, 0.0);
  auto add = [&](NodeId a, NodeId b, double g, double f) {
    LinkParams p;
    p.gen_prob = g;
    p.payoff = f;
    t.add_link(a, b, p);
  };
  add(0, 2, 0.9, 0.97);
  add(2, 3, 0.5, 0.9);
  add(3, 1, 0.4, 0.95);
  add(2, 4, 0.2, 0.99);
  add(4, 1, 0.6, 0.98);
  return t;
}

Verdict classical_reduction() {
  Verdict v;
  const NetworkTopology t = five_node_fixture();
  const std::vector<NodeId> players = candidate_nodes(t, 0, 1);
  const std::size_t n = players.size();

  // Seeded classical-move profiles: each round the referee's measured mask must be the
  // deterministic join profile, so the two outcome distributions coincide.
  std::mt19937_64 pick(2024);
  Rng referee(7);
  int mismatches = 0;
  for (int round = 0; round < 1000; ++round) {
    std::vector<SingleQubitUnitary> moves;
    std::size_t profile = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const bool join = pick() & 1u;
      moves.push_back(join ? SingleQubitUnitary{kPi, 0.0} : SingleQubitUnitary{});
      profile = (profile << 1) | static_cast<std::size_t>(join);
    }
    const auto dist = coalition_round_distribution(moves, 0.0);
    mismatches += dist[profile] != 1.0 && std::abs(dist[profile] - 1.0) > 1e-12;
    mismatches += sample_coalition_round(moves, 0.0, referee) != profile;
  }
  v.require(mismatches == 0, std::to_string(mismatches) + " of 1000 rounds differ");

  const CoalitionGameConfig cfg;
  const CoalitionOutcome classical = classical_coalition_form(cfg, t);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const CoalitionOutcome q = quantum_coalition_form(cfg, t, {}, 0.0, seed);
    v.require(q.path == classical.path, "quantum game at gamma 0 picked another path");
    v.require(std::abs(q.stable_coalition.value - classical.stable_coalition.value) <= 1e-12,
              "quantum game at gamma 0 reached another value");
  }
  if (v.pass) v.detail = "1000/1000 rounds match, " + std::to_string(n) + " players";
  return v;
}

Verdict tree_consensus() {
  Verdict v;
  const NetworkTopology t = build_scenario2(Scenario2Params{}, 1);
  const Scenario2Layout lay = scenario2_layout({5, 4});
  ConsensusConfig cfg;
  cfg.source = lay.source;
  cfg.destination = lay.destination;
  const ConsensusOutcome o = run_consensus(t, cfg);

  const auto& choices = t.choices();
  const auto two = std::find_if(choices.begin(), choices.end(), [](const ChoiceSet& c) { return c.node == 2; });
  v.require(two != choices.end(), "node 2 has no choice set");
  if (!v.pass) return v;
  const auto est = option_estimates(t, *two);
  v.require(est[0].latency_cost == 100.0 && est[1].latency_cost == 60.0, "node 2 costs are not 100 and 60");
  v.require(est[0].fidelity_payoff == 0.3 && est[1].fidelity_payoff == 0.8, "node 2 payoffs are not 0.3 and 0.8");

  const auto sw = std::find_if(o.switches.begin(), o.switches.end(), [](const Switch& s) { return s.node == 2; });
  v.require(sw != o.switches.end() && sw->from == 1 && sw->to == 3, "node 2 did not switch from 1 to 3");
  if (sw != o.switches.end()) {
    v.require(sw->d_cost == -40.0, "cost change " + fmt("%g", sw->d_cost));
    v.require(sw->d_payoff == 0.5, "payoff change " + fmt("%g", sw->d_payoff));
  }
  v.require(o.converged, "did not converge");
  const RoundResult again = classical_consensus_round(t, o.final_state, cfg.weights);
  v.require(std::none_of(again.switches.begin(), again.switches.end(), [](const Switch& s) { return !s.blocked; }),
            "a further round still switches");
  if (v.pass) v.detail = "node 2: 1 -> 3, cost 100 -> 60, fidelity 0.3 -> 0.8; fixed point after " +
                         std::to_string(o.rounds) + " rounds";
  return v;
}

// Water-filling oracle: equalise latency over the cheapest links that carry flow.
std::vector<double> equalised_flows(const WardropProblem& p) {
  std::vector<std::size_t> order(p.links.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return p.links[x].a < p.links[y].a; });
  double latency = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 1; k <= order.size(); ++k) {
    double inv = 0.0, ratio = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      inv += 1.0 / p.links[order[j]].b;
      ratio += p.links[order[j]].a / p.links[order[j]].b;
    }
    const double l = (p.demand + ratio) / inv;
    if (k < order.size() && l > p.links[order[k]].a) continue;
    latency = l;
    used = k;
    break;
  }
  std::vector<double> flows(p.links.size(), 0.0);
  for (std::size_t j = 0; j < used; ++j) flows[order[j]] = (latency - p.links[order[j]].a) / p.links[order[j]].b;
  return flows;
}

Verdict wardrop() {
  Verdict v;
  std::mt19937_64 gen(404);
  std::uniform_real_distribution<double> a(0.0, 1.0), b(0.2, 3.0), d(0.5, 3.0);
  std::uniform_int_distribution<int> links(2, 5);
  double worst_gap = 0.0, worst_flow = 0.0;
  for (int i = 0; i < 100; ++i) {
    WardropProblem p;
    const int n = links(gen);
    for (int k = 0; k < n; ++k) p.links.push_back({a(gen), b(gen)});
    p.demand = d(gen);
    const WardropFlow f = solve_wardrop(p);
    const std::vector<double> oracle = equalised_flows(p);
    worst_gap = std::max(worst_gap, wardrop_gap(f.flows, p));
    for (int k = 0; k < n; ++k) worst_flow = std::max(worst_flow, std::abs(f.flows[k] - oracle[k]));
  }
  v.require(worst_gap <= 1e-6, "gap " + fmt("%.3g", worst_gap));
  v.require(worst_flow <= 1e-6, "flow error " + fmt("%.3g", worst_flow));
  v.detail = "100 instances, max gap " + fmt("%.2e", worst_gap) + ", max flow error " + fmt("%.2e", worst_flow);
  return v;
}

BestResponseProblem quadratic(double t1, double s1, double t2, double s2) {
  BestResponseProblem p;
  p.cost[0] = [=](const JointAction& x) { return std::pow(x[0] - (t1 + s1 * x[1]), 2); };
  p.cost[1] = [=](const JointAction& x) { return std::pow(x[1] - (t2 + s2 * x[0]), 2); };
  return p;
}

Verdict nash() {
  Verdict v;
  const NashPoint half = solve_nash_best_response(quadratic(0.5, 0.0, 0.5, 0.0));
  v.require(half.converged && std::abs(half.actions[0] - 0.5) <= 1e-6 && std::abs(half.actions[1] - 0.5) <= 1e-6,
            "symmetric fixture missed (0.5, 0.5)");

  BestResponseProblem zero;
  zero.cost[0] = [](const JointAction& x) { return x[0] * (1.0 + x[1]); };
  zero.cost[1] = [](const JointAction& x) { return x[1] * (1.0 + x[0]); };
  const NashPoint z = solve_nash_best_response(zero);
  v.require(z.converged && std::abs(z.actions[0]) <= 1e-6 && std::abs(z.actions[1]) <= 1e-6,
            "linear fixture missed (0, 0)");

  const NashPoint cal = solve_nash_best_response(quadratic(0.473, 0.3, 0.462, 0.4));
  v.require(cal.converged && std::abs(cal.actions[0] - 0.695) <= 1e-3 && std::abs(cal.actions[1] - 0.74) <= 1e-3,
            "calibrated fixture at (" + fmt("%.4f", cal.actions[0]) + ", " + fmt("%.4f", cal.actions[1]) + ")");
  if (v.pass) v.detail = "calibrated (" + fmt("%.4f", cal.actions[0]) + ", " + fmt("%.4f", cal.actions[1]) + ")";
  return v;
}

Verdict node_trend() {
  Verdict v;
  SimConfig cfg;
  cfg.trials = 1000;
  const std::vector<int> counts{2, 4, 6, 8, 10};
  const std::vector<Regime> regimes{Regime::NoGameClassicalNet, Regime::ClassicalGameClassicalNet,
                                    Regime::ClassicalGameQuantumNet, Regime::QuantumGameQuantumNet};
  const SweepResult r = sweep_nodes(cfg, counts, regimes, 1);
  auto delay = [&](int n, Regime g) { return r.at(n, g, "normalized_delay").summary.mean; };
  for (Regime g : regimes)
    for (std::size_t i = 1; i < counts.size(); ++i)
      v.require(delay(counts[i], g) >= delay(counts[i - 1], g),
                std::string(to_string(g)) + " delay drops at " + std::to_string(counts[i]) + " nodes");
  double margin = 0.0;
  for (int n : counts) {
    if (n <= 2) continue;
    const double gap = delay(n, Regime::ClassicalGameQuantumNet) - delay(n, Regime::QuantumGameQuantumNet);
    margin = std::max(margin, gap);
    v.require(gap >= 0.0, "quantum game slower at " + std::to_string(n) + " nodes by " + fmt("%.3g", -gap) + " us");
  }
  if (v.pass)
    v.detail = "delay at 10 nodes " + fmt("%.1f", delay(10, Regime::QuantumGameQuantumNet)) +
               " us (QG), largest CG-QG gap " + fmt("%.3g", margin) + " us";
  return v;
}

Verdict decoherence_trend() {
  Verdict v;
  SimConfig cfg;
  cfg.trials = 1000;
  const std::vector<double> rates{1e-4, 1e-3, 1e-2};
  const SweepResult r =
      sweep_decoherence(cfg, rates, {ConsensusVariant::Classical, ConsensusVariant::Quantum}, 1);
  auto fid = [&](double x, ConsensusVariant c) {
    return r.at(x, regime_for(c), "end_to_end_fidelity").summary.mean;
  };
  for (ConsensusVariant c : {ConsensusVariant::Classical, ConsensusVariant::Quantum})
    for (std::size_t i = 1; i < rates.size(); ++i)
      v.require(fid(rates[i], c) < fid(rates[i - 1], c),
                std::string(to_string(c)) + " fidelity not decreasing at rate " + fmt("%g", rates[i]));
  for (double x : rates)
    v.require(fid(x, ConsensusVariant::Quantum) >= fid(x, ConsensusVariant::Classical),
              "quantum below classical at rate " + fmt("%g", x));
  if (v.pass)
    v.detail = "quantum " + fmt("%.4f", fid(1e-4, ConsensusVariant::Quantum)) + " -> " +
               fmt("%.4f", fid(1e-2, ConsensusVariant::Quantum)) + ", classical " +
               fmt("%.4f", fid(1e-4, ConsensusVariant::Classical)) + " -> " +
               fmt("%.4f", fid(1e-2, ConsensusVariant::Classical));
  return v;
}

Verdict engine_invariants() {
  Verdict v;
  std::mt19937_64 gen(99);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto bell = quantum::bell_state<double>();
  double worst_bell = 0.0;
  int failures = 0;
  for (int i = 0; i < 10000; ++i) {
    const int n = 1 + i % 2;
    const Eigen::Index d = Eigen::Index{1} << n;
    quantum::CMatrix<double> g(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c) g(r, c) = {normal(gen), normal(gen)};
    quantum::CMatrix<double> m = g * g.adjoint();
    m /= m.trace().real();
    DensityMatrix rho(n, m);
    const int q = static_cast<int>(gen() % static_cast<unsigned>(n));
    const auto kind = static_cast<quantum::ChannelKind>(i % 3);
    const double p = unit(gen);

    const DensityMatrix after = quantum::apply_channel(rho, q, quantum::NoiseChannel{kind, p});
    failures += std::abs(after.trace() - 1.0) > 1e-10;
    failures += !quantum::is_physical(after);

    const SingleQubitUnitary u{kPi * unit(gen), 2 * kPi * unit(gen) * 0.999999};
    const quantum::Gate<double> um = u.matrix();
    failures += (um * um.adjoint() - quantum::Gate<double>::Identity()).cwiseAbs().maxCoeff() > 1e-12;
    DensityMatrix back = quantum::apply_unitary(rho, q, u);
    back.apply_inplace(q, um.adjoint());
    failures += (back.matrix() - rho.matrix()).cwiseAbs().maxCoeff() > 1e-10;

    const DensityMatrix noisy = quantum::apply_channel(
        DensityMatrix(bell), static_cast<int>(gen() % 2), quantum::NoiseChannel{quantum::ChannelKind::Depolarizing, p});
    worst_bell = std::max(worst_bell, std::abs(quantum::fidelity(noisy, bell) - (1.0 - 0.75 * p)));
  }
  v.require(failures == 0, std::to_string(failures) + " invariant violations");
  v.require(worst_bell <= 1e-10, "Bell closed form off by " + fmt("%.3g", worst_bell));
  if (v.pass) v.detail = "10000 cases, Bell closed form within " + fmt("%.1e", worst_bell);
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  Verdict v;
  const fs::path root = fs::temp_directory_path() / "entangle_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "small.json";
  std::ofstream(cfg) << R"({"seed": 11, "sim": {"trials": 100}})";

  const std::vector<std::pair<std::string, std::string>> commands{
      {"gen", "gen"},
      {"coalition", "coalition"},
      {"coalition_q", "--variant quantum coalition"},
      {"consensus", "consensus"},
      {"consensus_q", "--variant quantum consensus"},
      {"sweep_nodes", "sweep nodes"},
      {"sweep_decoherence", "sweep decoherence"},
      {"chsh", "chsh"},
  };
  int files = 0;
  for (const auto& [name, args] : commands) {
    std::string outputs[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path dir = root / (name + "_" + std::to_string(run));
      const std::string cmd = std::string("\"") + ENTANGLE_CLI + "\" --config \"" + cfg.string() + "\" --out \"" +
                              dir.string() + "\" " + args + " > \"" + (root / (name + ".stdout")).string() + "\"";
      if (std::system(cmd.c_str()) != 0) {
        v.require(false, name + " exited with an error");
        break;
      }
      outputs[run] = slurp(root / (name + ".stdout"));
      if (fs::exists(dir))
        for (const auto& e : fs::directory_iterator(dir)) outputs[run] += e.path().filename().string() + slurp(e.path());
    }
    if (fs::exists(root / (name + "_0")))
      files += static_cast<int>(std::distance(fs::directory_iterator(root / (name + "_0")), fs::directory_iterator{}));
    v.require(outputs[0] == outputs[1], name + " output differs between runs");
  }
  if (v.pass) v.detail = std::to_string(commands.size()) + " commands, " + std::to_string(files) + " files identical";
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* name;
    double budget_s;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {"AC1", "CHSH optima", 1.0, chsh},
      {"AC2", "classical reduction of the coalition referee", 10.0, classical_reduction},
      {"AC3", "two-tree consensus fixture", 1.0, tree_consensus},
      {"AC4", "Wardrop equalisation", 5.0, wardrop},
      {"AC5", "Nash best-response fixtures", 1.0, nash},
      {"AC6", "normalized delay versus node count", 300.0, node_trend},
      {"AC7", "fidelity versus decoherence rate", 300.0, decoherence_trend},
      {"AC8", "quantum engine invariants", 30.0, engine_invariants},
      {"AC9", "CLI determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("threw: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      v.pass = false;
      v.detail += " (over the " + fmt("%g", c.budget_s) + " s budget)";
    }
    failed += !v.pass;
    std::printf("[%s] %s %s: %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

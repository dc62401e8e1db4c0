// entangle-games: topology generation, game runs, sweeps and the CHSH demo.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "entangle/coalition.hpp"
#include "entangle/config.hpp"
#include "entangle/consensus.hpp"
#include "entangle/errors.hpp"
#include "entangle/quantum.hpp"
#include "entangle/sweep.hpp"

namespace fs = std::filesystem;
using namespace entangle;

namespace {

enum Exit { kOk = 0, kInternal = 1, kConfig = 2, kInfeasible = 3, kCapacity = 4 };

struct Flags {
  std::string config;
  std::string topology;
  std::uint64_t seed = 0;
  std::string out;
  int scenario = 0;
  std::string variant;
  double gamma = 0.0;
  int trials = 0;
  bool quiet = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("config", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string join(const std::vector<NodeId>& path) {
  std::string s;
  for (std::size_t i = 0; i < path.size(); ++i) s += (i ? " -> " : "") + std::to_string(path[i]);
  return s;
}

class Runner {
 public:
  Runner(const Flags& flags, const CLI::App& app) : flags_(flags), app_(app) {}

  RunConfig config() const {
    RunConfig c = flags_.config.empty() ? RunConfig{} : parse_run_config(read_file(flags_.config));
    if (given("--seed")) c.seed = flags_.seed;
    if (given("--out")) c.out = flags_.out;
    if (given("--scenario")) c.scenario = flags_.scenario;
    if (given("--variant")) c.variant = flags_.variant;
    if (given("--gamma")) c.gamma = flags_.gamma;
    if (given("--trials")) c.trials = flags_.trials;
    validate(c);
    return c;
  }

  NetworkTopology topology(const RunConfig& c) const {
    return flags_.topology.empty() ? build_topology(c) : topology_from_json(read_file(flags_.topology));
  }

  fs::path out_dir(const RunConfig& c) const {
    fs::create_directories(c.out);
    return c.out;
  }

  void say(const std::string& line) const {
    if (!flags_.quiet) std::cout << line << '\n';
  }

  int gen() const {
    const RunConfig c = config();
    const NetworkTopology t = build_topology(c);
    write_file(out_dir(c) / "topology.json", to_json(t));
    say("nodes " + std::to_string(t.node_count()) + " links " + std::to_string(t.link_count()));
    return kOk;
  }

  int coalition() const {
    RunConfig c = config();
    c.scenario = 1;
    const NetworkTopology t = topology(c);
    const CoalitionGameConfig g = coalition_config(c, t);
    const CoalitionOutcome o = consensus_variant_from_string(c.variant) == ConsensusVariant::Quantum
                                   ? quantum_coalition_form(g, t, {}, c.gamma, c.seed)
                                   : classical_coalition_form(g, t, c.seed);
    const fs::path dir = out_dir(c);
    write_file(dir / "topology.json", to_json(t));
    write_file(dir / "outcome.json", to_json(o));
    std::string trace;
    if (!o.trace.empty()) {
      for (const auto& r : o.trace) {
        nlohmann::ordered_json s = nlohmann::ordered_json::array();
        for (const auto& u : r.strategies) s.push_back({{"theta", u.theta}, {"phi", u.phi}});
        trace += nlohmann::ordered_json{{"round", r.round}, {"strategies", s}, {"measured", r.measured}}.dump() + "\n";
      }
    } else {
      for (std::size_t i = 0; i < o.partitions.size(); ++i) {
        nlohmann::ordered_json p = nlohmann::ordered_json::array();
        for (const auto& part : o.partitions[i]) p.push_back(part);
        trace += nlohmann::ordered_json{{"round", i + 1}, {"partition", p}}.dump() + "\n";
      }
    }
    write_file(dir / "trace.jsonl", trace);
    say("path " + join(o.path));
    say("value " + fixed(o.stable_coalition.value) + " rounds " + std::to_string(o.rounds));
    return kOk;
  }

  int consensus() const {
    RunConfig c = config();
    c.scenario = 2;  // next-hop choices exist only on tree topologies
    const NetworkTopology t = topology(c);
    const ConsensusOutcome o = run_consensus(t, consensus_config(c, t));
    const fs::path dir = out_dir(c);
    write_file(dir / "topology.json", to_json(t));
    write_file(dir / "outcome.json", to_json(o));
    write_file(dir / "trace.jsonl", trace_jsonl(o));
    say("path " + join(o.path));
    say("total_cost " + fixed(o.total_cost) + " fidelity " + fixed(o.end_to_end_fidelity) +
        (o.converged ? " converged" : " not converged") + " after " + std::to_string(o.rounds) + " rounds");
    return kOk;
  }

  int sweep(const std::string& kind) const {
    const RunConfig c = config();
    SweepResult r;
    std::string metric;
    if (kind == "nodes") {
      std::vector<Regime> regimes;
      for (const auto& name : c.regimes) regimes.push_back(regime_from_string(name));
      NodeSweepOptions opt;
      opt.link_defaults = c.link_defaults;
      opt.probabilistic_links = c.scenario1.probabilistic_links;
      opt.model = c.link_model;
      opt.game.target_throughput = c.target_throughput;
      opt.game.hop_cost = c.hop_cost;
      opt.game.attempt_rate_hz = c.attempt_rate_hz;
      opt.game.payoff_split = payoff_split_from_string(c.payoff_split);
      opt.gamma = c.gamma;
      r = sweep_nodes(sim_config(c), c.node_counts, regimes, c.seed, opt);
      metric = "normalized_delay";
    } else {
      DecoherenceSweepOptions opt;
      opt.scenario = scenario2_params(c);
      opt.weights = c.weights;
      opt.gamma = c.gamma;
      opt.coin_angle = c.coin_angle;
      r = sweep_decoherence(sim_config(c), c.rates, {ConsensusVariant::Classical, ConsensusVariant::Quantum}, c.seed,
                            opt);
      metric = "end_to_end_fidelity";
    }
    const fs::path dir = out_dir(c);
    write_file(dir / "sweep.csv", to_csv(r));
    write_file(dir / "sweep.json", to_json(r));
    for (const auto& cell : r.cells)
      if (cell.metric == metric)
        say(std::string(to_string(cell.regime)) + " x=" + fixed(cell.x, 6) + " " + metric + "=" +
            fixed(cell.summary.mean));
    return kOk;
  }

  int chsh() const {
    std::cout << "classical optimum " << fixed(quantum::chsh_classical_optimum()) << '\n';
    std::cout << "quantum optimum   " << fixed(quantum::chsh_win_probability(quantum::QuantumOptimal{})) << '\n';
    return kOk;
  }

 private:
  bool given(const std::string& flag) const { return app_.count(flag) > 0; }

  const Flags& flags_;
  const CLI::App& app_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entanglement-distribution games on quantum networks"};
  app.require_subcommand(1);
  Flags flags;
  app.add_option("--config", flags.config, "JSON run configuration");
  app.add_option("--topology", flags.topology, "Topology JSON to use instead of generating one");
  app.add_option("--seed", flags.seed, "Master RNG seed");
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--scenario", flags.scenario, "Scenario 1 (coalition) or 2 (consensus)");
  app.add_option("--variant", flags.variant, "classical or quantum");
  app.add_option("--gamma", flags.gamma, "Entanglement level in [0, pi/2]");
  app.add_option("--trials", flags.trials, "Trials per sweep cell");
  app.add_flag("--quiet", flags.quiet, "Suppress summaries");

  auto* gen = app.add_subcommand("gen", "Generate a topology")->fallthrough();
  auto* coalition = app.add_subcommand("coalition", "Run the coalition game")->fallthrough();
  auto* consensus = app.add_subcommand("consensus", "Run the next-hop consensus game")->fallthrough();
  auto* sweep = app.add_subcommand("sweep", "Run a metric sweep")->fallthrough();
  std::string sweep_kind;
  sweep->add_option("kind", sweep_kind, "nodes or decoherence")->required()->check(CLI::IsMember({"nodes", "decoherence"}));
  auto* chsh = app.add_subcommand("chsh", "Report CHSH optima")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  const Runner run(flags, app);
  try {
    if (*gen) return run.gen();
    if (*coalition) return run.coalition();
    if (*consensus) return run.consensus();
    if (*sweep) return run.sweep(sweep_kind);
    if (*chsh) return run.chsh();
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ShapeError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const UnreachableError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return kCapacity;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}

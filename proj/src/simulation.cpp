#include "entangle/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <thread>

#include "entangle/errors.hpp"
#include "entangle/quantum.hpp"

namespace entangle {
namespace {

using quantum::ChannelKind;
using quantum::DensityMatrix;
using quantum::NoiseChannel;

struct Hop {
  const LinkParams* params;
};

std::vector<Hop> resolve_path(const NetworkTopology& topology, const std::vector<NodeId>& path) {
  if (path.size() < 2) throw PreconditionError("path needs at least one hop");
  std::vector<Hop> hops;
  hops.reserve(path.size() - 1);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Link* l = topology.find_link(path[i], path[i + 1]);
    if (!l)
      throw PreconditionError("path uses missing link " + std::to_string(path[i]) + "-" + std::to_string(path[i + 1]));
    hops.push_back(Hop{&l->params});
  }
  return hops;
}

void depolarize(DensityMatrix& rho, int qubit, double rate, double elapsed_us) {
  const double p = quantum::decoherence_strength(rate, elapsed_us);
  if (p <= 0.0) return;
  rho.apply_kraus_inplace(qubit, quantum::kraus_operators<double>(NoiseChannel{ChannelKind::Depolarizing, p}));
}

// Failed attempts before the first success; bounded so tiny gen_prob cannot spin forever.
using FailureDraw = std::function<int(double gen_prob)>;

TrialMetrics simulate(const NetworkTopology& topology, const std::vector<NodeId>& path, const SimConfig& cfg,
                      bool quantum_network, const FailureDraw& failures) {
  const std::vector<Hop> hops = resolve_path(topology, path);
  TrialMetrics m;
  m.hops = static_cast<int>(hops.size());
  double budget = std::numeric_limits<double>::infinity();
  for (const auto& h : hops) budget = std::min(budget, h.params->coherence_us);

  const double step = cfg.sync_step_us;
  double t = 0.0;
  bool aborted = false;

  if (!quantum_network) {
    double fid = 1.0;
    for (std::size_t i = 0; i < hops.size(); ++i) {
      const LinkParams& p = *hops[i].params;
      t += failures(p.gen_prob) * step + p.latency_us;
      if (i + 1 < hops.size()) t += step;  // store-and-forward at the relay
      fid *= p.payoff;
    }
    m.end_to_end_fidelity = std::clamp(fid, 0.0, 1.0);
  } else {
    const auto target = quantum::bell_state<double>();
    DensityMatrix pair(2);
    double stored_rate = 0.0;
    for (std::size_t i = 0; i < hops.size(); ++i) {
      const LinkParams& p = *hops[i].params;
      const double wait = failures(p.gen_prob) * step + p.latency_us;
      DensityMatrix link = quantum::werner_state<double>(p.payoff);
      depolarize(link, 1, p.decoherence_rate, p.latency_us);  // qubit in flight
      if (i == 0) {
        t += wait;
        pair = std::move(link);
        stored_rate = p.decoherence_rate;
        continue;
      }
      m.max_idle_us = std::max(m.max_idle_us, wait);
      if (wait > cfg.qubit_lifetime_us) {
        t += cfg.qubit_lifetime_us;
        m.lifetime_exceeded = true;
        aborted = true;
        break;
      }
      t += wait;
      depolarize(pair, 0, stored_rate, wait);
      depolarize(pair, 1, stored_rate, wait);
      pair = quantum::entanglement_swap(pair, link);
      t += step;  // swap
      const double swap_rate = 0.5 * (stored_rate + p.decoherence_rate);
      depolarize(pair, 0, swap_rate, step);
      depolarize(pair, 1, swap_rate, step);
      stored_rate = p.decoherence_rate;
    }
    m.end_to_end_fidelity = aborted ? 0.0 : quantum::fidelity(pair, target);
  }

  m.total_latency_us = t;
  m.normalized_delay = t / static_cast<double>(m.hops);
  m.success = !aborted && t <= budget;
  m.ebits_delivered = m.success ? 1 : 0;
  m.entanglement_rate = t > 0.0 ? m.ebits_delivered / (t * 1e-6) : 0.0;
  return m;
}

unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ENTANGLE_GAMES_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

}  // namespace

const char* to_string(Regime r) {
  switch (r) {
    case Regime::NoGameClassicalNet: return "NoGameClassicalNet";
    case Regime::ClassicalGameClassicalNet: return "ClassicalGameClassicalNet";
    case Regime::ClassicalGameQuantumNet: return "ClassicalGameQuantumNet";
    case Regime::QuantumGameQuantumNet: return "QuantumGameQuantumNet";
  }
  return "?";
}

Regime regime_from_string(const std::string& s) {
  for (Regime r : {Regime::NoGameClassicalNet, Regime::ClassicalGameClassicalNet, Regime::ClassicalGameQuantumNet,
                   Regime::QuantumGameQuantumNet})
    if (s == to_string(r)) return r;
  throw ParameterError("regime", "unknown regime '" + s + "'");
}

bool is_quantum_network(Regime r) {
  return r == Regime::ClassicalGameQuantumNet || r == Regime::QuantumGameQuantumNet;
}

bool uses_quantum_game(Regime r) { return r == Regime::QuantumGameQuantumNet; }

void validate(const SimConfig& cfg) {
  if (!(cfg.sync_step_us > 0.0)) throw ParameterError("sync_step_us", "must be positive");
  if (!(cfg.qubit_lifetime_us > 0.0)) throw ParameterError("qubit_lifetime_us", "must be positive");
  if (cfg.sync_step_us > cfg.qubit_lifetime_us)
    throw ParameterError("sync_step_us", "must not exceed qubit_lifetime_us");
  if (cfg.trials < 1) throw ParameterError("trials", "must be >= 1");
}

TrialMetrics run_trial(const NetworkTopology& topology, const std::vector<NodeId>& path, const SimConfig& cfg,
                       Rng& rng) {
  validate(cfg);
  const FailureDraw draw = [&rng](double gen_prob) {
    int fails = 0;
    while (uniform01(rng) >= gen_prob && fails < 1'000'000) ++fails;
    return fails;
  };
  return simulate(topology, path, cfg, is_quantum_network(cfg.regime), draw);
}

std::vector<TrialMetrics> run_trials(const NetworkTopology& topology, const std::vector<NodeId>& path,
                                     const SimConfig& cfg) {
  validate(cfg);
  resolve_path(topology, path);
  const auto n = static_cast<std::size_t>(cfg.trials);
  std::vector<TrialMetrics> out(n);
  const unsigned workers = worker_count(n);
  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < n; i += workers) {
      Rng rng(derive_seed(cfg.seed, i));
      out[i] = run_trial(topology, path, cfg, rng);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  return out;
}

double nominal_path_fidelity(const NetworkTopology& topology, const std::vector<NodeId>& path, const SimConfig& cfg,
                             bool quantum_network) {
  return simulate(topology, path, cfg, quantum_network, [](double) { return 0; }).end_to_end_fidelity;
}

double werner_chain_fidelity(const NetworkTopology& topology, const std::vector<NodeId>& path) {
  double w = 1.0;
  for (const Hop& h : resolve_path(topology, path)) {
    const double f = std::clamp(h.params->payoff, 0.25, 1.0);
    w *= (4.0 * f - 1.0) / 3.0;
  }
  return (1.0 + 3.0 * w) / 4.0;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"ebits_delivered", "end_to_end_fidelity", "entanglement_rate", "hops",
                                                 "normalized_delay", "success", "total_latency"};
  return names;
}

std::map<std::string, MetricSummary> aggregate(const std::vector<TrialMetrics>& trials) {
  if (trials.empty()) throw PreconditionError("aggregate needs at least one trial");
  const std::map<std::string, std::function<double(const TrialMetrics&)>> fields = {
      {"ebits_delivered", [](const TrialMetrics& t) { return static_cast<double>(t.ebits_delivered); }},
      {"end_to_end_fidelity", [](const TrialMetrics& t) { return t.end_to_end_fidelity; }},
      {"entanglement_rate", [](const TrialMetrics& t) { return t.entanglement_rate; }},
      {"hops", [](const TrialMetrics& t) { return static_cast<double>(t.hops); }},
      {"normalized_delay", [](const TrialMetrics& t) { return t.normalized_delay; }},
      {"success", [](const TrialMetrics& t) { return t.success ? 1.0 : 0.0; }},
      {"total_latency", [](const TrialMetrics& t) { return t.total_latency_us; }},
  };
  std::map<std::string, MetricSummary> out;
  const auto n = static_cast<double>(trials.size());
  for (const auto& [name, get] : fields) {
    MetricSummary s;
    s.n = trials.size();
    const double first = get(trials.front());
    bool constant = true;
    double sum = 0.0;
    for (const auto& t : trials) {
      const double v = get(t);
      constant = constant && v == first;
      sum += v;
    }
    s.mean = constant ? first : sum / n;
    if (!constant && trials.size() > 1) {
      double ss = 0.0;
      for (const auto& t : trials) ss += (get(t) - s.mean) * (get(t) - s.mean);
      s.stddev = std::sqrt(ss / (n - 1.0));
    }
    out.emplace(name, s);
  }
  return out;
}

}  // namespace entangle

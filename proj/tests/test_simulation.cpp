#include <cmath>
#include <cstdlib>
#include <sstream>

#include "doctest.h"

#include "entangle/errors.hpp"
#include "entangle/quantum.hpp"
#include "entangle/simulation.hpp"
#include "entangle/sweep.hpp"

using namespace entangle;

namespace {

LinkParams link(double latency, double rate, double gen_prob, double payoff) {
  LinkParams p;
  p.latency_us = latency;
  p.decoherence_rate = rate;
  p.gen_prob = gen_prob;
  p.payoff = payoff;
  return p;
}

NetworkTopology line(const std::vector<LinkParams>& hops) {
  NetworkTopology t;
  for (std::size_t i = 0; i <= hops.size(); ++i) t.add_node(NodeRole::Repeater, static_cast<double>(i), 0);
  for (std::size_t i = 0; i < hops.size(); ++i) t.add_link(static_cast<NodeId>(i), static_cast<NodeId>(i + 1), hops[i]);
  return t;
}

std::vector<NodeId> full_path(const NetworkTopology& t) {
  std::vector<NodeId> p;
  for (NodeId i = 0; i < t.node_count(); ++i) p.push_back(i);
  return p;
}

double keep(double rate, double us) { return 1.0 - quantum::decoherence_strength(rate, us); }

}  // namespace

TEST_CASE("one certain hop has a closed form") {
  const NetworkTopology t = line({link(80.0, 1e-3, 1.0, 0.9)});
  SimConfig cfg;
  Rng rng(1);
  const TrialMetrics m = run_trial(t, {0, 1}, cfg, rng);
  const double w = (4 * 0.9 - 1) / 3 * keep(1e-3, 80.0);
  CHECK(m.total_latency_us == doctest::Approx(80.0));
  CHECK(m.end_to_end_fidelity == doctest::Approx((1 + 3 * w) / 4).epsilon(1e-12));
  CHECK(m.success);
  CHECK(m.hops == 1);
  CHECK(m.ebits_delivered == 1);
  CHECK(m.entanglement_rate == doctest::Approx(1.0 / 80e-6));
}

TEST_CASE("two certain hops compose storage, swap and link noise") {
  const double r1 = 2e-3, r2 = 5e-4, step = 300.0;
  const NetworkTopology t = line({link(60.0, r1, 1.0, 0.95), link(90.0, r2, 1.0, 0.85)});
  SimConfig cfg;
  Rng rng(1);
  const TrialMetrics m = run_trial(t, {0, 1, 2}, cfg, rng);
  const double w1 = (4 * 0.95 - 1) / 3 * keep(r1, 60.0) * std::pow(keep(r1, 90.0), 2);
  const double w2 = (4 * 0.85 - 1) / 3 * keep(r2, 90.0);
  const double w = w1 * w2 * std::pow(keep(0.5 * (r1 + r2), step), 2);
  CHECK(m.total_latency_us == doctest::Approx(60.0 + 90.0 + step));
  CHECK(m.normalized_delay == doctest::Approx((60.0 + 90.0 + step) / 2));
  CHECK(m.end_to_end_fidelity == doctest::Approx((1 + 3 * w) / 4).epsilon(1e-12));
  CHECK(m.max_idle_us == doctest::Approx(90.0));

  SimConfig classical = cfg;
  classical.regime = Regime::NoGameClassicalNet;
  const TrialMetrics c = run_trial(t, {0, 1, 2}, classical, rng);
  CHECK(c.total_latency_us == doctest::Approx(60.0 + 90.0 + step));
  CHECK(c.end_to_end_fidelity == doctest::Approx(0.95 * 0.85));
}

TEST_CASE("a stored qubit outliving its lifetime aborts the trial") {
  const NetworkTopology t = line({link(50.0, 1e-4, 1.0, 0.95), link(50.0, 1e-4, 1e-9, 0.95)});
  SimConfig cfg;
  Rng rng(3);
  const TrialMetrics m = run_trial(t, {0, 1, 2}, cfg, rng);
  CHECK_FALSE(m.success);
  CHECK(m.lifetime_exceeded);
  CHECK(m.end_to_end_fidelity == 0.0);
  CHECK(m.ebits_delivered == 0);
  CHECK(m.entanglement_rate == 0.0);
  CHECK(m.total_latency_us == doctest::Approx(50.0 + cfg.qubit_lifetime_us));
}

TEST_CASE("aggregate uses the sample standard deviation") {
  std::vector<TrialMetrics> trials(2);
  trials[0].total_latency_us = 100.0;
  trials[1].total_latency_us = 300.0;
  const auto s = aggregate(trials);
  CHECK(s.at("total_latency").mean == doctest::Approx(200.0));
  CHECK(s.at("total_latency").stddev == doctest::Approx(std::sqrt(20000.0)));
  CHECK(s.at("total_latency").n == 2);
  CHECK(s.size() == metric_names().size());

  std::vector<TrialMetrics> same(5);
  for (auto& m : same) m.end_to_end_fidelity = 0.1;
  CHECK(aggregate(same).at("end_to_end_fidelity").stddev == 0.0);
  CHECK(aggregate({TrialMetrics{}}).at("hops").stddev == 0.0);
  CHECK_THROWS_AS(aggregate({}), PreconditionError);
}

TEST_CASE("trials are reproducible and independent of the thread count") {
  const NetworkTopology t = line({link(50, 1e-4, 0.3, 0.95), link(70, 2e-4, 0.5, 0.9), link(40, 1e-4, 0.7, 0.97)});
  SimConfig cfg;
  cfg.trials = 200;
  cfg.seed = 17;
  const auto a = run_trials(t, full_path(t), cfg);
  setenv("ENTANGLE_GAMES_THREADS", "1", 1);
  const auto b = run_trials(t, full_path(t), cfg);
  unsetenv("ENTANGLE_GAMES_THREADS");
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].total_latency_us == b[i].total_latency_us);
    CHECK(a[i].end_to_end_fidelity == b[i].end_to_end_fidelity);
  }
  cfg.seed = 18;
  const auto c = run_trials(t, full_path(t), cfg);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].total_latency_us != c[i].total_latency_us;
  CHECK(differs);
}

TEST_CASE("more decoherence never helps a paired trial") {
  SimConfig cfg;
  cfg.trials = 300;
  std::vector<std::vector<TrialMetrics>> runs;
  for (double rate : {0.0, 1e-4, 1e-3, 1e-2}) {
    const NetworkTopology t = line({link(50, rate, 0.4, 0.95), link(60, rate, 0.6, 0.9), link(70, rate, 0.8, 0.92)});
    runs.push_back(run_trials(t, full_path(t), cfg));
  }
  for (std::size_t r = 1; r < runs.size(); ++r)
    for (std::size_t i = 0; i < runs[r].size(); ++i) {
      CHECK(runs[r][i].end_to_end_fidelity <= runs[r - 1][i].end_to_end_fidelity + 1e-12);
      CHECK(runs[r][i].total_latency_us == runs[r - 1][i].total_latency_us);
    }
}

TEST_CASE("metric identities hold on every trial") {
  const NetworkTopology t = line({link(50, 1e-3, 0.2, 0.95), link(60, 1e-3, 0.3, 0.6)});
  for (Regime regime : {Regime::NoGameClassicalNet, Regime::QuantumGameQuantumNet}) {
    SimConfig cfg;
    cfg.trials = 500;
    cfg.regime = regime;
    for (const TrialMetrics& m : run_trials(t, full_path(t), cfg)) {
      CHECK(m.end_to_end_fidelity >= 0.0);
      CHECK(m.end_to_end_fidelity <= 1.0);
      CHECK(m.ebits_delivered == (m.success ? 1 : 0));
      CHECK(m.entanglement_rate == doctest::Approx(m.ebits_delivered / (m.total_latency_us * 1e-6)));
      CHECK(m.normalized_delay == doctest::Approx(m.total_latency_us / m.hops));
    }
  }
}

TEST_CASE("nominal fidelity and Werner chain") {
  const NetworkTopology t = line({link(50, 0.0, 0.1, 0.9), link(50, 0.0, 0.1, 0.8)});
  const double w = (4 * 0.9 - 1) / 3 * (4 * 0.8 - 1) / 3;
  CHECK(werner_chain_fidelity(t, {0, 1, 2}) == doctest::Approx((1 + 3 * w) / 4));
  CHECK(nominal_path_fidelity(t, {0, 1, 2}, SimConfig{}) == doctest::Approx((1 + 3 * w) / 4));
  CHECK(nominal_path_fidelity(t, {0, 1, 2}, SimConfig{}, false) == doctest::Approx(0.72));
  CHECK_THROWS_AS(werner_chain_fidelity(t, {0, 2}), PreconditionError);
  CHECK_THROWS_AS(werner_chain_fidelity(t, {0}), PreconditionError);
}

TEST_CASE("simulation config checks") {
  SimConfig cfg;
  cfg.sync_step_us = 600.0;
  CHECK_THROWS_AS(validate(cfg), ParameterError);
  cfg = SimConfig{};
  cfg.trials = 0;
  CHECK_THROWS_AS(validate(cfg), ParameterError);
  CHECK(regime_from_string("ClassicalGameQuantumNet") == Regime::ClassicalGameQuantumNet);
  CHECK_THROWS_AS(regime_from_string("Other"), ParameterError);
}

TEST_CASE("node sweep shape and determinism") {
  SimConfig cfg;
  cfg.trials = 20;
  const std::vector<Regime> regimes{Regime::NoGameClassicalNet, Regime::ClassicalGameClassicalNet,
                                    Regime::ClassicalGameQuantumNet, Regime::QuantumGameQuantumNet};
  const SweepResult a = sweep_nodes(cfg, {2, 4}, regimes, 5);
  const SweepResult b = sweep_nodes(cfg, {2, 4}, regimes, 5);
  CHECK(a.kind == "nodes");
  CHECK(a.cells.size() == 2 * regimes.size() * metric_names().size());
  CHECK(to_csv(a) == to_csv(b));
  CHECK(to_json(a) == to_json(b));
  // four relays between the end nodes give five hops
  CHECK(a.at(4, Regime::NoGameClassicalNet, "hops").summary.mean == 5.0);

  std::istringstream csv(to_csv(a));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "x,regime,metric,mean,stddev,n");
  CHECK_THROWS(a.at(3, Regime::NoGameClassicalNet, "hops"));
}

TEST_CASE("decoherence sweep loses fidelity as the rate grows") {
  SimConfig cfg;
  cfg.trials = 100;
  const SweepResult r =
      sweep_decoherence(cfg, {1e-4, 1e-2}, {ConsensusVariant::Classical, ConsensusVariant::Quantum}, 3);
  CHECK(r.kind == "decoherence");
  for (ConsensusVariant v : {ConsensusVariant::Classical, ConsensusVariant::Quantum}) {
    const Regime g = regime_for(v);
    CHECK(r.at(1e-2, g, "end_to_end_fidelity").summary.mean < r.at(1e-4, g, "end_to_end_fidelity").summary.mean);
  }
}

#include "entangle/quantum.hpp"

#include <json.hpp>

#include <numbers>

namespace entangle::quantum {
namespace {

using C = std::complex<double>;

// Maps |angle> = cos(angle)|0> + sin(angle)|1> onto |0>.
Gate<double> basis_rotation(double angle) {
  Gate<double> g;
  g << C(std::cos(angle)), C(std::sin(angle)), C(-std::sin(angle)), C(std::cos(angle));
  return g;
}

double chsh_classical(const ClassicalDeterministic& s) {
  int wins = 0;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const int a = s.bits[static_cast<std::size_t>(x)] & 1;
      const int b = s.bits[static_cast<std::size_t>(2 + y)] & 1;
      if ((a ^ b) == (x & y)) ++wins;
    }
  return wins / 4.0;
}

double chsh_quantum(const QuantumAngles& s) {
  const DensityMatrix shared(bell_state<double>());
  const std::array<double, 2> alice = {s.a0, s.a1};
  const std::array<double, 2> bob = {s.b0, s.b1};
  double win = 0.0;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      DensityMatrix rho = apply_gate(shared, 0, basis_rotation(alice[static_cast<std::size_t>(x)]));
      rho = apply_gate(rho, 1, basis_rotation(bob[static_cast<std::size_t>(y)]));
      const auto p = outcome_probabilities(rho);
      // index = a * 2 + b
      const double same = p[0] + p[3];
      win += (x & y) ? 1.0 - same : same;
    }
  return win / 4.0;
}

}  // namespace

void validate(const SingleQubitUnitary& u) {
  if (!(u.theta >= 0.0 && u.theta <= std::numbers::pi))
    throw ParameterError("theta", "must lie in [0, pi]");
  if (!(u.phi >= 0.0 && u.phi < 2.0 * std::numbers::pi))
    throw ParameterError("phi", "must lie in [0, 2 pi)");
}

double chsh_win_probability(const ChshStrategy& strategy) {
  struct Visitor {
    double operator()(const ClassicalDeterministic& s) const { return chsh_classical(s); }
    double operator()(const QuantumAngles& s) const { return chsh_quantum(s); }
    double operator()(const QuantumOptimal&) const {
      const double pi = std::numbers::pi;
      return chsh_quantum(QuantumAngles{0.0, pi / 4, pi / 8, -pi / 8});
    }
  };
  return std::visit(Visitor{}, strategy);
}

double chsh_classical_optimum() {
  double best = 0.0;
  for (int m = 0; m < 16; ++m) {
    ClassicalDeterministic s;
    for (std::size_t k = 0; k < 4; ++k) s.bits[k] = (m >> k) & 1;
    best = std::max(best, chsh_classical(s));
  }
  return best;
}

EwlResult ewl_game(double gamma, const SingleQubitUnitary& a, const SingleQubitUnitary& b,
                   const PayoffMatrix& payoffs) {
  if (!(gamma >= 0.0 && gamma <= std::numbers::pi / 2 + 1e-12))
    throw ParameterError("gamma", "entangling parameter must lie in [0, pi/2]");
  const Eigen::Matrix4cd j = ewl_entangler(gamma);
  CVector<double> psi = j.col(0);
  StateVector state(2, psi);
  state.apply_inplace(0, a.matrix());
  state.apply_inplace(1, b.matrix());
  const CVector<double> out = j.adjoint() * state.amplitudes();

  EwlResult r;
  for (std::size_t k = 0; k < 4; ++k) {
    r.outcome_probabilities[k] = std::norm(out(static_cast<Eigen::Index>(k)));
    r.payoff_a += r.outcome_probabilities[k] * payoffs(static_cast<Eigen::Index>(k), 0);
    r.payoff_b += r.outcome_probabilities[k] * payoffs(static_cast<Eigen::Index>(k), 1);
  }
  return r;
}

std::array<double, 4> coin_flip_distribution(double angle) {
  if (!(angle >= 0.0 && angle <= std::numbers::pi / 2 + 1e-12))
    throw ParameterError("angle", "polarizer rotation must lie in [0, pi/2]");
  const DensityMatrix rho = apply_gate(DensityMatrix(bell_state<double>()), 1, basis_rotation(angle));
  const auto p = outcome_probabilities(rho);
  return {p[0], p[1], p[2], p[3]};
}

CoinFlip coin_flip_consensus(Rng& rng, double angle) {
  const auto table = coin_flip_distribution(angle);
  const std::vector<double> probs(table.begin(), table.end());
  const std::size_t k = sample_index(probs, rng);
  CoinFlip f;
  f.bit_a = static_cast<int>(k >> 1);
  f.bit_b = static_cast<int>(k & 1);
  f.agree = f.bit_a == f.bit_b;
  return f;
}

std::string dump_json(const StateVector& psi) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < psi.dim(); ++i) j.push_back({psi[i].real(), psi[i].imag()});
  return j.dump();
}

std::string dump_json(const DensityMatrix& rho) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index r = 0; r < rho.dim(); ++r)
    for (Eigen::Index c = 0; c < rho.dim(); ++c) j.push_back({rho(r, c).real(), rho(r, c).imag()});
  return j.dump();
}

}  // namespace entangle::quantum

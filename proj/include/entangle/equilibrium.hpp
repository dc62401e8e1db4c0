#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <ostream>
#include <vector>

namespace entangle {

/// Two players, each choosing an information-exchange rate in [0, 1].
using JointAction = std::array<double, 2>;
using CostFunction = std::function<double(const JointAction&)>;

struct BestResponseProblem {
  std::array<CostFunction, 2> cost;
  double damping = 1.0;  // (0, 1]
  double tol = 1e-6;
  int max_iter = 10000;
  JointAction start{0.5, 0.5};
  std::ostream* trace = nullptr;  // CSV: iteration,x1,x2,residual
};

struct NashPoint {
  JointAction actions{};
  double residual = 0.0;  // max over players of |best response - action|
  int iterations = 0;
  bool converged = false;
};

/// Minimiser of f over [lo, hi] by golden-section search, endpoints included.
double golden_section_min(const std::function<double(double)>& f, double lo, double hi, double tol);

/// Player i's best response to the other's action in `x`.
double best_response(const BestResponseProblem& p, std::size_t player, const JointAction& x);

/// Damped Gauss-Seidel best responses until the step and the residual fall below tol.
/// Running out of iterations is reported through `converged`, not thrown.
NashPoint solve_nash_best_response(const BestResponseProblem& p);

/// l(x) = a + b x with a, b >= 0.
struct AffineLatency {
  double a = 0.0;
  double b = 0.0;

  double operator()(double x) const { return a + b * x; }
};

struct WardropProblem {
  std::size_t node = 0;
  std::vector<AffineLatency> links;
  double demand = 1.0;
  double tol = 1e-9;
  double eta = 0.1;  // step fraction, halved when the gap grows
  int max_iter = 1'000'000;
  std::ostream* trace = nullptr;  // CSV: iteration,gap,flow_0,...
};

void validate(const WardropProblem& p);

struct WardropFlow {
  std::vector<double> flows;
  double common_latency = 0.0;  // largest latency among used links
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Shifts flow from the slowest used link to the fastest link until the latency
/// spread over used links is within tol. Starts from (and, when already balanced,
/// returns) the uniform split.
WardropFlow solve_wardrop(const WardropProblem& p);

/// max over used links of l_e(x_e) minus min over all links of l_e(x_e).
/// Throws PreconditionError for negative flows or flows not summing to demand.
double wardrop_gap(const std::vector<double>& flows, const WardropProblem& p);

}  // namespace entangle

#include "entangle/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "entangle/errors.hpp"

namespace entangle {
namespace {

constexpr double kUsed = 1e-12;

}  // namespace

double golden_section_min(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  double best = (a + b) / 2;
  double f_best = f(best);
  for (double edge : {lo, hi}) {
    const double fe = f(edge);
    if (fe < f_best) {
      best = edge;
      f_best = fe;
    }
  }
  return best;
}

double best_response(const BestResponseProblem& p, std::size_t player, const JointAction& x) {
  JointAction y = x;
  return golden_section_min(
      [&](double v) {
        y[player] = v;
        return p.cost[player](y);
      },
      0.0, 1.0, p.tol / 10);
}

NashPoint solve_nash_best_response(const BestResponseProblem& p) {
  if (!p.cost[0] || !p.cost[1]) throw ParameterError("cost", "both cost functions are required");
  if (!(p.damping > 0.0 && p.damping <= 1.0)) throw ParameterError("damping", "must lie in (0, 1]");
  if (!(p.tol > 0.0)) throw ParameterError("tol", "must be positive");
  if (p.max_iter < 1) throw ParameterError("max_iter", "must be >= 1");
  for (double s : p.start)
    if (!(s >= 0.0 && s <= 1.0)) throw ParameterError("start", "must lie in [0, 1]");

  auto residual = [&](const JointAction& x) {
    return std::max(std::abs(best_response(p, 0, x) - x[0]), std::abs(best_response(p, 1, x) - x[1]));
  };

  NashPoint out;
  JointAction x = p.start;
  if (p.trace) *p.trace << "iteration,x1,x2,residual\n";
  for (int it = 1; it <= p.max_iter; ++it) {
    double step = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      const double br = best_response(p, i, x);
      const double next = x[i] + p.damping * (br - x[i]);
      step = std::max(step, std::abs(next - x[i]));
      x[i] = next;
    }
    out.iterations = it;
    out.actions = x;
    out.residual = residual(x);
    if (p.trace) *p.trace << it << ',' << x[0] << ',' << x[1] << ',' << out.residual << '\n';
    if (step < p.tol && out.residual <= p.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

void validate(const WardropProblem& p) {
  if (p.links.empty()) throw ParameterError("links", "at least one outgoing link is required");
  for (const auto& l : p.links)
    if (!(l.a >= 0.0 && l.b >= 0.0) || !std::isfinite(l.a) || !std::isfinite(l.b))
      throw ParameterError("links", "latency coefficients must be finite and >= 0");
  if (!(p.demand > 0.0) || !std::isfinite(p.demand)) throw ParameterError("demand", "must be positive");
  if (!(p.tol > 0.0)) throw ParameterError("tol", "must be positive");
  if (!(p.eta > 0.0 && p.eta <= 1.0)) throw ParameterError("eta", "must lie in (0, 1]");
  if (p.max_iter < 1) throw ParameterError("max_iter", "must be >= 1");
}

double wardrop_gap(const std::vector<double>& flows, const WardropProblem& p) {
  if (flows.size() != p.links.size()) throw PreconditionError("one flow per link is required");
  double total = 0.0;
  for (double f : flows) {
    if (!(f >= -kUsed)) throw PreconditionError("infeasible flow: negative or NaN entry");
    total += f;
  }
  if (std::abs(total - p.demand) > 1e-9) throw PreconditionError("infeasible flow: flows do not sum to demand");
  double max_used = -std::numeric_limits<double>::infinity();
  double min_all = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < flows.size(); ++e) {
    const double l = p.links[e](flows[e]);
    min_all = std::min(min_all, l);
    if (flows[e] > kUsed) max_used = std::max(max_used, l);
  }
  return std::max(0.0, max_used - min_all);
}

WardropFlow solve_wardrop(const WardropProblem& p) {
  validate(p);
  const std::size_t m = p.links.size();
  WardropFlow out;
  out.flows.assign(m, p.demand / static_cast<double>(m));
  double eta = p.eta;
  std::size_t prev_hi = m, prev_lo = m;

  if (p.trace) {
    *p.trace << "iteration,gap";
    for (std::size_t e = 0; e < m; ++e) *p.trace << ",flow_" << e;
    *p.trace << '\n';
  }
  for (int it = 0;; ++it) {
    std::size_t hi = m, lo = 0;
    for (std::size_t e = 0; e < m; ++e) {
      const double l = p.links[e](out.flows[e]);
      if (out.flows[e] > kUsed && (hi == m || l > p.links[hi](out.flows[hi]))) hi = e;
      if (l < p.links[lo](out.flows[lo])) lo = e;
    }
    const double gap = p.links[hi](out.flows[hi]) - p.links[lo](out.flows[lo]);
    out.gap = std::max(0.0, gap);
    out.iterations = it;
    if (p.trace) {
      *p.trace << it << ',' << out.gap;
      for (double f : out.flows) *p.trace << ',' << f;
      *p.trace << '\n';
    }
    if (out.gap <= p.tol) {
      out.converged = true;
      break;
    }
    if (it >= p.max_iter) break;
    if (hi == prev_lo && lo == prev_hi) eta /= 2;  // overshot: the pair swapped roles
    prev_hi = hi;
    prev_lo = lo;

    const double slope = p.links[hi].b + p.links[lo].b;
    // Full equalising step is gap / slope; without slope the whole flow moves.
    const double delta = slope > 0.0 ? std::min(out.flows[hi], std::max(eta * out.gap / slope, 0.0)) : out.flows[hi];
    out.flows[hi] -= delta;
    out.flows[lo] += delta;
  }
  // Remove rounding drift so the flows sum to demand.
  const double drift = std::accumulate(out.flows.begin(), out.flows.end(), 0.0) - p.demand;
  const auto biggest = std::max_element(out.flows.begin(), out.flows.end());
  *biggest -= drift;
  double common = 0.0;
  for (std::size_t e = 0; e < m; ++e)
    if (out.flows[e] > kUsed) common = std::max(common, p.links[e](out.flows[e]));
  out.common_latency = common;
  return out;
}

}  // namespace entangle

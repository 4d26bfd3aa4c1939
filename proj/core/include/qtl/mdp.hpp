#pragma once

#include <string>
#include <vector>

#include "qtl/birth_death.hpp"
#include "qtl/rate_functions.hpp"

namespace qtl {

/// Unconstrained relaxation: minimize Q + beta1 * C - beta2 * U over stationary policies.
struct LagrangianProblem {
  LagrangianProblem(RateFunction cost_fn, RateFunction utility_fn)
      : cost(std::move(cost_fn)), utility(std::move(utility_fn)) {}

  RateFunction cost;
  RateFunction utility;
  double beta1 = 0.0;
  double beta2 = 0.0;
  std::vector<double> service_actions;  // sorted, distinct
  std::vector<double> arrival_actions;  // sorted, distinct
  double uniformization_rate = 0.0;     // 0 selects max arrival + max service
  QueueLength state_cap = 2000;         // arrivals are disabled at this length
  int max_iterations = 500;
};

/// n evenly spaced rates on [lo, hi], endpoints included.
std::vector<double> uniform_actions(double lo, double hi, int n = 201);

struct SolveResult {
  Policy policy;
  double gain = 0.0;               // per unit time
  std::vector<double> bias;        // h(q), q = 0..state_cap, h at the lowest recurrent length = 0
  std::vector<double> gain_history;
  int iterations = 0;
  bool converged = false;
  bool monotone = true;            // false when truncation or discretization breaks admissibility
  double uniformization_rate = 0.0;
};

/// Average-cost policy iteration on the uniformized, truncated chain.
/// Stops when the improvement bound (per uniformized step) is <= tol or the policy repeats.
SolveResult solve(const LagrangianProblem& lp, double tol = 1e-10);

struct TradeoffPoint {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double c_c = 0.0;     // achieved C
  double u_c = 0.0;     // achieved U
  double q_star = 0.0;  // achieved Q
  bool dominated = false;
  bool monotone = true;
  int iterations = 0;
};

struct TraceFailure {
  double beta1 = 0.0;
  double beta2 = 0.0;
  std::string message;
};

struct TraceResult {
  std::vector<TradeoffPoint> points;  // sorted by c_c
  std::vector<TraceFailure> failures;
};

/// Solves every (beta1, beta2) pair of the grid product and re-evaluates each
/// returned policy exactly. Failed grid points are collected, not fatal.
TraceResult trace_tradeoff(const LagrangianProblem& base, const std::vector<double>& beta1_grid,
                           const std::vector<double>& beta2_grid, double tol = 1e-10);

/// n log-spaced values on [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace qtl

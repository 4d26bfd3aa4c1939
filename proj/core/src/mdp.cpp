#include "qtl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qtl/error.hpp"
#include "qtl/numeric.hpp"
#include "qtl/parallel.hpp"

namespace qtl {

namespace {

constexpr double kTieTol = 1e-12;
constexpr double kOverflow = 1e250;

bool sorted_distinct(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}

// Relative values of a fixed dense policy on {0..n}.
struct Evaluation {
  double gain = 0.0;
  std::vector<double> delta;  // delta[q] = h(q+1) - h(q), q = 0..n-1
  QueueLength lower = 0;
};

Evaluation evaluate(const std::vector<double>& lam, const std::vector<double>& mu, const std::vector<double>& stage) {
  const auto n = static_cast<QueueLength>(lam.size()) - 1;
  const Policy p(RateSchedule::from_dense(lam, 0.0), RateSchedule::from_dense(mu, mu.back()));
  const auto sr = stationary(p, {1e-13, n + 1});
  const QueueLength l = sr.window.lower;
  const QueueLength z = sr.window.upper;

  Evaluation ev;
  ev.lower = l;
  CompensatedSum g;
  for (QueueLength q = l; q <= z; ++q) g.add(sr.prob(q) * stage[static_cast<std::size_t>(q)]);
  ev.gain = g.value();
  const double gain = ev.gain;
  auto c = [&](QueueLength q) { return stage[static_cast<std::size_t>(q)]; };
  auto L = [&](QueueLength q) { return lam[static_cast<std::size_t>(q)]; };
  auto M = [&](QueueLength q) { return mu[static_cast<std::size_t>(q)]; };

  std::vector<double>& d = ev.delta;
  d.assign(static_cast<std::size_t>(n), 0.0);

  // Inside the recurrent window lambda(q) * delta(q) equals both the forward
  // partial sum F(q) = sum_{j<=q} pi(j)(g - c(j)) / pi(q) and the backward one
  // B(q) = sum_{j>q} pi(j)(c(j) - g) / pi(q). Take whichever side sums fewer
  // absolute terms to avoid cancellation.
  if (z > l) {
    const auto m = static_cast<std::size_t>(z - l);
    std::vector<double> fwd(m), fwd_w(m), bwd(m), bwd_w(m);
    double f = 0.0, fw = 0.0;
    bool f_ok = true;
    for (QueueLength q = l; q < z; ++q) {
      const double r = q == l ? 0.0 : M(q) / L(q - 1);
      f = (gain - c(q)) + r * f;
      fw = std::abs(gain - c(q)) + r * fw;
      if (!f_ok || !(std::abs(f) < kOverflow) || !(fw < kOverflow)) f_ok = false;
      fwd[static_cast<std::size_t>(q - l)] = f;
      fwd_w[static_cast<std::size_t>(q - l)] = f_ok ? fw : std::numeric_limits<double>::infinity();
    }
    double b = 0.0, bw = 0.0;
    bool b_ok = true;
    for (QueueLength q = z - 1; q >= l; --q) {
      const double r = L(q) / M(q + 1);
      b = r * ((c(q + 1) - gain) + b);
      bw = r * (std::abs(c(q + 1) - gain) + bw);
      if (!b_ok || !(std::abs(b) < kOverflow) || !(bw < kOverflow)) b_ok = false;
      bwd[static_cast<std::size_t>(q - l)] = b;
      bwd_w[static_cast<std::size_t>(q - l)] = b_ok ? bw : std::numeric_limits<double>::infinity();
    }
    for (QueueLength q = l; q < z; ++q) {
      const auto i = static_cast<std::size_t>(q - l);
      double v = fwd_w[i] <= bwd_w[i] ? fwd[i] : bwd[i];
      if (!std::isfinite(fwd_w[i]) && !std::isfinite(bwd_w[i])) v = std::copysign(kOverflow, fwd[i]);
      d[static_cast<std::size_t>(q)] = v / L(q);
    }
  }
  // Transient lengths below the window drift up into it.
  for (QueueLength q = 0; q < l; ++q) {
    const double prev = q == 0 ? 0.0 : d[static_cast<std::size_t>(q - 1)];
    require(L(q) > 0.0, "policy has a length below its recurrent class with no arrivals");
    d[static_cast<std::size_t>(q)] = (gain - c(q) + M(q) * prev) / L(q);
  }
  // Transient lengths above the window drain down into it.
  for (QueueLength q = n; q > z; --q) {
    if (M(q) == 0.0) {
      fail(ErrorKind::convergence, "policy has more than one recurrent class (no service at length " +
                                       std::to_string(q) + ")");
    }
    const double next = q == n ? 0.0 : d[static_cast<std::size_t>(q)];
    d[static_cast<std::size_t>(q - 1)] = (c(q) - gain + L(q) * next) / M(q);
  }
  return ev;
}

// Strict improvement beyond the relative tie tolerance.
bool better(double v, double best) {
  return !std::isfinite(best) || v < best - kTieTol * std::max(1.0, std::abs(best));
}

}  // namespace

std::vector<double> uniform_actions(double lo, double hi, int n) {
  require(n >= 2 && lo < hi, "uniform action grid needs n >= 2 and lo < hi");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  out.back() = hi;
  return out;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  require(n >= 1 && lo > 0.0 && hi >= lo, "log grid needs n >= 1 and 0 < lo <= hi");
  if (n == 1) return {lo};
  std::vector<double> out(static_cast<std::size_t>(n));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

SolveResult solve(const LagrangianProblem& lp, double tol) {
  require(!lp.service_actions.empty() && !lp.arrival_actions.empty(), "action sets must be non-empty");
  require(sorted_distinct(lp.service_actions) && sorted_distinct(lp.arrival_actions),
          "action sets must be sorted and distinct");
  require(lp.service_actions.front() >= 0.0 && lp.arrival_actions.front() >= 0.0, "actions must be non-negative");
  require(lp.beta1 >= 0.0 && lp.beta2 >= 0.0, "multipliers must be non-negative");
  require(lp.state_cap >= 10, "state_cap must be at least 10");
  require(tol > 0.0, "tolerance must be positive");
  const double min_ru = lp.service_actions.back() + lp.arrival_actions.back();
  const double ru = lp.uniformization_rate > 0.0 ? lp.uniformization_rate : min_ru;
  require(ru >= min_ru, "uniformization rate must be at least max arrival + max service");
  require(lp.service_actions.back() > 0.0, "service actions must include a positive rate");

  const std::size_t ns = lp.service_actions.size();
  const std::size_t na = lp.arrival_actions.size();
  std::vector<double> svc_cost(ns), arr_gain(na);
  for (std::size_t i = 0; i < ns; ++i) svc_cost[i] = lp.beta1 * lp.cost.eval(lp.service_actions[i]);
  for (std::size_t j = 0; j < na; ++j) arr_gain[j] = lp.beta2 * lp.utility.eval(lp.arrival_actions[j]);
  // Service at length 0 is forced to 0; its cost enters only if 0 is in the cost domain.
  const double zero_cost = lp.beta1 * lp.cost.eval(0.0);

  const QueueLength n = lp.state_cap;
  const auto sz = static_cast<std::size_t>(n) + 1;
  // Start from the fastest service and the highest admission rate.
  std::vector<std::size_t> s_idx(sz, ns - 1), a_idx(sz, na - 1);
  std::vector<double> lam(sz), mu(sz), stage(sz);

  SolveResult res{Policy(RateSchedule({}, 0.0), RateSchedule({}, 0.0)), 0.0, {}, {}, 0, false};
  res.uniformization_rate = ru;
  Evaluation ev;
  for (int it = 1;; ++it) {
    for (std::size_t q = 0; q < sz; ++q) {
      lam[q] = q == sz - 1 ? 0.0 : lp.arrival_actions[a_idx[q]];
      mu[q] = q == 0 ? 0.0 : lp.service_actions[s_idx[q]];
      const double sc = q == 0 ? zero_cost : svc_cost[s_idx[q]];
      const double ug = q == sz - 1 ? lp.beta2 * lp.utility.eval(0.0) : arr_gain[a_idx[q]];
      stage[q] = static_cast<double>(q) + sc - ug;
    }
    ev = evaluate(lam, mu, stage);
    res.gain_history.push_back(ev.gain);
    res.iterations = it;

    // Improvement: per state, service minimizes beta1 c(a) - a delta(q-1) and
    // arrival minimizes -beta2 u(b) + b delta(q). Ties go to the smaller service
    // and the larger arrival rate.
    bool changed = false;
    double best_bound = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < sz; ++q) {
      double test = static_cast<double>(q);
      if (q == 0) {
        test += zero_cost;
      } else {
        const double dq = ev.delta[q - 1];
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t i = 0; i < ns; ++i) {
          const double v = svc_cost[i] - lp.service_actions[i] * dq;
          if (better(v, best)) {
            best = v;
            arg = i;
          }
        }
        changed = changed || arg != s_idx[q];
        s_idx[q] = arg;
        test += best;
      }
      if (q + 1 < sz) {
        const double dq = ev.delta[q];
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t j = na; j-- > 0;) {
          const double v = -arr_gain[j] + lp.arrival_actions[j] * dq;
          if (better(v, best)) {
            best = v;
            arg = j;
          }
        }
        changed = changed || arg != a_idx[q];
        a_idx[q] = arg;
        test += best;
      } else {
        test -= lp.beta2 * lp.utility.eval(0.0);
      }
      best_bound = std::min(best_bound, test);
    }
    const double gap = (ev.gain - best_bound) / ru;
    if (!changed || gap <= tol) {
      res.converged = true;
      break;
    }
    if (it >= lp.max_iterations) {
      fail(ErrorKind::convergence, "policy iteration did not converge in " + std::to_string(lp.max_iterations) +
                                       " iterations (bound gap " + std::to_string(gap) + ")");
    }
  }

  // Report the evaluated policy together with its relative values.
  res.gain = ev.gain;
  res.bias.assign(sz, 0.0);
  for (QueueLength q = ev.lower + 1; q <= n; ++q) {
    res.bias[static_cast<std::size_t>(q)] = res.bias[static_cast<std::size_t>(q - 1)] + ev.delta[static_cast<std::size_t>(q - 1)];
  }
  for (QueueLength q = ev.lower - 1; q >= 0; --q) {
    res.bias[static_cast<std::size_t>(q)] = res.bias[static_cast<std::size_t>(q + 1)] - ev.delta[static_cast<std::size_t>(q)];
  }
  const RateBounds bounds{lp.arrival_actions.front(), lp.arrival_actions.back(), lp.service_actions.front(),
                          lp.service_actions.back()};
  res.policy = Policy(RateSchedule::from_dense(lam, 0.0), RateSchedule::from_dense(mu, mu.back()), bounds);
  res.monotone = res.policy.is_admissible();
  return res;
}

TraceResult trace_tradeoff(const LagrangianProblem& base, const std::vector<double>& beta1_grid,
                           const std::vector<double>& beta2_grid, double tol) {
  require(!beta1_grid.empty() && !beta2_grid.empty(), "multiplier grids must be non-empty");
  for (double b : beta1_grid) require(b >= 0.0, "multipliers must be non-negative");
  for (double b : beta2_grid) require(b >= 0.0, "multipliers must be non-negative");

  const std::size_t total = beta1_grid.size() * beta2_grid.size();
  std::vector<std::optional<TradeoffPoint>> slots(total);
  std::vector<std::string> errors(total);
  parallel_for(total, [&](std::size_t k) {
    LagrangianProblem lp = base;
    lp.beta1 = beta1_grid[k / beta2_grid.size()];
    lp.beta2 = beta2_grid[k % beta2_grid.size()];
    try {
      const auto sol = solve(lp, tol);
      const auto sr = stationary(sol.policy);
      const auto m = metrics(sol.policy, sr, lp.cost, lp.utility);
      TradeoffPoint pt;
      pt.beta1 = lp.beta1;
      pt.beta2 = lp.beta2;
      pt.c_c = m.Cbar;
      pt.u_c = m.Ubar;
      pt.q_star = m.Qbar;
      pt.monotone = sol.monotone;
      pt.iterations = sol.iterations;
      slots[k] = pt;
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  });

  TraceResult out;
  for (std::size_t k = 0; k < total; ++k) {
    if (slots[k]) {
      out.points.push_back(*slots[k]);
    } else {
      out.failures.push_back({beta1_grid[k / beta2_grid.size()], beta2_grid[k % beta2_grid.size()], errors[k]});
    }
  }
  std::stable_sort(out.points.begin(), out.points.end(),
                   [](const TradeoffPoint& a, const TradeoffPoint& b) { return a.c_c < b.c_c; });
  for (auto& p : out.points) {
    for (const auto& o : out.points) {
      const bool weakly = o.c_c <= p.c_c && o.u_c >= p.u_c && o.q_star <= p.q_star;
      const bool strictly = o.c_c < p.c_c - kTieTol || o.u_c > p.u_c + kTieTol || o.q_star < p.q_star - kTieTol;
      if (weakly && strictly) {
        p.dominated = true;
        break;
      }
    }
  }
  return out;
}

}  // namespace qtl

#include "qtl/sim.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "qtl/error.hpp"
#include "qtl/numeric.hpp"
#include "qtl/parallel.hpp"

namespace qtl {
namespace {

constexpr double kZ95 = 1.959963984540054;

struct RunTotals {
  double Q = 0.0;
  double C = 0.0;
  double U = 0.0;
  std::uint64_t events = 0;
};

// Per-state rates and rewards, filled on first visit.
class StateCache {
 public:
  struct Entry {
    double lambda = 0.0;
    double mu = 0.0;
    double c = 0.0;
    double u = 0.0;
  };

  StateCache(const Policy& p, const RateFunction& cost, const RateFunction& utility)
      : p_(p), cost_(cost), utility_(utility) {}

  const Entry& at(QueueLength q) {
    const auto i = static_cast<std::size_t>(q);
    while (entries_.size() <= i) {
      const auto s = static_cast<QueueLength>(entries_.size());
      Entry e;
      e.lambda = p_.arrival(s);
      e.mu = p_.service(s);
      e.c = cost_.eval(e.mu);
      e.u = utility_.eval(e.lambda);
      entries_.push_back(e);
    }
    return entries_[i];
  }

 private:
  const Policy& p_;
  const RateFunction& cost_;
  const RateFunction& utility_;
  std::vector<Entry> entries_;
};

RunTotals run_once(const Policy& p, const SimConfig& cfg, const RateFunction& cost, const RateFunction& utility,
                   QueueLength start, int rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(rep)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  StateCache cache(p, cost, utility);

  const double t0 = cfg.warmup_fraction * cfg.horizon;
  CompensatedSum q_int, c_int, u_int;
  RunTotals out;
  QueueLength q = start;
  double t = 0.0;
  while (t < cfg.horizon) {
    const auto& e = cache.at(q);
    const double total = e.lambda + e.mu;
    if (!(total > 0.0)) fail(ErrorKind::unstable, "simulation reached absorbing state q = " + std::to_string(q));
    const double hold = std::exponential_distribution<double>(total)(rng);
    const double lo = std::max(t, t0);
    const double hi = std::min(t + hold, cfg.horizon);
    if (hi > lo) {
      const double w = hi - lo;
      q_int.add(w * static_cast<double>(q));
      c_int.add(w * e.c);
      u_int.add(w * e.u);
    }
    t += hold;
    if (unit(rng) * total < e.lambda) {
      ++q;
    } else {
      --q;
    }
    ++out.events;
  }
  const double span = cfg.horizon - t0;
  out.Q = q_int.value() / span;
  out.C = c_int.value() / span;
  out.U = u_int.value() / span;
  return out;
}

Estimate summarize(const std::vector<double>& xs) {
  Estimate e;
  const auto n = static_cast<double>(xs.size());
  e.mean = pairwise_sum(xs) / n;
  if (xs.size() < 2) {
    e.half_width = std::numeric_limits<double>::infinity();
    return e;
  }
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - e.mean) * (xs[i] - e.mean);
  const double var = pairwise_sum(sq) / (n - 1.0);
  e.half_width = kZ95 * std::sqrt(var / n);
  return e;
}

}  // namespace

bool Estimate::covers(double exact, double multiple) const noexcept {
  return std::abs(mean - exact) <= multiple * half_width;
}

SimEstimate simulate(const Policy& p, const SimConfig& cfg, const RateFunction& cost, const RateFunction& utility) {
  require(cfg.horizon > 0.0 && std::isfinite(cfg.horizon), "simulation horizon must be positive");
  require(cfg.replications >= 1, "simulation needs at least one replication");
  require(cfg.warmup_fraction >= 0.0 && cfg.warmup_fraction < 1.0, "warmup fraction must lie in [0, 1)");
  const QueueLength start = recurrent_window(p).lower;

  const auto n = static_cast<std::size_t>(cfg.replications);
  std::vector<RunTotals> runs(n);
  parallel_for(n, [&](std::size_t i) { runs[i] = run_once(p, cfg, cost, utility, start, static_cast<int>(i)); });

  std::vector<double> qs(n), cs(n), us(n);
  SimEstimate out;
  for (std::size_t i = 0; i < n; ++i) {
    qs[i] = runs[i].Q;
    cs[i] = runs[i].C;
    us[i] = runs[i].U;
    out.events += runs[i].events;
  }
  out.Q = summarize(qs);
  out.C = summarize(cs);
  out.U = summarize(us);
  out.replications = cfg.replications;
  return out;
}

}  // namespace qtl

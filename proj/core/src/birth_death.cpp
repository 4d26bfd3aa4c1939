#include "qtl/birth_death.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qtl/error.hpp"
#include "qtl/numeric.hpp"

namespace qtl {

namespace {

constexpr double kBoundSlack = 1e-12;

std::string num(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

// Memoizes f(r) over runs of equal rates.
class CachedEval {
 public:
  explicit CachedEval(const RateFunction& f) : f_(f) {}
  double operator()(double r) {
    if (!has_ || r != last_rate_) {
      last_value_ = f_.eval(r);
      last_rate_ = r;
      has_ = true;
    }
    return last_value_;
  }

 private:
  const RateFunction& f_;
  bool has_ = false;
  double last_rate_ = 0.0;
  double last_value_ = 0.0;
};

}  // namespace

// ---------------------------------------------------------------------------
// RateSchedule

RateSchedule::RateSchedule(std::vector<RatePiece> pieces, double tail) : pieces_(std::move(pieces)), tail_(tail) {
  std::sort(pieces_.begin(), pieces_.end(), [](const RatePiece& a, const RatePiece& b) { return a.lo < b.lo; });
  require(std::isfinite(tail_) && tail_ >= 0.0, "tail rate must be finite and non-negative");
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& p = pieces_[i];
    require(p.lo >= 0 && p.lo <= p.hi, "rate piece needs 0 <= q_lo <= q_hi");
    require(std::isfinite(p.rate) && p.rate >= 0.0, "rates must be finite and non-negative");
    if (i > 0) require(pieces_[i - 1].hi < p.lo, "rate pieces overlap");
  }
}

RateSchedule RateSchedule::from_dense(const std::vector<double>& rates, double tail) {
  std::vector<RatePiece> pieces;
  for (std::size_t q = 0; q < rates.size(); ++q) {
    const auto qq = static_cast<QueueLength>(q);
    if (!pieces.empty() && pieces.back().rate == rates[q] && pieces.back().hi + 1 == qq) {
      pieces.back().hi = qq;
    } else {
      pieces.push_back({qq, qq, rates[q]});
    }
  }
  // Trailing pieces equal to the tail are redundant.
  while (!pieces.empty() && pieces.back().rate == tail) pieces.pop_back();
  return RateSchedule(std::move(pieces), tail);
}

double RateSchedule::at(QueueLength q) const {
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), q,
                             [](QueueLength x, const RatePiece& p) { return x < p.lo; });
  if (it != pieces_.begin()) {
    const auto& p = *(it - 1);
    if (q <= p.hi) return p.rate;
  }
  return tail_;
}

double RateSchedule::max_rate() const {
  double m = tail_;
  for (const auto& p : pieces_) m = std::max(m, p.rate);
  return m;
}

// ---------------------------------------------------------------------------
// Policy

Policy::Policy(RateSchedule arrival, RateSchedule service, std::optional<RateBounds> bounds, std::string label)
    : arrival_(std::move(arrival)), service_(std::move(service)), label_(std::move(label)) {
  for (const auto& p : service_.pieces()) {
    require(p.lo > 0 || p.rate == 0.0, "service rate at queue length 0 must be 0");
  }
  if (bounds) {
    bounds_ = *bounds;
    require(bounds_.arrival_min >= 0.0 && bounds_.arrival_min <= bounds_.arrival_max,
            "arrival bounds need 0 <= r_a_min <= r_a_max");
    require(bounds_.service_min >= 0.0 && bounds_.service_min <= bounds_.service_max,
            "service bounds need 0 <= r_min <= r_max");
    require(arrival_.max_rate() <= bounds_.arrival_max + kBoundSlack,
            "arrival rate " + num(arrival_.max_rate()) + " exceeds r_a_max " + num(bounds_.arrival_max));
    require(service_.max_rate() <= bounds_.service_max + kBoundSlack,
            "service rate " + num(service_.max_rate()) + " exceeds r_max " + num(bounds_.service_max));
  } else {
    bounds_.arrival_max = arrival_.max_rate();
    bounds_.service_max = service_.max_rate();
  }
}

QueueLength Policy::horizon() const noexcept { return std::max(arrival_.horizon(), service_.horizon()); }

std::vector<double> Policy::arrival_rates(QueueLength n) const {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (QueueLength q = 0; q < n; ++q) out[static_cast<std::size_t>(q)] = arrival(q);
  return out;
}

std::vector<double> Policy::service_rates(QueueLength n) const {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (QueueLength q = 0; q < n; ++q) out[static_cast<std::size_t>(q)] = service(q);
  return out;
}

bool Policy::is_admissible() const {
  const QueueLength h = horizon() + 1;
  for (QueueLength q = 0; q < h; ++q) {
    if (service(q + 1) < service(q)) return false;
    if (arrival(q + 1) > arrival(q)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Recurrent class and stationary distribution

RecurrentWindow recurrent_window(const Policy& p) {
  // Maximal communicating intervals are split where lambda(q) == 0 or mu(q+1) == 0.
  // From q0 = 0 the chain ends in the lowest closed interval: one whose lower end
  // cannot move down (mu == 0) and whose upper end cannot move up (lambda == 0).
  const QueueLength h = p.horizon();
  QueueLength start = 0;
  for (QueueLength q = 0;; ++q) {
    const double lam = p.arrival(q);
    const double mu_next = p.service(q + 1);
    const bool start_closed = start == 0 || p.service(start) == 0.0;
    if (q >= h) {
      // Constant tail from here on.
      const double lt = p.arrival_rule().tail();
      const double mt = p.service_rule().tail();
      if (lt > 0.0 && mt > 0.0) {
        if (!start_closed) {
          fail(ErrorKind::unstable, "no closed recurrent class reachable from queue length 0");
        }
        if (lt >= mt) {
          fail(ErrorKind::unstable, "unstable tail: lambda " + num(lt) + " >= mu " + num(mt) + " beyond horizon");
        }
        return {start, kUnbounded};
      }
      if (lt == 0.0) {
        if (start_closed) return {start, q};
        fail(ErrorKind::unstable, "no closed recurrent class reachable from queue length 0");
      }
      fail(ErrorKind::unstable, "queue grows without bound: zero service on the tail");
    }
    if (lam > 0.0 && mu_next > 0.0) continue;
    if (lam == 0.0 && start_closed) return {start, q};
    start = q + 1;
  }
}

StationaryResult stationary(const Policy& p, const StationaryOptions& opts) {
  require(opts.tail_tol > 0.0 && opts.tail_tol <= 1e-6, "tail_tol must lie in (0, 1e-6]");
  StationaryResult sr;
  sr.window = recurrent_window(p);
  const QueueLength lo = sr.window.lower;

  std::vector<double> logw{0.0};
  auto grow_to = [&](QueueLength last) {
    if (last - lo + 1 > opts.max_states) {
      fail(ErrorKind::capacity, "stationary window needs " + std::to_string(last - lo + 1) +
                                    " states, above the cap of " + std::to_string(opts.max_states));
    }
    logw.reserve(static_cast<std::size_t>(last - lo + 1));
    for (QueueLength q = lo + static_cast<QueueLength>(logw.size()) - 1; q < last; ++q) {
      logw.push_back(logw.back() + std::log(p.arrival(q)) - std::log(p.service(q + 1)));
    }
  };

  double log_z = 0.0;
  if (sr.window.bounded()) {
    grow_to(sr.window.upper);
    sr.q_max = sr.window.upper;
    const double m = *std::max_element(logw.begin(), logw.end());
    CompensatedSum z;
    for (double lw : logw) z.add(std::exp(lw - m));
    log_z = m + std::log(z.value());
    sr.tail_mass_bound = 0.0;
    sr.tail_ratio = 0.0;
  } else {
    const QueueLength q0 = std::max(p.horizon(), lo);
    grow_to(q0);
    const double rho = p.arrival_rule().tail() / p.service_rule().tail();
    const double log_rho = std::log(rho);
    const double log_tail_factor = log_rho - std::log1p(-rho);  // log(rho / (1 - rho))
    const double lw0 = logw.back();
    const double m = std::max(*std::max_element(logw.begin(), logw.end()), lw0 + log_tail_factor);
    CompensatedSum z;
    for (double lw : logw) z.add(std::exp(lw - m));
    z.add(std::exp(lw0 + log_tail_factor - m));
    log_z = m + std::log(z.value());
    // Smallest n with w(q0) rho^(n+1) / (1 - rho) / Z < tail_tol.
    const double need = (std::log(opts.tail_tol) - lw0 - log_tail_factor + log_z) / log_rho;
    const double n_real = std::max(0.0, std::ceil(need) + 1.0);
    if (n_real > static_cast<double>(opts.max_states)) {
      const double achieved = std::exp(lw0 + log_tail_factor + log_rho * static_cast<double>(opts.max_states) - log_z);
      fail(ErrorKind::capacity, "tail ratio " + num(rho) + " too close to 1: reaching tail_tol needs more than " +
                                    std::to_string(opts.max_states) + " states (achieved tail bound " +
                                    num(achieved) + ")");
    }
    const auto n = static_cast<QueueLength>(n_real);
    grow_to(q0 + n);
    sr.q_max = q0 + n;
    sr.tail_ratio = rho;
    sr.tail_mass_bound = std::exp(lw0 + log_rho * static_cast<double>(n) + log_tail_factor - log_z);
  }

  sr.pi.resize(logw.size());
  for (std::size_t i = 0; i < logw.size(); ++i) sr.pi[i] = std::exp(logw[i] - log_z);
  return sr;
}

Metrics metrics(const Policy& p, const StationaryResult& sr, const RateFunction& cost, const RateFunction& utility) {
  CompensatedSum q_sum, c_sum, u_sum, a_sum, s_sum;
  CachedEval c(cost);
  CachedEval u(utility);
  for (std::size_t i = 0; i < sr.pi.size(); ++i) {
    const QueueLength q = sr.window.lower + static_cast<QueueLength>(i);
    const double w = sr.pi[i];
    const double lam = p.arrival(q);
    const double mu = p.service(q);
    q_sum.add(static_cast<double>(q) * w);
    c_sum.add(c(mu) * w);
    u_sum.add(u(lam) * w);
    a_sum.add(lam * w);
    s_sum.add(mu * w);
  }
  Metrics m;
  if (sr.tail_mass_bound > 0.0) {
    // Exact geometric tail beyond q_max.
    const double rho = sr.tail_ratio;
    const double last = sr.pi.back();
    const double mass = sr.tail_mass_bound;
    const double qm = static_cast<double>(sr.q_max);
    const double q_tail = last * (qm * rho / (1.0 - rho) + rho / ((1.0 - rho) * (1.0 - rho)));
    const double lt = p.arrival_rule().tail();
    const double mt = p.service_rule().tail();
    q_sum.add(q_tail);
    c_sum.add(c(mt) * mass);
    u_sum.add(u(lt) * mass);
    a_sum.add(lt * mass);
    s_sum.add(mt * mass);
    m.truncation_error = q_tail;
  }
  m.Qbar = q_sum.value();
  m.Cbar = c_sum.value();
  m.Ubar = u_sum.value();
  m.mean_arrival = a_sum.value();
  m.mean_service = s_sum.value();
  m.Dbar = m.mean_arrival > 0.0 ? m.Qbar / m.mean_arrival : 0.0;
  return m;
}

// ---------------------------------------------------------------------------

const char* to_string(Feasibility f) noexcept {
  switch (f) {
    case Feasibility::feasible: return "feasible";
    case Feasibility::infeasible: return "infeasible";
    case Feasibility::boundary: return "boundary";
  }
  return "?";
}

FeasibilityReport feasibility(const RateFunction& cost, const RateFunction& utility, double c_c, double u_c) {
  require(c_c >= 0.0 && u_c >= 0.0, "constraints c_c and u_c must be non-negative");
  FeasibilityReport r;
  r.cost_inverse = cost.inverse(c_c);
  r.utility_inverse = utility.inverse(u_c);
  r.min_cost = cost.eval(std::clamp(r.utility_inverse, cost.domain().lo, cost.domain().hi));
  const double diff = r.cost_inverse - r.utility_inverse;
  if (std::abs(diff) <= 1e-12) {
    r.status = Feasibility::boundary;
  } else {
    r.status = diff < 0.0 ? Feasibility::infeasible : Feasibility::feasible;
  }
  return r;
}

QueueLengthBound qlength_upper_bound(const Policy& p) {
  require(p.is_admissible(), "queue-length bound needs an admissible policy");
  const auto w = recurrent_window(p);
  require(w.lower == 0 && !w.bounded(), "queue-length bound needs a policy irreducible on all queue lengths");
  const double ra = p.bounds().arrival_max;
  const double rs = p.bounds().service_max;
  QueueLengthBound best;
  best.bound = std::numeric_limits<double>::infinity();
  const QueueLength h = std::max<QueueLength>(p.horizon(), 1);
  for (QueueLength q = 1; q <= h; ++q) {
    const double eps = p.service(q) - p.arrival(q);
    if (eps <= 0.0) continue;
    const double b = static_cast<double>(q) * (eps + ra) / eps + (rs + ra) / (2.0 * eps);
    if (b < best.bound) best = {b, q, eps};
  }
  if (!std::isfinite(best.bound)) fail(ErrorKind::invalid_argument, "no queue length with positive drift");
  return best;
}

}  // namespace qtl

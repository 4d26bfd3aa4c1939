#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qtl/rate_functions.hpp"

namespace qtl {

using QueueLength = std::int64_t;

/// A constant rate over the inclusive queue-length range [lo, hi].
struct RatePiece {
  QueueLength lo = 0;
  QueueLength hi = 0;
  double rate = 0.0;

  friend bool operator==(const RatePiece&, const RatePiece&) = default;
};

/// Queue-length-indexed rate rule: piecewise constant up to a horizon, then `tail`.
/// Lengths not covered by a piece take the tail rate.
class RateSchedule {
 public:
  RateSchedule() = default;
  RateSchedule(std::vector<RatePiece> pieces, double tail);

  /// Compresses a dense per-length vector (index = queue length) into pieces.
  static RateSchedule from_dense(const std::vector<double>& rates, double tail);

  double at(QueueLength q) const;
  double tail() const noexcept { return tail_; }
  const std::vector<RatePiece>& pieces() const noexcept { return pieces_; }

  /// First length from which the rate is constant (one past the last piece).
  QueueLength horizon() const noexcept { return pieces_.empty() ? 0 : pieces_.back().hi + 1; }

  double max_rate() const;

 private:
  std::vector<RatePiece> pieces_;
  double tail_ = 0.0;
};

struct RateBounds {
  double arrival_min = 0.0;  // r_{a,min}
  double arrival_max = 0.0;  // r_{a,max}
  double service_min = 0.0;  // r_min
  double service_max = 0.0;  // r_max
};

/// A stationary deterministic policy (lambda(q), mu(q)) with mu(0) = 0.
class Policy {
 public:
  /// Bounds default to the largest rates used by the rules.
  Policy(RateSchedule arrival, RateSchedule service, std::optional<RateBounds> bounds = std::nullopt,
         std::string label = {});

  double arrival(QueueLength q) const { return arrival_.at(q); }
  double service(QueueLength q) const { return q == 0 ? 0.0 : service_.at(q); }

  const RateSchedule& arrival_rule() const noexcept { return arrival_; }
  const RateSchedule& service_rule() const noexcept { return service_; }
  const RateBounds& bounds() const noexcept { return bounds_; }
  const std::string& label() const noexcept { return label_; }

  QueueLength horizon() const noexcept;

  /// Dense arrival / service rates for q = 0..n-1.
  std::vector<double> arrival_rates(QueueLength n) const;
  std::vector<double> service_rates(QueueLength n) const;

  /// mu non-decreasing and lambda non-increasing in q.
  bool is_admissible() const;

 private:
  RateSchedule arrival_;
  RateSchedule service_;
  RateBounds bounds_{};
  std::string label_;
};

inline constexpr QueueLength kUnbounded = std::numeric_limits<QueueLength>::max();

/// Recurrent class {lower, ..., upper}; upper == kUnbounded when the class is infinite.
struct RecurrentWindow {
  QueueLength lower = 0;
  QueueLength upper = kUnbounded;

  bool bounded() const noexcept { return upper != kUnbounded; }
};

RecurrentWindow recurrent_window(const Policy& p);

struct StationaryResult {
  RecurrentWindow window;
  QueueLength q_max = 0;        // last stored length
  std::vector<double> pi;       // pi[i] = Pr{Q = window.lower + i}
  double tail_mass_bound = 0.0; // certified mass beyond q_max
  double tail_ratio = 0.0;      // lambda/mu on the constant tail (0 for bounded windows)

  double prob(QueueLength q) const noexcept {
    if (q < window.lower || q > q_max) return 0.0;
    return pi[static_cast<std::size_t>(q - window.lower)];
  }
  QueueLength first() const noexcept { return window.lower; }
};

struct StationaryOptions {
  double tail_tol = 1e-13;
  QueueLength max_states = 20'000'000;
};

/// Stationary distribution by the detailed-balance recursion in log space.
StationaryResult stationary(const Policy& p, const StationaryOptions& opts = {});

struct Metrics {
  double Qbar = 0.0;
  double Cbar = 0.0;
  double Ubar = 0.0;
  double Dbar = 0.0;
  double mean_arrival = 0.0;
  double mean_service = 0.0;
  double truncation_error = 0.0;  // bound on the omitted tail contribution to Qbar
};

/// Time-average queue length, cost and utility rates under pi.
/// The geometric tail beyond q_max is added in closed form.
Metrics metrics(const Policy& p, const StationaryResult& sr, const RateFunction& cost, const RateFunction& utility);

enum class Feasibility { feasible, infeasible, boundary };

const char* to_string(Feasibility f) noexcept;

struct FeasibilityReport {
  Feasibility status = Feasibility::feasible;
  double cost_inverse = 0.0;     // c^{-1}(c_c)
  double utility_inverse = 0.0;  // u^{-1}(u_c)
  double min_cost = 0.0;         // c(u^{-1}(u_c))
};

FeasibilityReport feasibility(const RateFunction& cost, const RateFunction& utility, double c_c, double u_c);

struct QueueLengthBound {
  double bound = 0.0;
  QueueLength q_eps = 0;
  double drift = 0.0;
};

/// Lyapunov-drift bound on the mean queue length of an irreducible admissible policy,
/// minimized over every positive-drift length up to the horizon.
QueueLengthBound qlength_upper_bound(const Policy& p);

}  // namespace qtl

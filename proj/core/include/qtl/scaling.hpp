#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qtl/birth_death.hpp"
#include "qtl/policy_families.hpp"
#include "qtl/rate_functions.hpp"

namespace qtl {

struct ScalingSample {
  double U = 0.0;
  double V = 0.0;  // achieved gap to the reference value
  double Qbar = 0.0;
  double Cbar = 0.0;
  double Ubar = 0.0;
};

struct SweepFailure {
  double U = 0.0;
  std::string message;
};

struct SweepResult {
  std::vector<ScalingSample> samples;  // grid order
  std::vector<SweepFailure> failures;
};

/// U_k = 2^-k for k = k_lo..k_hi.
std::vector<double> dyadic_grid(int k_lo = 4, int k_hi = 14);

/// Builds the family at every U, evaluates it exactly and records the gap
/// V = C - c_ref (or u(mu) - U for arrival-choice families).
SweepResult sweep(const FamilySpec& family, const RateFunction& cost, const RateFunction& utility,
                  const std::vector<double>& U_grid);

enum class GrowthModel { constant, log_inv, inv_sqrt, inv, inv_sqrt_log };

const char* to_string(GrowthModel m) noexcept;

/// Regressor x(V) of each model: 1, log(1/V), V^-1/2, V^-1, V^-1/2 log(1/V).
double regressor(GrowthModel m, double V);

struct ModelFit {
  GrowthModel model = GrowthModel::constant;
  double intercept = 0.0;
  double slope = 0.0;
  double residual = 0.0;  // RMS residual / mean |Q|
};

struct ScalingFit {
  GrowthModel model = GrowthModel::constant;
  double intercept = 0.0;
  double slope = 0.0;
  double residual = 0.0;
  std::vector<ModelFit> candidates;
  std::optional<Regime> predicted;
  std::optional<bool> matches;
};

bool model_matches(GrowthModel m, Regime r) noexcept;

/// Least-squares fit of Q against every model with intercept; the smallest
/// relative residual wins, with near-ties going to the simpler model.
ScalingFit classify_regime(const std::vector<ScalingSample>& samples, std::optional<Regime> predicted = std::nullopt);

/// max/min of the last half of `values` (all must be positive).
double bracket_ratio(std::span<const double> values);
inline constexpr double kBracketLimit = 10.0;

/// Coefficient of determination of the least-squares line y ~ a + b x.
double r_squared(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------

/// Some inequalities are identities for particular policies (pi(0) on a linear
/// utility piece), so `pass` tolerates this much relative round-off.
inline constexpr double kAuditRoundoff = 1e-9;

struct AuditCheck {
  std::string name;
  bool applicable = true;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  bool pass = true;     // holds up to relative round-off
  bool strict = true;   // margin > 0
  std::string detail;
};

struct AuditReport {
  double V = 0.0;
  std::vector<AuditCheck> checks;

  bool all_pass() const noexcept;
  bool all_strict() const noexcept;
};

/// Evaluates the stationary-probability inequalities behind the lower bounds
/// on policy `p`: the mass placed away from the operating rate, the boundary
/// mass below the first fast-enough service rate (service choice with constant
/// arrivals), and pi(0) against the gap (arrival choice).
/// `reference` is c(anchor) for service-choice tags and u(anchor) for arrival-choice tags.
AuditReport audit_lower_bound(const Policy& p, const CaseTag& tag, const RateFunction& cost,
                              const RateFunction& utility, double reference);

}  // namespace qtl

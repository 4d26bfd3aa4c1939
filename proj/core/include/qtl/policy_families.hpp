#pragma once

#include <optional>
#include <string>

#include "qtl/birth_death.hpp"
#include "qtl/rate_functions.hpp"

namespace qtl {

// Threshold helpers: the exact integer ceil / floor of log_base(y), with the
// floating-point estimate corrected against base^n in extended precision.
QueueLength ceil_log(double base, double y);
QueueLength floor_log(double base, double y);

// Service-rate families (constant arrival rate lambda).

struct Mc1Params {
  double eps = 0.0;        // sqrt(U)
  double eps_prime = 0.0;  // lambda * eps / (lambda - eps)
  QueueLength q1 = 0;
};
Mc1Params mc1_params(double lambda, double U);

/// Slow service lambda - eps on [1, q1], lambda + eps' on [q1+1, 2 q1], lambda + K beyond.
/// K defaults to (r_max - lambda) / 2 and must satisfy eps' <= K so the policy stays monotone.
Policy mc1_policy(double lambda, double U, std::optional<double> K = std::nullopt, double r_max = 1.0);

/// Service b on [1, q_k], r_max beyond.
Policy mc21_policy(double lambda, double b, double r_max, QueueLength q_k);

QueueLength mc22_threshold(double lambda, double a, double U);
/// Service a on [1, q1], b beyond.
Policy mc22_policy(double lambda, double a, double b, double U);

/// Service lambda (a corner of the cost envelope) on [1, ceil(1/U)], lambda + K beyond;
/// lambda + K must not pass the next corner.
Policy mc23_policy(double lambda, double K, double U, double next_corner);

// Joint arrival and service control around the rate u^{-1}(u_c).

struct LambdaMuParams {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  QueueLength q1 = 0;
  QueueLength K = 0;
};

/// Smallest integer plateau length strictly above 2 (1 + u_inv^2 / eps).
QueueLength lambda_mu_min_plateau(double u_inv, double eps);
double lambda_mu_default_eps(double u_inv, double r_amax);
LambdaMuParams lambda_mu_params(double u_inv, double eps, double U, QueueLength K);
Policy lambda_mu_policy(double u_inv, double eps, double U, QueueLength K, double r_amax = 1.0, double r_max = 1.0);

/// Arrival-rate mirror of the service constructions for the arrival-choice cases
/// (LC1 mirrors mc1, LC2-1 mirrors mc22, LC2-2 mirrors mc23). Service is mu at every q >= 1.
/// This is a stand-in construction, not one taken from the analysis; the policy label says so.
Policy lc_mirror_policy(double mu, const CaseTag& tag, double U, std::optional<double> K = std::nullopt,
                        double r_amax = 1.0);

inline constexpr const char* kMirrorLabelSuffix = " (stand-in, not from the analysis)";

// ---------------------------------------------------------------------------
// A family template: everything except the scale U.

enum class FamilyKind { mc1, mc21, mc22, mc23, lambda_mu, lc_mirror };

const char* to_string(FamilyKind k) noexcept;
FamilyKind parse_family_kind(const std::string& name);

struct FamilySpec {
  FamilyKind kind = FamilyKind::mc1;
  double lambda = 0.0;       // operating arrival rate (mc*)
  double mu = 0.0;           // operating service rate (lc_mirror)
  double a = 0.0;            // segment start (mc22)
  double b = 0.0;            // segment end (mc21, mc22)
  double next_corner = 0.0;  // mc23
  std::optional<double> K;   // rate offset (mc1, mc23, lc_mirror)
  double u_inv = 0.0;        // u^{-1}(u_c) (lambda_mu)
  std::optional<double> eps; // lambda_mu margin
  std::optional<QueueLength> plateau;  // lambda_mu K
  std::optional<CaseTag> tag;          // lc_mirror case
  double r_max = 1.0;
  double r_amax = 1.0;

  Policy build(double U) const;

  /// Threshold q_k used by mc21 for scale U: max(1, ceil(log_{b/lambda}(1/U))).
  QueueLength mc21_threshold(double U) const;

  /// Arrival-choice families measure the gap on the utility side.
  bool utility_gap() const noexcept { return kind == FamilyKind::lc_mirror; }

  /// Rate the family operates around: lambda, u_inv, or mu.
  double operating_rate() const noexcept;

  /// Case of the operating rate against the envelope of the controlled function.
  CaseTag case_tag(const RateFunction& cost, const RateFunction& utility) const;

  /// Reference value of the gap on the envelope: c(lambda), c(u_inv), or u(mu).
  double reference(const RateFunction& cost, const RateFunction& utility) const;
};

}  // namespace qtl

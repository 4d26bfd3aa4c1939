#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qtl {

/// Whether a rate function prices service (convex, c) or rewards arrivals (concave, u).
enum class Role { cost, utility };

enum class FunctionKind {
  power,      // scale * r^exponent; strictly convex/concave unless exponent == 1
  piecewise,  // continuous piecewise-linear through ordered breakpoints
  discrete,   // values known only at a finite set of sample rates
};

struct RatePoint {
  double rate = 0.0;
  double value = 0.0;

  friend bool operator==(const RatePoint&, const RatePoint&) = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double r) const noexcept { return r >= lo && r <= hi; }
  bool interior(double r) const noexcept { return r > lo && r < hi; }
};

/// A cost c(mu) or utility u(lambda) over a closed interval of rates.
///
/// Immutable after construction. Every constructor validates the shape
/// constraints: zero at rate 0 (when 0 is in the domain), strictly increasing,
/// and convex for costs / concave for utilities. Piecewise functions must be a
/// minimal partition, i.e. consecutive slopes differ strictly.
class RateFunction {
 public:
  static RateFunction power(Role role, Interval domain, double exponent, double scale = 1.0);
  static RateFunction piecewise(Role role, std::vector<RatePoint> breakpoints);
  static RateFunction discrete(Role role, std::vector<RatePoint> samples);

  Role role() const noexcept { return role_; }
  FunctionKind kind() const noexcept { return kind_; }
  const Interval& domain() const noexcept { return domain_; }
  double exponent() const noexcept { return exponent_; }
  double scale() const noexcept { return scale_; }

  /// Breakpoints (piecewise) or samples (discrete); empty for power functions.
  const std::vector<RatePoint>& points() const noexcept { return points_; }

  /// Strictly convex (cost) or strictly concave (utility) analytic function.
  bool is_strictly_curved() const noexcept;

  /// Throws on out-of-domain rates and, for discrete functions, on non-sample rates.
  double eval(double r) const;

  /// Slope at r. Analytic for power functions; for piecewise functions the
  /// slope of the segment containing r (right segment at a corner).
  double derivative(double r) const;

  /// Central finite difference with the given step, clamped to the domain.
  double second_derivative(double r, double step = 1e-4) const;

  /// Rate whose value is v, by bisection to machine precision.
  double inverse(double v) const;

  /// Range [f(lo), f(hi)].
  Interval range() const;

  /// Segment slopes of a piecewise function, one per consecutive breakpoint pair.
  std::vector<double> slopes() const;

 private:
  RateFunction() = default;
  void validate() const;
  double eval_unchecked(double r) const;

  Role role_ = Role::cost;
  FunctionKind kind_ = FunctionKind::power;
  Interval domain_{};
  double exponent_ = 1.0;
  double scale_ = 1.0;
  std::vector<RatePoint> points_;
};

/// Greatest convex minorant of a point set as a piecewise-linear cost.
/// Corners are a subset of the input points.
RateFunction lower_convex_envelope(std::span<const RatePoint> points);

/// Least concave majorant of a point set as a piecewise-linear utility.
RateFunction upper_concave_envelope(std::span<const RatePoint> points);

/// Envelope of a discrete function matching its role; piecewise functions are returned as-is.
RateFunction envelope(const RateFunction& f);

// ---------------------------------------------------------------------------
// Case taxonomy

enum class CaseFamily { mc1, mc2_1, mc2_2, mc2_3, lc1, lc2_1, lc2_2 };

enum class Regime { finite, log, inv_sqrt, inv };

const char* to_string(CaseFamily family) noexcept;
const char* to_string(Regime regime) noexcept;
CaseFamily parse_case_family(const std::string& name);
Regime parse_regime(const std::string& name);

struct CaseTag {
  CaseFamily family = CaseFamily::mc1;
  double anchor = 0.0;            // operating rate (lambda for mu-choice, mu for lambda-choice)
  Interval segment{};             // (a, b) of the active segment; (anchor, anchor) at a corner
  std::optional<double> left_corner;   // breakpoint before segment.lo, if any
  std::optional<double> right_corner;  // breakpoint after segment.hi, if any
  Regime predicted = Regime::inv_sqrt;

  bool is_service_choice() const noexcept {
    return family == CaseFamily::mc1 || family == CaseFamily::mc2_1 || family == CaseFamily::mc2_2 ||
           family == CaseFamily::mc2_3;
  }
};

/// Second derivatives below this magnitude violate the C2/U2 curvature assumption.
inline constexpr double kMinCurvature = 1e-8;

/// Classifies an operating rate against a cost (mu-choice) or utility (lambda-choice).
CaseTag classify_case(const RateFunction& f, double operating_rate);

/// The line l(.) used by the lower-bound arguments, plus its slope-gap and curvature constants.
struct SupportLine {
  double slope = 0.0;
  double intercept = 0.0;
  double anchor = 0.0;
  double slope_gap = 0.0;  // m_a; 0 for analytic functions
  double curvature = 0.0;  // a_1 = c''(anchor)/2; 0 for piecewise functions

  double operator()(double r) const noexcept { return intercept + slope * r; }
};

SupportLine support_line(const RateFunction& f, const CaseTag& tag);

}  // namespace qtl

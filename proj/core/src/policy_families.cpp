#include "qtl/policy_families.hpp"

#include <cmath>
#include <sstream>

#include "qtl/error.hpp"

namespace qtl {

namespace {

std::string num(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

long double powl_int(long double base, QueueLength n) { return std::pow(base, static_cast<long double>(n)); }

constexpr QueueLength kMaxThreshold = 100'000'000;

QueueLength checked(long double x, const char* what) {
  if (!(x < static_cast<long double>(kMaxThreshold))) {
    fail(ErrorKind::capacity, std::string(what) + " threshold exceeds " + std::to_string(kMaxThreshold));
  }
  return static_cast<QueueLength>(x);
}

Policy constant_arrivals(double lambda, std::vector<RatePiece> service, double tail, double r_amax, double r_max,
                         std::string label) {
  return Policy(RateSchedule({}, lambda), RateSchedule(std::move(service), tail), RateBounds{0.0, r_amax, 0.0, r_max},
                std::move(label));
}

}  // namespace

QueueLength ceil_log(double base, double y) {
  require(base > 1.0 && y > 0.0, "ceil_log needs base > 1 and y > 0");
  if (y <= 1.0) return 0;
  const long double b = base;
  const long double v = y;
  auto n = checked(std::ceil(std::log(v) / std::log(b)), "log");
  // Smallest n with b^n >= y.
  while (n > 0 && powl_int(b, n - 1) >= v) --n;
  while (powl_int(b, n) < v) ++n;
  return n;
}

QueueLength floor_log(double base, double y) {
  require(base > 1.0 && y >= 1.0, "floor_log needs base > 1 and y >= 1");
  const long double b = base;
  const long double v = y;
  auto n = checked(std::floor(std::log(v) / std::log(b)), "log");
  // Largest n with b^n <= y.
  while (powl_int(b, n + 1) <= v) ++n;
  while (n > 0 && powl_int(b, n) > v) --n;
  return n;
}

// ---------------------------------------------------------------------------

Mc1Params mc1_params(double lambda, double U) {
  require(lambda > 0.0 && U > 0.0, "mc1 needs lambda > 0 and U > 0");
  Mc1Params p;
  p.eps = std::sqrt(U);
  require(p.eps < lambda, "mc1 needs sqrt(U) < lambda (sqrt(U) = " + num(p.eps) + ")");
  p.eps_prime = lambda * p.eps / (lambda - p.eps);
  p.q1 = floor_log(lambda / (lambda - p.eps), 1.0 + p.eps / (U * lambda));
  return p;
}

Policy mc1_policy(double lambda, double U, std::optional<double> K, double r_max) {
  const auto p = mc1_params(lambda, U);
  const double k = K.value_or((r_max - lambda) / 2.0);
  require(k > 0.0 && lambda + k <= r_max + 1e-12, "mc1 needs 0 < K and lambda + K <= r_max");
  require(p.eps_prime <= k, "mc1 needs eps' = " + num(p.eps_prime) + " <= K = " + num(k) + " to stay monotone");
  require(p.q1 >= 1, "mc1 threshold q1 is 0 for U = " + num(U));
  return constant_arrivals(lambda, {{1, p.q1, lambda - p.eps}, {p.q1 + 1, 2 * p.q1, lambda + p.eps_prime}},
                           lambda + k, lambda, r_max, "mc1");
}

Policy mc21_policy(double lambda, double b, double r_max, QueueLength q_k) {
  require(0.0 < lambda && lambda < b && b < r_max, "mc21 needs 0 < lambda < b < r_max");
  require(q_k >= 1, "mc21 needs q_k >= 1");
  return constant_arrivals(lambda, {{1, q_k, b}}, r_max, lambda, r_max, "mc21");
}

QueueLength mc22_threshold(double lambda, double a, double U) {
  require(0.0 < a && a < lambda, "mc22 needs 0 < a < lambda");
  require(U > 0.0, "mc22 needs U > 0");
  return ceil_log(lambda / a, 1.0 + ((lambda - a) / lambda) / U);
}

Policy mc22_policy(double lambda, double a, double b, double U) {
  require(0.0 < a && a < lambda && lambda < b, "mc22 needs 0 < a < lambda < b");
  const QueueLength q1 = std::max<QueueLength>(1, mc22_threshold(lambda, a, U));
  return constant_arrivals(lambda, {{1, q1, a}}, b, lambda, b, "mc22");
}

Policy mc23_policy(double lambda, double K, double U, double next_corner) {
  require(lambda > 0.0 && K > 0.0 && U > 0.0, "mc23 needs lambda, K, U > 0");
  require(lambda + K <= next_corner + 1e-12,
          "mc23 needs lambda + K <= next corner " + num(next_corner) + " (K = " + num(K) + ")");
  const QueueLength q1 = checked(std::ceil(1.0L / static_cast<long double>(U)), "mc23");
  return constant_arrivals(lambda, {{1, q1, lambda}}, lambda + K, lambda, next_corner, "mc23");
}

// ---------------------------------------------------------------------------

QueueLength lambda_mu_min_plateau(double u_inv, double eps) {
  require(eps > 0.0, "lambda-mu needs eps > 0");
  return static_cast<QueueLength>(std::floor(2.0 * (1.0 + u_inv * u_inv / eps))) + 1;
}

double lambda_mu_default_eps(double u_inv, double r_amax) { return std::min(0.05, (r_amax - u_inv) / 2.0); }

LambdaMuParams lambda_mu_params(double u_inv, double eps, double U, QueueLength K) {
  require(eps > 0.0, "lambda-mu needs eps > 0");
  require(U > 0.0 && U < u_inv, "lambda-mu needs 0 < U < u_inv");
  require(static_cast<double>(K) > 2.0 * (1.0 + u_inv * u_inv / eps),
          "lambda-mu needs K > 2(1 + u_inv^2/eps) = " + num(2.0 * (1.0 + u_inv * u_inv / eps)));
  LambdaMuParams p;
  p.mu1 = u_inv - U;
  p.mu2 = u_inv + U;
  p.lambda1 = u_inv + eps;
  p.lambda2 = u_inv - eps;
  require(p.lambda2 >= 0.0, "lambda-mu needs eps <= u_inv");
  p.q1 = std::max<QueueLength>(1, ceil_log(p.lambda1 / p.mu1, 1.0 + ((p.lambda1 - p.mu1) / p.lambda1) / U));
  p.K = K;
  return p;
}

Policy lambda_mu_policy(double u_inv, double eps, double U, QueueLength K, double r_amax, double r_max) {
  const auto p = lambda_mu_params(u_inv, eps, U, K);
  require(p.lambda1 <= r_amax + 1e-12, "lambda-mu needs u_inv + eps <= r_a_max");
  require(p.mu2 <= r_max + 1e-12, "lambda-mu needs u_inv + U <= r_max");
  return Policy(RateSchedule({{0, p.q1 - 1, p.lambda1}, {p.q1, p.q1 + K, u_inv}}, p.lambda2),
                RateSchedule({{1, p.q1, p.mu1}}, p.mu2), RateBounds{0.0, r_amax, 0.0, r_max}, "lambda-mu");
}

// ---------------------------------------------------------------------------

Policy lc_mirror_policy(double mu, const CaseTag& tag, double U, std::optional<double> K, double r_amax) {
  require(!tag.is_service_choice(), "lc_mirror needs an arrival-choice case tag");
  require(mu > 0.0 && U > 0.0, "lc_mirror needs mu > 0 and U > 0");
  std::vector<RatePiece> arrivals;
  double tail = 0.0;
  std::string label;
  switch (tag.family) {
    case CaseFamily::lc1: {
      const double eps = std::sqrt(U);
      const double eps_prime = mu * eps / (mu + eps);
      const double k = K.value_or(mu / 2.0);
      require(mu + eps <= r_amax + 1e-12, "lc_mirror LC1 needs mu + sqrt(U) <= r_a_max");
      require(k >= eps_prime && k <= mu, "lc_mirror LC1 needs eps' <= K <= mu");
      const QueueLength q1 = floor_log((mu + eps) / mu, 1.0 + eps / (U * mu));
      require(q1 >= 1, "lc_mirror LC1 threshold q1 is 0 for U = " + num(U));
      arrivals = {{0, q1 - 1, mu + eps}, {q1, 2 * q1 - 1, mu - eps_prime}};
      tail = mu - k;
      label = "lc1-mirror";
      break;
    }
    case CaseFamily::lc2_1: {
      const double a = tag.segment.lo;
      const double b = tag.segment.hi;
      require(a < mu && mu < b, "lc_mirror LC2-1 needs mu inside the utility segment");
      require(b <= r_amax + 1e-12, "lc_mirror LC2-1 needs b <= r_a_max");
      const QueueLength q1 = std::max<QueueLength>(1, ceil_log(b / mu, 1.0 + ((b - mu) / b) / U));
      arrivals = {{0, q1 - 1, b}};
      tail = a;
      label = "lc2-1-mirror";
      break;
    }
    case CaseFamily::lc2_2: {
      const double prev = tag.left_corner.value_or(0.0);
      const double k = K.value_or(mu - prev);
      require(k > 0.0 && mu - k >= prev - 1e-12, "lc_mirror LC2-2 needs mu - K >= previous corner");
      const QueueLength q1 = checked(std::ceil(1.0L / static_cast<long double>(U)), "lc_mirror");
      arrivals = {{0, q1 - 1, mu}};
      tail = std::max(0.0, mu - k);
      label = "lc2-2-mirror";
      break;
    }
    default:
      fail(ErrorKind::invalid_argument, "lc_mirror needs an arrival-choice case tag");
  }
  return Policy(RateSchedule(std::move(arrivals), tail), RateSchedule({}, mu), RateBounds{0.0, r_amax, 0.0, mu},
                label + kMirrorLabelSuffix);
}

// ---------------------------------------------------------------------------

const char* to_string(FamilyKind k) noexcept {
  switch (k) {
    case FamilyKind::mc1: return "mc1";
    case FamilyKind::mc21: return "mc21";
    case FamilyKind::mc22: return "mc22";
    case FamilyKind::mc23: return "mc23";
    case FamilyKind::lambda_mu: return "lmu";
    case FamilyKind::lc_mirror: return "lc";
  }
  return "?";
}

FamilyKind parse_family_kind(const std::string& name) {
  for (auto k : {FamilyKind::mc1, FamilyKind::mc21, FamilyKind::mc22, FamilyKind::mc23, FamilyKind::lambda_mu,
                 FamilyKind::lc_mirror}) {
    if (name == to_string(k)) return k;
  }
  fail(ErrorKind::invalid_argument, "unknown policy family '" + name + "' (expected mc1|mc21|mc22|mc23|lmu|lc)");
}

QueueLength FamilySpec::mc21_threshold(double U) const {
  require(U > 0.0, "U must be positive");
  require(b > lambda && lambda > 0.0, "mc21 needs 0 < lambda < b");
  return std::max<QueueLength>(1, ceil_log(b / lambda, 1.0 / U));
}

Policy FamilySpec::build(double U) const {
  switch (kind) {
    case FamilyKind::mc1: return mc1_policy(lambda, U, K, r_max);
    case FamilyKind::mc21: return mc21_policy(lambda, b, r_max, mc21_threshold(U));
    case FamilyKind::mc22: return mc22_policy(lambda, a, b, U);
    case FamilyKind::mc23: return mc23_policy(lambda, K.value_or(next_corner - lambda), U, next_corner);
    case FamilyKind::lambda_mu: {
      const double e = eps.value_or(lambda_mu_default_eps(u_inv, r_amax));
      return lambda_mu_policy(u_inv, e, U, plateau.value_or(lambda_mu_min_plateau(u_inv, e)), r_amax, r_max);
    }
    case FamilyKind::lc_mirror:
      require(tag.has_value(), "lc family needs a case tag");
      return lc_mirror_policy(mu, *tag, U, K, r_amax);
  }
  fail(ErrorKind::invalid_argument, "unknown family");
}

namespace {

RateFunction shape(const RateFunction& f) { return f.kind() == FunctionKind::discrete ? envelope(f) : f; }

}  // namespace

double FamilySpec::operating_rate() const noexcept {
  switch (kind) {
    case FamilyKind::lambda_mu: return u_inv;
    case FamilyKind::lc_mirror: return mu;
    default: return lambda;
  }
}

CaseTag FamilySpec::case_tag(const RateFunction& cost, const RateFunction& utility) const {
  if (kind == FamilyKind::lc_mirror) return tag ? *tag : classify_case(shape(utility), mu);
  return classify_case(shape(cost), operating_rate());
}

double FamilySpec::reference(const RateFunction& cost, const RateFunction& utility) const {
  if (kind == FamilyKind::lc_mirror) return shape(utility).eval(mu);
  return shape(cost).eval(operating_rate());
}

}  // namespace qtl

#include "qtl/rate_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qtl/error.hpp"

namespace qtl {

namespace {

constexpr double kRateTol = 1e-12;

std::string fmt_rate(double r) {
  std::ostringstream os;
  os.precision(12);
  os << r;
  return os.str();
}

bool same_rate(double a, double b) { return std::abs(a - b) <= kRateTol; }

std::vector<RatePoint> sorted_points(std::span<const RatePoint> points) {
  std::vector<RatePoint> out(points.begin(), points.end());
  std::sort(out.begin(), out.end(), [](const RatePoint& a, const RatePoint& b) { return a.rate < b.rate; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    require(!same_rate(out[i - 1].rate, out[i].rate), "duplicate rate " + fmt_rate(out[i].rate) + " in point set");
  }
  for (const auto& p : out) {
    require(std::isfinite(p.rate) && std::isfinite(p.value), "point set contains non-finite values");
  }
  return out;
}

// Cross product sign of (b - a) x (c - a); <= 0 means b is not strictly below chord a-c.
double turn(const RatePoint& a, const RatePoint& b, const RatePoint& c) {
  return (b.rate - a.rate) * (c.value - a.value) - (b.value - a.value) * (c.rate - a.rate);
}

}  // namespace

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::domain: return "domain";
    case ErrorKind::unstable: return "unstable";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::convergence: return "convergence";
  }
  return "unknown";
}

RateFunction RateFunction::power(Role role, Interval domain, double exponent, double scale) {
  RateFunction f;
  f.role_ = role;
  f.kind_ = FunctionKind::power;
  f.domain_ = domain;
  f.exponent_ = exponent;
  f.scale_ = scale;
  f.validate();
  return f;
}

RateFunction RateFunction::piecewise(Role role, std::vector<RatePoint> breakpoints) {
  RateFunction f;
  f.role_ = role;
  f.kind_ = FunctionKind::piecewise;
  f.points_ = sorted_points(breakpoints);
  require(f.points_.size() >= 2, "piecewise function needs at least 2 breakpoints");
  f.domain_ = {f.points_.front().rate, f.points_.back().rate};
  f.validate();
  return f;
}

RateFunction RateFunction::discrete(Role role, std::vector<RatePoint> samples) {
  RateFunction f;
  f.role_ = role;
  f.kind_ = FunctionKind::discrete;
  f.points_ = sorted_points(samples);
  require(!f.points_.empty(), "discrete function needs at least 1 sample");
  f.domain_ = {f.points_.front().rate, f.points_.back().rate};
  f.validate();
  return f;
}

void RateFunction::validate() const {
  require(std::isfinite(domain_.lo) && std::isfinite(domain_.hi) && domain_.lo >= 0.0 && domain_.lo <= domain_.hi,
          "domain must be a finite interval [lo, hi] with 0 <= lo <= hi");
  switch (kind_) {
    case FunctionKind::power:
      require(domain_.lo < domain_.hi, "power function needs a non-degenerate domain");
      require(std::isfinite(scale_) && scale_ > 0.0, "power function scale must be positive");
      if (role_ == Role::cost) {
        require(std::isfinite(exponent_) && exponent_ >= 1.0, "cost power exponent must be >= 1 (convex)");
      } else {
        require(std::isfinite(exponent_) && exponent_ > 0.0 && exponent_ <= 1.0,
                "utility power exponent must be in (0, 1] (concave)");
      }
      break;
    case FunctionKind::piecewise: {
      const auto s = slopes();
      for (std::size_t i = 0; i < s.size(); ++i) {
        require(s[i] > 0.0, "piecewise function must be strictly increasing");
        if (i == 0) continue;
        if (role_ == Role::cost) {
          require(s[i] > s[i - 1], "piecewise cost must have strictly increasing slopes (convex, minimal partition)");
        } else {
          require(s[i] < s[i - 1],
                  "piecewise utility must have strictly decreasing slopes (concave, minimal partition)");
        }
      }
      break;
    }
    case FunctionKind::discrete:
      for (std::size_t i = 1; i < points_.size(); ++i) {
        require(points_[i].value > points_[i - 1].value, "discrete function must be strictly increasing");
      }
      break;
  }
  if (domain_.contains(0.0) && kind_ != FunctionKind::power) {
    const auto& first = points_.front();
    require(first.rate != 0.0 || first.value == 0.0, "function value at rate 0 must be 0");
  }
}

bool RateFunction::is_strictly_curved() const noexcept {
  return kind_ == FunctionKind::power && exponent_ != 1.0;
}

Interval RateFunction::range() const {
  if (kind_ == FunctionKind::power) return {eval_unchecked(domain_.lo), eval_unchecked(domain_.hi)};
  return {points_.front().value, points_.back().value};
}

std::vector<double> RateFunction::slopes() const {
  std::vector<double> s;
  if (kind_ == FunctionKind::power) return s;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    s.push_back((points_[i].value - points_[i - 1].value) / (points_[i].rate - points_[i - 1].rate));
  }
  return s;
}

double RateFunction::eval_unchecked(double r) const {
  switch (kind_) {
    case FunctionKind::power:
      return r <= 0.0 ? 0.0 : scale_ * std::pow(r, exponent_);
    case FunctionKind::piecewise: {
      auto it = std::upper_bound(points_.begin(), points_.end(), r,
                                 [](double x, const RatePoint& p) { return x < p.rate; });
      if (it == points_.begin()) return points_.front().value;
      if (it == points_.end()) return points_.back().value;
      const auto& a = *(it - 1);
      const auto& b = *it;
      if (r == a.rate) return a.value;
      const double t = (r - a.rate) / (b.rate - a.rate);
      return a.value + (b.value - a.value) * t;
    }
    case FunctionKind::discrete: {
      for (const auto& p : points_) {
        if (same_rate(p.rate, r)) return p.value;
      }
      fail(ErrorKind::domain, "rate " + fmt_rate(r) + " is not a sample of the discrete function");
    }
  }
  return 0.0;
}

double RateFunction::eval(double r) const {
  if (!(r >= domain_.lo - kRateTol && r <= domain_.hi + kRateTol)) {
    fail(ErrorKind::domain,
         "rate " + fmt_rate(r) + " outside domain [" + fmt_rate(domain_.lo) + ", " + fmt_rate(domain_.hi) + "]");
  }
  return eval_unchecked(std::clamp(r, domain_.lo, domain_.hi));
}

double RateFunction::derivative(double r) const {
  if (!domain_.contains(r)) fail(ErrorKind::domain, "rate " + fmt_rate(r) + " outside domain");
  switch (kind_) {
    case FunctionKind::power:
      if (exponent_ == 1.0) return scale_;
      return scale_ * exponent_ * std::pow(r, exponent_ - 1.0);
    case FunctionKind::piecewise: {
      const auto s = slopes();
      auto it = std::upper_bound(points_.begin(), points_.end(), r,
                                 [](double x, const RatePoint& p) { return x < p.rate; });
      std::size_t seg = it == points_.begin() ? 0 : static_cast<std::size_t>(it - points_.begin()) - 1;
      return s[std::min(seg, s.size() - 1)];
    }
    case FunctionKind::discrete:
      fail(ErrorKind::domain, "discrete functions have no derivative; take the envelope first");
  }
  return 0.0;
}

double RateFunction::second_derivative(double r, double step) const {
  if (!domain_.contains(r)) fail(ErrorKind::domain, "rate " + fmt_rate(r) + " outside domain");
  if (kind_ == FunctionKind::discrete) {
    fail(ErrorKind::domain, "discrete functions have no derivative; take the envelope first");
  }
  const double lo = std::max(domain_.lo, r - step);
  const double hi = std::min(domain_.hi, r + step);
  const double h = std::min(r - lo, hi - r);
  if (h <= 0.0) fail(ErrorKind::domain, "second derivative needs an interior rate");
  return (eval_unchecked(r + h) - 2.0 * eval_unchecked(r) + eval_unchecked(r - h)) / (h * h);
}

double RateFunction::inverse(double v) const {
  if (kind_ == FunctionKind::discrete) {
    fail(ErrorKind::domain, "discrete functions are not invertible; take the envelope first");
  }
  const Interval rg = range();
  const double slack = 1e-12 * std::max(1.0, std::abs(v));
  if (!(v >= rg.lo - slack && v <= rg.hi + slack)) {
    fail(ErrorKind::domain,
         "value " + fmt_rate(v) + " outside range [" + fmt_rate(rg.lo) + ", " + fmt_rate(rg.hi) + "]");
  }
  double lo = domain_.lo;
  double hi = domain_.hi;
  if (v <= rg.lo) return lo;
  if (v >= rg.hi) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (eval_unchecked(mid) < v) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // Pick the endpoint closer in value.
  return std::abs(eval_unchecked(lo) - v) <= std::abs(eval_unchecked(hi) - v) ? lo : hi;
}

RateFunction lower_convex_envelope(std::span<const RatePoint> points) {
  require(points.size() >= 2, "envelope needs at least 2 points");
  const auto pts = sorted_points(points);
  std::vector<RatePoint> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2 && turn(hull[hull.size() - 2], hull.back(), p) <= 0.0) hull.pop_back();
    hull.push_back(p);
  }
  return RateFunction::piecewise(Role::cost, std::move(hull));
}

RateFunction upper_concave_envelope(std::span<const RatePoint> points) {
  require(points.size() >= 2, "envelope needs at least 2 points");
  const auto pts = sorted_points(points);
  std::vector<RatePoint> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2 && turn(hull[hull.size() - 2], hull.back(), p) >= 0.0) hull.pop_back();
    hull.push_back(p);
  }
  return RateFunction::piecewise(Role::utility, std::move(hull));
}

RateFunction envelope(const RateFunction& f) {
  switch (f.kind()) {
    case FunctionKind::discrete:
      return f.role() == Role::cost ? lower_convex_envelope(f.points()) : upper_concave_envelope(f.points());
    case FunctionKind::piecewise:
      return f;
    case FunctionKind::power:
      break;
  }
  fail(ErrorKind::invalid_argument, "analytic functions have no piecewise envelope");
}

// ---------------------------------------------------------------------------

const char* to_string(CaseFamily family) noexcept {
  switch (family) {
    case CaseFamily::mc1: return "MC1";
    case CaseFamily::mc2_1: return "MC2-1";
    case CaseFamily::mc2_2: return "MC2-2";
    case CaseFamily::mc2_3: return "MC2-3";
    case CaseFamily::lc1: return "LC1";
    case CaseFamily::lc2_1: return "LC2-1";
    case CaseFamily::lc2_2: return "LC2-2";
  }
  return "?";
}

const char* to_string(Regime regime) noexcept {
  switch (regime) {
    case Regime::finite: return "finite";
    case Regime::log: return "log";
    case Regime::inv_sqrt: return "inv-sqrt";
    case Regime::inv: return "inv";
  }
  return "?";
}

CaseFamily parse_case_family(const std::string& name) {
  for (auto f : {CaseFamily::mc1, CaseFamily::mc2_1, CaseFamily::mc2_2, CaseFamily::mc2_3, CaseFamily::lc1,
                 CaseFamily::lc2_1, CaseFamily::lc2_2}) {
    if (name == to_string(f)) return f;
  }
  fail(ErrorKind::invalid_argument, "unknown case family '" + name + "'");
}

Regime parse_regime(const std::string& name) {
  for (auto r : {Regime::finite, Regime::log, Regime::inv_sqrt, Regime::inv}) {
    if (name == to_string(r)) return r;
  }
  fail(ErrorKind::invalid_argument, "unknown regime '" + name + "'");
}

CaseTag classify_case(const RateFunction& f, double operating_rate) {
  const bool cost = f.role() == Role::cost;
  if (!f.domain().interior(operating_rate)) {
    fail(ErrorKind::domain, "operating rate " + fmt_rate(operating_rate) + " must lie strictly inside the domain");
  }
  CaseTag tag;
  tag.anchor = operating_rate;
  switch (f.kind()) {
    case FunctionKind::discrete:
      fail(ErrorKind::invalid_argument, "classify the envelope of a discrete function, not the samples");
    case FunctionKind::power: {
      const double curvature = f.second_derivative(operating_rate);
      if (std::abs(curvature) < kMinCurvature) {
        fail(ErrorKind::domain, std::string(cost ? "C2" : "U2") + " violated: second derivative " +
                                    fmt_rate(curvature) + " at " + fmt_rate(operating_rate) + " is ~0");
      }
      tag.family = cost ? CaseFamily::mc1 : CaseFamily::lc1;
      tag.segment = {operating_rate, operating_rate};
      tag.predicted = Regime::inv_sqrt;
      return tag;
    }
    case FunctionKind::piecewise:
      break;
  }

  const auto& bp = f.points();
  for (std::size_t i = 1; i + 1 < bp.size(); ++i) {
    if (same_rate(bp[i].rate, operating_rate)) {
      tag.family = cost ? CaseFamily::mc2_3 : CaseFamily::lc2_2;
      tag.segment = {bp[i].rate, bp[i].rate};
      tag.left_corner = bp[i - 1].rate;
      tag.right_corner = bp[i + 1].rate;
      tag.predicted = Regime::inv;
      return tag;
    }
  }
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    if (operating_rate > bp[i].rate && operating_rate < bp[i + 1].rate) {
      tag.segment = {bp[i].rate, bp[i + 1].rate};
      if (i > 0) tag.left_corner = bp[i - 1].rate;
      if (i + 2 < bp.size()) tag.right_corner = bp[i + 2].rate;
      if (cost) {
        tag.family = i == 0 ? CaseFamily::mc2_1 : CaseFamily::mc2_2;
        tag.predicted = i == 0 ? Regime::finite : Regime::log;
      } else {
        tag.family = CaseFamily::lc2_1;
        tag.predicted = Regime::log;
      }
      return tag;
    }
  }
  fail(ErrorKind::domain, "operating rate " + fmt_rate(operating_rate) + " not located on any segment");
}

SupportLine support_line(const RateFunction& f, const CaseTag& tag) {
  SupportLine line;
  line.anchor = tag.anchor;
  const bool cost = f.role() == Role::cost;
  require(cost == tag.is_service_choice(), "case tag does not match the function's role");

  if (tag.family == CaseFamily::mc1 || tag.family == CaseFamily::lc1) {
    require(f.kind() == FunctionKind::power, "MC1/LC1 tags need an analytic function");
    line.slope = f.derivative(tag.anchor);
    line.intercept = f.eval(tag.anchor) - line.slope * tag.anchor;
    line.curvature = 0.5 * std::abs(f.second_derivative(tag.anchor));
    return line;
  }

  require(f.kind() == FunctionKind::piecewise, "MC2/LC2 tags need a piecewise-linear function");
  const auto& bp = f.points();
  const auto s = f.slopes();
  std::size_t idx = bp.size();
  for (std::size_t i = 0; i < bp.size(); ++i) {
    if (same_rate(bp[i].rate, tag.segment.lo)) idx = i;
  }
  require(idx < bp.size(), "case tag segment does not match the function's breakpoints");
  // Convex costs: slopes increase left to right; concave utilities: decrease.
  auto gap = [&](double left, double right) { return cost ? right - left : left - right; };

  const bool corner = tag.family == CaseFamily::mc2_3 || tag.family == CaseFamily::lc2_2;
  if (corner) {
    require(idx >= 1 && idx + 1 < bp.size(), "corner tag must sit on an interior breakpoint");
    const double left = s[idx - 1];
    const double right = s[idx];
    line.slope = 0.5 * (left + right);
    line.slope_gap = 0.5 * gap(left, right);
    line.intercept = bp[idx].value - line.slope * bp[idx].rate;
    return line;
  }

  require(idx + 1 < bp.size(), "segment tag must start on a breakpoint with a successor");
  line.slope = s[idx];
  line.intercept = bp[idx].value - line.slope * bp[idx].rate;
  double m = std::numeric_limits<double>::infinity();
  if (idx >= 1) m = std::min(m, gap(s[idx - 1], s[idx]));
  if (idx + 1 < s.size()) m = std::min(m, gap(s[idx], s[idx + 1]));
  line.slope_gap = std::isfinite(m) ? m : 0.0;
  return line;
}

}  // namespace qtl

#include "qtl/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qtl/error.hpp"
#include "qtl/numeric.hpp"
#include "qtl/parallel.hpp"

namespace qtl {

namespace {

constexpr GrowthModel kModels[] = {GrowthModel::constant, GrowthModel::log_inv, GrowthModel::inv_sqrt,
                                   GrowthModel::inv, GrowthModel::inv_sqrt_log};

// Relative residual within which a simpler model is preferred.
constexpr double kModelTie = 1e-12;

std::string num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

ModelFit fit_one(GrowthModel m, const std::vector<ScalingSample>& s, double scale) {
  const auto n = static_cast<double>(s.size());
  ModelFit f;
  f.model = m;
  double mx = 0.0, my = 0.0;
  for (const auto& x : s) {
    mx += regressor(m, x.V);
    my += x.Qbar;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& x : s) {
    const double dx = regressor(m, x.V) - mx;
    sxx += dx * dx;
    sxy += dx * (x.Qbar - my);
  }
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (const auto& x : s) {
    const double r = x.Qbar - (f.intercept + f.slope * regressor(m, x.V));
    ss += r * r;
  }
  f.residual = scale > 0.0 ? std::sqrt(ss / n) / scale : 0.0;
  return f;
}

// Pr{rate(Q) in S} for S = [0, lo) U (hi, inf), including the certified tail.
double mass_outside(const StationaryResult& sr, const RateSchedule& rule, bool service, double lo, double hi) {
  CompensatedSum s;
  for (std::size_t i = 0; i < sr.pi.size(); ++i) {
    const QueueLength q = sr.window.lower + static_cast<QueueLength>(i);
    const double r = service && q == 0 ? 0.0 : rule.at(q);
    if (r < lo || r > hi) s.add(sr.pi[i]);
  }
  if (sr.tail_mass_bound > 0.0 && (rule.tail() < lo || rule.tail() > hi)) s.add(sr.tail_mass_bound);
  return s.value();
}

AuditCheck make_check(std::string name, double lhs, double rhs, std::string detail) {
  AuditCheck c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.margin = rhs - lhs;
  c.strict = c.margin > 0.0;
  c.pass = c.margin >= -kAuditRoundoff * std::max(std::abs(lhs), std::abs(rhs));
  c.detail = std::move(detail);
  return c;
}

AuditCheck not_applicable(std::string name, std::string why) {
  AuditCheck c;
  c.name = std::move(name);
  c.applicable = false;
  c.detail = std::move(why);
  return c;
}

}  // namespace

std::vector<double> dyadic_grid(int k_lo, int k_hi) {
  require(k_lo <= k_hi, "dyadic grid needs k_lo <= k_hi");
  std::vector<double> out;
  for (int k = k_lo; k <= k_hi; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

SweepResult sweep(const FamilySpec& family, const RateFunction& cost, const RateFunction& utility,
                  const std::vector<double>& U_grid) {
  require(!U_grid.empty(), "U grid must be non-empty");
  const double ref = family.reference(cost, utility);
  std::vector<std::optional<ScalingSample>> slots(U_grid.size());
  std::vector<std::string> errors(U_grid.size());
  parallel_for(U_grid.size(), [&](std::size_t i) {
    try {
      const Policy p = family.build(U_grid[i]);
      const auto m = metrics(p, stationary(p), cost, utility);
      ScalingSample s;
      s.U = U_grid[i];
      s.Qbar = m.Qbar;
      s.Cbar = m.Cbar;
      s.Ubar = m.Ubar;
      s.V = family.utility_gap() ? ref - m.Ubar : m.Cbar - ref;
      slots[i] = s;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  SweepResult out;
  for (std::size_t i = 0; i < U_grid.size(); ++i) {
    if (slots[i]) {
      out.samples.push_back(*slots[i]);
    } else {
      out.failures.push_back({U_grid[i], errors[i]});
    }
  }
  return out;
}

const char* to_string(GrowthModel m) noexcept {
  switch (m) {
    case GrowthModel::constant: return "constant";
    case GrowthModel::log_inv: return "log-inv";
    case GrowthModel::inv_sqrt: return "inv-sqrt";
    case GrowthModel::inv: return "inv";
    case GrowthModel::inv_sqrt_log: return "inv-sqrt-log";
  }
  return "?";
}

double regressor(GrowthModel m, double V) {
  switch (m) {
    case GrowthModel::constant: return 1.0;
    case GrowthModel::log_inv: return std::log(1.0 / V);
    case GrowthModel::inv_sqrt: return 1.0 / std::sqrt(V);
    case GrowthModel::inv: return 1.0 / V;
    case GrowthModel::inv_sqrt_log: return std::log(1.0 / V) / std::sqrt(V);
  }
  return 0.0;
}

bool model_matches(GrowthModel m, Regime r) noexcept {
  switch (r) {
    case Regime::finite: return m == GrowthModel::constant;
    case Regime::log: return m == GrowthModel::log_inv;
    case Regime::inv_sqrt: return m == GrowthModel::inv_sqrt || m == GrowthModel::inv_sqrt_log;
    case Regime::inv: return m == GrowthModel::inv;
  }
  return false;
}

ScalingFit classify_regime(const std::vector<ScalingSample>& samples, std::optional<Regime> predicted) {
  require(samples.size() >= 5, "regime classification needs at least 5 samples");
  double vmin = samples.front().V, vmax = vmin, scale = 0.0;
  for (const auto& s : samples) {
    require(s.V > 0.0 && std::isfinite(s.V), "regime classification needs V > 0");
    vmin = std::min(vmin, s.V);
    vmax = std::max(vmax, s.V);
    scale += std::abs(s.Qbar);
  }
  require(vmax / vmin >= 100.0 * (1.0 - 1e-12), "regime classification needs V to span at least 2 decades (span " +
                                                     num(vmax / vmin) + ")");
  scale /= static_cast<double>(samples.size());

  ScalingFit out;
  for (auto m : kModels) out.candidates.push_back(fit_one(m, samples, scale));
  const ModelFit* best = &out.candidates.front();
  for (const auto& c : out.candidates) {
    if (c.residual < best->residual - kModelTie) best = &c;
  }
  out.model = best->model;
  out.intercept = best->intercept;
  out.slope = best->slope;
  out.residual = best->residual;
  out.predicted = predicted;
  if (predicted) out.matches = model_matches(out.model, *predicted);
  return out;
}

double bracket_ratio(std::span<const double> values) {
  require(values.size() >= 2, "bracket test needs at least 2 values");
  const auto tail = values.subspan(values.size() / 2);
  double lo = tail.front(), hi = lo;
  for (double v : tail) {
    require(v > 0.0 && std::isfinite(v), "bracket test needs positive finite values");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi / lo;
}

double r_squared(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 3, "r_squared needs >= 3 paired values");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (syy == 0.0) return 1.0;
  if (sxx == 0.0) return 0.0;
  return sxy * sxy / (sxx * syy);
}

// ---------------------------------------------------------------------------

bool AuditReport::all_pass() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const AuditCheck& c) { return !c.applicable || c.pass; });
}

bool AuditReport::all_strict() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const AuditCheck& c) { return !c.applicable || c.strict; });
}

AuditReport audit_lower_bound(const Policy& p, const CaseTag& tag, const RateFunction& cost,
                              const RateFunction& utility, double reference) {
  const bool service = tag.is_service_choice();
  const RateFunction& f0 = service ? cost : utility;
  const RateFunction f = f0.kind() == FunctionKind::discrete ? envelope(f0) : f0;
  const auto sr = stationary(p);
  const auto m = metrics(p, sr, cost, utility);

  AuditReport rep;
  rep.V = service ? m.Cbar - reference : reference - m.Ubar;
  require(rep.V > 0.0, "audit needs a positive gap V (got " + num(rep.V) + ")");
  const double V = rep.V;
  const SupportLine line = support_line(f, tag);
  const RateSchedule& rule = service ? p.service_rule() : p.arrival_rule();
  const double x = tag.anchor;

  // (i) Mass away from the operating rate.
  {
    double lo = 0.0, hi = 0.0, rhs = 0.0;
    std::string how;
    switch (tag.family) {
      case CaseFamily::mc1:
      case CaseFamily::lc1: {
        const double a1 = line.curvature;
        const double a2 = 2.0 / std::sqrt(a1);
        const double eps = a2 * std::sqrt(V);
        lo = x - eps;
        hi = x + eps;
        rhs = V / (a1 * eps * eps);
        how = "eps_V = a2 sqrt(V), a1 = " + num(a1);
        break;
      }
      case CaseFamily::mc2_1:
      case CaseFamily::mc2_2:
      case CaseFamily::lc2_1: {
        double len = std::numeric_limits<double>::infinity();
        if (tag.left_corner) len = std::min(len, tag.segment.lo - *tag.left_corner);
        if (tag.right_corner) len = std::min(len, *tag.right_corner - tag.segment.hi);
        require(std::isfinite(len) && line.slope_gap > 0.0, "audit needs a neighbouring segment");
        const double eps = len / 2.0;
        lo = tag.segment.lo - eps;
        hi = tag.segment.hi + eps;
        rhs = V / (line.slope_gap * eps);
        how = "fixed eps = " + num(eps) + ", m_a = " + num(line.slope_gap);
        break;
      }
      case CaseFamily::mc2_3:
      case CaseFamily::lc2_2: {
        const double a2 = 4.0 / line.slope_gap;
        const double eps = a2 * V;
        lo = x - eps;
        hi = x + eps;
        rhs = V / (line.slope_gap * eps);
        how = "eps_V = a2 V, m_a = " + num(line.slope_gap);
        break;
      }
    }
    const double lhs = mass_outside(sr, rule, service, lo, hi);
    rep.checks.push_back(make_check("rate-concentration", lhs, rhs, how));
  }

  // (ii) Boundary mass below the first service rate within eps_V of lambda.
  const bool constant_arrivals = p.arrival_rule().pieces().empty() ||
                                 std::all_of(p.arrival_rule().pieces().begin(), p.arrival_rule().pieces().end(),
                                             [&](const RatePiece& r) { return r.rate == p.arrival_rule().tail(); });
  if (tag.family == CaseFamily::mc1 && constant_arrivals) {
    const double lam = p.arrival(0);
    const double a1 = line.curvature;
    const double eps = 2.0 / std::sqrt(a1) * std::sqrt(V);
    const double mu_star = lam - eps;
    QueueLength q_star = 0;
    while (p.service(q_star) < mu_star) {
      ++q_star;
      require(q_star <= p.horizon() + 1, "no service rate reaches lambda - eps_V");
    }
    const double pi_b = q_star == 0 ? 0.0 : sr.prob(q_star - 1);
    rep.checks.push_back(make_check("boundary-mass", lam * lam * pi_b * pi_b, V / a1,
                                    "q_mu* = " + std::to_string(q_star)));
  } else {
    rep.checks.push_back(not_applicable("boundary-mass", "needs a strictly convex cost and constant arrivals"));
  }

  // (iii) Empty-queue probability against the utility gap.
  if (!service) {
    require(line.slope > 0.0, "audit needs a positive support-line slope");
    const double mu = x;
    rep.checks.push_back(make_check("empty-queue", sr.prob(0), V / (line.slope * mu),
                                    "m = 1/slope = " + num(1.0 / line.slope)));
  } else {
    rep.checks.push_back(not_applicable("empty-queue", "arrival-choice cases only"));
  }
  return rep;
}

}  // namespace qtl

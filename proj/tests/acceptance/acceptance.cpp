// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "qtl/birth_death.hpp"
#include "qtl/mdp.hpp"
#include "qtl/policy_families.hpp"
#include "qtl/rate_functions.hpp"
#include "qtl/scaling.hpp"
#include "qtl/sim.hpp"

namespace {

using namespace qtl;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void append(std::string& s, const std::string& part) {
  if (!s.empty()) s += "; ";
  s += part;
}

// ---------------------------------------------------------------------------
// Shared setup

const std::vector<double> kRates{0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0};

std::vector<RatePoint> sample_points() {
  std::vector<RatePoint> pts;
  for (double r : kRates) pts.push_back({r, r * r});
  return pts;
}

const RateFunction& sampled_cost() {
  static const auto f = RateFunction::discrete(Role::cost, sample_points());
  return f;
}
const RateFunction& sampled_envelope() {
  static const auto f = envelope(sampled_cost());
  return f;
}
const RateFunction& square_cost() {
  static const auto f = RateFunction::power(Role::cost, {0.0, 1.0}, 2.0);
  return f;
}
const RateFunction& linear_utility() {
  static const auto f = RateFunction::power(Role::utility, {0.0, 1.0}, 1.0);
  return f;
}

struct FamilyCase {
  std::string name;
  FamilySpec spec;
  const RateFunction* cost;
  const RateFunction* utility;
};

std::vector<FamilyCase> criterion5_families() {
  std::vector<FamilyCase> out;
  FamilySpec s;
  s.kind = FamilyKind::mc22;
  s.lambda = 0.39;
  s.a = 0.2;
  s.b = 0.4;
  out.push_back({"mc22", s, &sampled_cost(), &linear_utility()});
  s = {};
  s.kind = FamilyKind::mc23;
  s.lambda = 0.4;
  s.K = 0.1;
  s.next_corner = 0.5;
  out.push_back({"mc23", s, &sampled_cost(), &linear_utility()});
  s = {};
  s.kind = FamilyKind::mc1;
  s.lambda = 0.5;
  s.K = 0.5;
  out.push_back({"mc1", s, &square_cost(), &linear_utility()});
  s = {};
  s.kind = FamilyKind::mc21;
  s.lambda = 0.1;
  s.b = 0.2;
  out.push_back({"mc21", s, &sampled_cost(), &linear_utility()});
  s = {};
  s.kind = FamilyKind::lambda_mu;
  s.u_inv = 0.4;
  out.push_back({"lmu", s, &square_cost(), &linear_utility()});
  return out;
}

// Criterion 2 problem for one operating arrival rate.
LagrangianProblem sampled_problem(double lambda) {
  LagrangianProblem lp(sampled_cost(), linear_utility());
  lp.service_actions = kRates;
  lp.arrival_actions = {lambda};
  lp.state_cap = 2000;
  return lp;
}

const std::vector<double> kTraceLambdas{0.39, 0.40, 0.41};
std::vector<double> trace_betas() { return log_grid(0.1, 1e3, 40); }

// ---------------------------------------------------------------------------

Verdict criterion1() {
  Verdict v{true, {}};
  const double want[] = {0.154, 0.160, 0.169};
  for (int i = 0; i < 3; ++i) {
    const double got = sampled_envelope().eval(kTraceLambdas[i]);
    const double err = std::abs(got - want[i]);
    if (err > 1e-9) v.pass = false;
    append(v.detail, "c(" + fmt("%.2f", kTraceLambdas[i]) + ")=" + fmt("%.12g", got));
  }
  return v;
}

Verdict criterion2() {
  Verdict v{true, {}};
  for (double lam : kTraceLambdas) {
    const auto tr = trace_tradeoff(sampled_problem(lam), trace_betas(), {0.0});
    const double cbar = sampled_envelope().eval(lam);
    std::string part = "lambda=" + fmt("%.2f", lam) + ":";
    if (!tr.failures.empty() || tr.points.size() != 40) {
      v.pass = false;
      append(v.detail, part + " " + std::to_string(tr.failures.size()) + " solve failures");
      continue;
    }
    auto pts = tr.points;  // sorted by c_c
    bool monotone = true;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (pts[i].q_star > pts[i - 1].q_star + 1e-9 * std::max(1.0, pts[i - 1].q_star)) monotone = false;
    }
    const double gap = pts.front().c_c - cbar;
    const bool inf_ok = gap >= -1e-12 && gap <= 0.02;

    std::sort(pts.begin(), pts.end(), [&](const TradeoffPoint& a, const TradeoffPoint& b) { return a.c_c < b.c_c; });
    const std::size_t third = pts.size() / 3;
    std::vector<double> x, y;
    bool positive = true;
    for (std::size_t i = 0; i < third; ++i) {
      const double V = pts[i].c_c - cbar;
      if (!(V > 0.0)) {
        positive = false;
        break;
      }
      const bool inverse = std::abs(lam - 0.40) < 1e-12;
      x.push_back(inverse ? 1.0 / V : std::log(1.0 / V));
      y.push_back(pts[i].q_star);
    }
    double r2 = 0.0;
    if (positive) r2 = r_squared(x, y);
    const bool fit_ok = positive && r2 > 0.98;
    part += std::string(" monotone=") + (monotone ? "yes" : "NO") + " inf_gap=" + fmt("%.4g", gap) +
            (inf_ok ? "" : "(NO)") + (std::abs(lam - 0.40) < 1e-12 ? " R2[1/V]=" : " R2[log]=") + fmt("%.4f", r2) +
            (fit_ok ? "" : "(NO)");
    append(v.detail, part);
    if (!(monotone && inf_ok && fit_ok)) v.pass = false;
  }
  return v;
}

Verdict criterion3() {
  const Policy p(RateSchedule({}, 0.4), RateSchedule({}, 1.0));
  const auto m = metrics(p, stationary(p), square_cost(), linear_utility());
  const double eq = std::abs(m.Qbar - 2.0 / 3.0), ed = std::abs(m.Dbar - 5.0 / 3.0), ec = std::abs(m.Cbar - 0.4);
  return {eq <= 1e-10 && ed <= 1e-10 && ec <= 1e-10,
          "Q=" + fmt("%.15g", m.Qbar) + " D=" + fmt("%.15g", m.Dbar) + " C=" + fmt("%.15g", m.Cbar)};
}

// Admissible policy on {0..h} with random monotone steps; finite (arrivals stop) or with a geometric tail.
Policy random_admissible(std::mt19937_64& rng, bool finite) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 499);
  const int h = len(rng);
  std::vector<double> mu(static_cast<std::size_t>(h) + 1, 0.0), lam(static_cast<std::size_t>(h) + 1);
  double m = 0.05 + 0.3 * unif(rng);
  double l = 0.3 + 0.7 * unif(rng);
  for (int q = 0; q <= h; ++q) {
    if (q >= 1) {
      mu[q] = m;
      m += 0.1 * unif(rng) * (unif(rng) < 0.05);
    }
    lam[q] = l;
    l = std::max(0.0, l - 0.08 * unif(rng) * (unif(rng) < 0.05));
  }
  const double mu_tail = std::max(m, mu.back());
  double lam_tail = 0.0;
  if (finite) {
    lam.back() = 0.0;
  } else {
    lam_tail = std::min(lam.back(), 0.9 * mu_tail);
    lam.back() = lam_tail;
  }
  return Policy(RateSchedule::from_dense(lam, lam_tail), RateSchedule::from_dense(mu, mu_tail));
}

Verdict criterion4() {
  std::mt19937_64 rng(20240601);
  double worst = 0.0;
  int admissible = 0;
  for (int i = 0; i < 50; ++i) {
    const Policy p = random_admissible(rng, i % 2 == 0);
    admissible += p.is_admissible() ? 1 : 0;
    const auto sr = stationary(p);
    const auto dense = qtl::testing::dense_stationary(p, 501);
    for (QueueLength q = 0; q <= 500; ++q) worst = std::max(worst, std::abs(sr.prob(q) - dense[static_cast<std::size_t>(q)]));
  }
  return {admissible == 50 && worst <= 1e-10,
          std::to_string(admissible) + "/50 admissible, max |pi - pi_dense| = " + fmt("%.3g", worst)};
}

struct Sweeps {
  std::vector<FamilyCase> families;
  std::vector<SweepResult> results;
};

const Sweeps& criterion5_sweeps() {
  static const Sweeps s = [] {
    Sweeps out;
    out.families = criterion5_families();
    for (const auto& f : out.families) out.results.push_back(sweep(f.spec, *f.cost, *f.utility, dyadic_grid(4, 14)));
    return out;
  }();
  return s;
}

Verdict criterion5() {
  const auto& sw = criterion5_sweeps();
  Verdict v{true, {}};
  for (std::size_t i = 0; i < sw.families.size(); ++i) {
    const auto& name = sw.families[i].name;
    const auto& r = sw.results[i];
    if (!r.failures.empty() || r.samples.size() != 11) {
      v.pass = false;
      append(v.detail, name + ": " + std::to_string(r.failures.size()) + " build/eval failures");
      continue;
    }
    const auto& s = r.samples;
    auto column = [&](const std::function<double(const ScalingSample&)>& f) {
      std::vector<double> out;
      for (const auto& x : s) out.push_back(f(x));
      return out;
    };
    bool ok = true;
    std::string part = name + ":";
    if (name == "mc22") {
      const auto fit = classify_regime(s);
      ok = fit.model == GrowthModel::log_inv;
      part += std::string(" model=") + to_string(fit.model);
    } else if (name == "mc23") {
      const auto fit = classify_regime(s);
      const double br = bracket_ratio(column([](const ScalingSample& x) { return x.Qbar * x.V; }));
      ok = fit.model == GrowthModel::inv && br <= kBracketLimit;
      part += std::string(" model=") + to_string(fit.model) + " QV-bracket=" + fmt("%.3g", br);
    } else if (name == "mc1") {
      const double up = bracket_ratio(
          column([](const ScalingSample& x) { return x.Qbar * std::sqrt(x.V) / std::log(1.0 / x.V); }));
      const double lo = bracket_ratio(column([](const ScalingSample& x) { return x.Qbar * std::sqrt(x.V); }));
      ok = up <= kBracketLimit && lo <= kBracketLimit;
      part += " Q*sqrtV/log-bracket=" + fmt("%.3g", up) + " Q*sqrtV-bracket=" + fmt("%.3g", lo);
    } else if (name == "mc21") {
      const double lam = sw.families[i].spec.lambda, b = sw.families[i].spec.b;
      const auto gap = column([&](const ScalingSample& x) { return lam / (b - lam) - x.Qbar; });
      bool pos = true, dec = true;
      for (std::size_t k = 0; k < gap.size(); ++k) {
        pos = pos && gap[k] > 0.0;
        if (k > 0) dec = dec && gap[k] < gap[k - 1];
      }
      double br = INFINITY;
      if (pos) {
        std::vector<double> ratio;
        for (std::size_t k = 0; k < gap.size(); ++k) ratio.push_back(gap[k] / (s[k].V * std::log(1.0 / s[k].V)));
        br = bracket_ratio(ratio);
      }
      ok = pos && dec && br <= kBracketLimit;
      part += std::string(" positive=") + (pos ? "yes" : "NO") + " decreasing=" + (dec ? "yes" : "NO") +
              " ratio-bracket=" + fmt("%.3g", br);
    } else if (name == "lmu") {
      const double br = bracket_ratio(column([](const ScalingSample& x) { return x.Qbar / std::log(1.0 / x.V); }));
      const double u_c = linear_utility().eval(sw.families[i].spec.u_inv);
      double min_u = INFINITY;
      for (const auto& x : s) min_u = std::min(min_u, x.Ubar);
      ok = br <= kBracketLimit && min_u >= u_c;
      part += " Q/log-bracket=" + fmt("%.3g", br) + " min(U)-u_c=" + fmt("%.3g", min_u - u_c);
    }
    if (!ok) {
      v.pass = false;
      part += "(NO)";
    }
    append(v.detail, part);
  }
  return v;
}

struct AuditTally {
  int policies = 0;
  int failures = 0;
  double worst[3] = {INFINITY, INFINITY, INFINITY};
  int applicable[3] = {0, 0, 0};

  void add(const AuditReport& r, bool strict) {
    ++policies;
    if (!(strict ? r.all_strict() : r.all_pass())) ++failures;
    for (std::size_t k = 0; k < 3 && k < r.checks.size(); ++k) {
      if (!r.checks[k].applicable) continue;
      ++applicable[k];
      worst[k] = std::min(worst[k], r.checks[k].margin / std::max(r.checks[k].rhs, 1e-300));
    }
  }
  std::string summary() const {
    std::string s = std::to_string(policies - failures) + "/" + std::to_string(policies) + " policies";
    const char* names[] = {"concentration", "boundary", "empty-queue"};
    for (int k = 0; k < 3; ++k) {
      s += std::string(" ") + names[k] + "[n=" + std::to_string(applicable[k]) +
           (applicable[k] ? ", min rel margin " + fmt("%.3g", worst[k]) : std::string()) + "]";
    }
    return s;
  }
};

Verdict criterion6() {
  AuditTally main_set;
  for (double lam : kTraceLambdas) {
    LagrangianProblem lp = sampled_problem(lam);
    const CaseTag tag = classify_case(sampled_envelope(), lam);
    const double ref = sampled_envelope().eval(lam);
    for (double b : trace_betas()) {
      lp.beta1 = b;
      main_set.add(audit_lower_bound(solve(lp).policy, tag, sampled_cost(), linear_utility(), ref), true);
    }
  }
  for (const auto& f : criterion5_families()) {
    const CaseTag tag = f.spec.case_tag(*f.cost, *f.utility);
    const double ref = f.spec.reference(*f.cost, *f.utility);
    for (double U : dyadic_grid(4, 14)) main_set.add(audit_lower_bound(f.spec.build(U), tag, *f.cost, *f.utility, ref), true);
  }

  // The empty-queue bound only applies to arrival-choice cases, which criteria 2 and 5 do not produce;
  // it is exercised on the mirror family, where it holds with equality on linear utility pieces.
  AuditTally lc_set;
  const auto piecewise_u = RateFunction::piecewise(Role::utility, {{0.0, 0.0}, {0.3, 0.6}, {0.6, 0.9}, {1.0, 1.0}});
  const auto root_u = RateFunction::power(Role::utility, {0.0, 1.0}, 0.5);
  const std::pair<const RateFunction*, double> lc_cases[] = {{&piecewise_u, 0.4}, {&piecewise_u, 0.6}, {&root_u, 0.5}};
  for (const auto& [u, mu] : lc_cases) {
    FamilySpec s;
    s.kind = FamilyKind::lc_mirror;
    s.mu = mu;
    s.tag = classify_case(*u, mu);
    for (double U : dyadic_grid(4, 14)) lc_set.add(audit_lower_bound(s.build(U), *s.tag, square_cost(), *u, u->eval(mu)), false);
  }
  return {main_set.failures == 0 && lc_set.failures == 0,
          "criteria 2+5 (strict): " + main_set.summary() + "; mirror family (to round-off): " + lc_set.summary()};
}

Verdict criterion7() {
  const auto& sw = criterion5_sweeps();
  int ok = 0, total = 0;
  double worst = INFINITY;
  for (std::size_t i = 0; i < sw.families.size(); ++i) {
    for (const auto& s : sw.results[i].samples) {
      const Policy p = sw.families[i].spec.build(s.U);
      const double bound = qlength_upper_bound(p).bound;
      ++total;
      ok += bound >= s.Qbar ? 1 : 0;
      worst = std::min(worst, bound / s.Qbar);
    }
  }
  return {total == 55 && ok == total,
          std::to_string(ok) + "/" + std::to_string(total) + " policies, min bound/Qbar = " + fmt("%.4g", worst)};
}

Verdict criterion8() {
  std::vector<Policy> policies;
  policies.emplace_back(RateSchedule({}, 0.4), RateSchedule({}, 1.0));
  policies.emplace_back(RateSchedule({}, 0.4), RateSchedule({{1, 2, 0.5}}, 1.0));
  for (const auto& f : criterion5_families()) policies.push_back(f.spec.build(1.0 / 16.0));
  FamilySpec lc;
  lc.kind = FamilyKind::lc_mirror;
  lc.mu = 0.5;
  const auto root_u = RateFunction::power(Role::utility, {0.0, 1.0}, 0.5);
  lc.tag = classify_case(root_u, 0.5);
  policies.push_back(lc.build(1.0 / 16.0));
  // 8 policies x 5 seeds.
  int pass = 0, total = 0;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const Policy& p = policies[i];
    const RateFunction& u = i + 1 == policies.size() ? root_u : linear_utility();
    const auto exact = metrics(p, stationary(p), square_cost(), u);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SimConfig cfg;
      cfg.horizon = 5e4;
      cfg.replications = 20;
      cfg.seed = 1000 * i + seed;
      const auto est = simulate(p, cfg, square_cost(), u);
      // 3x half-width, with a round-off floor for metrics that do not vary (constant rates).
      auto close = [](const Estimate& e, double x) {
        return std::abs(e.mean - x) <= std::max(3.0 * e.half_width, 1e-12 * std::max(1.0, std::abs(x)));
      };
      ++total;
      pass += close(est.Q, exact.Qbar) && close(est.C, exact.Cbar) && close(est.U, exact.Ubar) ? 1 : 0;
    }
  }
  const double rate = static_cast<double>(pass) / total;
  return {total == 40 && rate >= 0.95,
          std::to_string(pass) + "/" + std::to_string(total) + " pairs within 3x CI half-width on Q, C and U"};
}

}  // namespace

int main() {
  struct Item {
    int id;
    const char* title;
    double budget_s;
    Verdict (*run)();
  };
  const Item items[] = {
      {1, "envelope exactness", 1.0, criterion1},
      {2, "trade-off trace", 600.0, criterion2},
      {3, "M/M/1 closed form", 1.0, criterion3},
      {4, "stationary vs dense solve", 60.0, criterion4},
      {5, "scaling verdicts", 300.0, criterion5},
      {6, "lower-bound audits", 60.0, criterion6},
      {7, "queue-length upper bound", 60.0, criterion7},
      {8, "simulation concordance", 300.0, criterion8},
  };
  int failed = 0;
  for (const auto& it : items) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = it.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > it.budget_s) {
      v.pass = false;
      v.detail += "; over time budget";
    }
    failed += v.pass ? 0 : 1;
    std::printf("[%s] criterion %d (%s): %s [%.2fs]\n", v.pass ? "PASS" : "FAIL", it.id, it.title, v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/8 criteria passed\n", 8 - failed);
  return failed == 0 ? 0 : 1;
}

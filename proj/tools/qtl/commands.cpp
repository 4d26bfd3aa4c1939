#include "commands.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "qtl/error.hpp"
#include "qtl/mdp.hpp"
#include "qtl/sim.hpp"
#include "qtl/version.hpp"

namespace qtl::cli {
namespace {

struct Context {
  const json& m;
  std::uint64_t hash;
  std::ostream& os;   // artifact
  std::string summary;
};

using Handler = std::function<void(Context&)>;

RateFunction shape(const RateFunction& f) { return f.kind() == FunctionKind::discrete ? envelope(f) : f; }

RateFunction cost_of(const json& m) { return function_from_json(field(m, "cost"), Role::cost); }
RateFunction utility_of(const json& m) { return function_from_json(field(m, "utility"), Role::utility); }

std::optional<RateFunction> opt_function(const json& m, const char* key, Role role) {
  if (!m.contains(key) || m.at(key).is_null()) return std::nullopt;
  return function_from_json(m.at(key), role);
}

json provenance(const Context& c) { return {{"tool", "qtl"}, {"version", kVersion}, {"manifest", hex64(c.hash)}}; }

void emit_json(Context& c, json j) {
  j["provenance"] = provenance(c);
  c.os << j.dump(2) << '\n';
}

void begin_csv(Context& c, const char* header) { c.os << provenance_line(c.hash) << '\n' << header << '\n'; }

double positive_U(const json& m) {
  const double U = get_number(m, "U");
  if (!(U > 0.0)) throw SchemaError("'U' must be positive");
  return U;
}

// A policy given directly or built from a family at scale U.
Policy policy_of(const json& m, const RateFunction* cost, const RateFunction* utility) {
  if (m.contains("policy")) return policy_from_json(m.at("policy"));
  if (m.contains("family")) return family_from_json(m.at("family"), cost, utility).build(positive_U(m));
  throw SchemaError("needs 'policy' or 'family' with 'U'");
}

LagrangianProblem problem_of(const json& m) {
  LagrangianProblem lp(cost_of(m), utility_of(m));
  lp.service_actions = grid_from_json(field(m, "service_actions"));
  lp.arrival_actions = grid_from_json(field(m, "arrival_actions"));
  if (auto v = opt_number(m, "uniformization_rate")) lp.uniformization_rate = *v;
  if (auto v = opt_integer(m, "state_cap")) lp.state_cap = static_cast<QueueLength>(*v);
  if (auto v = opt_integer(m, "max_iterations")) lp.max_iterations = static_cast<int>(*v);
  return lp;
}

double tol_of(const json& m) { return opt_number(m, "tol").value_or(1e-10); }

void run_envelope(Context& c) {
  const json& spec = c.m.contains("function") ? c.m.at("function") : field(c.m, "cost");
  const RateFunction f = function_from_json(spec, Role::cost);
  const RateFunction env = shape(f);
  json j;
  j["envelope"] = function_to_json(env);
  j["corners"] = json::array();
  for (const auto& p : env.points()) j["corners"].push_back({num(p.rate), num(p.value)});
  j["slopes"] = json::array();
  if (env.kind() == FunctionKind::piecewise) {
    for (double s : env.slopes()) j["slopes"].push_back(num(s));
  }
  j["values"] = json::array();
  if (c.m.contains("at")) {
    for (double r : grid_from_json(c.m.at("at"))) {
      json v{{"rate", num(r)}, {"value", num(env.eval(r))}};
      if (env.domain().interior(r)) v["case"] = case_to_json(classify_case(env, r));
      j["values"].push_back(v);
    }
  }
  c.summary = std::to_string(env.points().size()) + " corners";
  emit_json(c, j);
}

void run_feasibility(Context& c) {
  const auto r = feasibility(cost_of(c.m), utility_of(c.m), get_number(c.m, "c_c"), get_number(c.m, "u_c"));
  c.summary = to_string(r.status);
  emit_json(c, {{"status", to_string(r.status)},
                {"cost_inverse", num(r.cost_inverse)},
                {"utility_inverse", num(r.utility_inverse)},
                {"min_cost", num(r.min_cost)}});
}

void run_eval(Context& c) {
  const auto cost = cost_of(c.m), utility = utility_of(c.m);
  const Policy p = policy_of(c.m, &cost, &utility);
  StationaryOptions opts;
  if (auto t = opt_number(c.m, "tail_tol")) opts.tail_tol = *t;
  const auto sr = stationary(p, opts);
  const auto mt = metrics(p, sr, cost, utility);
  json j;
  j["window"] = {{"lower", sr.window.lower}, {"upper", sr.window.bounded() ? json(sr.window.upper) : json(nullptr)}};
  j["q_max"] = sr.q_max;
  j["tail_mass_bound"] = num(sr.tail_mass_bound);
  j["tail_ratio"] = num(sr.tail_ratio);
  j["metrics"] = metrics_to_json(mt);
  j["admissible"] = p.is_admissible();
  if (p.is_admissible() && sr.window.lower == 0 && !sr.window.bounded()) {
    const auto b = qlength_upper_bound(p);
    j["qlength_bound"] = {{"bound", num(b.bound)}, {"q_eps", b.q_eps}, {"drift", num(b.drift)}};
  }
  if (c.m.contains("distribution")) {
    const std::string path = get_string(c.m, "distribution");
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::invalid_argument, "cannot write '" + path + "'");
    f << provenance_line(c.hash) << "\nq,pi\n";
    for (std::size_t i = 0; i < sr.pi.size(); ++i) {
      f << (sr.window.lower + static_cast<QueueLength>(i)) << ',' << fmt(sr.pi[i]) << '\n';
    }
  }
  c.summary = "Qbar=" + fmt(mt.Qbar) + " Cbar=" + fmt(mt.Cbar) + " Ubar=" + fmt(mt.Ubar);
  emit_json(c, j);
}

void run_solve(Context& c) {
  LagrangianProblem lp = problem_of(c.m);
  lp.beta1 = opt_number(c.m, "beta1").value_or(0.0);
  lp.beta2 = opt_number(c.m, "beta2").value_or(0.0);
  const auto r = solve(lp, tol_of(c.m));
  const auto mt = metrics(r.policy, stationary(r.policy), lp.cost, lp.utility);
  json j;
  j["gain"] = num(r.gain);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["monotone"] = r.monotone;
  j["uniformization_rate"] = num(r.uniformization_rate);
  j["metrics"] = metrics_to_json(mt);
  j["policy"] = policy_to_json(r.policy);
  c.summary = "gain=" + fmt(r.gain) + " iterations=" + std::to_string(r.iterations);
  emit_json(c, j);
}

void run_trace(Context& c) {
  const LagrangianProblem lp = problem_of(c.m);
  const auto b1 = grid_from_json(field(c.m, "beta1"));
  const auto b2 = c.m.contains("beta2") ? grid_from_json(c.m.at("beta2")) : std::vector<double>{0.0};
  const auto r = trace_tradeoff(lp, b1, b2, tol_of(c.m));
  begin_csv(c, "beta1,beta2,c_c,u_c,q_star");
  for (const auto& p : r.points) {
    c.os << fmt(p.beta1) << ',' << fmt(p.beta2) << ',' << fmt(p.c_c) << ',' << fmt(p.u_c) << ',' << fmt(p.q_star)
         << '\n';
  }
  for (const auto& f : r.failures) {
    c.os << "# failed beta1=" << fmt(f.beta1) << " beta2=" << fmt(f.beta2) << ": " << f.message << '\n';
  }
  c.summary = std::to_string(r.points.size()) + " points, " + std::to_string(r.failures.size()) + " failures";
}

void run_construct(Context& c) {
  const auto cost = opt_function(c.m, "cost", Role::cost);
  const auto utility = opt_function(c.m, "utility", Role::utility);
  const FamilySpec f = family_from_json(field(c.m, "family"), cost ? &*cost : nullptr, utility ? &*utility : nullptr);
  const Policy p = f.build(positive_U(c.m));
  c.summary = p.label().empty() ? std::string(to_string(f.kind)) : p.label();
  emit_json(c, policy_to_json(p));
}

std::vector<double> U_grid_of(const json& m) {
  return m.contains("U_grid") ? grid_from_json(m.at("U_grid")) : dyadic_grid();
}

void run_sweep(Context& c) {
  const auto cost = cost_of(c.m), utility = utility_of(c.m);
  const FamilySpec f = family_from_json(field(c.m, "family"), &cost, &utility);
  const auto r = sweep(f, cost, utility, U_grid_of(c.m));
  begin_csv(c, "U,V,Qbar,Cbar,Ubar");
  for (const auto& s : r.samples) {
    c.os << fmt(s.U) << ',' << fmt(s.V) << ',' << fmt(s.Qbar) << ',' << fmt(s.Cbar) << ',' << fmt(s.Ubar) << '\n';
  }
  for (const auto& e : r.failures) c.os << "# failed U=" << fmt(e.U) << ": " << e.message << '\n';
  c.summary = std::to_string(r.samples.size()) + " samples, " + std::to_string(r.failures.size()) + " failures";
}

void run_classify(Context& c) {
  std::vector<ScalingSample> samples;
  std::optional<Regime> predicted;
  if (c.m.contains("predicted")) predicted = parse_regime(get_string(c.m, "predicted"));
  if (c.m.contains("samples")) {
    const std::string path = get_string(c.m, "samples");
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot read samples file '" + path + "'");
    samples = read_samples_csv(in);
  } else {
    const auto cost = cost_of(c.m), utility = utility_of(c.m);
    const FamilySpec f = family_from_json(field(c.m, "family"), &cost, &utility);
    samples = sweep(f, cost, utility, U_grid_of(c.m)).samples;
    if (!predicted) predicted = f.case_tag(cost, utility).predicted;
  }
  const auto fit = classify_regime(samples, predicted);
  json j;
  j["model"] = to_string(fit.model);
  j["intercept"] = num(fit.intercept);
  j["slope"] = num(fit.slope);
  j["residual"] = num(fit.residual);
  j["samples"] = samples.size();
  j["predicted"] = fit.predicted ? json(to_string(*fit.predicted)) : json(nullptr);
  j["matches"] = fit.matches ? json(*fit.matches) : json(nullptr);
  j["candidates"] = json::array();
  for (const auto& m : fit.candidates) {
    j["candidates"].push_back({{"model", to_string(m.model)},
                               {"intercept", num(m.intercept)},
                               {"slope", num(m.slope)},
                               {"residual", num(m.residual)}});
  }
  c.summary = std::string(to_string(fit.model)) + " residual=" + fmt(fit.residual);
  emit_json(c, j);
}

void run_audit(Context& c) {
  const auto cost = cost_of(c.m), utility = utility_of(c.m);
  CaseTag tag;
  double reference = 0.0;
  std::optional<Policy> p;
  if (c.m.contains("policy")) {
    const std::string choice = get_string(c.m, "choice");
    if (choice != "service" && choice != "arrival") throw SchemaError("'choice' must be 'service' or 'arrival'");
    const RateFunction f = shape(choice == "service" ? cost : utility);
    const double rate = get_number(c.m, "rate");
    tag = classify_case(f, rate);
    reference = f.eval(rate);
    p = policy_from_json(c.m.at("policy"));
  } else {
    const FamilySpec f = family_from_json(field(c.m, "family"), &cost, &utility);
    tag = f.case_tag(cost, utility);
    reference = f.reference(cost, utility);
    p = f.build(positive_U(c.m));
  }
  if (auto r = opt_number(c.m, "reference")) reference = *r;
  const auto rep = audit_lower_bound(*p, tag, cost, utility, reference);
  json j;
  j["V"] = num(rep.V);
  j["case"] = case_to_json(tag);
  j["all_pass"] = rep.all_pass();
  j["all_strict"] = rep.all_strict();
  j["checks"] = json::array();
  for (const auto& k : rep.checks) {
    j["checks"].push_back({{"name", k.name},
                           {"applicable", k.applicable},
                           {"lhs", num(k.lhs)},
                           {"rhs", num(k.rhs)},
                           {"margin", num(k.margin)},
                           {"pass", k.pass},
                           {"strict", k.strict},
                           {"detail", k.detail}});
  }
  c.summary = std::string(rep.all_pass() ? "pass" : "fail") + " V=" + fmt(rep.V);
  emit_json(c, j);
}

void run_simulate(Context& c) {
  const auto cost = cost_of(c.m), utility = utility_of(c.m);
  const Policy p = policy_of(c.m, &cost, &utility);
  SimConfig cfg;
  if (auto v = opt_number(c.m, "horizon")) cfg.horizon = *v;
  if (auto v = opt_integer(c.m, "replications")) cfg.replications = static_cast<int>(*v);
  if (c.m.contains("seed")) {
    const auto& s = c.m.at("seed");
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<long long>() < 0)) {
      throw SchemaError("'seed' must be a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (auto v = opt_number(c.m, "warmup_fraction")) cfg.warmup_fraction = *v;
  const auto est = simulate(p, cfg, cost, utility);
  auto e = [](const Estimate& x) { return json{{"mean", num(x.mean)}, {"half_width", num(x.half_width)}}; };
  c.summary = "Qbar=" + fmt(est.Q.mean) + " +- " + fmt(est.Q.half_width);
  emit_json(c, {{"Q", e(est.Q)},
                {"C", e(est.C)},
                {"U", e(est.U)},
                {"replications", est.replications},
                {"events", est.events},
                {"seed", cfg.seed},
                {"horizon", num(cfg.horizon)}});
}

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h{
      {"envelope", run_envelope}, {"feasibility", run_feasibility}, {"eval", run_eval},
      {"solve", run_solve},       {"trace", run_trace},             {"construct", run_construct},
      {"sweep", run_sweep},       {"classify", run_classify},       {"audit", run_audit},
      {"simulate", run_simulate},
  };
  return h;
}

}  // namespace

const std::vector<std::string>& modes() {
  static const std::vector<std::string> m{"envelope", "feasibility", "eval",  "solve", "trace",
                                          "construct", "sweep",       "classify", "audit", "simulate"};
  return m;
}

std::string error_json(const std::string& kind, const std::string& message) {
  return json{{"error", {{"kind", kind}, {"message", message}}}}.dump();
}

int execute(const json& manifest, std::ostream& out, std::ostream& err) {
  try {
    if (!manifest.is_object()) throw SchemaError("a manifest must be a JSON object");
    const std::string mode = get_string(manifest, "mode");
    const auto it = handlers().find(mode);
    if (it == handlers().end()) throw SchemaError("unknown mode '" + mode + "'");
    const std::uint64_t hash = fnv1a64(manifest.dump());

    std::ostringstream buf;
    Context c{manifest, hash, buf, {}};
    it->second(c);

    if (manifest.contains("output")) {
      const std::string path = get_string(manifest, "output");
      std::ofstream f(path, std::ios::binary);
      if (!f) fail(ErrorKind::invalid_argument, "cannot write '" + path + "'");
      f << buf.str();
      out << mode << ": " << c.summary << " -> " << path << '\n';
    } else {
      out << buf.str();
    }
    return 0;
  } catch (const SchemaError& e) {
    err << error_json("schema", e.what()) << '\n';
    return 2;
  } catch (const json::exception& e) {
    err << error_json("schema", e.what()) << '\n';
    return 2;
  } catch (const Error& e) {
    err << error_json(to_string(e.kind()), e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << error_json("internal", e.what()) << '\n';
    return 1;
  }
}

}  // namespace qtl::cli

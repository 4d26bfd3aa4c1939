#include "app.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "io.hpp"
#include "qtl/version.hpp"

namespace qtl::cli {
namespace {

enum class Kind { number, integer, text, json_value, grid };

struct Flag {
  const char* names;  // CLI11 name string
  const char* key;    // manifest key
  Kind kind;
  const char* help;
};

const Flag kOutput{"-o,--output", "output", Kind::text, "Write the artifact to this file instead of stdout"};
const Flag kCost{"--cost", "cost", Kind::json_value, "Cost function spec (JSON or @file)"};
const Flag kUtility{"--utility", "utility", Kind::json_value, "Utility function spec (JSON or @file)"};
const Flag kPolicy{"--policy", "policy", Kind::json_value, "Policy (JSON or @file)"};
const Flag kFamily{"--family", "family", Kind::json_value, "Family spec, e.g. {\"name\":\"mc22\",\"lambda\":0.39}"};
const Flag kU{"-U,--scale", "U", Kind::number, "Scale parameter U of the family"};
const Flag kGridU{"--grid", "U_grid", Kind::grid, "U values (default dyadic 2^-4..2^-14)"};
const Flag kServiceActions{"--service-actions", "service_actions", Kind::grid, "Service rate actions"};
const Flag kArrivalActions{"--arrival-actions", "arrival_actions", Kind::grid, "Arrival rate actions"};
const Flag kStateCap{"--state-cap", "state_cap", Kind::integer, "Arrivals are disabled at this queue length"};
const Flag kMaxIter{"--max-iterations", "max_iterations", Kind::integer, "Policy-iteration cap"};
const Flag kUnif{"--uniformization-rate", "uniformization_rate", Kind::number, "Uniformization rate (default: max rates)"};
const Flag kTol{"--tol", "tol", Kind::number, "Policy-iteration stopping tolerance on the gain"};

struct Mode {
  const char* name;
  const char* description;
  const char* footer;
  std::vector<Flag> flags;
};

std::vector<Mode> mode_table() {
  return {
      {"envelope", "Convex (cost) or concave (utility) envelope of a function, with case tags", "Output: JSON.",
       {{"--function", "function", Kind::json_value, "Function spec; \"role\" selects cost or utility"},
        kCost,
        {"--at", "at", Kind::grid, "Rates at which to evaluate and classify"}}},
      {"feasibility", "Feasibility of the constraint pair (c_c, u_c)", "Output: JSON.",
       {kCost, kUtility, {"--c-c", "c_c", Kind::number, "Cost constraint"},
        {"--u-c", "u_c", Kind::number, "Utility constraint"}}},
      {"eval", "Exact stationary metrics of a policy",
       "Output: JSON. --distribution writes CSV columns q,pi.",
       {kPolicy, kFamily, kU, kCost, kUtility,
        {"--distribution", "distribution", Kind::text, "Also write the stationary distribution CSV here"},
        {"--tail-tol", "tail_tol", Kind::number, "Tail mass tolerance of the truncation"}}},
      {"solve", "Lagrangian MDP by policy iteration", "Output: JSON with the optimal policy.",
       {kCost, kUtility, {"--beta1", "beta1", Kind::number, "Cost multiplier"},
        {"--beta2", "beta2", Kind::number, "Utility multiplier"}, kServiceActions, kArrivalActions, kStateCap,
        kMaxIter, kUnif, kTol}},
      {"trace", "Trade-off curve over a grid of multipliers",
       "CSV columns: beta1,beta2,c_c,u_c,q_star (sorted by c_c; failed points as # comments).",
       {kCost, kUtility, {"--beta1", "beta1", Kind::grid, "Cost multipliers, e.g. {\"log\":[0.1,1000,40]}"},
        {"--beta2", "beta2", Kind::grid, "Utility multipliers (default 0)"}, kServiceActions, kArrivalActions,
        kStateCap, kMaxIter, kUnif, kTol}},
      {"construct", "Build a policy from a family at scale U", "Output: policy JSON.",
       {kFamily, kU, kCost, kUtility}},
      {"sweep", "Evaluate a family over a grid of U",
       "CSV columns: U,V,Qbar,Cbar,Ubar (failed points as # comments).", {kFamily, kCost, kUtility, kGridU}},
      {"classify", "Fit growth models of Qbar against V and pick the regime",
       "Output: JSON. Input is a sweep CSV (--samples) or a family sweep.",
       {kFamily, kCost, kUtility, kGridU, {"--samples", "samples", Kind::text, "Sweep CSV with V and Qbar columns"},
        {"--predicted", "predicted", Kind::text, "Expected regime: finite, log, inv-sqrt, inv"}}},
      {"audit", "Stationary-probability inequalities behind the lower bounds", "Output: JSON.",
       {kPolicy, kFamily, kU, kCost, kUtility,
        {"--choice", "choice", Kind::text, "service or arrival (with --policy)"},
        {"--rate", "rate", Kind::number, "Operating rate (with --policy)"},
        {"--reference", "reference", Kind::number, "Reference value of the gap"}}},
      {"simulate", "Monte Carlo estimate of the metrics of a policy", "Output: JSON.",
       {kPolicy, kFamily, kU, kCost, kUtility, {"--horizon", "horizon", Kind::number, "Simulated time per replication"},
        {"--replications", "replications", Kind::integer, "Independent replications"},
        {"--seed", "seed", Kind::integer, "Seed"},
        {"--warmup-fraction", "warmup_fraction", Kind::number, "Discarded leading share of each run"}}},
  };
}

json parse_json_text(const std::string& text, const std::string& what) {
  std::string body = text;
  if (!text.empty() && text[0] == '@') {
    std::ifstream f(text.substr(1));
    if (!f) throw SchemaError("cannot read " + what + " file '" + text.substr(1) + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    body = ss.str();
  }
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw SchemaError("malformed JSON in " + what + ": " + e.what());
  }
}

json convert(const Flag& f, const std::string& raw) {
  switch (f.kind) {
    case Kind::text: return raw;
    case Kind::json_value: return parse_json_text(raw, f.key);
    case Kind::number:
    case Kind::integer: {
      json j;
      try {
        j = json::parse(raw);
      } catch (const json::parse_error&) {
        throw SchemaError(std::string("'") + f.key + "' must be a number, got '" + raw + "'");
      }
      if (!j.is_number() || (f.kind == Kind::integer && !j.is_number_integer())) {
        throw SchemaError(std::string("'") + f.key + "' must be " + (f.kind == Kind::integer ? "an integer" : "a number"));
      }
      return j;
    }
    case Kind::grid: {
      if (!raw.empty() && (raw[0] == '[' || raw[0] == '{' || raw[0] == '@')) return parse_json_text(raw, f.key);
      json arr = json::array();
      std::stringstream ss(raw);
      for (std::string cell; std::getline(ss, cell, ',');) {
        try {
          std::size_t used = 0;
          arr.push_back(std::stod(cell, &used));
          if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
          throw SchemaError(std::string("'") + f.key + "' must be a comma-separated list of numbers");
        }
      }
      return arr;
    }
  }
  return nullptr;
}

json load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw SchemaError("cannot read manifest '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return json::parse(ss.str());  // parse errors surface as kind "parse"
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Queue-length / cost / utility trade-offs for birth-death queues", "qtl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("qtl ") + kVersion);

  const auto table = mode_table();
  struct Bound {
    CLI::App* sub;
    const Mode* mode;
    std::string manifest;
    std::map<std::string, std::string> values;
  };
  std::vector<Bound> bound(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    auto& b = bound[i];
    b.mode = &table[i];
    b.sub = app.add_subcommand(table[i].name, table[i].description);
    b.sub->footer(table[i].footer);
    b.sub->add_option("--manifest", b.manifest, "Manifest JSON; flags override its fields")->check(CLI::ExistingFile);
    for (const auto& f : {kOutput}) b.sub->add_option(f.names, b.values[f.key], f.help);
    for (const auto& f : table[i].flags) b.sub->add_option(f.names, b.values[f.key], f.help);
  }
  std::string run_path;
  auto* run_cmd = app.add_subcommand("run", "Run a manifest; its \"mode\" field picks the subcommand");
  run_cmd->add_option("manifest", run_path, "Manifest JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_json("usage", e.what()) << '\n';
    return 2;
  }

  json manifest;
  try {
    if (run_cmd->parsed()) {
      manifest = load_manifest(run_path);
    } else {
      for (auto& b : bound) {
        if (!b.sub->parsed()) continue;
        manifest = b.manifest.empty() ? json::object() : load_manifest(b.manifest);
        if (!manifest.is_object()) throw SchemaError("a manifest must be a JSON object");
        if (manifest.contains("mode") && manifest["mode"] != b.mode->name) {
          throw SchemaError(std::string("manifest mode does not match subcommand '") + b.mode->name + "'");
        }
        manifest["mode"] = b.mode->name;
        std::vector<Flag> flags = b.mode->flags;
        flags.push_back(kOutput);
        for (const auto& f : flags) {
          if (b.sub->count(std::string(f.names).substr(std::string(f.names).rfind(',') + 1)) > 0) {
            manifest[f.key] = convert(f, b.values[f.key]);
          }
        }
      }
    }
  } catch (const json::parse_error& e) {
    err << error_json("parse", e.what()) << '\n';
    return 2;
  } catch (const SchemaError& e) {
    err << error_json("schema", e.what()) << '\n';
    return 2;
  }
  return execute(manifest, out, err);
}

}  // namespace qtl::cli

#include "io.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <sstream>

#include "qtl/error.hpp"
#include "qtl/mdp.hpp"
#include "qtl/version.hpp"

namespace qtl::cli {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(fmt(v));
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const json& field(const json& obj, const char* key) {
  if (!obj.is_object()) throw SchemaError(std::string("expected an object holding '") + key + "'");
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) throw SchemaError(std::string("missing field '") + key + "'");
  return *it;
}

double get_number(const json& obj, const char* key) {
  const auto& v = field(obj, key);
  if (!v.is_number()) throw SchemaError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::optional<double> opt_number(const json& obj, const char* key) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return get_number(obj, key);
}

long long get_integer(const json& obj, const char* key) {
  const auto& v = field(obj, key);
  if (!v.is_number_integer()) throw SchemaError(std::string("field '") + key + "' must be an integer");
  return v.get<long long>();
}

std::optional<long long> opt_integer(const json& obj, const char* key) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return get_integer(obj, key);
}

std::string get_string(const json& obj, const char* key) {
  const auto& v = field(obj, key);
  if (!v.is_string()) throw SchemaError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

namespace {

std::vector<RatePoint> points_from_json(const json& j) {
  if (!j.is_array()) throw SchemaError("'points' must be a list of [rate, value] pairs");
  std::vector<RatePoint> out;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw SchemaError("'points' must be a list of [rate, value] pairs");
    }
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

Role parse_role(const std::string& s) {
  if (s == "cost") return Role::cost;
  if (s == "utility") return Role::utility;
  throw SchemaError("role must be 'cost' or 'utility', got '" + s + "'");
}

double number_at(const json& arr, std::size_t i, const char* what) {
  if (!arr.is_array() || i >= arr.size() || !arr[i].is_number()) {
    throw SchemaError(std::string("malformed ") + what);
  }
  return arr[i].get<double>();
}

}  // namespace

RateFunction function_from_json(const json& j, Role role) {
  if (!j.is_object()) throw SchemaError("a function spec must be an object");
  if (j.contains("role")) role = parse_role(get_string(j, "role"));
  const std::string kind = get_string(j, "kind");
  if (kind == "power") {
    const auto& d = field(j, "domain");
    if (!d.is_array() || d.size() != 2) throw SchemaError("'domain' must be [lo, hi]");
    const Interval dom{number_at(d, 0, "domain"), number_at(d, 1, "domain")};
    return RateFunction::power(role, dom, get_number(j, "exponent"), opt_number(j, "scale").value_or(1.0));
  }
  if (kind == "piecewise") return RateFunction::piecewise(role, points_from_json(field(j, "points")));
  if (kind == "discrete") return RateFunction::discrete(role, points_from_json(field(j, "points")));
  throw SchemaError("unknown function kind '" + kind + "'");
}

json function_to_json(const RateFunction& f) {
  json j;
  j["role"] = f.role() == Role::cost ? "cost" : "utility";
  switch (f.kind()) {
    case FunctionKind::power:
      j["kind"] = "power";
      j["domain"] = {num(f.domain().lo), num(f.domain().hi)};
      j["exponent"] = num(f.exponent());
      j["scale"] = num(f.scale());
      return j;
    case FunctionKind::piecewise: j["kind"] = "piecewise"; break;
    case FunctionKind::discrete: j["kind"] = "discrete"; break;
  }
  j["points"] = json::array();
  for (const auto& p : f.points()) j["points"].push_back({num(p.rate), num(p.value)});
  return j;
}

RateSchedule schedule_from_json(const json& j) {
  if (j.is_number()) return RateSchedule({}, j.get<double>());
  std::vector<RatePiece> pieces;
  if (j.contains("pieces")) {
    const auto& arr = j.at("pieces");
    if (!arr.is_array()) throw SchemaError("'pieces' must be a list of [q_lo, q_hi, rate]");
    for (const auto& p : arr) {
      if (!p.is_array() || p.size() != 3 || !p[0].is_number_integer() || !p[1].is_number_integer() ||
          !p[2].is_number()) {
        throw SchemaError("'pieces' must be a list of [q_lo, q_hi, rate] with integer q_lo, q_hi");
      }
      pieces.push_back({p[0].get<QueueLength>(), p[1].get<QueueLength>(), p[2].get<double>()});
    }
  }
  return RateSchedule(std::move(pieces), get_number(j, "tail"));
}

json schedule_to_json(const RateSchedule& s) {
  json j;
  j["pieces"] = json::array();
  for (const auto& p : s.pieces()) j["pieces"].push_back({p.lo, p.hi, num(p.rate)});
  j["tail"] = num(s.tail());
  return j;
}

Policy policy_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("a policy must be an object");
  std::optional<RateBounds> bounds;
  if (j.contains("bounds") && !j.at("bounds").is_null()) {
    const auto& b = j.at("bounds");
    RateBounds rb;
    rb.arrival_min = opt_number(b, "arrival_min").value_or(0.0);
    rb.arrival_max = get_number(b, "arrival_max");
    rb.service_min = opt_number(b, "service_min").value_or(0.0);
    rb.service_max = get_number(b, "service_max");
    bounds = rb;
  }
  std::string label;
  if (j.contains("label")) label = get_string(j, "label");
  return Policy(schedule_from_json(field(j, "lambda")), schedule_from_json(field(j, "mu")), bounds, label);
}

json policy_to_json(const Policy& p) {
  json j;
  j["lambda"] = schedule_to_json(p.arrival_rule());
  j["mu"] = schedule_to_json(p.service_rule());
  j["bounds"] = {{"arrival_min", num(p.bounds().arrival_min)},
                 {"arrival_max", num(p.bounds().arrival_max)},
                 {"service_min", num(p.bounds().service_min)},
                 {"service_max", num(p.bounds().service_max)}};
  if (!p.label().empty()) j["label"] = p.label();
  return j;
}

json case_to_json(const CaseTag& tag) {
  json j;
  j["family"] = to_string(tag.family);
  j["anchor"] = num(tag.anchor);
  j["segment"] = {num(tag.segment.lo), num(tag.segment.hi)};
  j["left_corner"] = tag.left_corner ? num(*tag.left_corner) : json(nullptr);
  j["right_corner"] = tag.right_corner ? num(*tag.right_corner) : json(nullptr);
  j["predicted"] = to_string(tag.predicted);
  return j;
}

json metrics_to_json(const Metrics& m) {
  return {{"Qbar", num(m.Qbar)},
          {"Cbar", num(m.Cbar)},
          {"Ubar", num(m.Ubar)},
          {"Dbar", num(m.Dbar)},
          {"mean_arrival", num(m.mean_arrival)},
          {"mean_service", num(m.mean_service)},
          {"truncation_error", num(m.truncation_error)}};
}

std::vector<double> grid_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>()};
  if (j.is_array()) {
    std::vector<double> out;
    for (const auto& v : j) {
      if (!v.is_number()) throw SchemaError("grid lists must hold numbers");
      out.push_back(v.get<double>());
    }
    if (out.empty()) throw SchemaError("grid lists must be non-empty");
    return out;
  }
  if (j.is_object() && j.size() == 1) {
    const std::string key = j.begin().key();
    const json& spec = j.begin().value();
    if (key == "dyadic") {
      if (!spec.is_array() || spec.size() != 2 || !spec[0].is_number_integer() || !spec[1].is_number_integer()) {
        throw SchemaError("'dyadic' must be [k_lo, k_hi]");
      }
      return dyadic_grid(spec[0].get<int>(), spec[1].get<int>());
    }
    if (key == "log" || key == "uniform") {
      if (!spec.is_array() || spec.size() != 3 || !spec[2].is_number_integer()) {
        throw SchemaError("'" + key + "' must be [lo, hi, n]");
      }
      const double lo = number_at(spec, 0, "grid"), hi = number_at(spec, 1, "grid");
      const int n = spec[2].get<int>();
      return key == "log" ? log_grid(lo, hi, n) : uniform_actions(lo, hi, n);
    }
  }
  throw SchemaError("a grid is a number, a list, or {\"log\"|\"uniform\": [lo, hi, n]} or {\"dyadic\": [k_lo, k_hi]}");
}

FamilySpec family_from_json(const json& j, const RateFunction* cost, const RateFunction* utility) {
  if (!j.is_object()) throw SchemaError("a family spec must be an object");
  FamilySpec f;
  f.kind = parse_family_kind(get_string(j, "name"));
  f.lambda = opt_number(j, "lambda").value_or(0.0);
  f.mu = opt_number(j, "mu").value_or(0.0);
  f.u_inv = opt_number(j, "u_inv").value_or(0.0);
  f.K = opt_number(j, "K");
  f.eps = opt_number(j, "eps");
  if (auto k = opt_integer(j, "plateau")) f.plateau = static_cast<QueueLength>(*k);
  f.r_max = opt_number(j, "r_max").value_or(1.0);
  f.r_amax = opt_number(j, "r_amax").value_or(1.0);

  const bool needs_segment = f.kind == FamilyKind::mc21 || f.kind == FamilyKind::mc22 || f.kind == FamilyKind::mc23;
  auto a = opt_number(j, "a"), b = opt_number(j, "b"), next = opt_number(j, "next_corner");
  if (needs_segment && (!a || !b || !next)) {
    if (cost == nullptr) throw SchemaError("family '" + std::string(to_string(f.kind)) + "' needs a, b, next_corner or a cost");
    const CaseTag tag = f.case_tag(*cost, *cost);
    if (!a) a = tag.segment.lo;
    if (!b) b = tag.segment.hi;
    if (!next && tag.right_corner) next = tag.right_corner;
  }
  f.a = a.value_or(0.0);
  f.b = b.value_or(0.0);
  f.next_corner = next.value_or(0.0);
  if (f.kind == FamilyKind::lc_mirror) {
    if (utility == nullptr) throw SchemaError("family 'lc' needs a utility");
    f.tag = f.case_tag(*utility, *utility);
  }
  return f;
}

std::string provenance_line(std::uint64_t manifest_hash) {
  return std::string("# qtl ") + kVersion + " manifest=" + hex64(manifest_hash);
}

std::vector<ScalingSample> read_samples_csv(std::istream& in) {
  std::string line;
  std::vector<std::string> header;
  std::vector<ScalingSample> out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (header.empty()) {
      header = cells;
      continue;
    }
    if (cells.size() != header.size()) throw SchemaError("ragged samples CSV row: " + line);
    ScalingSample s;
    bool hasV = false, hasQ = false;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      double v = 0.0;
      try {
        v = std::stod(cells[i]);
      } catch (const std::exception&) {
        throw SchemaError("non-numeric samples CSV cell '" + cells[i] + "'");
      }
      if (header[i] == "U") s.U = v;
      if (header[i] == "V") s.V = v, hasV = true;
      if (header[i] == "Qbar") s.Qbar = v, hasQ = true;
      if (header[i] == "Cbar") s.Cbar = v;
      if (header[i] == "Ubar") s.Ubar = v;
    }
    if (!hasV || !hasQ) throw SchemaError("samples CSV needs V and Qbar columns");
    out.push_back(s);
  }
  return out;
}

}  // namespace qtl::cli

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qtl/birth_death.hpp"
#include "qtl/policy_families.hpp"
#include "qtl/rate_functions.hpp"
#include "qtl/scaling.hpp"

namespace qtl::cli {

using json = nlohmann::json;

/// Manifest or flag content that is missing, mistyped or unknown.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 12 significant digits; non-finite values print as inf / -inf / nan.
std::string fmt(double v);
/// A JSON number rounded to 12 significant digits; null when non-finite.
json num(double v);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

const json& field(const json& obj, const char* key);
double get_number(const json& obj, const char* key);
std::optional<double> opt_number(const json& obj, const char* key);
long long get_integer(const json& obj, const char* key);
std::optional<long long> opt_integer(const json& obj, const char* key);
std::string get_string(const json& obj, const char* key);

/// {"kind": "power"|"piecewise"|"discrete", "domain": [lo, hi], "exponent", "scale", "points": [[r, v], ...]}.
/// An optional "role" overrides `role`.
RateFunction function_from_json(const json& j, Role role);
json function_to_json(const RateFunction& f);

/// {"pieces": [[q_lo, q_hi, rate], ...], "tail": rate}.
RateSchedule schedule_from_json(const json& j);
json schedule_to_json(const RateSchedule& s);

/// {"lambda": schedule, "mu": schedule, "bounds": {...}?, "label": ...?}.
Policy policy_from_json(const json& j);
json policy_to_json(const Policy& p);

json case_to_json(const CaseTag& tag);
json metrics_to_json(const Metrics& m);

/// A number, a list, or one of {"log": [lo, hi, n]}, {"uniform": [lo, hi, n]}, {"dyadic": [k_lo, k_hi]}.
std::vector<double> grid_from_json(const json& j);

/// {"name": "mc1"|..., "lambda", "mu", "a", "b", "next_corner", "K", "u_inv", "eps", "plateau", "r_max", "r_amax"}.
/// Segment ends and corners left out are read off the case of the operating rate
/// against the envelope of the relevant function (cost, or utility for "lc").
FamilySpec family_from_json(const json& j, const RateFunction* cost, const RateFunction* utility);

/// Header comment carried by every CSV artifact.
std::string provenance_line(std::uint64_t manifest_hash);

/// Reads U, V, Qbar columns (header names) from a sweep CSV; comment lines are skipped.
std::vector<ScalingSample> read_samples_csv(std::istream& in);

}  // namespace qtl::cli

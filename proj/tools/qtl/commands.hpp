#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "io.hpp"

namespace qtl::cli {

/// Modes accepted in a manifest's "mode" field, one per subcommand.
const std::vector<std::string>& modes();

/// Runs one manifest. The artifact goes to manifest["output"] when set (and a
/// one-line summary to `out`), otherwise to `out`. Errors are written to `err`
/// as {"error": {"kind", "message"}}.
/// Returns 0 on success, 2 for schema problems, 1 for errors raised by the computation.
int execute(const json& manifest, std::ostream& out, std::ostream& err);

/// Error JSON for `err`, one line.
std::string error_json(const std::string& kind, const std::string& message);

}  // namespace qtl::cli

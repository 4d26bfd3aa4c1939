#pragma once

#include <ostream>

namespace qtl::cli {

/// Entry point of the `qtl` tool; returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qtl::cli

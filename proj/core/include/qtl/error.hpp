#pragma once

#include <stdexcept>
#include <string>

namespace qtl {

/// Broad category of a failure, surfaced by the CLI as a machine-readable tag.
enum class ErrorKind {
  invalid_argument,  // precondition or schema violation
  domain,            // rate or value outside a function's domain/range
  unstable,          // policy has no stationary distribution
  capacity,          // truncation or iteration cap exceeded
  convergence,       // iterative solver did not converge
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::invalid_argument, what);
}

}  // namespace qtl

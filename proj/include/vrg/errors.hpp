#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vrg {

enum class ErrorKind {
  invalid_argument,
  domain,
  invalid_trajectory,
  schema,
  numerical,
  io,
};

/// Exception carrying a machine-readable kind; the CLI maps each kind to its
/// own exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

std::string_view to_string(ErrorKind kind);

/// Process exit code for a failure of the given kind (0 is success, 1 is
/// reserved for usage errors).
int exit_code(ErrorKind kind);

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace vrg

#include "vrg/errors.hpp"

namespace vrg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::domain: return "domain_error";
    case ErrorKind::invalid_trajectory: return "invalid_trajectory";
    case ErrorKind::schema: return "schema_error";
    case ErrorKind::numerical: return "numerical_error";
    case ErrorKind::io: return "io_error";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return 2;
    case ErrorKind::domain: return 3;
    case ErrorKind::invalid_trajectory: return 4;
    case ErrorKind::schema: return 5;
    case ErrorKind::numerical: return 6;
    case ErrorKind::io: return 7;
  }
  return 70;
}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace vrg

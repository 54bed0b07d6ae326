#include "pmgeo/error.hpp"

namespace pmgeo {

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input:
    case ErrorKind::degenerate_input:
    case ErrorKind::empty_result:
      return 2;
    case ErrorKind::numerical_failure:
    case ErrorKind::training_failure:
      return 3;
    case ErrorKind::integrity:
    case ErrorKind::unsupported_version:
      return 4;
  }
  return 1;
}

}  // namespace pmgeo

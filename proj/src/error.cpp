#include "afv/error.hpp"

namespace afv {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse error";
    case ErrorKind::schema: return "schema error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::argument: return "argument error";
    case ErrorKind::format: return "format error";
    case ErrorKind::io: return "I/O error";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::scene: return "scene error";
    case ErrorKind::packaging: return "packaging error";
    case ErrorKind::behind_camera: return "behind-camera error";
  }
  return "error";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse:
    case ErrorKind::schema:
    case ErrorKind::validation:
    case ErrorKind::argument:
    case ErrorKind::scene:
    case ErrorKind::packaging:
      return 2;
    default:
      return 3;
  }
}

}  // namespace afv

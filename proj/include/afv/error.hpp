#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace afv {

enum class ErrorKind {
  parse,          // malformed input text (XML, JSON)
  schema,         // well-formed input that does not match the expected schema
  validation,     // values violate a domain invariant
  argument,       // bad function/CLI argument
  format,         // unsupported file format or codec
  io,             // filesystem / truncated file
  numeric,        // numerical routine failed
  scene,          // synthetic scene cannot be rendered (e.g. clipping)
  packaging,      // VLM request media missing
  behind_camera,  // projection of a point with z <= 0
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit code for an error escaping to the CLI: 2 for configuration and
// validation problems, 3 for processing failures.
int exit_code(ErrorKind kind);

}  // namespace afv

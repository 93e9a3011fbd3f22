#pragma once

#include <stdexcept>
#include <string>

namespace cramp {

enum class ErrorKind {
  degenerate_input,
  argument,
  invalid_matrix,
  dimension,
  rank_deficient,
  sample_size,
  config,
  parse,
  io,
  non_pd,
  invalid_scenario,
};

const char* to_string(ErrorKind kind) noexcept;

// Config errors come from the caller's parameters; everything else is a
// property of the data being tested.
inline bool is_config_error(ErrorKind kind) noexcept {
  return kind == ErrorKind::config || kind == ErrorKind::argument ||
         kind == ErrorKind::invalid_scenario;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace cramp

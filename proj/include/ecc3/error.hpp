#pragma once

#include <stdexcept>
#include <string>

namespace ecc3 {

// Error categories; they map one-to-one onto the C API / CLI status codes.
enum class ErrorKind {
  invalid = 1, // bad argument, broken invariant, domain error
  config = 2,  // unreadable/ill-formed config or input data
  numeric = 3, // numerical failure (divergence, non-finite loss)
  bound = 4,   // bound-check violation under strict mode
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_invalid(const std::string& what) {
  throw Error(ErrorKind::invalid, what);
}
[[noreturn]] inline void throw_config(const std::string& what) {
  throw Error(ErrorKind::config, what);
}
[[noreturn]] inline void throw_numeric(const std::string& what) {
  throw Error(ErrorKind::numeric, what);
}

}  // namespace ecc3

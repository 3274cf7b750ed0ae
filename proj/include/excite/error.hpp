#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace excite {

// Values double as CLI exit codes.
enum class ErrorKind {
  config = 2,
  input = 3,
  numeric = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error config_error(const std::string& message) {
  return Error(ErrorKind::config, message);
}

inline Error input_error(const std::string& message) {
  return Error(ErrorKind::input, message);
}

inline Error numeric_error(const std::string& message) {
  return Error(ErrorKind::numeric, message);
}

}  // namespace excite

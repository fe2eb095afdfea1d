#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace roomsim {

enum class ErrorKind {
  invalid_argument,
  parse,
  validation,
  not_found,
  degenerate,
  numerical,
  incompatible,
};

std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace roomsim

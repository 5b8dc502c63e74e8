#pragma once

#include <stdexcept>
#include <string>

namespace prefaudit {

// Every recoverable failure in the library surfaces as prefaudit::Error.
// `kind` is a short machine-readable tag that the CLI echoes in its
// structured error output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

}  // namespace prefaudit

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

namespace mwo {

enum class ErrorKind { not_found, conflict, validation, internal };

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::validation: return "validation";
    case ErrorKind::internal: return "internal";
  }
  return "internal";
}

// Single exception type for the library. `detail` carries structured context
// (offending row ids, missing columns, ...) that the CLI and the HTTP layer
// forward verbatim.
class Error : public std::runtime_error {
 public:
  explicit Error(std::string message, ErrorKind kind = ErrorKind::validation,
                 nlohmann::json detail = nlohmann::json::object())
      : std::runtime_error(std::move(message)), kind_(kind), detail_(std::move(detail)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  nlohmann::json detail_;
};

}  // namespace mwo

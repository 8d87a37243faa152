#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hmdap {

enum class ErrorCode {
  InvalidArgument,
  NotFound,
  Conflict,
  Syntax,
  Plan,
  Type,
  Runtime,
  Io,
  SchemaInference,
  Scan,
  Config,
  Unsupported,
  Cancelled,
  Internal,
};

std::string_view to_string(ErrorCode code);

/// 1-based position inside a text document (query or config).
struct SourcePosition {
  std::int64_t line = 1;
  std::int64_t column = 1;

  friend bool operator==(const SourcePosition&, const SourcePosition&) = default;
};

/// Single exception type used across the engine. The code drives CLI exit
/// codes and HTTP status mapping; only Internal is a non-user error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<SourcePosition> position = std::nullopt)
      : std::runtime_error(message), code_(code), position_(position) {}

  ErrorCode code() const noexcept { return code_; }
  const std::optional<SourcePosition>& position() const noexcept { return position_; }
  bool is_user_error() const noexcept { return code_ != ErrorCode::Internal; }

 private:
  ErrorCode code_;
  std::optional<SourcePosition> position_;
};

}  // namespace hmdap

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace maskap {

enum class ErrorKind : std::uint8_t {
  LengthMismatch = 1,
  FieldTooLong,
  DuplicateServerId,
  DuplicateUid,
  NoServersRegistered,
  BadCredentials,
  UnknownServer,
  UnknownUser,
  StaleRequest,
  StaleResponse,
  AuthFail,
  MalformedList,
  ReplayDetected,
  IoError,
  CorruptRecord,
  MalformedFrame,
  MessageDropped,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind);
std::optional<ErrorKind> error_kind_from_string(std::string_view name);

/// Every failure in the library surfaces as this exception. The kind is the
/// stable, machine-readable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail);
  explicit Error(ErrorKind kind);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace maskap

#include "maskap/bytes.hpp"

#include <array>

namespace maskap {

namespace {

constexpr std::array<std::string_view, 18> kErrorNames = {
    "",
    "LengthMismatch",
    "FieldTooLong",
    "DuplicateServerId",
    "DuplicateUid",
    "NoServersRegistered",
    "BadCredentials",
    "UnknownServer",
    "UnknownUser",
    "StaleRequest",
    "StaleResponse",
    "AuthFail",
    "MalformedList",
    "ReplayDetected",
    "IoError",
    "CorruptRecord",
    "MalformedFrame",
    "MessageDropped",
};

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string_view to_string(ErrorKind kind) {
  const auto index = static_cast<std::size_t>(kind);
  if (kind == ErrorKind::InvalidArgument) return "InvalidArgument";
  if (index < kErrorNames.size()) return kErrorNames[index];
  return "Unknown";
}

std::optional<ErrorKind> error_kind_from_string(std::string_view name) {
  for (std::size_t i = 1; i < kErrorNames.size(); ++i) {
    if (kErrorNames[i] == name) return static_cast<ErrorKind>(i);
  }
  if (name == "InvalidArgument") return ErrorKind::InvalidArgument;
  return std::nullopt;
}

Error::Error(ErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

Error::Error(ErrorKind kind) : std::runtime_error(std::string(to_string(kind))), kind_(kind) {}

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (const std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(ErrorKind::CorruptRecord, "odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorKind::CorruptRecord, "invalid hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

void put_be32(std::span<std::uint8_t, 4> out, std::uint32_t value) noexcept {
  for (int i = 3; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(value & 0xff);
    value >>= 8;
  }
}

void put_be64(std::span<std::uint8_t, 8> out, std::uint64_t value) noexcept {
  for (int i = 7; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(value & 0xff);
    value >>= 8;
  }
}

std::uint32_t get_be32(ByteView in) {
  if (in.size() < 4) throw Error(ErrorKind::LengthMismatch, "need 4 bytes for be32");
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | in[i];
  return v;
}

std::uint64_t get_be64(ByteView in) {
  if (in.size() < 8) throw Error(ErrorKind::LengthMismatch, "need 8 bytes for be64");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | in[i];
  return v;
}

std::array<std::uint8_t, 4> Timestamp32::encode() const noexcept {
  std::array<std::uint8_t, 4> out{};
  put_be32(out, seconds);
  return out;
}

Timestamp32 Timestamp32::decode(ByteView bytes) {
  if (bytes.size() != kSize) throw Error(ErrorKind::LengthMismatch, "timestamp must be 4 bytes");
  return Timestamp32{get_be32(bytes)};
}

Bytes xor_bytes(ByteView a, ByteView b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::LengthMismatch,
                "xor of " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " bytes");
  }
  Bytes out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ^ b[i];
  return out;
}

}  // namespace maskap

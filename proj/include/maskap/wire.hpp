#pragma once

// Binary frames: [u32 length, big-endian][u8 type][body]. The length covers
// the type byte and body. Bodies are fixed layouts of the protocol fields.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "maskap/bytes.hpp"
#include "maskap/protocol.hpp"

namespace maskap::wire {

enum class MsgType : std::uint8_t {
  LoginRequest = 0x01,
  LoginResponse = 0x02,
  UpdateRequest = 0x03,
  DbUpdateRequest = 0x04,
  ListPayload = 0x05,
  UserListDelta = 0x06,
  Error = 0x7F,
};

constexpr std::size_t kLengthPrefix = 4;
/// Upper bound on the length field (type byte + body).
constexpr std::size_t kMaxFrameLength = 4096;

std::string_view to_string(MsgType type);
std::optional<MsgType> msg_type_from_byte(std::uint8_t b);

struct Frame {
  MsgType type = MsgType::Error;
  Bytes body;

  friend bool operator==(const Frame&, const Frame&) = default;
};

Bytes encode_body(const LoginRequest& m);
Bytes encode_body(const LoginResponse& m);
Bytes encode_body(const UpdateRequest& m);
Bytes encode_body(const DbUpdateRequest& m);

LoginRequest decode_login_request(ByteView body);
LoginResponse decode_login_response(ByteView body);
UpdateRequest decode_update_request(ByteView body);
DbUpdateRequest decode_db_update_request(ByteView body);

Frame make_frame(const LoginRequest& m);
Frame make_frame(const LoginResponse& m);
Frame make_frame(const UpdateRequest& m);
Frame make_frame(const DbUpdateRequest& m);
Frame make_list_payload(ByteView server_list);
Frame make_user_list_delta(const UserListDelta& delta);
Frame make_error_frame(ErrorKind kind, std::string_view message = {});

struct ErrorBody {
  ErrorKind kind = ErrorKind::MalformedFrame;
  std::string message;
};
ErrorBody decode_error(ByteView body);

/// Throws MalformedFrame when the body does not fit the type's layout.
void validate_body(MsgType type, ByteView body);

Bytes encode_frame(const Frame& frame);
/// Decodes exactly one complete frame; MalformedFrame on any defect.
Frame decode_frame(ByteView bytes);
/// Parses type byte + body (the part after the length prefix).
Frame decode_payload(ByteView payload);

/// Raise the error carried by an Error frame, or MalformedFrame when the
/// frame is not of the expected type.
void expect_type(const Frame& frame, MsgType expected);

}  // namespace maskap::wire

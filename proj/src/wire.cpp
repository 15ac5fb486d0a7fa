#include "maskap/wire.hpp"

namespace maskap::wire {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorKind::MalformedFrame, what); }

void require_size(ByteView body, std::size_t size, std::string_view what) {
  if (body.size() != size) {
    malformed(std::string(what) + " body must be " + std::to_string(size) + " bytes, got " +
              std::to_string(body.size()));
  }
}

}  // namespace

std::string_view to_string(MsgType type) {
  switch (type) {
    case MsgType::LoginRequest: return "LoginRequest";
    case MsgType::LoginResponse: return "LoginResponse";
    case MsgType::UpdateRequest: return "UpdateRequest";
    case MsgType::DbUpdateRequest: return "DbUpdateRequest";
    case MsgType::ListPayload: return "ListPayload";
    case MsgType::UserListDelta: return "UserListDelta";
    case MsgType::Error: return "Error";
  }
  return "Unknown";
}

std::optional<MsgType> msg_type_from_byte(std::uint8_t b) {
  switch (b) {
    case 0x01: case 0x02: case 0x03: case 0x04: case 0x05: case 0x06: case 0x7F:
      return static_cast<MsgType>(b);
    default:
      return std::nullopt;
  }
}

Bytes encode_body(const LoginRequest& m) { return concat(m.alpha, m.beta, m.t1); }
Bytes encode_body(const LoginResponse& m) { return concat(m.gamma, m.sigma, m.t2); }
Bytes encode_body(const UpdateRequest& m) { return concat(m.uid, m.tau, m.t4); }
Bytes encode_body(const DbUpdateRequest& m) { return concat(m.id, m.omega, m.t6); }

LoginRequest decode_login_request(ByteView body) {
  require_size(body, LoginRequest::kWireSize, "LoginRequest");
  return {Digest256::from_view(body.subspan(0, 32)), Digest256::from_view(body.subspan(32, 32)),
          Timestamp32::decode(body.subspan(64, 4))};
}

LoginResponse decode_login_response(ByteView body) {
  require_size(body, LoginResponse::kWireSize, "LoginResponse");
  return {Masked256::from_view(body.subspan(0, 32)), Digest256::from_view(body.subspan(32, 32)),
          Timestamp32::decode(body.subspan(64, 4))};
}

UpdateRequest decode_update_request(ByteView body) {
  require_size(body, UpdateRequest::kWireSize, "UpdateRequest");
  return {Digest256::from_view(body.subspan(0, 32)), Digest256::from_view(body.subspan(32, 32)),
          Timestamp32::decode(body.subspan(64, 4))};
}

DbUpdateRequest decode_db_update_request(ByteView body) {
  require_size(body, DbUpdateRequest::kWireSize, "DbUpdateRequest");
  return {IdField::from_view(body.subspan(0, 16)), Digest256::from_view(body.subspan(16, 32)),
          Timestamp32::decode(body.subspan(48, 4))};
}

Frame make_frame(const LoginRequest& m) { return {MsgType::LoginRequest, encode_body(m)}; }
Frame make_frame(const LoginResponse& m) { return {MsgType::LoginResponse, encode_body(m)}; }
Frame make_frame(const UpdateRequest& m) { return {MsgType::UpdateRequest, encode_body(m)}; }
Frame make_frame(const DbUpdateRequest& m) { return {MsgType::DbUpdateRequest, encode_body(m)}; }

Frame make_list_payload(ByteView server_list) {
  return {MsgType::ListPayload, Bytes(server_list.begin(), server_list.end())};
}

Frame make_user_list_delta(const UserListDelta& delta) {
  return {MsgType::UserListDelta, encode_user_list(delta.entries)};
}

Frame make_error_frame(ErrorKind kind, std::string_view message) {
  Frame f{MsgType::Error, {static_cast<std::uint8_t>(kind)}};
  const std::size_t room = kMaxFrameLength - 2;
  const std::size_t n = std::min(message.size(), room);
  f.body.insert(f.body.end(), message.begin(), message.begin() + static_cast<std::ptrdiff_t>(n));
  return f;
}

ErrorBody decode_error(ByteView body) {
  if (body.empty()) malformed("empty error body");
  ErrorBody out;
  const bool known = body[0] >= 1 && body[0] <= static_cast<std::uint8_t>(ErrorKind::InvalidArgument);
  out.kind = known ? static_cast<ErrorKind>(body[0]) : ErrorKind::MalformedFrame;
  out.message.assign(body.begin() + 1, body.end());
  return out;
}

void validate_body(MsgType type, ByteView body) {
  switch (type) {
    case MsgType::LoginRequest: require_size(body, LoginRequest::kWireSize, "LoginRequest"); break;
    case MsgType::LoginResponse: require_size(body, LoginResponse::kWireSize, "LoginResponse"); break;
    case MsgType::UpdateRequest: require_size(body, UpdateRequest::kWireSize, "UpdateRequest"); break;
    case MsgType::DbUpdateRequest:
      require_size(body, DbUpdateRequest::kWireSize, "DbUpdateRequest");
      break;
    case MsgType::ListPayload:
      if (body.empty() || body.size() % ServerListEntry::kWireSize != 0) malformed("bad list payload");
      break;
    case MsgType::UserListDelta:
      if (body.size() % UserListEntry::kWireSize != 0) malformed("bad user list delta");
      break;
    case MsgType::Error:
      if (body.empty()) malformed("empty error body");
      break;
  }
}

Bytes encode_frame(const Frame& frame) {
  const std::size_t length = 1 + frame.body.size();
  if (length > kMaxFrameLength) malformed("frame exceeds " + std::to_string(kMaxFrameLength) + " bytes");
  Bytes out(kLengthPrefix);
  put_be32(std::span<std::uint8_t, 4>(out.data(), 4), static_cast<std::uint32_t>(length));
  out.push_back(static_cast<std::uint8_t>(frame.type));
  append(out, frame.body);
  return out;
}

Frame decode_payload(ByteView payload) {
  if (payload.empty()) malformed("missing type byte");
  if (payload.size() > kMaxFrameLength) malformed("oversized frame");
  const auto type = msg_type_from_byte(payload[0]);
  if (!type) malformed("unknown message type " + std::to_string(payload[0]));
  Frame f{*type, Bytes(payload.begin() + 1, payload.end())};
  validate_body(f.type, f.body);
  return f;
}

Frame decode_frame(ByteView bytes) {
  if (bytes.size() < kLengthPrefix + 1) malformed("truncated frame");
  const std::uint32_t length = get_be32(bytes);
  if (length == 0 || length > kMaxFrameLength) malformed("bad frame length " + std::to_string(length));
  if (bytes.size() != kLengthPrefix + length) malformed("frame length does not match buffer");
  return decode_payload(bytes.subspan(kLengthPrefix));
}

void expect_type(const Frame& frame, MsgType expected) {
  if (frame.type == expected) return;
  if (frame.type == MsgType::Error) {
    const ErrorBody err = decode_error(frame.body);
    throw Error(err.kind, "peer: " + err.message);
  }
  malformed("expected " + std::string(to_string(expected)) + ", got " +
            std::string(to_string(frame.type)));
}

}  // namespace maskap::wire

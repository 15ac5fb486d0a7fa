#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maskap/error.hpp"

namespace maskap {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

std::string to_hex(ByteView bytes);
/// Accepts upper or lower case; throws CorruptRecord on odd length or bad digits.
Bytes from_hex(std::string_view hex);

/// Fixed-width byte string. The tag keeps digests, nonces, keys and text
/// fields from being mixed up even though several share a width.
template <std::size_t N, class Tag>
class Blob {
 public:
  static constexpr std::size_t kSize = N;

  Blob() = default;
  explicit Blob(const std::array<std::uint8_t, N>& bytes) : bytes_(bytes) {}

  static Blob from_view(ByteView bytes) {
    if (bytes.size() != N) {
      throw Error(ErrorKind::LengthMismatch,
                  "expected " + std::to_string(N) + " bytes, got " + std::to_string(bytes.size()));
    }
    Blob out;
    std::copy(bytes.begin(), bytes.end(), out.bytes_.begin());
    return out;
  }

  static Blob from_hex(std::string_view hex) {
    const Bytes raw = maskap::from_hex(hex);
    if (raw.size() != N) {
      throw Error(ErrorKind::CorruptRecord,
                  "hex field must encode " + std::to_string(N) + " bytes");
    }
    return from_view(raw);
  }

  /// UTF-8 text zero-padded on the right. Only text-tagged fields.
  static Blob from_string(std::string_view text)
    requires Tag::kText
  {
    if (text.size() > N) {
      throw Error(ErrorKind::FieldTooLong, "'" + std::string(text) + "' exceeds " +
                                               std::to_string(N) + " bytes");
    }
    Blob out;
    std::copy(text.begin(), text.end(), out.bytes_.begin());
    return out;
  }

  std::string str() const
    requires Tag::kText
  {
    std::size_t len = N;
    while (len > 0 && bytes_[len - 1] == 0) --len;
    return std::string(bytes_.begin(), bytes_.begin() + static_cast<std::ptrdiff_t>(len));
  }

  ByteView view() const noexcept { return bytes_; }
  std::span<std::uint8_t> mutable_view() noexcept { return bytes_; }
  const std::array<std::uint8_t, N>& array() const noexcept { return bytes_; }
  std::uint8_t operator[](std::size_t i) const { return bytes_[i]; }
  std::string hex() const { return to_hex(bytes_); }

  friend auto operator<=>(const Blob&, const Blob&) = default;

  friend Blob operator^(Blob lhs, const Blob& rhs) noexcept {
    for (std::size_t i = 0; i < N; ++i) lhs.bytes_[i] ^= rhs.bytes_[i];
    return lhs;
  }

 private:
  std::array<std::uint8_t, N> bytes_{};
};

struct DigestTag { static constexpr bool kText = false; };
struct NonceTag { static constexpr bool kText = false; };
struct KeyTag { static constexpr bool kText = false; };
struct MaskedTag { static constexpr bool kText = false; };
struct IdTag { static constexpr bool kText = true; };
struct PwTag { static constexpr bool kText = true; };
struct LocTag { static constexpr bool kText = true; };

using Digest256 = Blob<32, DigestTag>;
using Nonce128 = Blob<16, NonceTag>;
using Key256 = Blob<32, KeyTag>;
/// 32 bytes of payload hidden under a digest-sized mask.
using Masked256 = Blob<32, MaskedTag>;
using IdField = Blob<16, IdTag>;
using PwField = Blob<16, PwTag>;
using LocField = Blob<16, LocTag>;

/// Seconds since the Unix epoch; 4 bytes big-endian on the wire.
struct Timestamp32 {
  std::uint32_t seconds = 0;

  static constexpr std::size_t kSize = 4;

  std::array<std::uint8_t, 4> encode() const noexcept;
  static Timestamp32 decode(ByteView bytes);

  friend auto operator<=>(const Timestamp32&, const Timestamp32&) = default;
};

void put_be32(std::span<std::uint8_t, 4> out, std::uint32_t value) noexcept;
void put_be64(std::span<std::uint8_t, 8> out, std::uint64_t value) noexcept;
std::uint32_t get_be32(ByteView in);
std::uint64_t get_be64(ByteView in);

/// Elementwise XOR of equal-length sequences; LengthMismatch otherwise.
Bytes xor_bytes(ByteView a, ByteView b);

inline void append(Bytes& out, ByteView bytes) { out.insert(out.end(), bytes.begin(), bytes.end()); }
template <std::size_t N, class Tag>
void append(Bytes& out, const Blob<N, Tag>& blob) {
  append(out, blob.view());
}
inline void append(Bytes& out, const Timestamp32& t) { append(out, t.encode()); }
inline void append(Bytes& out, const Bytes& bytes) { append(out, ByteView(bytes)); }

/// Juxtaposition of fixed-width encodings.
template <class... Fields>
Bytes concat(const Fields&... fields) {
  Bytes out;
  out.reserve(128);
  (append(out, fields), ...);
  return out;
}

}  // namespace maskap

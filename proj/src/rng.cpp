#include "maskap/rng.hpp"

#include <openssl/rand.h>

#include <stdexcept>

namespace maskap {

void Rng::fill(std::span<std::uint8_t> out) {
  if (!engine_) {
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
      throw std::runtime_error("RAND_bytes failed");
    }
    return;
  }
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t word = (*engine_)();
    for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
      out[i] = static_cast<std::uint8_t>(word & 0xff);
      word >>= 8;
    }
  }
}

std::uint64_t Rng::next_u64() {
  if (engine_) return (*engine_)();
  std::array<std::uint8_t, 8> raw{};
  fill(raw);
  return get_be64(raw);
}

std::uint64_t Rng::uniform(std::uint64_t bound) {
  if (bound == 0) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % bound;
}

}  // namespace maskap

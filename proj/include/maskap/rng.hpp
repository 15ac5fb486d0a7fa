#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>

#include "maskap/bytes.hpp"

namespace maskap {

/// Nonce source. Seeded instances are deterministic (simulation, tests);
/// unseeded instances draw from the OS CSPRNG.
class Rng {
 public:
  Rng() = default;
  explicit Rng(std::uint64_t seed) : engine_(std::in_place, seed) {}

  static Rng from_optional_seed(std::optional<std::uint64_t> seed) {
    return seed ? Rng(*seed) : Rng();
  }

  bool deterministic() const noexcept { return engine_.has_value(); }

  void fill(std::span<std::uint8_t> out);
  std::uint64_t next_u64();
  /// Uniform in [0, bound).
  std::uint64_t uniform(std::uint64_t bound);

  template <class BlobT>
  BlobT draw() {
    std::array<std::uint8_t, BlobT::kSize> raw{};
    fill(raw);
    return BlobT(raw);
  }

  Nonce128 nonce() { return draw<Nonce128>(); }

 private:
  std::optional<std::mt19937_64> engine_;
};

}  // namespace maskap

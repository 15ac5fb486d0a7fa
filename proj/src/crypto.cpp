#include "maskap/crypto.hpp"

#include <openssl/evp.h>


namespace maskap {

namespace {

thread_local CountingScope* active_scope = nullptr;

Digest256 sha256(ByteView data) {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("EVP_Digest(sha256) failed");
  }
  return Digest256(out);
}

}  // namespace

void HashCounter::add(std::string_view phase, std::uint64_t protocol_calls,
                      std::uint64_t keystream_calls) {
  std::lock_guard lock(mutex_);
  auto bump = [&](auto& map, std::uint64_t n) {
    auto it = map.find(phase);
    if (it == map.end()) it = map.emplace(std::string(phase), 0).first;
    it->second += n;
  };
  bump(protocol_, protocol_calls);
  bump(keystream_, keystream_calls);
}

std::uint64_t HashCounter::count(std::string_view phase) const {
  std::lock_guard lock(mutex_);
  auto it = protocol_.find(phase);
  return it == protocol_.end() ? 0 : it->second;
}

std::uint64_t HashCounter::keystream_count(std::string_view phase) const {
  std::lock_guard lock(mutex_);
  auto it = keystream_.find(phase);
  return it == keystream_.end() ? 0 : it->second;
}

std::uint64_t HashCounter::total() const {
  std::lock_guard lock(mutex_);
  std::uint64_t sum = 0;
  for (const auto& [_, n] : protocol_) sum += n;
  return sum;
}

std::uint64_t HashCounter::keystream_total() const {
  std::lock_guard lock(mutex_);
  std::uint64_t sum = 0;
  for (const auto& [_, n] : keystream_) sum += n;
  return sum;
}

std::map<std::string, std::uint64_t> HashCounter::by_phase() const {
  std::lock_guard lock(mutex_);
  return {protocol_.begin(), protocol_.end()};
}

void HashCounter::reset() {
  std::lock_guard lock(mutex_);
  protocol_.clear();
  keystream_.clear();
}

CountingScope::CountingScope(HashCounter& counter, std::string phase)
    : counter_(counter), phase_(std::move(phase)), previous_(active_scope) {
  active_scope = this;
}

CountingScope::~CountingScope() {
  active_scope = previous_;
  counter_.add(phase_, protocol_calls_, keystream_calls_);
}

Digest256 hash(ByteView data) {
  if (active_scope != nullptr) ++active_scope->protocol_calls_;
  return sha256(data);
}

Bytes keystream_mask(const Digest256& key, ByteView payload) {
  Bytes out(payload.begin(), payload.end());
  std::array<std::uint8_t, 36> block_input{};
  std::copy(key.view().begin(), key.view().end(), block_input.begin());
  std::uint32_t counter = 0;
  for (std::size_t offset = 0; offset < out.size(); offset += Digest256::kSize, ++counter) {
    put_be32(std::span<std::uint8_t, 4>(block_input.data() + 32, 4), counter);
    const Digest256 block = sha256(block_input);
    if (active_scope != nullptr) ++active_scope->keystream_calls_;
    const std::size_t n = std::min(Digest256::kSize, out.size() - offset);
    for (std::size_t i = 0; i < n; ++i) out[offset + i] ^= block[i];
  }
  return out;
}

}  // namespace maskap

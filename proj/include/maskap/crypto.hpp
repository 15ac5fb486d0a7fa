#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <string_view>

#include "maskap/bytes.hpp"

namespace maskap {

/// Tally of protocol-level h(.) invocations, grouped by phase label.
/// Keystream expansion blocks are tracked apart and never mixed into the
/// protocol totals.
class HashCounter {
 public:
  HashCounter() = default;
  HashCounter(const HashCounter&) = delete;
  HashCounter& operator=(const HashCounter&) = delete;

  void add(std::string_view phase, std::uint64_t protocol_calls, std::uint64_t keystream_calls);

  std::uint64_t count(std::string_view phase) const;
  std::uint64_t keystream_count(std::string_view phase) const;
  std::uint64_t total() const;
  std::uint64_t keystream_total() const;
  std::map<std::string, std::uint64_t> by_phase() const;
  void reset();

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::uint64_t, std::less<>> protocol_;
  std::map<std::string, std::uint64_t, std::less<>> keystream_;
};

/// Routes every hash made on this thread into `counter` under `phase` until
/// destroyed. Scopes nest; the innermost one wins. Tallies are merged into
/// the counter when the scope ends.
class CountingScope {
 public:
  CountingScope(HashCounter& counter, std::string phase);
  ~CountingScope();
  CountingScope(const CountingScope&) = delete;
  CountingScope& operator=(const CountingScope&) = delete;

  std::uint64_t protocol_calls() const noexcept { return protocol_calls_; }
  std::uint64_t keystream_calls() const noexcept { return keystream_calls_; }

 private:
  friend Digest256 hash(ByteView);
  friend Bytes keystream_mask(const Digest256&, ByteView);

  HashCounter& counter_;
  std::string phase_;
  std::uint64_t protocol_calls_ = 0;
  std::uint64_t keystream_calls_ = 0;
  CountingScope* previous_;
};

/// SHA-256. Counts as one protocol hash in the active scope.
Digest256 hash(ByteView data);

template <class... Fields>
Digest256 hash_of(const Fields&... fields) {
  const Bytes joined = concat(fields...);
  return hash(joined);
}

/// payload XOR (h(key||0) || h(key||1) || ...), counters 4-byte big-endian.
/// An involution. Block hashes are tallied as keystream calls.
Bytes keystream_mask(const Digest256& key, ByteView payload);

}  // namespace maskap

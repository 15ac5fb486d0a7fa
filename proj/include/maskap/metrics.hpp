#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "maskap/netsim.hpp"

namespace maskap::metrics {

/// Previously published figures, carried in report notes for comparison.
inline constexpr std::uint64_t kPublishedCardBytes = 160;
inline constexpr std::uint64_t kPublishedRegistrationHashes = 20;

struct CostReport {
  std::string phase;
  std::uint64_t hash_count = 0;
  std::uint64_t keystream_hashes = 0;
  std::uint64_t wire_bytes = 0;
  std::uint64_t storage_bytes = 0;
  double wall_time_ms = 0.0;
  std::string note;
};

nlohmann::json to_json(const CostReport& report);

struct AuthHashes {
  std::uint64_t user = 0;
  std::uint64_t server = 0;
  std::uint64_t keystream = 0;

  std::uint64_t total() const noexcept { return user + server; }
};

/// One login exchange driven directly through the protocol layer, hashes
/// split by side. Throws if the exchange does not agree on a key.
AuthHashes count_auth_hashes(sim::World& world, std::string_view user, std::string_view server);

struct RegistrationHashes {
  std::uint64_t server = 0;
  std::uint64_t user = 0;
  std::uint64_t rc = 0;
  std::uint64_t keystream = 0;

  std::uint64_t total() const noexcept { return server + user + rc; }
};

/// Enrolls one extra server and one extra user in `world`, counting every
/// hash on each side.
RegistrationHashes count_registration_hashes(sim::World& world);

struct CostOptions {
  std::size_t servers = 1;
  std::size_t runs = 101;
  std::uint64_t seed = 1;
};

/// Every figure is measured from live encodings and counters.
std::vector<CostReport> measure_costs(const CostOptions& options);

struct SizeRow {
  std::string item;
  std::uint64_t bytes = 0;
  std::string note;
};

/// Encoded sizes of every wire body plus card storage for 1..max_servers.
std::vector<SizeRow> measure_sizes(std::size_t max_servers, std::uint64_t seed);
nlohmann::json to_json(const SizeRow& row);

}  // namespace maskap::metrics

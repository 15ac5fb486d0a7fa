#include <gtest/gtest.h>

#include "maskap/metrics.hpp"

namespace maskap::metrics {
namespace {

const CostReport& phase(const std::vector<CostReport>& rows, std::string_view name) {
  for (const auto& r : rows) {
    if (r.phase == name) return r;
  }
  throw std::runtime_error("missing phase " + std::string(name));
}

TEST(Costs, AuthenticationFigures) {
  const auto rows = measure_costs({.servers = 2, .runs = 5, .seed = 3});
  const CostReport& auth = phase(rows, "auth");
  EXPECT_EQ(auth.hash_count, 20u);
  EXPECT_EQ(auth.wire_bytes, 136u);
  EXPECT_EQ(auth.keystream_hashes, 8u);  // two keystream layers over two 64-byte entries
  EXPECT_EQ(phase(rows, "auth.user").hash_count + phase(rows, "auth.server").hash_count, 20u);
  EXPECT_GE(auth.wall_time_ms, 0.0);
  EXPECT_EQ(phase(rows, "card").storage_bytes, 128u + 64u * 2);
}

TEST(Costs, RegistrationIsReportedNotPinned) {
  sim::World w({.seed = 4});
  w.add_server("s", "p", "l");
  const RegistrationHashes reg = count_registration_hashes(w);
  EXPECT_EQ(reg.server, 2u);
  EXPECT_EQ(reg.rc, 4u);
  EXPECT_EQ(reg.total(), reg.server + reg.user + reg.rc);
}

TEST(Costs, ZeroServersRejected) { EXPECT_THROW(measure_costs({.servers = 0}), Error); }

TEST(Sizes, CardGrowsSixtyFourPerServer) {
  const auto rows = measure_sizes(3, 5);
  std::vector<std::uint64_t> cards;
  for (const auto& r : rows) {
    if (r.item.starts_with("card")) cards.push_back(r.bytes);
    if (r.item == "LoginRequest" || r.item == "LoginResponse") EXPECT_EQ(r.bytes, 68u);
    if (r.item == "login exchange") EXPECT_EQ(r.bytes, 136u);
  }
  ASSERT_EQ(cards.size(), 3u);
  for (std::size_t n = 1; n <= 3; ++n) EXPECT_EQ(cards[n - 1], 4u * 32 + 64u * n);
}

TEST(Sizes, WireBytesIndependentOfServerCount) {
  for (std::size_t n = 1; n <= 4; ++n) {
    EXPECT_EQ(phase(measure_costs({.servers = n, .runs = 1, .seed = n}), "auth").wire_bytes, 136u);
  }
}

}  // namespace
}  // namespace maskap::metrics

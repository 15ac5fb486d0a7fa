// Acceptance driver: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "maskap/attacks.hpp"
#include "maskap/crypto.hpp"
#include "maskap/metrics.hpp"
#include "maskap/registry.hpp"
#include "maskap/service.hpp"

namespace {

using namespace maskap;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string random_text(Rng& rng, std::size_t min_len, std::size_t max_len) {
  static constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_.";
  const std::size_t len = min_len + rng.uniform(max_len - min_len + 1);
  std::string out;
  for (std::size_t i = 0; i < len; ++i) out += kAlphabet[rng.uniform(sizeof kAlphabet - 1)];
  return out;
}

Verdict honest_key_agreement() {
  const auto start = Clock::now();
  Rng meta(20240101);
  std::size_t accepted = 0;
  std::size_t equal = 0;
  constexpr std::size_t kSessions = 1000;
  for (std::size_t i = 0; i < kSessions; ++i) {
    sim::World w({.seed = meta.next_u64()});
    const std::size_t n = 1 + meta.uniform(5);
    std::vector<std::string> servers;
    for (std::size_t j = 0; j < n; ++j) {
      servers.push_back(std::to_string(j) + random_text(meta, 1, 14));
      w.add_server(servers.back(), random_text(meta, 1, 16), random_text(meta, 0, 16));
    }
    const std::string user = random_text(meta, 1, 16);
    w.add_user(user, random_text(meta, 0, 16));
    w.advance_and_sync(1 + static_cast<std::uint32_t>(meta.uniform(100)));
    const sim::ScenarioOutcome out = w.run_honest_session(user, servers[meta.uniform(n)]);
    accepted += out.accepted ? 1 : 0;
    equal += (out.session_keys && out.session_keys->first.sk == out.session_keys->second.sk) ? 1 : 0;
  }
  const double elapsed = seconds_since(start);
  return {accepted == kSessions && equal == kSessions && elapsed < 5.0,
          fmt("%zu/%zu accepted, %zu/%zu keys equal, %.2f s", accepted, kSessions, equal, kSessions, elapsed)};
}

Verdict communication_cost() {
  sim::World w({.seed = 2});
  w.add_server("hosp01", "spw", "goa");
  w.add_user("alice", "pw");
  w.advance_and_sync(1);
  const sim::ScenarioOutcome out = w.run_honest_session("alice", "hosp01");
  std::size_t req = 0;
  std::size_t resp = 0;
  for (const auto& f : out.transcript) {
    if (f.secure) continue;
    const wire::Frame frame = wire::decode_frame(f.body);
    if (frame.type == wire::MsgType::LoginRequest) req += frame.body.size();
    if (frame.type == wire::MsgType::LoginResponse) resp += frame.body.size();
  }
  return {out.accepted && req == 68 && resp == 68 && req + resp == 136,
          fmt("request %zu + response %zu = %zu bytes", req, resp, req + resp)};
}

Verdict execution_cost() {
  const auto rows = metrics::measure_costs({.servers = 2, .runs = 101, .seed = 3});
  for (const auto& r : rows) {
    if (r.phase != "auth") continue;
    return {r.hash_count == 20,
            fmt("%llu protocol hashes (%s), %llu keystream blocks, median %.4f ms",
                static_cast<unsigned long long>(r.hash_count), r.note.c_str(),
                static_cast<unsigned long long>(r.keystream_hashes), r.wall_time_ms)};
  }
  return {false, "no auth row"};
}

Verdict storage_cost() {
  const auto rows = metrics::measure_sizes(3, 4);
  bool ok = true;
  std::string detail;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (!r.item.starts_with("card")) continue;
    ++n;
    ok = ok && r.bytes == 4 * 32 + 64 * n;
    detail += fmt("n=%zu: %llu B; ", n, static_cast<unsigned long long>(r.bytes));
  }
  detail += fmt("published figure %llu B cannot hold the per-server list",
                static_cast<unsigned long long>(metrics::kPublishedCardBytes));
  return {ok && n == 3, detail};
}

Verdict attack_suite() {
  const auto start = Clock::now();
  std::size_t clean = 0;
  std::string failures;
  double dos_min = -1;
  double dos_max = -1;
  for (const auto& entry : attacks::catalog()) {
    const attacks::AttackReport r = attacks::run_attack(entry.name, 1);
    if (r.acceptances == 0 && r.attempts > 0) {
      ++clean;
    } else {
      failures += " " + r.attack_name;
    }
    if (r.attack_name == "dos") {
      dos_min = r.metrics.at("server_hashes_per_bad_beta_min");
      dos_max = r.metrics.at("server_hashes_per_bad_beta_max");
    }
  }
  const double elapsed = seconds_since(start);
  const std::size_t total = attacks::catalog().size();
  return {clean == 11 && total == 11 && dos_min == 2 && dos_max == 2 && elapsed < 60.0,
          fmt("%zu/%zu scenarios with 0 acceptances%s, dos %.0f..%.0f server hashes, %.2f s", clean, total,
              failures.empty() ? "" : (", failed:" + failures).c_str(), dos_min, dos_max, elapsed)};
}

Verdict tamper_exhaustion() {
  sim::World w = attacks::make_attack_world(6);
  const attacks::TamperResult res = attacks::tamper_exhaustion(w);
  return {res.bits == 8 * 136 && res.rejected == res.bits,
          fmt("%llu/%llu single-bit flips rejected", static_cast<unsigned long long>(res.rejected),
              static_cast<unsigned long long>(res.bits))};
}

Verdict replay() {
  sim::World w = attacks::make_attack_world(7);
  const attacks::ReplayResult r = attacks::replay_trials(w, 1000);
  const bool ok = r.trials == 1000 && r.stale_rejected == r.trials && r.rewrite_rejected == r.trials &&
                  r.rewrite_beta_mismatch == r.trials && r.outsider_rewrite_rejected == r.trials;
  return {ok, fmt("stale %llu/%llu, re-masked T1 rewrite caught by beta %llu/%llu, outsider rewrite %llu/%llu",
                  static_cast<unsigned long long>(r.stale_rejected), static_cast<unsigned long long>(r.trials),
                  static_cast<unsigned long long>(r.rewrite_beta_mismatch),
                  static_cast<unsigned long long>(r.trials),
                  static_cast<unsigned long long>(r.outsider_rewrite_rejected),
                  static_cast<unsigned long long>(r.trials))};
}

Verdict primitives() {
  const auto text = [](std::string_view s) { return Bytes(s.begin(), s.end()); };
  bool sha = hash(Bytes{}).hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855" &&
             hash(text("abc")).hex() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad" &&
             hash(text("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")).hex() ==
                 "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1" &&
             hash(Bytes(1'000'000, 'a')).hex() ==
                 "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0";
  Rng rng(8);
  constexpr int kCases = 10'000;
  int xor_ok = 0;
  int ks_ok = 0;
  for (int i = 0; i < kCases; ++i) {
    Bytes a(rng.uniform(97));
    Bytes b(a.size());
    rng.fill(a);
    rng.fill(b);
    xor_ok += xor_bytes(xor_bytes(a, b), b) == a && xor_bytes(a, b) == xor_bytes(b, a) ? 1 : 0;
    const Digest256 key = rng.draw<Digest256>();
    ks_ok += keystream_mask(key, keystream_mask(key, a)) == a ? 1 : 0;
  }
  return {sha && xor_ok == kCases && ks_ok == kCases,
          fmt("FIPS vectors %s, xor %d/%d, keystream %d/%d", sha ? "match" : "MISMATCH", xor_ok, kCases, ks_ok,
              kCases)};
}

Verdict update_phases() {
  sim::World w({.seed = 9});
  w.add_server("hosp01", "spw1", "goa");
  w.add_user("alice", "alice-pw");
  w.advance_and_sync(1);
  w.add_server("hosp02", "spw2", "pilani");
  const bool before = w.run_honest_session("alice", "hosp02").error == ErrorKind::UnknownServer;
  w.update_user_card("alice");
  const bool after = w.run_honest_session("alice", "hosp02").accepted;

  // Each server's delta must equal the users registered since its last sync.
  const Timestamp32 now = w.clock().now;
  const std::size_t kNew = 4;
  for (std::size_t i = 0; i < kNew; ++i) w.add_user("late" + std::to_string(i), "pw");
  bool deltas = true;
  for (const IdField& id : w.server_ids()) {
    const sim::SimServer& s = w.server(id);
    const UserListDelta d =
        rc_handle_db_update(w.rc(), server_db_update_begin(s.secrets, s.trm.ssk, w.clock().now), w.clock().now,
                            w.config().delta_t);
    deltas = deltas && d.entries.size() == kNew;
    const UserListDelta again =
        rc_handle_db_update(w.rc(), server_db_update_begin(s.secrets, s.trm.ssk, w.clock().now), w.clock().now,
                            w.config().delta_t);
    deltas = deltas && again.entries.empty();
  }

  const auto error_of = [](const std::function<void()>& f) -> std::optional<ErrorKind> {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return std::nullopt;
  };
  const Timestamp32 late{w.clock().now.seconds + w.config().delta_t + 1};
  const sim::SimUser& alice = w.user("alice");
  const bool stale_t4 = error_of([&] {
                          rc_handle_update(w.rc(), user_update_begin(alice.id, alice.pw, alice.card, now).request,
                                           late, w.config().delta_t);
                        }) == ErrorKind::StaleRequest;
  const sim::SimServer& s = w.server("hosp01");
  const bool stale_t6 = error_of([&] {
                          rc_handle_db_update(w.rc(), server_db_update_begin(s.secrets, s.trm.ssk, now), late,
                                              w.config().delta_t);
                        }) == ErrorKind::StaleRequest;
  return {before && after && deltas && stale_t4 && stale_t6,
          fmt("login to new server after card update %s, sync deltas %s, stale T4 %s, stale T6 %s",
              after && before ? "ok" : "FAILED", deltas ? "match registrations" : "MISMATCH",
              stale_t4 ? "rejected" : "ACCEPTED", stale_t6 ? "rejected" : "ACCEPTED")};
}

Verdict persistence() {
  const auto dir = std::filesystem::temp_directory_path() / ("maskap-acceptance-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  std::size_t states = 0;
  std::size_t identical = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    sim::World w({.seed = seed});
    const std::size_t n = 1 + w.rng().uniform(4);
    const std::size_t users = 1 + w.rng().uniform(5);
    for (std::size_t j = 0; j < n; ++j) w.add_server("s" + std::to_string(j), "p", "l" + std::to_string(j));
    for (std::size_t i = 0; i < users; ++i) w.add_user("u" + std::to_string(i), "pw" + std::to_string(i));
    if (w.rng().uniform(2) == 0) w.advance_and_sync(1);
    ++states;
    bool same = true;
    registry::store_rc(dir / "rc.json", w.rc());
    same = same && registry::load_rc(dir / "rc.json") == w.rc();
    for (const auto& [id, srv] : w.servers()) {
      const registry::ServerRecordFile rec{id, srv.secrets.loc, srv.trm};
      registry::store_trm(dir / "trm.json", rec);
      same = same && registry::load_trm(dir / "trm.json") == rec;
    }
    for (std::size_t i = 0; i < users; ++i) {
      const SmartCard& card = w.user("u" + std::to_string(i)).card;
      registry::store_card(dir / "card.json", card);
      same = same && registry::load_card(dir / "card.json") == card;
    }
    identical += same ? 1 : 0;
  }
  std::filesystem::remove_all(dir);

  // Same card, record and timestamps through the socket service.
  sim::World w({.seed = 10});
  w.add_server("hosp01", "spw", "goa");
  w.add_user("alice", "alice-pw");
  w.advance_and_sync(1);
  const Timestamp32 t1 = w.clock().now;
  const Timestamp32 t2{t1.seconds + w.config().latency_s};
  const sim::SimServer& srv = w.server("hosp01");
  const registry::ServerRecordFile rec{srv.secrets.id, srv.secrets.loc, srv.trm};
  const sim::SimUser alice = w.user("alice");
  const sim::ScenarioOutcome simulated = w.run_honest_session("alice", "hosp01");

  bool agree = false;
  try {
    service::ServerRole role(rec, ServerPolicy{w.config().delta_t, w.config().validity_s}, [t2] { return t2; });
    service::FrameServer server({"127.0.0.1", 0}, [&](const wire::Frame& f) { return role.handle(f); });
    service::FrameClient client({"127.0.0.1", server.port()});
    const LoginStart start = user_login_begin(alice.id, alice.pw, alice.card, rec.id, t1);
    const wire::Frame reply = client.request(wire::make_frame(start.request));
    wire::expect_type(reply, wire::MsgType::LoginResponse);
    const SessionKey key = user_handle_response(start.context, wire::decode_login_response(reply.body),
                                                Timestamp32{t2.seconds + 1}, w.config().delta_t);
    agree = simulated.accepted && key == simulated.session_keys->first && role.last_key() == key;
  } catch (const Error& e) {
    std::fprintf(stderr, "service run failed: %s\n", e.what());
  }
  return {identical == states && states == 100 && agree,
          fmt("%zu/%zu randomized states round-trip identically, service SK %s simulator SK", identical, states,
              agree ? "==" : "!=")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Verdict (*)()>> criteria = {
      {"honest key agreement", honest_key_agreement},
      {"communication cost", communication_cost},
      {"execution cost", execution_cost},
      {"storage cost", storage_cost},
      {"attack suite", attack_suite},
      {"tamper exhaustion", tamper_exhaustion},
      {"replay", replay},
      {"primitive correctness", primitives},
      {"update phases", update_phases},
      {"persistence", persistence},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    std::printf("[%s] %2d %-22s %s\n", v.pass ? "PASS" : "FAIL", index, name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}

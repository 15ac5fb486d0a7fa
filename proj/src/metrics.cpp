#include "maskap/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

namespace maskap::metrics {

namespace {


sim::World world_with_servers(std::size_t servers, std::uint64_t seed) {
  sim::World w(sim::WorldConfig{.seed = seed});
  for (std::size_t j = 0; j < servers; ++j) {
    w.add_server("srv" + std::to_string(j), "srv-pw-" + std::to_string(j), "site" + std::to_string(j));
  }
  w.add_user("alice", "alice-pw");
  w.advance_and_sync(1);
  return w;
}

}  // namespace

nlohmann::json to_json(const CostReport& r) {
  return {{"phase", r.phase},
          {"hash_count", r.hash_count},
          {"keystream_hashes", r.keystream_hashes},
          {"wire_bytes", r.wire_bytes},
          {"storage_bytes", r.storage_bytes},
          {"wall_time_ms", r.wall_time_ms},
          {"note", r.note}};
}

nlohmann::json to_json(const SizeRow& row) {
  return {{"item", row.item}, {"bytes", row.bytes}, {"note", row.note}};
}

AuthHashes count_auth_hashes(sim::World& w, std::string_view user, std::string_view server) {
  sim::SimUser& u = w.user(user);
  sim::SimServer& srv = w.server(server);
  const ServerPolicy policy{w.config().delta_t, w.config().validity_s};
  const Timestamp32 t1 = w.clock().now;
  const Timestamp32 t2{t1.seconds + w.config().latency_s};
  const Timestamp32 t3{t2.seconds + w.config().latency_s};

  HashCounter counter;
  LoginStart start;
  ServerAccept accepted;
  SessionKey user_key;
  {
    CountingScope scope(counter, "auth.user");
    start = user_login_begin(u.id, u.pw, u.card, srv.secrets.id, t1);
  }
  {
    CountingScope scope(counter, "auth.server");
    accepted = server_handle_login(srv.trm, srv.secrets.id, srv.secrets.loc, start.request, t2, policy);
  }
  {
    CountingScope scope(counter, "auth.user");
    user_key = user_handle_response(start.context, accepted.response, t3, policy.delta_t);
  }
  if (user_key != accepted.key) throw std::logic_error("login exchange disagreed on the session key");
  w.clock().now = t3;
  return {counter.count("auth.user"), counter.count("auth.server"), counter.keystream_total()};
}

RegistrationHashes count_registration_hashes(sim::World& w) {
  HashCounter counter;
  ServerRegistration server;
  UserRegistration reg;
  CardProvision prov;
  {
    CountingScope scope(counter, "reg.server");
    server = server_register_begin("bench-srv", "bench-srv-pw", "bench-site", w.rng());
  }
  {
    CountingScope scope(counter, "reg.rc");
    (void)rc_register_server(w.rc(), server.request, w.clock().now);
  }
  {
    CountingScope scope(counter, "reg.user");
    reg = user_register_begin("bench-user", "bench-pw", w.rng());
  }
  {
    CountingScope scope(counter, "reg.rc");
    prov = rc_register_user(w.rc(), reg.request, w.rng());
  }
  {
    CountingScope scope(counter, "reg.user");
    (void)user_finalize_card(reg.pending, prov);
  }
  return {counter.count("reg.server"), counter.count("reg.user"), counter.count("reg.rc"),
          counter.keystream_total()};
}

std::vector<CostReport> measure_costs(const CostOptions& options) {
  if (options.servers == 0) throw Error(ErrorKind::InvalidArgument, "need at least one server");
  sim::World w = world_with_servers(options.servers, options.seed);
  std::vector<CostReport> out;

  const AuthHashes auth = count_auth_hashes(w, "alice", "srv0");

  const sim::ScenarioOutcome session = w.run_honest_session("alice", "srv0");
  if (!session.accepted) throw std::logic_error("honest session failed: " + session.error_message);
  std::uint64_t wire = 0;
  for (const auto& f : session.transcript) {
    if (!f.secure) wire += wire::decode_frame(f.body).body.size();
  }

  std::vector<double> samples;
  samples.reserve(std::max<std::size_t>(options.runs, 1));
  for (std::size_t i = 0; i < std::max<std::size_t>(options.runs, 1); ++i) {
    const auto begin = std::chrono::steady_clock::now();
    (void)count_auth_hashes(w, "alice", "srv0");
    const auto end = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double, std::milli>(end - begin).count());
    w.clock().advance(1);
  }
  std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
  const double median = samples[samples.size() / 2];

  out.push_back({"auth",
                 auth.total(),
                 auth.keystream,
                 wire,
                 0,
                 median,
                 "user " + std::to_string(auth.user) + " + server " + std::to_string(auth.server) +
                     " protocol hashes; wall time is the median of " + std::to_string(samples.size()) +
                     " runs"});
  out.push_back({"auth.user", auth.user, auth.keystream, 0, 0, 0.0, ""});
  out.push_back({"auth.server", auth.server, 0, 0, 0, 0.0, ""});

  const SmartCard& card = w.user("alice").card;
  out.push_back({"card",
                 0,
                 0,
                 0,
                 card.storage_bytes(),
                 0.0,
                 "4 x 32 + 64 x " + std::to_string(card.server_count()) + "; the published figure is " +
                     std::to_string(kPublishedCardBytes) +
                     " bytes, which leaves no room for the per-server list inside Z"});

  // Mutates the world, so it runs last.
  const RegistrationHashes reg = count_registration_hashes(w);
  out.push_back({"registration", reg.total(), reg.keystream, 0, 0, 0.0,
                 "server " + std::to_string(reg.server) + " + user " + std::to_string(reg.user) + " + rc " +
                     std::to_string(reg.rc) + "; the published registration figure is " +
                     std::to_string(kPublishedRegistrationHashes)});
  return out;
}

std::vector<SizeRow> measure_sizes(std::size_t max_servers, std::uint64_t seed) {
  std::vector<SizeRow> rows;
  const LoginRequest req{};
  const LoginResponse resp{};
  const std::uint64_t req_bytes = wire::encode_body(req).size();
  const std::uint64_t resp_bytes = wire::encode_body(resp).size();
  rows.push_back({"LoginRequest", req_bytes, "alpha 32, beta 32, T1 4"});
  rows.push_back({"LoginResponse", resp_bytes, "gamma 32, sigma 32, T2 4"});
  rows.push_back({"login exchange", req_bytes + resp_bytes, "4 hash-sized values and 2 timestamps"});
  rows.push_back({"UpdateRequest", wire::encode_body(UpdateRequest{}).size(), "UID 32, tau 32, T4 4"});
  rows.push_back({"DbUpdateRequest", wire::encode_body(DbUpdateRequest{}).size(), "ID 16, omega 32, T6 4"});
  for (std::size_t n = 1; n <= max_servers; ++n) {
    sim::World w = world_with_servers(n, seed);
    rows.push_back({"card (n=" + std::to_string(n) + ")", w.user("alice").card.storage_bytes(),
                    n == 1 ? "published figure: " + std::to_string(kPublishedCardBytes) : ""});
  }
  return rows;
}

}  // namespace maskap::metrics

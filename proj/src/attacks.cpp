#include "maskap/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace maskap::attacks {

namespace {

using sim::World;

struct Captured {
  LoginRequest req;
  LoginResponse resp;
  IdField server;
  LoginContext ctx;
  SessionKey key;
};

struct Insider {
  IdField id;
  PwField pw;
  UserSecrets secrets;
  SmartCard card;
  std::vector<ServerListEntry> list;

  const ServerListEntry& entry(const IdField& server) const {
    auto it = std::find_if(list.begin(), list.end(), [&](const auto& e) { return e.id == server; });
    if (it == list.end()) throw std::logic_error("insider card lacks " + server.str());
    return *it;
  }
};

struct Verdict {
  bool accepted = false;
  Digest256 uid;
  SessionKey key;
  std::optional<ErrorKind> error;
};

Timestamp32 later(Timestamp32 t, std::uint64_t seconds) {
  return Timestamp32{static_cast<std::uint32_t>(t.seconds + seconds)};
}

std::array<std::uint8_t, 4> enc4(std::uint32_t v) {
  std::array<std::uint8_t, 4> out{};
  put_be32(out, v);
  return out;
}

ServerPolicy policy_of(const World& w) { return {w.config().delta_t, w.config().validity_s}; }

Captured capture_session(World& w, std::string_view user, std::string_view server) {
  const sim::ScenarioOutcome out = w.run_honest_session(user, server);
  if (!out.accepted) throw std::logic_error("control session failed: " + out.error_message);
  Captured cap;
  for (const auto& f : out.transcript) {
    const wire::Frame frame = wire::decode_frame(f.body);
    if (frame.type == wire::MsgType::LoginRequest) cap.req = wire::decode_login_request(frame.body);
    if (frame.type == wire::MsgType::LoginResponse) cap.resp = wire::decode_login_response(frame.body);
  }
  cap.server = IdField::from_string(server);
  cap.ctx = *out.user_context;
  cap.key = out.session_keys->second;
  return cap;
}

std::vector<Captured> capture_sessions(World& w, std::size_t n, std::string_view server = kServer) {
  std::vector<Captured> caps;
  for (std::size_t i = 0; i < n; ++i) {
    caps.push_back(capture_session(w, kVictim, server));
    w.clock().advance(w.config().delta_t + 3);
  }
  return caps;
}

Insider insider_view(World& w) {
  const sim::SimUser& u = w.user(kInsider);
  Insider ins{u.id, u.pw, recover_user_secrets(u.id, u.pw, u.card), u.card, {}};
  ins.list = unmask_server_list(u.id, u.pw, ins.secrets, u.card);
  return ins;
}

Digest256 recover_uid(const Insider& ins, const Captured& cap) {
  const ServerListEntry& e = ins.entry(cap.server);
  return cap.req.alpha ^ hash_of(e.id, e.ssk, cap.req.t1);
}

/// Every 32-byte value the insider holds or can compute from its own card
/// and the captured public frames.
std::vector<Digest256> knowledge_pool(const Insider& ins, const std::vector<Captured>& caps) {
  const UserSecrets& s = ins.secrets;
  std::vector<Digest256> pool = {s.a,        s.b,        s.uid,      s.usk,     s.c,
                                 s.a ^ s.usk, ins.card.w, ins.card.x, ins.card.y, ins.card.e,
                                 Digest256::from_view(concat(s.r1, s.r2)),  Digest256{}};
  for (const auto& e : ins.list) pool.push_back(e.ssk);
  for (const auto& cap : caps) {
    pool.push_back(cap.req.alpha);
    pool.push_back(cap.req.beta);
    pool.push_back(Digest256(cap.resp.gamma.array()));
    pool.push_back(cap.resp.sigma);
    pool.push_back(recover_uid(ins, cap));
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  return pool;
}

LoginRequest forge_request(const IdField& id_j, const Digest256& ssk, const Digest256& uid,
                           const Digest256& c, Timestamp32 t1) {
  return {hash_of(id_j, ssk, t1) ^ uid, hash_of(uid, ssk, c, t1), t1};
}

Verdict submit(World& w, const IdField& server, const LoginRequest& req, Timestamp32 t2) {
  sim::SimServer& srv = w.server(server);
  Verdict v;
  try {
    ServerAccept acc = server_handle_login(srv.trm, srv.secrets.id, srv.secrets.loc, req, t2, policy_of(w));
    v.accepted = true;
    v.uid = acc.uid;
    v.key = acc.key;
  } catch (const Error& e) {
    v.error = e.kind();
  }
  return v;
}

LoginResponse forge_response(const Validity16& vt, const LocField& loc, const Digest256& c,
                             const Digest256& uid, const IdField& id_j, const Digest256& beta,
                             Timestamp32 t1, Timestamp32 t2) {
  LoginResponse resp;
  resp.gamma = Masked256::from_view(concat(vt, loc)) ^ Masked256(hash_of(c, uid, id_j, beta).array());
  resp.sigma = hash_of(vt, c, enc4(t2.seconds - t1.seconds));
  resp.t2 = t2;
  return resp;
}

bool user_accepts(const LoginContext& ctx, const LoginResponse& resp, Timestamp32 t3,
                  std::uint32_t delta_t) {
  try {
    user_handle_response(ctx, resp, t3, delta_t);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::vector<Validity16> validity_guesses(Timestamp32 t2) {
  std::vector<Validity16> out;
  for (std::uint64_t d : {60ull, 300ull, 600ull, 900ull, 1800ull, 3600ull}) {
    out.push_back(Validity16::issue(t2, d));
  }
  return out;
}

std::string count_note(std::string_view what, std::uint64_t n) {
  return std::string(what) + ": " + std::to_string(n);
}

}  // namespace

nlohmann::json to_json(const AttackReport& report) {
  return {{"attack", report.attack_name},
          {"attempts", report.attempts},
          {"acceptances", report.acceptances},
          {"notes", report.notes},
          {"metrics", report.metrics}};
}

World make_attack_world(std::uint64_t seed) {
  World w(sim::WorldConfig{.seed = seed});
  w.add_server(kServer, "srv-pw-01", "goa");
  w.add_server(kOtherServer, "srv-pw-02", "pilani");
  w.add_user(kVictim, "alice-pw");
  w.add_user(kBystander, "bob-pw");
  w.add_user(kInsider, "mallory-pw");
  w.advance_and_sync(1);
  return w;
}

// 1. A registered insider and an unregistered outsider each try to log in as
// the victim.
AttackReport attack_user_impersonation(World& w) {
  AttackReport r{"user_impersonation", 0, 0, {}, {}};
  const auto caps = capture_sessions(w, 3);
  const Insider ins = insider_view(w);
  const auto pool = knowledge_pool(ins, caps);
  const IdField server = IdField::from_string(kServer);
  const ServerListEntry& entry = ins.entry(server);
  const std::uint32_t lat = w.config().latency_s;

  std::uint64_t own_logins = 0;
  for (const auto& uid : pool) {
    for (const auto& c : pool) {
      const Timestamp32 t1 = w.clock().now;
      const Verdict v = submit(w, server, forge_request(server, entry.ssk, uid, c, t1), later(t1, lat));
      ++r.attempts;
      if (v.accepted && v.uid == ins.secrets.uid) {
        ++own_logins;
      } else if (v.accepted) {
        ++r.acceptances;
      }
    }
  }
  r.notes.push_back("insider combinations over " + std::to_string(pool.size()) +
                    " known values; accepted only as the insider itself: " +
                    std::to_string(own_logins));

  std::uint64_t outsider_tries = 1000;
  for (std::uint64_t i = 0; i < outsider_tries; ++i) {
    const Timestamp32 t1 = w.clock().now;
    LoginRequest req{w.rng().draw<Digest256>(), w.rng().draw<Digest256>(), t1};
    ++r.attempts;
    if (submit(w, server, req, later(t1, lat)).accepted) ++r.acceptances;
  }

  // Verbatim copy inside the window: the server takes it, but the sender
  // still has to produce the session key.
  const Captured fresh = capture_session(w, kVictim, kServer);
  const Verdict replayed = submit(w, server, fresh.req, fresh.resp.t2);
  const Digest256 uid = recover_uid(ins, fresh);
  std::uint64_t keys_matched = 0;
  for (const auto& c : pool) {
    for (const auto& vt : validity_guesses(fresh.resp.t2)) {
      ++r.attempts;
      if (replayed.accepted && derive_session_key(uid, server, c, entry.loc, vt) == replayed.key.sk) {
        ++keys_matched;
      }
    }
  }
  r.acceptances += keys_matched;
  r.notes.push_back(std::string("verbatim in-window copy accepted by server (no replay cache): ") +
                    (replayed.accepted ? "yes" : "no") + "; session keys derived by adversary: " +
                    std::to_string(keys_matched));
  r.metrics["in_window_copy_accepted"] = replayed.accepted ? 1 : 0;
  return r;
}

// 2. Answer the victim's login without the server's knowledge of C.
AttackReport attack_server_impersonation(World& w) {
  AttackReport r{"server_impersonation", 0, 0, {}, {}};
  const sim::ScenarioOutcome control = w.run_honest_session(kVictim, kServer);
  r.notes.push_back(std::string("honest control accepted: ") + (control.accepted ? "yes" : "no"));

  const sim::SimUser& victim = w.user(kVictim);
  const IdField server = IdField::from_string(kServer);
  const std::uint32_t lat = w.config().latency_s;
  const std::uint32_t window = w.config().delta_t;

  for (int i = 0; i < 1000; ++i) {
    const Timestamp32 t1 = w.clock().now;
    const LoginStart start = user_login_begin(victim.id, victim.pw, victim.card, server, t1);
    const Timestamp32 t2 = later(t1, lat);
    const LoginResponse forged{w.rng().draw<Masked256>(), w.rng().draw<Digest256>(), t2};
    ++r.attempts;
    if (user_accepts(start.context, forged, later(t2, lat), window)) ++r.acceptances;
    w.clock().advance(1);
  }

  const auto caps = capture_sessions(w, 2);
  const Insider ins = insider_view(w);
  const auto pool = knowledge_pool(ins, caps);
  const ServerListEntry& entry = ins.entry(server);
  const Timestamp32 t1 = w.clock().now;
  const LoginStart start = user_login_begin(victim.id, victim.pw, victim.card, server, t1);
  const Timestamp32 t2 = later(t1, lat);
  const Digest256 uid = start.request.alpha ^ hash_of(entry.id, entry.ssk, t1);
  for (const auto& c : pool) {
    for (const auto& vt : validity_guesses(t2)) {
      const LoginResponse forged = forge_response(vt, entry.loc, c, uid, server, start.request.beta, t1, t2);
      ++r.attempts;
      if (user_accepts(start.context, forged, later(t2, lat), window)) ++r.acceptances;
    }
  }
  r.notes.push_back("insider forgeries with recovered UID and " + std::to_string(pool.size()) +
                    " candidate C values");
  return r;
}

// 3. Compute a victim's session key from what an insider sees.
AttackReport attack_session_key_disclosure(World& w) {
  AttackReport r{"session_key_disclosure", 0, 0, {}, {}};
  const auto caps = capture_sessions(w, 5);
  const Insider ins = insider_view(w);
  auto pool = knowledge_pool(ins, caps);
  for (const auto& cap : caps) {
    const ServerListEntry& entry = ins.entry(cap.server);
    for (const auto& uid : {recover_uid(ins, cap), cap.req.alpha, cap.req.beta}) {
      for (const auto& c : pool) {
        for (const auto& vt : validity_guesses(cap.resp.t2)) {
          ++r.attempts;
          if (derive_session_key(uid, entry.id, c, entry.loc, vt) == cap.key.sk) ++r.acceptances;
        }
      }
    }
  }
  r.notes.push_back("UID, ID_j, Loc_j and VT are within an insider's reach; C_i is not");
  return r;
}

// 4. Adversary holds the victim's card fields and identity, not the password.
AttackReport attack_stolen_smart_card(World& w) {
  AttackReport r{"stolen_smart_card", 0, 0, {}, {}};
  const sim::SimUser& victim = w.user(kVictim);
  const SmartCard stolen = victim.card;
  const IdField server = IdField::from_string(kServer);
  const std::uint32_t lat = w.config().latency_s;

  std::uint64_t bad_credentials = 0;
  char guess[17];
  for (int i = 0; i < 10000; ++i) {
    std::snprintf(guess, sizeof guess, "guess%05d", i);
    const PwField pw = PwField::from_string(guess);
    if (pw == victim.pw) continue;
    ++r.attempts;
    const Timestamp32 t1 = w.clock().now;
    try {
      const LoginStart start = user_login_begin(victim.id, pw, stolen, server, t1);
      if (submit(w, server, start.request, later(t1, lat)).accepted) ++r.acceptances;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::BadCredentials) ++bad_credentials;
    }
  }
  r.notes.push_back(count_note("wrong passwords stopped by the card check", bad_credentials));

  // Card fields used directly as protocol values.
  std::vector<Digest256> fields = {stolen.w, stolen.x, stolen.y, stolen.e};
  for (std::size_t off = 0; off + 32 <= stolen.z.size(); off += 32) {
    fields.push_back(Digest256::from_view(ByteView(stolen.z).subspan(off, 32)));
  }
  for (const auto& uid : fields) {
    for (const auto& c : fields) {
      for (const auto& ssk : fields) {
        const Timestamp32 t1 = w.clock().now;
        ++r.attempts;
        if (submit(w, server, forge_request(server, ssk, uid, c, t1), later(t1, lat)).accepted) {
          ++r.acceptances;
        }
      }
    }
  }
  r.notes.push_back(
      "the card's local E check confirms (ID, PW) guesses offline for whoever holds the card; "
      "resistance rests on password entropy");
  return r;
}

TamperResult tamper_exhaustion(World& w) {
  TamperResult res;
  const Captured cap = capture_session(w, kVictim, kServer);
  const sim::SimServer& srv = w.server(kServer);
  const ServerPolicy policy = policy_of(w);
  const Timestamp32 t2 = cap.resp.t2;
  const Timestamp32 t3 = later(t2, w.config().latency_s);

  const Bytes request = wire::encode_body(cap.req);
  for (std::size_t bit = 0; bit < request.size() * 8; ++bit) {
    Bytes mutated = request;
    mutated[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    ++res.bits;
    try {
      server_handle_login(srv.trm, srv.secrets.id, srv.secrets.loc, wire::decode_login_request(mutated),
                          t2, policy);
    } catch (const Error& e) {
      ++res.rejected;
      ++res.by_error[std::string(to_string(e.kind()))];
    }
  }
  const Bytes response = wire::encode_body(cap.resp);
  for (std::size_t bit = 0; bit < response.size() * 8; ++bit) {
    Bytes mutated = response;
    mutated[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    ++res.bits;
    try {
      user_handle_response(cap.ctx, wire::decode_login_response(mutated), t3, policy.delta_t);
    } catch (const Error& e) {
      ++res.rejected;
      ++res.by_error[std::string(to_string(e.kind()))];
    }
  }
  return res;
}

// 5. Alter public values in flight.
AttackReport attack_modification(World& w) {
  AttackReport r{"modification", 0, 0, {}, {}};
  const TamperResult exhaustive = tamper_exhaustion(w);
  r.attempts += exhaustive.bits;
  r.acceptances += exhaustive.bits - exhaustive.rejected;
  for (const auto& [kind, n] : exhaustive.by_error) r.notes.push_back(count_note(kind, n));

  static constexpr std::array<std::string_view, 3> kRequestFields = {"alpha", "beta", "t1"};
  static constexpr std::array<std::string_view, 3> kResponseFields = {"gamma", "sigma", "t2"};
  for (int i = 0; i < 60; ++i) {
    const bool on_request = w.rng().uniform(2) == 0;
    const std::size_t which = w.rng().uniform(3);
    const std::string field(on_request ? kRequestFields[which] : kResponseFields[which]);
    const std::size_t width = which == 2 ? 4 : 32;
    sim::ModifyBit flip{field, w.rng().uniform(width), static_cast<std::uint8_t>(w.rng().uniform(8))};
    sim::AdversaryScript script;
    if (on_request) {
      script = {flip};
    } else {
      script = {sim::Forward{}, flip};
    }
    ++r.attempts;
    if (w.run_with_adversary(kVictim, kServer, script).accepted) ++r.acceptances;
  }
  return r;
}

double binomial_upper_tail(std::uint64_t n, std::uint64_t k, double p) {
  if (k == 0) return 1.0;
  double tail = 0.0;
  for (std::uint64_t i = k; i <= n; ++i) {
    const double log_term = std::lgamma(static_cast<double>(n) + 1) -
                            std::lgamma(static_cast<double>(i) + 1) -
                            std::lgamma(static_cast<double>(n - i) + 1) +
                            static_cast<double>(i) * std::log(p) +
                            static_cast<double>(n - i) * std::log1p(-p);
    tail += std::exp(log_term);
  }
  return std::min(1.0, tail);
}

// 6. Offline guessing from public transcripts only.
AttackReport attack_password_guessing(World& w) {
  AttackReport r{"password_guessing", 0, 0, {}, {}};
  constexpr std::size_t kSpace = 1000;
  constexpr std::size_t kTrials = 100;
  char buf[17];
  std::vector<PwField> space;
  for (std::size_t i = 0; i < kSpace; ++i) {
    std::snprintf(buf, sizeof buf, "pw%03zu", i);
    space.push_back(PwField::from_string(buf));
  }

  std::uint64_t picks_correct = 0;
  for (std::size_t trial = 0; trial < kTrials; ++trial) {
    std::snprintf(buf, sizeof buf, "guessee%03zu", trial);
    const std::string user_name = buf;
    const std::size_t secret = w.rng().uniform(kSpace);
    w.add_user(user_name, space[secret].str());
    w.advance_and_sync(1);
    const sim::ScenarioOutcome out = w.run_honest_session(user_name, kServer);
    LoginRequest req;
    LoginResponse resp;
    for (const auto& f : out.transcript) {
      const wire::Frame frame = wire::decode_frame(f.body);
      if (frame.type == wire::MsgType::LoginRequest) req = wire::decode_login_request(frame.body);
      if (frame.type == wire::MsgType::LoginResponse) resp = wire::decode_login_response(frame.body);
    }
    const IdField id = IdField::from_string(user_name);
    const Digest256 gamma(resp.gamma.array());

    std::optional<std::size_t> confirmed;
    for (std::size_t g = 0; g < kSpace; ++g) {
      ++r.attempts;
      const Digest256 a = hash_of(id, space[g]);
      const bool hit = a == req.alpha || a == req.beta || a == resp.sigma || a == gamma ||
                       (req.alpha ^ a) == req.beta || hash_of(a, req.t1) == req.beta ||
                       hash_of(a, resp.t2) == resp.sigma;
      if (hit && !confirmed) confirmed = g;
    }
    if (confirmed && *confirmed == secret) ++r.acceptances;
    const std::size_t pick = confirmed.value_or(w.rng().uniform(kSpace));
    if (pick == secret) ++picks_correct;
  }
  const double p_value = binomial_upper_tail(kTrials, picks_correct, 1.0 / kSpace);
  r.metrics["trials"] = kTrials;
  r.metrics["password_space"] = kSpace;
  r.metrics["correct_picks"] = static_cast<double>(picks_correct);
  r.metrics["binomial_p_value"] = p_value;
  r.notes.push_back("correct picks " + std::to_string(picks_correct) + "/" + std::to_string(kTrials) +
                    ", P[X>=k | chance] = " + std::to_string(p_value));
  return r;
}

// 7. Read or reroute the exchange.
AttackReport attack_mitm(World& w) {
  AttackReport r{"mitm", 0, 0, {}, {}};
  const auto caps = capture_sessions(w, 3);
  const Insider ins = insider_view(w);
  const auto pool = knowledge_pool(ins, caps);

  std::uint64_t revealed = 0;
  for (const auto& cap : caps) {
    const ServerListEntry& entry = ins.entry(cap.server);
    for (const auto& uid : {recover_uid(ins, cap), cap.req.alpha, cap.req.beta}) {
      for (const auto& c : pool) {
        ++r.attempts;
        const Masked256 plain = cap.resp.gamma ^ Masked256(hash_of(c, uid, entry.id, cap.req.beta).array());
        const Validity16 vt = Validity16::decode(plain.view().subspan(0, 16));
        const LocField loc = LocField::from_view(plain.view().subspan(16, 16));
        if (loc == entry.loc && vt.expiry == cap.resp.t2.seconds + vt.duration_s) ++revealed;
      }
    }
  }
  r.acceptances += revealed;
  r.notes.push_back(count_note("gamma unmasking attempts that exposed (VT || Loc)", revealed));

  // Reroute a fresh request to a different server inside the window.
  const sim::SimUser& victim = w.user(kVictim);
  const IdField other = IdField::from_string(kOtherServer);
  for (int i = 0; i < 20; ++i) {
    const Timestamp32 t1 = w.clock().now;
    const LoginStart start =
        user_login_begin(victim.id, victim.pw, victim.card, IdField::from_string(kServer), t1);
    ++r.attempts;
    if (submit(w, other, start.request, later(t1, w.config().latency_s)).accepted) ++r.acceptances;
    w.clock().advance(1);
  }

  // Splice an older captured request into a new exchange.
  for (const auto& cap : caps) {
    ++r.attempts;
    const Bytes old = wire::encode_frame(wire::make_frame(cap.req));
    if (w.run_with_adversary(kVictim, kServer, {sim::Inject{old}}).accepted) ++r.acceptances;
  }
  return r;
}

ReplayResult replay_trials(World& w, std::uint64_t trials) {
  ReplayResult res;
  const Insider ins = insider_view(w);
  const IdField server = IdField::from_string(kServer);
  const ServerListEntry& entry = ins.entry(server);
  const std::uint32_t window = w.config().delta_t;
  const std::uint32_t lat = w.config().latency_s;
  for (std::uint64_t i = 0; i < trials; ++i) {
    const Captured cap = capture_session(w, kVictim, kServer);
    ++res.trials;

    const Timestamp32 stale_at = later(cap.req.t1, window + 1 + w.rng().uniform(3600));
    const Verdict stale = submit(w, server, cap.req, stale_at);
    if (!stale.accepted && stale.error == ErrorKind::StaleRequest) ++res.stale_rejected;

    const Timestamp32 fresh_t1 = w.clock().now;
    LoginRequest outsider = cap.req;
    outsider.t1 = fresh_t1;
    if (!submit(w, server, outsider, later(fresh_t1, lat)).accepted) ++res.outsider_rewrite_rejected;

    // An insider can re-mask alpha for the new T1, so only beta still binds it.
    const Digest256 uid = recover_uid(ins, cap);
    LoginRequest remasked{hash_of(entry.id, entry.ssk, fresh_t1) ^ uid, cap.req.beta, fresh_t1};
    const Verdict rewrite = submit(w, server, remasked, later(fresh_t1, lat));
    if (!rewrite.accepted) ++res.rewrite_rejected;
    if (rewrite.error == ErrorKind::AuthFail) ++res.rewrite_beta_mismatch;
  }
  return res;
}

// 8. Delay or resend earlier messages.
AttackReport attack_replay(World& w) {
  AttackReport r{"replay", 0, 0, {}, {}};
  const ReplayResult res = replay_trials(w, 1000);
  r.attempts += 3 * res.trials;
  r.acceptances += (res.trials - res.stale_rejected) + (res.trials - res.outsider_rewrite_rejected) +
                   (res.trials - res.rewrite_rejected);
  r.notes.push_back(count_note("verbatim copies after the window rejected as stale", res.stale_rejected));
  r.notes.push_back(count_note("insider timestamp rewrites caught by beta", res.rewrite_beta_mismatch));
  r.metrics["trials"] = static_cast<double>(res.trials);
  r.metrics["rewrite_beta_mismatch"] = static_cast<double>(res.rewrite_beta_mismatch);

  const std::uint32_t window = w.config().delta_t;
  for (int i = 0; i < 10; ++i) {
    ++r.attempts;
    if (w.run_with_adversary(kVictim, kServer, {sim::Replay{1, window + 1}}).accepted) ++r.acceptances;
    ++r.attempts;
    if (w.run_with_adversary(kVictim, kServer, {sim::Forward{}, sim::Replay{1, window + 1}}).accepted) {
      ++r.acceptances;
    }
  }

  // Old response fed to a new exchange.
  const Captured old = capture_session(w, kVictim, kServer);
  const sim::SimUser& victim = w.user(kVictim);
  for (std::uint32_t skew = 0; skew <= window; ++skew) {
    const Timestamp32 t1 = w.clock().now;
    const LoginStart start = user_login_begin(victim.id, victim.pw, victim.card, old.server, t1);
    LoginResponse resp = old.resp;
    ++r.attempts;
    if (user_accepts(start.context, resp, later(resp.t2, skew), window)) ++r.acceptances;
    w.clock().advance(1);
  }
  r.notes.push_back(
      "a verbatim copy inside the window is accepted by the server unless the replay cache is on; "
      "the sender still cannot derive the session key");
  return r;
}

// 9. A registered user acting against another.
AttackReport attack_insider(World& w) {
  AttackReport r{"insider", 0, 0, {}, {}};
  const auto caps = capture_sessions(w, 2);
  const Insider ins = insider_view(w);
  const auto pool = knowledge_pool(ins, caps);
  const IdField server = IdField::from_string(kServer);
  const ServerListEntry& entry = ins.entry(server);
  const Digest256 victim_uid = recover_uid(ins, caps.front());
  const std::uint32_t lat = w.config().latency_s;

  std::vector<Digest256> c_guesses = pool;
  for (const auto& p : pool) {
    for (const auto& q : pool) c_guesses.push_back(p ^ q);
  }
  std::sort(c_guesses.begin(), c_guesses.end());
  c_guesses.erase(std::unique(c_guesses.begin(), c_guesses.end()), c_guesses.end());

  for (const auto& c : c_guesses) {
    const Timestamp32 t1 = w.clock().now;
    const Verdict v = submit(w, server, forge_request(server, entry.ssk, victim_uid, c, t1), later(t1, lat));
    ++r.attempts;
    if (v.accepted && v.uid != ins.secrets.uid) ++r.acceptances;

    const UpdateRequest upd{victim_uid, hash_of(c, t1, victim_uid), t1};
    ++r.attempts;
    try {
      rc_handle_update(w.rc(), upd, later(t1, lat), w.config().delta_t);
      ++r.acceptances;
    } catch (const Error&) {
    }
  }
  r.notes.push_back("insider recovers the victim's UID from alpha via its own SSK_j; C_i stays out of reach");
  return r;
}

// 10. Flood the server with requests that pass the freshness test.
AttackReport attack_dos(World& w) {
  AttackReport r{"dos", 0, 0, {}, {}};
  const sim::SimUser& victim = w.user(kVictim);
  const IdField server = IdField::from_string(kServer);
  const std::uint32_t lat = w.config().latency_s;

  std::uint64_t min_hashes = UINT64_MAX;
  std::uint64_t max_hashes = 0;
  for (int i = 0; i < 1000; ++i) {
    const Timestamp32 t1 = w.clock().now;
    const LoginStart captured = user_login_begin(victim.id, victim.pw, victim.card, server, t1);
    const LoginRequest forged{captured.request.alpha, w.rng().draw<Digest256>(), t1};
    HashCounter counter;
    Verdict v;
    {
      CountingScope scope(counter, "dos.server");
      v = submit(w, server, forged, later(t1, lat));
    }
    ++r.attempts;
    if (v.accepted) ++r.acceptances;
    min_hashes = std::min(min_hashes, counter.total());
    max_hashes = std::max(max_hashes, counter.total());
    w.clock().advance(1);
  }
  r.metrics["server_hashes_per_bad_beta_min"] = static_cast<double>(min_hashes);
  r.metrics["server_hashes_per_bad_beta_max"] = static_cast<double>(max_hashes);

  HashCounter unknown;
  for (int i = 0; i < 100; ++i) {
    const Timestamp32 t1 = w.clock().now;
    CountingScope scope(unknown, "dos.unknown");
    ++r.attempts;
    if (submit(w, server, {w.rng().draw<Digest256>(), w.rng().draw<Digest256>(), t1}, later(t1, lat)).accepted) {
      ++r.acceptances;
    }
  }
  HashCounter stale;
  for (int i = 0; i < 100; ++i) {
    const Timestamp32 t1 = w.clock().now;
    CountingScope scope(stale, "dos.stale");
    ++r.attempts;
    if (submit(w, server, {w.rng().draw<Digest256>(), w.rng().draw<Digest256>(), t1},
               later(t1, w.config().delta_t + 1))
            .accepted) {
      ++r.acceptances;
    }
  }
  r.metrics["server_hashes_per_unknown_uid"] = static_cast<double>(unknown.total()) / 100.0;
  r.metrics["server_hashes_per_stale_request"] = static_cast<double>(stale.total()) / 100.0;
  r.notes.push_back("bad beta rejected after " + std::to_string(min_hashes) + ".." +
                    std::to_string(max_hashes) + " server hashes");
  return r;
}

// 11. One revealed session key must not open another session.
AttackReport check_forward_secrecy(World& w) {
  AttackReport r{"forward_secrecy", 0, 0, {}, {}};
  const auto caps = capture_sessions(w, 2);
  const Captured& revealed = caps[0];
  const Captured& target = caps[1];
  const Insider ins = insider_view(w);
  auto pool = knowledge_pool(ins, caps);
  pool.push_back(revealed.key.sk);
  pool.push_back(revealed.key.sk ^ revealed.req.beta);
  pool.push_back(revealed.key.sk ^ revealed.resp.sigma);

  const ServerListEntry& entry = ins.entry(target.server);
  std::vector<Validity16> vts = validity_guesses(target.resp.t2);
  vts.push_back(revealed.key.vt);
  for (const auto& uid : {recover_uid(ins, target), target.req.alpha, revealed.key.sk}) {
    for (const auto& c : pool) {
      for (const auto& vt : vts) {
        ++r.attempts;
        if (derive_session_key(uid, entry.id, c, entry.loc, vt) == target.key.sk) ++r.acceptances;
      }
    }
  }
  if (revealed.key.sk == target.key.sk) ++r.acceptances;
  r.notes.push_back(
      "model: one session key plus all transcripts revealed; with the victim's password and card "
      "revealed instead, past keys are recomputable (no ephemeral key exchange)");
  return r;
}

const std::vector<AttackEntry>& catalog() {
  static const std::vector<AttackEntry> entries = {
      {"user_impersonation", attack_user_impersonation},
      {"server_impersonation", attack_server_impersonation},
      {"session_key_disclosure", attack_session_key_disclosure},
      {"stolen_smart_card", attack_stolen_smart_card},
      {"modification", attack_modification},
      {"password_guessing", attack_password_guessing},
      {"mitm", attack_mitm},
      {"replay", attack_replay},
      {"insider", attack_insider},
      {"dos", attack_dos},
      {"forward_secrecy", check_forward_secrecy},
  };
  return entries;
}

AttackReport run_attack(std::string_view name, std::uint64_t seed) {
  for (const auto& entry : catalog()) {
    if (entry.name == name) {
      World w = make_attack_world(seed);
      return entry.run(w);
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown attack '" + std::string(name) + "'");
}

}  // namespace maskap::attacks

#include <gtest/gtest.h>

#include "maskap/protocol.hpp"
#include "test_support.hpp"

namespace maskap {
namespace {

template <class F>
ErrorKind error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InvalidArgument;
}

constexpr std::uint32_t kWindow = 5;
const ServerPolicy kPolicy{kWindow, 900};

struct Server {
  ServerSecrets secrets;
  TamperResistantMemory trm;
};

struct User {
  IdField id;
  PwField pw;
  SmartCard card;
  Digest256 uid;
};

/// RC plus enrolled parties, driven straight through the protocol API.
struct Deployment {
  explicit Deployment(std::uint64_t seed) : rng(seed), rc(RcState::create(rng)) {}

  Server& add_server(const std::string& id, const std::string& pw = "spw", const std::string& loc = "loc") {
    const ServerRegistration reg = server_register_begin(id, pw, loc, rng);
    servers.push_back({reg.secrets, rc_register_server(rc, reg.request, now)});
    return servers.back();
  }

  User& add_user(const std::string& id, const std::string& pw) {
    const UserRegistration reg = user_register_begin(id, pw, rng);
    const CardProvision prov = rc_register_user(rc, reg.request, rng);
    users.push_back({reg.pending.id, reg.pending.pw, user_finalize_card(reg.pending, prov), reg.request.uid});
    return users.back();
  }

  void sync_all() {
    for (auto& s : servers) {
      s.trm.merge(rc_handle_db_update(rc, server_db_update_begin(s.secrets, s.trm.ssk, now), now, kWindow));
    }
  }

  Rng rng;
  RcState rc;
  Timestamp32 now{1'700'000'000};
  std::vector<Server> servers;
  std::vector<User> users;
};

Timestamp32 plus(Timestamp32 t, std::uint32_t d) { return Timestamp32{t.seconds + d}; }

class LoginTest : public ::testing::Test {
 protected:
  LoginTest() : d(42) {
    d.add_server("hosp01", "spw1", "goa");
    d.add_server("hosp02", "spw2", "pilani");
    d.add_user("alice", "alice-pw");
    d.add_user("bob", "bob-pw");
    d.sync_all();
  }

  Server& srv() { return d.servers[0]; }
  User& alice() { return d.users[0]; }

  LoginStart begin(Timestamp32 t1) { return user_login_begin(alice().id, alice().pw, alice().card, srv().secrets.id, t1); }
  ServerAccept serve(const LoginRequest& req, Timestamp32 t2) {
    return server_handle_login(srv().trm, srv().secrets.id, srv().secrets.loc, req, t2, kPolicy);
  }

  Deployment d;
};

// --- server registration ---------------------------------------------------

TEST(ServerRegistration, QXorPRecoversIdPwHash) {
  Rng rng(1);
  const ServerRegistration reg = server_register_begin("hosp01", "pw", "goa", rng);
  EXPECT_EQ(reg.request.q ^ reg.request.p, hash_of(reg.secrets.id, reg.secrets.pw));
  EXPECT_EQ(reg.request.p, hash_of(reg.secrets.id, reg.secrets.r_s, reg.secrets.pw));
}

TEST(ServerRegistration, IdTooLong) {
  Rng rng(1);
  EXPECT_EQ(error_of([&] { server_register_begin("seventeen-bytes!!", "pw", "goa", rng); }),
            ErrorKind::FieldTooLong);
}

TEST(ServerRegistration, DuplicateAndSsk) {
  Deployment d(2);
  Server& s = d.add_server("hosp01");
  EXPECT_TRUE(s.trm.list_uid.empty());
  EXPECT_TRUE(s.trm.list_c.empty());
  EXPECT_EQ(s.trm.ssk, hash_of(d.rc.k_rc, s.secrets.p, d.now));
  EXPECT_EQ(error_of([&] { d.add_server("hosp01"); }), ErrorKind::DuplicateServerId);
}

TEST(ServerRegistration, LateServerSnapshotsExistingUsers) {
  Deployment d(3);
  d.add_server("a");
  d.add_user("u1", "p1");
  d.add_user("u2", "p2");
  Server& late = d.add_server("b");
  EXPECT_EQ(late.trm.list_uid.size(), 2u);
  EXPECT_TRUE(late.trm.consistent());
  const DbUpdateRequest req = server_db_update_begin(late.secrets, late.trm.ssk, d.now);
  EXPECT_TRUE(rc_handle_db_update(d.rc, req, d.now, kWindow).entries.empty());
}

// --- user registration -----------------------------------------------------

TEST(UserRegistration, UidDependsOnNonces) {
  const auto id = IdField::from_string("alice");
  const auto pw = PwField::from_string("pw");
  Rng rng(4);
  const Nonce128 r1 = rng.nonce(), r2 = rng.nonce(), r3 = rng.nonce();
  EXPECT_EQ(user_register_begin(id, pw, r1, r2).request.uid, user_register_begin(id, pw, r1, r2).request.uid);
  EXPECT_NE(user_register_begin(id, pw, r1, r2).request.uid, user_register_begin(id, pw, r1, r3).request.uid);
  EXPECT_EQ(user_register_begin(id, pw, r1, r2).request.a, hash_of(id, pw));
}

TEST(UserRegistration, NeedsServers) {
  Deployment d(5);
  EXPECT_EQ(error_of([&] { d.add_user("alice", "pw"); }), ErrorKind::NoServersRegistered);
}

TEST(UserRegistration, DuplicateUid) {
  Deployment d(6);
  d.add_server("s");
  const UserRegistration reg = user_register_begin("alice", "pw", d.rng);
  (void)rc_register_user(d.rc, reg.request, d.rng);
  EXPECT_EQ(error_of([&] { rc_register_user(d.rc, reg.request, d.rng); }), ErrorKind::DuplicateUid);
}

TEST(UserRegistration, ProvisionShape) {
  Deployment d(7);
  d.add_server("s1");
  d.add_server("s2");
  const UserRegistration reg = user_register_begin("alice", "pw", d.rng);
  const Nonce128 r3 = d.rng.nonce();
  const CardProvision prov = rc_register_user(d.rc, reg.request, r3);
  EXPECT_EQ(prov.list_bytes.size(), 128u);
  EXPECT_EQ(reg.request.a ^ prov.d, hash_of(reg.request.uid, d.rc.k_rc, r3));

  const SmartCard card = user_finalize_card(reg.pending, prov);
  EXPECT_EQ(card.storage_bytes(), 4 * 32 + 2 * 64u);
  EXPECT_EQ(card.w ^ reg.request.a, Digest256::from_view(concat(reg.pending.r1, reg.pending.r2)));

  const UserSecrets s = recover_user_secrets(reg.pending.id, reg.pending.pw, card);
  EXPECT_EQ(s.c, prov.c);
  EXPECT_EQ(s.uid, reg.request.uid);
  EXPECT_EQ(s.a ^ s.usk, prov.d);
  EXPECT_EQ(encode_server_list(unmask_server_list(reg.pending.id, reg.pending.pw, s, card)), prov.list_bytes);
  EXPECT_NE(card.z, prov.list_bytes);
}

TEST(Card, ValidateRejectsRaggedZ) {
  SmartCard card;
  card.z = Bytes(65);
  EXPECT_EQ(error_of([&] { card.validate(); }), ErrorKind::CorruptRecord);
  card.z = Bytes(128);
  EXPECT_NO_THROW(card.validate());
}

// --- login -----------------------------------------------------------------

TEST_F(LoginTest, HonestExchangeAgrees) {
  const Timestamp32 t1 = d.now;
  const LoginStart start = begin(t1);
  EXPECT_EQ(start.request.alpha ^ hash_of(srv().secrets.id, srv().trm.ssk, t1), alice().uid);
  const ServerAccept acc = serve(start.request, plus(t1, 1));
  const SessionKey key = user_handle_response(start.context, acc.response, plus(t1, 2), kWindow);
  EXPECT_EQ(key, acc.key);
  EXPECT_EQ(acc.uid, alice().uid);
  EXPECT_EQ(key.vt, Validity16::issue(plus(t1, 1), 900));
  EXPECT_EQ(key.sk, derive_session_key(alice().uid, srv().secrets.id, start.context.c, srv().secrets.loc, key.vt));

  const Masked256 plain = acc.response.gamma ^
                          Masked256(hash_of(start.context.c, alice().uid, srv().secrets.id, start.request.beta).array());
  EXPECT_EQ(Bytes(plain.view().begin(), plain.view().end()), concat(key.vt, srv().secrets.loc));
}

TEST_F(LoginTest, WrongPasswordAndUnknownServer) {
  EXPECT_EQ(error_of([&] { user_login_begin(alice().id, PwField::from_string("nope"), alice().card, srv().secrets.id, d.now); }),
            ErrorKind::BadCredentials);
  EXPECT_EQ(error_of([&] { user_login_begin(alice().id, alice().pw, alice().card, IdField::from_string("hosp99"), d.now); }),
            ErrorKind::UnknownServer);
}

TEST_F(LoginTest, FreshnessWindowEdges) {
  const LoginStart start = begin(d.now);
  EXPECT_NO_THROW(serve(start.request, plus(d.now, kWindow)));
  EXPECT_EQ(error_of([&] { serve(start.request, plus(d.now, kWindow + 1)); }), ErrorKind::StaleRequest);
  EXPECT_EQ(error_of([&] { serve(start.request, Timestamp32{d.now.seconds - 1}); }), ErrorKind::StaleRequest);
  EXPECT_TRUE(is_fresh(d.now, d.now, 0));
  EXPECT_FALSE(is_fresh(d.now, plus(d.now, 1), 0));
}

TEST_F(LoginTest, TimestampRewriteFails) {
  const LoginStart start = begin(d.now);
  LoginRequest moved = start.request;
  moved.t1 = plus(d.now, 1);
  // alpha is keyed by T1, so an outsider's rewrite lands on an unknown UID.
  EXPECT_EQ(error_of([&] { serve(moved, plus(d.now, 2)); }), ErrorKind::UnknownUser);
  // A holder of SSK_j can re-mask alpha; beta still binds the old T1.
  moved.alpha = hash_of(srv().secrets.id, srv().trm.ssk, moved.t1) ^ alice().uid;
  EXPECT_EQ(error_of([&] { serve(moved, plus(d.now, 2)); }), ErrorKind::AuthFail);
}

TEST_F(LoginTest, EveryRequestBitFlipRejected) {
  const LoginStart start = begin(d.now);
  for (std::size_t byte = 0; byte < 32; ++byte) {
    for (int bit = 0; bit < 8; ++bit) {
      LoginRequest a = start.request;
      a.alpha.mutable_view()[byte] ^= static_cast<std::uint8_t>(1 << bit);
      EXPECT_EQ(error_of([&] { serve(a, plus(d.now, 1)); }), ErrorKind::UnknownUser);
      LoginRequest b = start.request;
      b.beta.mutable_view()[byte] ^= static_cast<std::uint8_t>(1 << bit);
      EXPECT_EQ(error_of([&] { serve(b, plus(d.now, 1)); }), ErrorKind::AuthFail);
    }
  }
}

TEST_F(LoginTest, EveryResponseBitFlipRejected) {
  const LoginStart start = begin(d.now);
  const ServerAccept acc = serve(start.request, plus(d.now, 1));
  const Timestamp32 t3 = plus(d.now, 2);
  for (std::size_t byte = 0; byte < 32; ++byte) {
    for (int bit = 0; bit < 8; ++bit) {
      LoginResponse g = acc.response;
      g.gamma.mutable_view()[byte] ^= static_cast<std::uint8_t>(1 << bit);
      EXPECT_EQ(error_of([&] { user_handle_response(start.context, g, t3, kWindow); }), ErrorKind::AuthFail)
          << "gamma byte " << byte;
      LoginResponse s = acc.response;
      s.sigma.mutable_view()[byte] ^= static_cast<std::uint8_t>(1 << bit);
      EXPECT_EQ(error_of([&] { user_handle_response(start.context, s, t3, kWindow); }), ErrorKind::AuthFail);
    }
  }
}

TEST_F(LoginTest, StaleResponse) {
  const LoginStart start = begin(d.now);
  const ServerAccept acc = serve(start.request, plus(d.now, 1));
  EXPECT_EQ(error_of([&] { user_handle_response(start.context, acc.response, plus(d.now, 2 + kWindow), kWindow); }),
            ErrorKind::StaleResponse);
}

TEST_F(LoginTest, UserRegisteredAfterSyncIsUnknown) {
  User& carol = d.add_user("carol", "carol-pw");
  const LoginStart start = user_login_begin(carol.id, carol.pw, carol.card, srv().secrets.id, d.now);
  EXPECT_EQ(error_of([&] { serve(start.request, d.now); }), ErrorKind::UnknownUser);
  d.sync_all();
  EXPECT_NO_THROW(serve(start.request, d.now));
}

TEST_F(LoginTest, ReplayCacheOptIn) {
  const LoginStart start = begin(d.now);
  EXPECT_NO_THROW(serve(start.request, plus(d.now, 1)));
  EXPECT_NO_THROW(serve(start.request, plus(d.now, 2)));  // default: window only

  ReplayCache cache;
  auto cached = [&](Timestamp32 t2) {
    return server_handle_login(srv().trm, srv().secrets.id, srv().secrets.loc, start.request, t2, kPolicy, &cache);
  };
  EXPECT_NO_THROW(cached(plus(d.now, 1)));
  EXPECT_EQ(error_of([&] { cached(plus(d.now, 2)); }), ErrorKind::ReplayDetected);
  cache.prune(plus(d.now, 100), kWindow);
  EXPECT_EQ(cache.size(), 0u);
}

TEST_F(LoginTest, DistinctSessionsDistinctKeys) {
  const LoginStart s1 = begin(d.now);
  const ServerAccept a1 = serve(s1.request, plus(d.now, 1));
  const LoginStart s2 = begin(plus(d.now, 10));
  const ServerAccept a2 = serve(s2.request, plus(d.now, 11));
  EXPECT_NE(a1.key.sk, a2.key.sk);
  const ServerAccept a3 =
      server_handle_login(srv().trm, srv().secrets.id, srv().secrets.loc, s1.request, plus(d.now, 1), {kWindow, 60});
  EXPECT_NE(a1.key.sk, a3.key.sk);
}

TEST_F(LoginTest, FullAuthenticationCostsTwentyHashes) {
  HashCounter counter;
  LoginStart start;
  ServerAccept acc;
  {
    CountingScope scope(counter, "user");
    start = begin(d.now);
  }
  {
    CountingScope scope(counter, "server");
    acc = serve(start.request, plus(d.now, 1));
  }
  {
    CountingScope scope(counter, "user");
    (void)user_handle_response(start.context, acc.response, plus(d.now, 2), kWindow);
  }
  EXPECT_EQ(counter.count("user"), 15u);
  EXPECT_EQ(counter.count("server"), 5u);
  EXPECT_EQ(counter.total(), 20u);
  EXPECT_EQ(counter.keystream_count("user"), 8u);  // two keystream layers over a 128-byte list
}

TEST(KeyAgreement, RandomizedSessions) {
  Rng meta(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    Deployment d(meta.next_u64());
    const std::size_t n = 1 + meta.uniform(5);
    for (std::size_t j = 0; j < n; ++j) d.add_server("s" + std::to_string(j) + "-" + std::to_string(meta.uniform(1000)));
    User& u = d.add_user("u" + std::to_string(meta.next_u64() % 100000), "pw" + std::to_string(meta.uniform(1'000'000'000)));
    d.sync_all();
    Server& s = d.servers[meta.uniform(n)];
    const Timestamp32 t1{static_cast<std::uint32_t>(meta.next_u64())};
    const std::uint32_t lat = static_cast<std::uint32_t>(meta.uniform(kWindow + 1));
    const LoginStart start = user_login_begin(u.id, u.pw, u.card, s.secrets.id, t1);
    const ServerAccept acc = server_handle_login(s.trm, s.secrets.id, s.secrets.loc, start.request, plus(t1, lat), kPolicy);
    const SessionKey key = user_handle_response(start.context, acc.response, plus(t1, 2 * lat), kWindow);
    ASSERT_EQ(key.sk, acc.key.sk) << "trial " << trial;
  }
}

// --- card update -----------------------------------------------------------

TEST_F(LoginTest, UpdateThenLoginToNewServer) {
  Server& fresh = d.add_server("hosp03", "spw3", "delhi");
  EXPECT_EQ(error_of([&] { user_login_begin(alice().id, alice().pw, alice().card, fresh.secrets.id, d.now); }),
            ErrorKind::UnknownServer);

  const UpdateStart upd = user_update_begin(alice().id, alice().pw, alice().card, d.now);
  EXPECT_EQ(upd.request.tau, hash_of(upd.context.c, d.now, alice().uid));
  const Bytes list = rc_handle_update(d.rc, upd.request, plus(d.now, 1), kWindow);
  EXPECT_EQ(list.size(), 3 * 64u);
  const SmartCard updated = user_apply_server_list(alice().id, alice().pw, alice().card, list);
  EXPECT_EQ(updated.w, alice().card.w);
  EXPECT_EQ(updated.e, alice().card.e);
  EXPECT_EQ(updated, user_apply_server_list(alice().id, alice().pw, alice().card, list));

  const LoginStart start = user_login_begin(alice().id, alice().pw, updated, fresh.secrets.id, d.now);
  const ServerAccept acc = server_handle_login(fresh.trm, fresh.secrets.id, fresh.secrets.loc, start.request, d.now, kPolicy);
  EXPECT_EQ(user_handle_response(start.context, acc.response, d.now, kWindow), acc.key);
}

TEST_F(LoginTest, UpdateRejections) {
  EXPECT_EQ(error_of([&] { user_update_begin(alice().id, PwField::from_string("x"), alice().card, d.now); }),
            ErrorKind::BadCredentials);
  const UpdateStart upd = user_update_begin(alice().id, alice().pw, alice().card, d.now);
  EXPECT_EQ(error_of([&] { rc_handle_update(d.rc, upd.request, plus(d.now, kWindow + 1), kWindow); }),
            ErrorKind::StaleRequest);
  UpdateRequest unknown = upd.request;
  unknown.uid = d.rng.draw<Digest256>();
  EXPECT_EQ(error_of([&] { rc_handle_update(d.rc, unknown, d.now, kWindow); }), ErrorKind::UnknownUser);
  UpdateRequest forged = upd.request;
  forged.tau.mutable_view()[0] ^= 1;
  EXPECT_EQ(error_of([&] { rc_handle_update(d.rc, forged, d.now, kWindow); }), ErrorKind::AuthFail);
  UpdateRequest moved = upd.request;
  moved.t4 = plus(d.now, 1);
  EXPECT_EQ(error_of([&] { rc_handle_update(d.rc, moved, plus(d.now, 1), kWindow); }), ErrorKind::AuthFail);
  EXPECT_EQ(error_of([&] { user_apply_server_list(alice().id, alice().pw, alice().card, Bytes(63)); }),
            ErrorKind::MalformedList);
  EXPECT_EQ(error_of([&] { user_apply_server_list(alice().id, PwField::from_string("x"), alice().card, Bytes(64)); }),
            ErrorKind::BadCredentials);
}

// --- server database update ------------------------------------------------

TEST(DbUpdate, DeltaTracksRegistrations) {
  Deployment d(8);
  Server& s = d.add_server("hosp01");
  for (int i = 0; i < 3; ++i) d.add_user("u" + std::to_string(i), "pw");
  const DbUpdateRequest req = server_db_update_begin(s.secrets, s.trm.ssk, d.now);
  EXPECT_EQ(req.omega, hash_of(hash_of(s.secrets.id, s.secrets.pw) ^ s.secrets.p, d.now, s.trm.ssk));
  EXPECT_EQ(req, server_db_update_begin(s.secrets, s.trm.ssk, d.now));
  EXPECT_NE(req.omega, server_db_update_begin(s.secrets, s.trm.ssk, plus(d.now, 1)).omega);

  const UserListDelta first = rc_handle_db_update(d.rc, req, d.now, kWindow);
  EXPECT_EQ(first.entries.size(), 3u);
  EXPECT_TRUE(rc_handle_db_update(d.rc, req, d.now, kWindow).entries.empty());
  d.add_user("u3", "pw");
  EXPECT_EQ(rc_handle_db_update(d.rc, req, d.now, kWindow).entries.size(), 1u);
}

TEST(DbUpdate, Rejections) {
  Deployment d(9);
  Server& s = d.add_server("hosp01");
  d.add_user("u", "pw");
  const DbUpdateRequest req = server_db_update_begin(s.secrets, s.trm.ssk, d.now);
  DbUpdateRequest forged = req;
  forged.omega.mutable_view()[31] ^= 0x80;
  const RcState before = d.rc;
  EXPECT_EQ(error_of([&] { rc_handle_db_update(d.rc, forged, d.now, kWindow); }), ErrorKind::AuthFail);
  EXPECT_EQ(d.rc, before);
  EXPECT_EQ(error_of([&] { rc_handle_db_update(d.rc, req, plus(d.now, kWindow + 1), kWindow); }),
            ErrorKind::StaleRequest);
  DbUpdateRequest moved = req;
  moved.t6 = plus(d.now, 1);
  EXPECT_EQ(error_of([&] { rc_handle_db_update(d.rc, moved, plus(d.now, 1), kWindow); }), ErrorKind::AuthFail);
  DbUpdateRequest stranger = req;
  stranger.id = IdField::from_string("nobody");
  EXPECT_EQ(error_of([&] { rc_handle_db_update(d.rc, stranger, d.now, kWindow); }), ErrorKind::UnknownServer);
}

TEST(Lists, Codecs) {
  Rng rng(10);
  std::vector<ServerListEntry> servers = {{IdField::from_string("a"), rng.draw<Digest256>(), LocField::from_string("x")},
                                          {IdField::from_string("b"), rng.draw<Digest256>(), LocField::from_string("y")}};
  EXPECT_EQ(decode_server_list(encode_server_list(servers)), servers);
  EXPECT_EQ(error_of([&] { decode_server_list(Bytes{}); }), ErrorKind::MalformedList);
  EXPECT_EQ(error_of([&] { decode_server_list(Bytes(100)); }), ErrorKind::MalformedList);
  std::vector<UserListEntry> users = {{rng.draw<Digest256>(), rng.draw<Digest256>()}};
  EXPECT_EQ(decode_user_list(encode_user_list(users)), users);
  EXPECT_TRUE(decode_user_list(Bytes{}).empty());
  EXPECT_EQ(error_of([&] { decode_user_list(Bytes(65)); }), ErrorKind::MalformedList);
}

TEST(Validity, Encoding) {
  const Validity16 vt = Validity16::issue(Timestamp32{100}, 900);
  EXPECT_EQ(vt.expiry, 1000u);
  EXPECT_EQ(Validity16::decode(vt.encode()), vt);
  EXPECT_TRUE(vt.covers(Timestamp32{1000}));
  EXPECT_FALSE(vt.covers(Timestamp32{1001}));
  EXPECT_EQ(error_of([&] { Validity16::decode(Bytes(15)); }), ErrorKind::LengthMismatch);
}

}  // namespace
}  // namespace maskap

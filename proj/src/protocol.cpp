#include "maskap/protocol.hpp"

#include <algorithm>

namespace maskap {

namespace {

template <class Out, class A, class B>
Out xor_as(const A& a, const B& b) {
  static_assert(A::kSize == Out::kSize && B::kSize == Out::kSize);
  return Out::from_view(xor_bytes(a.view(), b.view()));
}

Digest256 xor3(const Digest256& a, const Digest256& b, const Digest256& c) { return a ^ b ^ c; }

// h(n XOR f) over a 16-byte nonce and a 16-byte text field.
template <class Field>
Digest256 hash_xor(const Nonce128& n, const Field& f) {
  return hash(xor_bytes(n.view(), f.view()));
}

std::array<std::uint8_t, 4> enc4(std::uint32_t v) {
  std::array<std::uint8_t, 4> out{};
  put_be32(out, v);
  return out;
}

Bytes mask_server_list(const IdField& id, const PwField& pw, const Nonce128& r1,
                       const Nonce128& r2, ByteView list) {
  const Digest256 k1 = hash_of(r1, id, pw);
  const Digest256 k2 = hash_of(id, pw, r2);
  return keystream_mask(k2, keystream_mask(k1, list));
}

void require_fresh(Timestamp32 sent, Timestamp32 received, std::uint32_t delta_t, ErrorKind kind) {
  if (!is_fresh(sent, received, delta_t)) {
    throw Error(kind, "sent " + std::to_string(sent.seconds) + ", received " +
                          std::to_string(received.seconds) + ", window " + std::to_string(delta_t));
  }
}

}  // namespace

bool is_fresh(Timestamp32 sent, Timestamp32 received, std::uint32_t delta_t) noexcept {
  const auto age = static_cast<std::int64_t>(received.seconds) - static_cast<std::int64_t>(sent.seconds);
  return age >= 0 && age <= static_cast<std::int64_t>(delta_t);
}

std::array<std::uint8_t, 16> Validity16::encode() const noexcept {
  std::array<std::uint8_t, 16> out{};
  put_be64(std::span<std::uint8_t, 8>(out.data(), 8), expiry);
  put_be64(std::span<std::uint8_t, 8>(out.data() + 8, 8), duration_s);
  return out;
}

Validity16 Validity16::decode(ByteView bytes) {
  if (bytes.size() != kSize) throw Error(ErrorKind::LengthMismatch, "validity must be 16 bytes");
  return {get_be64(bytes.subspan(0, 8)), get_be64(bytes.subspan(8, 8))};
}

// --- server registration ---------------------------------------------------

ServerRegistration server_register_begin(const IdField& id, const PwField& pw, const LocField& loc,
                                         const Nonce128& r_s) {
  const Digest256 p = hash_of(id, r_s, pw);
  const Digest256 q = hash_of(id, pw) ^ p;
  return {ServerSecrets{id, pw, r_s, p, loc}, ServerRegRequest{id, p, q, loc}};
}

ServerRegistration server_register_begin(std::string_view id, std::string_view pw,
                                         std::string_view loc, Rng& rng) {
  const auto id_f = IdField::from_string(id);
  const auto pw_f = PwField::from_string(pw);
  const auto loc_f = LocField::from_string(loc);
  return server_register_begin(id_f, pw_f, loc_f, rng.nonce());
}

// --- records ---------------------------------------------------------------

Bytes encode_user_list(const std::vector<UserListEntry>& entries) {
  Bytes out;
  out.reserve(entries.size() * UserListEntry::kWireSize);
  for (const auto& e : entries) {
    append(out, e.uid);
    append(out, e.c);
  }
  return out;
}

std::vector<UserListEntry> decode_user_list(ByteView bytes) {
  if (bytes.size() % UserListEntry::kWireSize != 0) {
    throw Error(ErrorKind::MalformedList, "user list length " + std::to_string(bytes.size()));
  }
  std::vector<UserListEntry> out;
  for (std::size_t off = 0; off < bytes.size(); off += UserListEntry::kWireSize) {
    out.push_back({Digest256::from_view(bytes.subspan(off, 32)),
                   Digest256::from_view(bytes.subspan(off + 32, 32))});
  }
  return out;
}

Bytes encode_server_list(const std::vector<ServerListEntry>& entries) {
  Bytes out;
  out.reserve(entries.size() * ServerListEntry::kWireSize);
  for (const auto& e : entries) {
    append(out, e.id);
    append(out, e.ssk);
    append(out, e.loc);
  }
  return out;
}

std::vector<ServerListEntry> decode_server_list(ByteView bytes) {
  if (bytes.empty() || bytes.size() % ServerListEntry::kWireSize != 0) {
    throw Error(ErrorKind::MalformedList, "server list length " + std::to_string(bytes.size()));
  }
  std::vector<ServerListEntry> out;
  for (std::size_t off = 0; off < bytes.size(); off += ServerListEntry::kWireSize) {
    out.push_back({IdField::from_view(bytes.subspan(off, 16)),
                   Digest256::from_view(bytes.subspan(off + 16, 32)),
                   LocField::from_view(bytes.subspan(off + 48, 16))});
  }
  return out;
}

void TamperResistantMemory::merge(const UserListDelta& delta) {
  for (const auto& e : delta.entries) {
    list_uid.insert(e.uid);
    list_c[e.uid] = e.c;
  }
}

bool TamperResistantMemory::consistent() const {
  if (list_uid.size() != list_c.size()) return false;
  return std::all_of(list_c.begin(), list_c.end(),
                     [&](const auto& kv) { return list_uid.contains(kv.first); });
}

RcState RcState::create(Rng& rng) {
  RcState rc;
  rc.k_rc = rng.draw<Key256>();
  return rc;
}

const ServerRecord* RcState::find_server(const IdField& id) const {
  auto it = std::find_if(servers.begin(), servers.end(), [&](const auto& s) { return s.id == id; });
  return it == servers.end() ? nullptr : &*it;
}

const UserListEntry* RcState::find_user(const Digest256& uid) const {
  auto it = std::find_if(users.begin(), users.end(), [&](const auto& u) { return u.uid == uid; });
  return it == users.end() ? nullptr : &*it;
}

std::vector<ServerListEntry> RcState::server_list() const {
  std::vector<ServerListEntry> out;
  out.reserve(servers.size());
  for (const auto& s : servers) out.push_back({s.id, s.ssk, s.loc});
  return out;
}

TamperResistantMemory rc_register_server(RcState& rc, const ServerRegRequest& req, Timestamp32 srt) {
  if (rc.find_server(req.id) != nullptr) {
    throw Error(ErrorKind::DuplicateServerId, req.id.str());
  }
  const Digest256 ssk = hash_of(rc.k_rc, req.p, srt);
  rc.servers.push_back({req.id, ssk, req.q, req.loc, srt});
  rc.sync_markers[req.id] = rc.users.size();

  TamperResistantMemory trm{ssk, req.p, {}, {}};
  trm.merge(UserListDelta{rc.users});
  return trm;
}

// --- user registration -----------------------------------------------------

UserRegistration user_register_begin(const IdField& id, const PwField& pw, const Nonce128& r1,
                                     const Nonce128& r2) {
  const Digest256 a = hash_of(id, pw);
  const Digest256 uid = hash_of(r1, id, r2);
  return {UserRegPending{id, pw, r1, r2, a, uid}, UserRegRequest{uid, a}};
}

UserRegistration user_register_begin(std::string_view id, std::string_view pw, Rng& rng) {
  const auto id_f = IdField::from_string(id);
  const auto pw_f = PwField::from_string(pw);
  const Nonce128 r1 = rng.nonce();
  const Nonce128 r2 = rng.nonce();
  return user_register_begin(id_f, pw_f, r1, r2);
}

CardProvision rc_register_user(RcState& rc, const UserRegRequest& req, const Nonce128& r3) {
  if (rc.find_user(req.uid) != nullptr) throw Error(ErrorKind::DuplicateUid, req.uid.hex());
  if (rc.servers.empty()) throw Error(ErrorKind::NoServersRegistered, "card would hold an empty list");

  const Digest256 usk = hash_of(req.uid, rc.k_rc, r3);
  const Digest256 c = xor3(hash_of(rc.k_rc, r3, req.a), usk, hash_of(req.uid, req.a));
  const Digest256 d = req.a ^ usk;
  rc.users.push_back({req.uid, c});
  return {c, d, rc.server_list_bytes()};
}

CardProvision rc_register_user(RcState& rc, const UserRegRequest& req, Rng& rng) {
  return rc_register_user(rc, req, rng.nonce());
}

void SmartCard::validate() const {
  if (z.empty() || z.size() % ServerListEntry::kWireSize != 0) {
    throw Error(ErrorKind::CorruptRecord, "card z length " + std::to_string(z.size()));
  }
}

SmartCard user_finalize_card(const UserRegPending& pending, const CardProvision& prov) {
  const auto& [id, pw, r1, r2, a, uid] = pending;
  const Digest256 b = hash_of(r1, pw) ^ hash_of(r2, pw);

  SmartCard card;
  card.w = Digest256::from_view(concat(r1, r2)) ^ a;
  card.x = xor3(hash_xor(r2, id), prov.c, hash_xor(r1, pw));
  card.y = b ^ prov.d;
  card.z = mask_server_list(id, pw, r1, r2, prov.list_bytes);
  const Digest256 usk = a ^ prov.d;
  card.e = hash_of(uid, pw, usk);
  return card;
}

UserSecrets recover_user_secrets(const IdField& id, const PwField& pw, const SmartCard& card) {
  UserSecrets s;
  s.a = hash_of(id, pw);
  const Digest256 r12 = card.w ^ s.a;
  s.r1 = Nonce128::from_view(r12.view().subspan(0, 16));
  s.r2 = Nonce128::from_view(r12.view().subspan(16, 16));
  s.b = hash_of(s.r1, pw) ^ hash_of(s.r2, pw);
  // USK = h(ID || PW) xor Y xor B, with h(ID || PW) evaluated afresh as the
  // login step is written; the 20-hash cost model counts it twice.
  s.usk = xor3(hash_of(id, pw), card.y, s.b);
  s.uid = hash_of(s.r1, id, s.r2);
  if (hash_of(s.uid, pw, s.usk) != card.e) throw Error(ErrorKind::BadCredentials, "card check failed");
  s.c = xor3(card.x, hash_xor(s.r2, id), hash_xor(s.r1, pw));
  return s;
}

std::vector<ServerListEntry> unmask_server_list(const IdField& id, const PwField& pw,
                                                const UserSecrets& secrets, const SmartCard& card) {
  return decode_server_list(mask_server_list(id, pw, secrets.r1, secrets.r2, card.z));
}

// --- authentication and key agreement --------------------------------------

Digest256 derive_session_key(const Digest256& uid, const IdField& id_j, const Digest256& c,
                             const LocField& loc_j, const Validity16& vt) {
  return hash_of(uid, id_j, c, loc_j, vt);
}

LoginStart user_login_begin(const IdField& id, const PwField& pw, const SmartCard& card,
                            const IdField& target, Timestamp32 t1) {
  const UserSecrets s = recover_user_secrets(id, pw, card);
  const auto servers = unmask_server_list(id, pw, s, card);
  auto it = std::find_if(servers.begin(), servers.end(),
                         [&](const auto& e) { return e.id == target; });
  if (it == servers.end()) throw Error(ErrorKind::UnknownServer, target.str());

  LoginRequest req;
  req.alpha = hash_of(target, it->ssk, t1) ^ s.uid;
  req.beta = hash_of(s.uid, it->ssk, s.c, t1);
  req.t1 = t1;
  return {req, LoginContext{s.uid, s.c, it->ssk, target, it->loc, req.beta, t1}};
}

bool ReplayCache::check_and_insert(const Digest256& beta, Timestamp32 t1) {
  return seen_.emplace(t1.seconds, beta).second;
}

void ReplayCache::prune(Timestamp32 now, std::uint32_t delta_t) {
  const std::int64_t oldest = static_cast<std::int64_t>(now.seconds) - delta_t;
  while (!seen_.empty() && static_cast<std::int64_t>(seen_.begin()->first) < oldest) {
    seen_.erase(seen_.begin());
  }
}

ServerAccept server_handle_login(const TamperResistantMemory& trm, const IdField& id_j,
                                 const LocField& loc_j, const LoginRequest& req, Timestamp32 t2,
                                 const ServerPolicy& policy, ReplayCache* replay_cache) {
  require_fresh(req.t1, t2, policy.delta_t, ErrorKind::StaleRequest);

  const Digest256 uid = hash_of(id_j, trm.ssk, req.t1) ^ req.alpha;
  auto found = trm.list_c.find(uid);
  if (found == trm.list_c.end()) throw Error(ErrorKind::UnknownUser, "uid not provisioned");
  const Digest256& c = found->second;

  const Digest256 beta_check = hash_of(uid, trm.ssk, c, req.t1);
  if (beta_check != req.beta) throw Error(ErrorKind::AuthFail, "beta mismatch");

  if (replay_cache != nullptr) {
    replay_cache->prune(t2, policy.delta_t);
    if (!replay_cache->check_and_insert(req.beta, req.t1)) {
      throw Error(ErrorKind::ReplayDetected, "request already served");
    }
  }

  const Validity16 vt = Validity16::issue(t2, policy.validity_s);
  ServerAccept out;
  out.response.gamma =
      Masked256::from_view(concat(vt, loc_j)) ^ Masked256(hash_of(c, uid, id_j, beta_check).array());
  out.response.sigma = hash_of(vt, c, enc4(t2.seconds - req.t1.seconds));
  out.response.t2 = t2;
  out.key = SessionKey{derive_session_key(uid, id_j, c, loc_j, vt), vt, id_j};
  out.uid = uid;
  return out;
}

SessionKey user_handle_response(const LoginContext& ctx, const LoginResponse& resp, Timestamp32 t3,
                                std::uint32_t delta_t) {
  require_fresh(resp.t2, t3, delta_t, ErrorKind::StaleResponse);

  const Masked256 plain =
      resp.gamma ^ Masked256(hash_of(ctx.c, ctx.uid, ctx.id_j, ctx.beta).array());
  const Validity16 vt = Validity16::decode(plain.view().subspan(0, 16));
  const LocField loc = LocField::from_view(plain.view().subspan(16, 16));

  const Digest256 sigma_check = hash_of(vt, ctx.c, enc4(resp.t2.seconds - ctx.t1.seconds));
  if (sigma_check != resp.sigma) throw Error(ErrorKind::AuthFail, "sigma mismatch");
  // sigma covers VT only; the Loc half of gamma is bound by the card's own list entry.
  if (loc != ctx.loc_j) throw Error(ErrorKind::AuthFail, "location mismatch");
  return SessionKey{derive_session_key(ctx.uid, ctx.id_j, ctx.c, loc, vt), vt, ctx.id_j};
}

// --- password / smart-card update ------------------------------------------

UpdateStart user_update_begin(const IdField& id, const PwField& pw, const SmartCard& card,
                              Timestamp32 t4) {
  const UserSecrets s = recover_user_secrets(id, pw, card);
  UpdateRequest req{s.uid, hash_of(s.c, t4, s.uid), t4};
  return {req, UpdateContext{s.uid, s.c, t4}};
}

Bytes rc_handle_update(const RcState& rc, const UpdateRequest& req, Timestamp32 t5,
                       std::uint32_t delta_t) {
  require_fresh(req.t4, t5, delta_t, ErrorKind::StaleRequest);
  const UserListEntry* user = rc.find_user(req.uid);
  if (user == nullptr) throw Error(ErrorKind::UnknownUser, "uid not registered");
  if (hash_of(user->c, req.t4, req.uid) != req.tau) throw Error(ErrorKind::AuthFail, "tau mismatch");
  return rc.server_list_bytes();
}

SmartCard user_apply_server_list(const IdField& id, const PwField& pw, const SmartCard& card,
                                 ByteView list_bytes) {
  if (list_bytes.empty() || list_bytes.size() % ServerListEntry::kWireSize != 0) {
    throw Error(ErrorKind::MalformedList, "server list length " + std::to_string(list_bytes.size()));
  }
  const UserSecrets s = recover_user_secrets(id, pw, card);
  SmartCard updated = card;
  updated.z = mask_server_list(id, pw, s.r1, s.r2, list_bytes);
  return updated;
}

// --- server database update ------------------------------------------------

DbUpdateRequest server_db_update_begin(const ServerSecrets& secrets, const Digest256& ssk,
                                       Timestamp32 t6) {
  const Digest256 q = hash_of(secrets.id, secrets.pw) ^ secrets.p;
  return {secrets.id, hash_of(q, t6, ssk), t6};
}

UserListDelta rc_handle_db_update(RcState& rc, const DbUpdateRequest& req, Timestamp32 t7,
                                  std::uint32_t delta_t) {
  require_fresh(req.t6, t7, delta_t, ErrorKind::StaleRequest);
  const ServerRecord* server = rc.find_server(req.id);
  if (server == nullptr) throw Error(ErrorKind::UnknownServer, req.id.str());
  if (hash_of(server->q, req.t6, server->ssk) != req.omega) {
    throw Error(ErrorKind::AuthFail, "omega mismatch");
  }
  std::uint64_t& marker = rc.sync_markers[req.id];
  const auto from = static_cast<std::ptrdiff_t>(std::min<std::uint64_t>(marker, rc.users.size()));
  UserListDelta delta{{rc.users.begin() + from, rc.users.end()}};
  marker = rc.users.size();
  return delta;
}

}  // namespace maskap

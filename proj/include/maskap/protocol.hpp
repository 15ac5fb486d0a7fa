#pragma once

// All five phases of the multi-server scheme as pure transforms: registration
// of servers and users at the registration center (RC), login and key
// agreement between a user and a server, smart-card refresh, and server
// user-list sync. Nothing here touches transport or storage.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <utility>
#include <vector>

#include "maskap/bytes.hpp"
#include "maskap/crypto.hpp"
#include "maskap/rng.hpp"

namespace maskap {

constexpr std::uint64_t kDefaultValiditySeconds = 900;
constexpr std::uint32_t kDefaultDeltaT = 5;

/// Accepts iff 0 <= received - sent <= delta_t.
bool is_fresh(Timestamp32 sent, Timestamp32 received, std::uint32_t delta_t) noexcept;

/// Session-key validity: 8-byte big-endian expiry then 8-byte big-endian duration.
struct Validity16 {
  std::uint64_t expiry = 0;
  std::uint64_t duration_s = 0;

  static constexpr std::size_t kSize = 16;

  static Validity16 issue(Timestamp32 at, std::uint64_t duration_s) noexcept {
    return {static_cast<std::uint64_t>(at.seconds) + duration_s, duration_s};
  }
  std::array<std::uint8_t, 16> encode() const noexcept;
  static Validity16 decode(ByteView bytes);
  bool covers(Timestamp32 t) const noexcept { return t.seconds <= expiry; }

  friend auto operator<=>(const Validity16&, const Validity16&) = default;
};

inline void append(Bytes& out, const Validity16& vt) { append(out, ByteView(vt.encode())); }

// --- server registration ---------------------------------------------------

struct ServerSecrets {
  IdField id;
  PwField pw;
  Nonce128 r_s;
  Digest256 p;
  LocField loc;

  friend bool operator==(const ServerSecrets&, const ServerSecrets&) = default;
};

struct ServerRegRequest {
  IdField id;
  Digest256 p;
  Digest256 q;
  LocField loc;
};

struct ServerRegistration {
  ServerSecrets secrets;
  ServerRegRequest request;
};

ServerRegistration server_register_begin(const IdField& id, const PwField& pw, const LocField& loc,
                                         const Nonce128& r_s);
ServerRegistration server_register_begin(std::string_view id, std::string_view pw,
                                         std::string_view loc, Rng& rng);

// --- shared records --------------------------------------------------------

/// One (UID, C) pair as held by the RC and provisioned to servers.
struct UserListEntry {
  Digest256 uid;
  Digest256 c;

  static constexpr std::size_t kWireSize = 64;
  friend bool operator==(const UserListEntry&, const UserListEntry&) = default;
};

struct UserListDelta {
  std::vector<UserListEntry> entries;
};

Bytes encode_user_list(const std::vector<UserListEntry>& entries);
std::vector<UserListEntry> decode_user_list(ByteView bytes);

/// (ID_j || SSK_j || Loc_j), 64 bytes on the card.
struct ServerListEntry {
  IdField id;
  Digest256 ssk;
  LocField loc;

  static constexpr std::size_t kWireSize = 64;
  friend bool operator==(const ServerListEntry&, const ServerListEntry&) = default;
};

Bytes encode_server_list(const std::vector<ServerListEntry>& entries);
/// MalformedList unless the length is a positive multiple of 64.
std::vector<ServerListEntry> decode_server_list(ByteView bytes);

/// Server-side provisioned store.
struct TamperResistantMemory {
  Digest256 ssk;
  Digest256 p;
  std::set<Digest256> list_uid;
  std::map<Digest256, Digest256> list_c;

  void merge(const UserListDelta& delta);
  /// list_uid and the key set of list_c are the same set.
  bool consistent() const;

  friend bool operator==(const TamperResistantMemory&, const TamperResistantMemory&) = default;
};

struct ServerRecord {
  IdField id;
  Digest256 ssk;
  Digest256 q;
  LocField loc;
  Timestamp32 srt;

  friend bool operator==(const ServerRecord&, const ServerRecord&) = default;
};

struct RcState {
  Key256 k_rc;
  std::vector<ServerRecord> servers;  // registration order
  std::vector<UserListEntry> users;   // registration order; sync markers index into it
  std::map<IdField, std::uint64_t> sync_markers;

  static RcState create(Rng& rng);

  const ServerRecord* find_server(const IdField& id) const;
  const UserListEntry* find_user(const Digest256& uid) const;
  std::vector<ServerListEntry> server_list() const;
  Bytes server_list_bytes() const { return encode_server_list(server_list()); }

  friend bool operator==(const RcState&, const RcState&) = default;
};

TamperResistantMemory rc_register_server(RcState& rc, const ServerRegRequest& req, Timestamp32 srt);

// --- user registration -----------------------------------------------------

struct UserRegPending {
  IdField id;
  PwField pw;
  Nonce128 r1;
  Nonce128 r2;
  Digest256 a;
  Digest256 uid;
};

struct UserRegRequest {
  Digest256 uid;
  Digest256 a;
};

struct UserRegistration {
  UserRegPending pending;
  UserRegRequest request;
};

UserRegistration user_register_begin(const IdField& id, const PwField& pw, const Nonce128& r1,
                                     const Nonce128& r2);
UserRegistration user_register_begin(std::string_view id, std::string_view pw, Rng& rng);

struct CardProvision {
  Digest256 c;
  Digest256 d;
  Bytes list_bytes;
};

CardProvision rc_register_user(RcState& rc, const UserRegRequest& req, const Nonce128& r3);
CardProvision rc_register_user(RcState& rc, const UserRegRequest& req, Rng& rng);

struct SmartCard {
  Digest256 w;
  Digest256 x;
  Digest256 y;
  Digest256 e;
  Bytes z;  // masked server list, 64 bytes per server

  std::size_t storage_bytes() const noexcept { return 4 * Digest256::kSize + z.size(); }
  std::size_t server_count() const noexcept { return z.size() / ServerListEntry::kWireSize; }
  /// Throws CorruptRecord unless z is a positive multiple of 64 bytes.
  void validate() const;

  friend bool operator==(const SmartCard&, const SmartCard&) = default;
};

SmartCard user_finalize_card(const UserRegPending& pending, const CardProvision& prov);

/// Values the card holder reconstructs from (ID, PW, card). Never stored.
struct UserSecrets {
  Digest256 a;
  Digest256 b;
  Digest256 uid;
  Digest256 usk;
  Digest256 c;
  Nonce128 r1;
  Nonce128 r2;
};

/// Local card check shared by login and card update. BadCredentials when the
/// recomputed E does not match the card.
UserSecrets recover_user_secrets(const IdField& id, const PwField& pw, const SmartCard& card);

/// Removes both keystream layers from card.z.
std::vector<ServerListEntry> unmask_server_list(const IdField& id, const PwField& pw,
                                                const UserSecrets& secrets, const SmartCard& card);

// --- authentication and key agreement --------------------------------------

struct LoginRequest {
  Digest256 alpha;
  Digest256 beta;
  Timestamp32 t1;

  static constexpr std::size_t kWireSize = 68;
  friend bool operator==(const LoginRequest&, const LoginRequest&) = default;
};

struct LoginResponse {
  Masked256 gamma;  // (VT || Loc) under h(C || UID || ID_j || beta)
  Digest256 sigma;
  Timestamp32 t2;

  static constexpr std::size_t kWireSize = 68;
  friend bool operator==(const LoginResponse&, const LoginResponse&) = default;
};

struct SessionKey {
  Digest256 sk;
  Validity16 vt;
  IdField server_id;

  friend bool operator==(const SessionKey&, const SessionKey&) = default;
};

struct LoginContext {
  Digest256 uid;
  Digest256 c;
  Digest256 ssk;
  IdField id_j;
  LocField loc_j;  // from the card's server list
  Digest256 beta;
  Timestamp32 t1;
};

struct LoginStart {
  LoginRequest request;
  LoginContext context;
};

LoginStart user_login_begin(const IdField& id, const PwField& pw, const SmartCard& card,
                            const IdField& target, Timestamp32 t1);

struct ServerPolicy {
  std::uint32_t delta_t = kDefaultDeltaT;
  std::uint64_t validity_s = kDefaultValiditySeconds;
};

/// Optional seen-(beta, T1) memory. Without it a verbatim copy of a request
/// is accepted for as long as it passes the freshness window.
class ReplayCache {
 public:
  /// False if the pair was already seen.
  bool check_and_insert(const Digest256& beta, Timestamp32 t1);
  /// Forget entries whose T1 can no longer pass the freshness window.
  void prune(Timestamp32 now, std::uint32_t delta_t);
  std::size_t size() const noexcept { return seen_.size(); }

 private:
  std::set<std::pair<std::uint32_t, Digest256>> seen_;
};

struct ServerAccept {
  LoginResponse response;
  SessionKey key;
  Digest256 uid;
};

ServerAccept server_handle_login(const TamperResistantMemory& trm, const IdField& id_j,
                                 const LocField& loc_j, const LoginRequest& req, Timestamp32 t2,
                                 const ServerPolicy& policy, ReplayCache* replay_cache = nullptr);

SessionKey user_handle_response(const LoginContext& ctx, const LoginResponse& resp, Timestamp32 t3,
                                std::uint32_t delta_t);

Digest256 derive_session_key(const Digest256& uid, const IdField& id_j, const Digest256& c,
                             const LocField& loc_j, const Validity16& vt);

// --- password / smart-card update ------------------------------------------

struct UpdateRequest {
  Digest256 uid;
  Digest256 tau;
  Timestamp32 t4;

  static constexpr std::size_t kWireSize = 68;
  friend bool operator==(const UpdateRequest&, const UpdateRequest&) = default;
};

struct UpdateContext {
  Digest256 uid;
  Digest256 c;
  Timestamp32 t4;
};

struct UpdateStart {
  UpdateRequest request;
  UpdateContext context;
};

UpdateStart user_update_begin(const IdField& id, const PwField& pw, const SmartCard& card,
                              Timestamp32 t4);
/// Returns the RC's current server list bytes.
Bytes rc_handle_update(const RcState& rc, const UpdateRequest& req, Timestamp32 t5,
                       std::uint32_t delta_t);
SmartCard user_apply_server_list(const IdField& id, const PwField& pw, const SmartCard& card,
                                 ByteView list_bytes);

// --- server database update ------------------------------------------------

struct DbUpdateRequest {
  IdField id;
  Digest256 omega;
  Timestamp32 t6;

  static constexpr std::size_t kWireSize = 52;
  friend bool operator==(const DbUpdateRequest&, const DbUpdateRequest&) = default;
};

DbUpdateRequest server_db_update_begin(const ServerSecrets& secrets, const Digest256& ssk,
                                       Timestamp32 t6);
/// Users registered since this server's last successful sync; advances its marker.
UserListDelta rc_handle_db_update(RcState& rc, const DbUpdateRequest& req, Timestamp32 t7,
                                  std::uint32_t delta_t);

}  // namespace maskap

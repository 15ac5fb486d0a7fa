#pragma once

// Deterministic discrete-event harness: a virtual clock, public and secure
// channels, and an adversary that can interpose on every public frame of a
// login exchange.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "maskap/protocol.hpp"
#include "maskap/rng.hpp"
#include "maskap/wire.hpp"

namespace maskap::sim {

struct SimClock {
  Timestamp32 now;

  void advance(std::uint32_t seconds) { now.seconds += seconds; }
};

struct Forward {};
struct Delay {
  std::uint32_t seconds = 0;
};
/// Withhold the original and deliver `copies` verbatim copies, the k-th one
/// `k * delay_s` seconds after the original would have arrived.
struct Replay {
  std::uint32_t copies = 1;
  std::uint32_t delay_s = 0;
};
/// Flip one bit of a named field of the frame body (alpha, beta, t1 for a
/// login request; gamma, sigma, t2 for a login response).
struct ModifyBit {
  std::string field;
  std::size_t byte_index = 0;
  std::uint8_t bit_index = 0;
};
struct Drop {};
/// Replace the frame with raw wire bytes (length prefix included).
struct Inject {
  Bytes frame;
};

using AdversaryAction = std::variant<Forward, Delay, Replay, ModifyBit, Drop, Inject>;
/// Action per public message in exchange order: 0 = login request, 1 = login response.
using AdversaryScript = std::vector<AdversaryAction>;

std::string describe(const AdversaryAction& action);
AdversaryScript script_from_json(const nlohmann::json& doc);
nlohmann::json script_to_json(const AdversaryScript& script);

struct FieldSpan {
  std::size_t offset;
  std::size_t size;
};
/// Byte range of a named field inside a frame body; InvalidArgument when unknown.
FieldSpan field_span(wire::MsgType type, std::string_view field);

/// Flips one bit of `body` per `mod`; InvalidArgument when out of bounds.
Bytes apply_bit_flip(wire::MsgType type, Bytes body, const ModifyBit& mod);

struct Channel {
  bool secure = false;
};

struct TranscriptFrame {
  Timestamp32 sent;
  Timestamp32 delivered;
  std::string from;
  std::string to;
  bool secure = false;
  std::string type;
  Bytes body;
  std::string action;
};

nlohmann::json transcript_to_json(const std::vector<TranscriptFrame>& frames);

struct ScenarioOutcome {
  bool accepted = false;
  std::optional<ErrorKind> error;
  std::string error_message;
  std::vector<TranscriptFrame> transcript;
  /// (user side, server side) when both derived a key for the exchange.
  std::optional<std::pair<SessionKey, SessionKey>> session_keys;
  std::size_t server_acceptances = 0;
  /// What the server derived from its first accepted request, if any.
  std::optional<ServerAccept> server_result;
  std::optional<LoginContext> user_context;
};

struct WorldConfig {
  std::uint64_t seed = 1;
  std::uint32_t latency_s = 1;
  std::uint32_t delta_t = kDefaultDeltaT;
  std::uint64_t validity_s = kDefaultValiditySeconds;
  bool replay_cache = false;
  Timestamp32 start{1'700'000'000};
};

struct SimServer {
  ServerSecrets secrets;
  TamperResistantMemory trm;
  ReplayCache replay_cache;
};

struct SimUser {
  IdField id;
  PwField pw;
  SmartCard card;
  UserRegPending registration;  // kept for oracle checks in tests
};

class World {
 public:
  explicit World(WorldConfig config = {});

  const WorldConfig& config() const noexcept { return config_; }
  SimClock& clock() noexcept { return clock_; }
  Rng& rng() noexcept { return rng_; }
  RcState& rc() noexcept { return rc_; }
  const RcState& rc() const noexcept { return rc_; }

  const std::map<IdField, SimServer>& servers() const noexcept { return servers_; }
  SimServer& server(std::string_view id);
  SimServer& server(const IdField& id);
  SimUser& user(std::string_view id);
  std::vector<IdField> server_ids() const;

  /// Server registration over a secure channel.
  const SimServer& add_server(std::string_view id, std::string_view pw, std::string_view loc);
  /// User registration over a secure channel; retries with fresh nonces on
  /// a UID collision.
  const SimUser& add_user(std::string_view id, std::string_view pw);
  /// Card refresh over a secure channel.
  void update_user_card(std::string_view id);

  /// Advance the clock, then every server pulls its user-list delta from the
  /// RC. `tamper` edits each outgoing request (fault injection for tests).
  void advance_and_sync(std::uint32_t seconds,
                        const std::function<void(DbUpdateRequest&)>& tamper = {});

  ScenarioOutcome run_honest_session(std::string_view user_id, std::string_view server_id,
                                     std::optional<std::uint32_t> delta_t = std::nullopt);
  ScenarioOutcome run_with_adversary(std::string_view user_id, std::string_view server_id,
                                     const AdversaryScript& script,
                                     std::optional<std::uint32_t> delta_t = std::nullopt);

  /// Every frame, secure ones included.
  const std::vector<TranscriptFrame>& log() const noexcept { return log_; }
  /// Frames an eavesdropper on the public channel has captured.
  std::vector<TranscriptFrame> observed() const;

 private:
  void record(TranscriptFrame frame, const Channel& channel, std::vector<TranscriptFrame>* local);

  WorldConfig config_;
  Rng rng_;
  SimClock clock_;
  RcState rc_;
  std::map<IdField, SimServer> servers_;
  std::map<IdField, SimUser> users_;
  std::vector<TranscriptFrame> log_;
};

}  // namespace maskap::sim

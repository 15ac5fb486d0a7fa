#include "maskap/netsim.hpp"

#include <algorithm>

namespace maskap::sim {

namespace {

using nlohmann::json;

struct Delivery {
  Timestamp32 at;
  Bytes frame;
  std::string action;
};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Timestamp32 plus(Timestamp32 t, std::uint64_t seconds) {
  return Timestamp32{static_cast<std::uint32_t>(t.seconds + seconds)};
}

const AdversaryAction& action_for(const AdversaryScript& script, std::size_t index) {
  static const AdversaryAction kForward = Forward{};
  return index < script.size() ? script[index] : kForward;
}

std::vector<Delivery> interpose(const AdversaryAction& action, wire::MsgType type, const Bytes& frame,
                                Timestamp32 arrival) {
  const std::string label = describe(action);
  return std::visit(
      Overloaded{
          [&](const Forward&) { return std::vector<Delivery>{{arrival, frame, label}}; },
          [&](const Delay& d) {
            return std::vector<Delivery>{{plus(arrival, d.seconds), frame, label}};
          },
          [&](const Replay& r) {
            std::vector<Delivery> out;
            for (std::uint32_t k = 1; k <= r.copies; ++k) {
              out.push_back({plus(arrival, std::uint64_t{k} * r.delay_s), frame, label});
            }
            return out;
          },
          [&](const ModifyBit& m) {
            const wire::Frame decoded = wire::decode_frame(frame);
            const wire::Frame mutated{decoded.type, apply_bit_flip(type, decoded.body, m)};
            return std::vector<Delivery>{{arrival, wire::encode_frame(mutated), label}};
          },
          [&](const Drop&) { return std::vector<Delivery>{}; },
          [&](const Inject& i) { return std::vector<Delivery>{{arrival, i.frame, label}}; },
      },
      action);
}

std::string frame_type_label(const Bytes& frame) {
  if (frame.size() > wire::kLengthPrefix) {
    if (auto t = wire::msg_type_from_byte(frame[wire::kLengthPrefix])) {
      return std::string(wire::to_string(*t));
    }
  }
  return "raw";
}

}  // namespace

std::string describe(const AdversaryAction& action) {
  return std::visit(
      Overloaded{
          [](const Forward&) { return std::string("forward"); },
          [](const Delay& d) { return "delay(" + std::to_string(d.seconds) + ")"; },
          [](const Replay& r) {
            return "replay(" + std::to_string(r.copies) + "," + std::to_string(r.delay_s) + ")";
          },
          [](const ModifyBit& m) {
            return "modify_bit(" + m.field + "," + std::to_string(m.byte_index) + "," +
                   std::to_string(m.bit_index) + ")";
          },
          [](const Drop&) { return std::string("drop"); },
          [](const Inject& i) { return "inject(" + std::to_string(i.frame.size()) + ")"; },
      },
      action);
}

AdversaryScript script_from_json(const json& doc) {
  if (!doc.is_array()) throw Error(ErrorKind::InvalidArgument, "script must be a JSON array");
  AdversaryScript script;
  for (const auto& item : doc) {
    const std::string kind = item.value("action", "");
    if (kind == "forward") {
      script.emplace_back(Forward{});
    } else if (kind == "delay") {
      script.emplace_back(Delay{item.at("seconds").get<std::uint32_t>()});
    } else if (kind == "replay") {
      script.emplace_back(Replay{item.value("copies", 1u), item.value("delay_s", 0u)});
    } else if (kind == "modify_bit") {
      const auto bit = item.at("bit").get<unsigned>();
      if (bit > 7) throw Error(ErrorKind::InvalidArgument, "bit index must be 0..7");
      script.emplace_back(ModifyBit{item.at("field").get<std::string>(),
                                    item.at("byte").get<std::size_t>(),
                                    static_cast<std::uint8_t>(bit)});
    } else if (kind == "drop") {
      script.emplace_back(Drop{});
    } else if (kind == "inject") {
      script.emplace_back(Inject{from_hex(item.at("frame").get<std::string>())});
    } else {
      throw Error(ErrorKind::InvalidArgument, "unknown adversary action '" + kind + "'");
    }
  }
  return script;
}

json script_to_json(const AdversaryScript& script) {
  json out = json::array();
  for (const auto& action : script) {
    out.push_back(std::visit(
        Overloaded{
            [](const Forward&) { return json{{"action", "forward"}}; },
            [](const Delay& d) { return json{{"action", "delay"}, {"seconds", d.seconds}}; },
            [](const Replay& r) {
              return json{{"action", "replay"}, {"copies", r.copies}, {"delay_s", r.delay_s}};
            },
            [](const ModifyBit& m) {
              return json{{"action", "modify_bit"},
                          {"field", m.field},
                          {"byte", m.byte_index},
                          {"bit", m.bit_index}};
            },
            [](const Drop&) { return json{{"action", "drop"}}; },
            [](const Inject& i) { return json{{"action", "inject"}, {"frame", to_hex(i.frame)}}; },
        },
        action));
  }
  return out;
}

FieldSpan field_span(wire::MsgType type, std::string_view field) {
  using wire::MsgType;
  if (type == MsgType::LoginRequest) {
    if (field == "alpha") return {0, 32};
    if (field == "beta") return {32, 32};
    if (field == "t1") return {64, 4};
  } else if (type == MsgType::LoginResponse) {
    if (field == "gamma") return {0, 32};
    if (field == "sigma") return {32, 32};
    if (field == "t2") return {64, 4};
  } else if (type == MsgType::UpdateRequest) {
    if (field == "uid") return {0, 32};
    if (field == "tau") return {32, 32};
    if (field == "t4") return {64, 4};
  } else if (type == MsgType::DbUpdateRequest) {
    if (field == "id") return {0, 16};
    if (field == "omega") return {16, 32};
    if (field == "t6") return {48, 4};
  }
  throw Error(ErrorKind::InvalidArgument,
              "no field '" + std::string(field) + "' in " + std::string(wire::to_string(type)));
}

Bytes apply_bit_flip(wire::MsgType type, Bytes body, const ModifyBit& mod) {
  const FieldSpan span = field_span(type, mod.field);
  if (mod.byte_index >= span.size || mod.bit_index > 7 || span.offset + span.size > body.size()) {
    throw Error(ErrorKind::InvalidArgument, "bit flip outside field " + mod.field);
  }
  body[span.offset + mod.byte_index] ^= static_cast<std::uint8_t>(1u << mod.bit_index);
  return body;
}

json transcript_to_json(const std::vector<TranscriptFrame>& frames) {
  json out = json::array();
  for (const auto& f : frames) {
    out.push_back({{"sent", f.sent.seconds},
                   {"delivered", f.delivered.seconds},
                   {"from", f.from},
                   {"to", f.to},
                   {"secure", f.secure},
                   {"type", f.type},
                   {"body", to_hex(f.body)},
                   {"action", f.action}});
  }
  return out;
}

// --- World -------------------------------------------------------------------

World::World(WorldConfig config)
    : config_(config), rng_(config.seed), clock_{config.start}, rc_(RcState::create(rng_)) {}

SimServer& World::server(const IdField& id) {
  auto it = servers_.find(id);
  if (it == servers_.end()) throw Error(ErrorKind::UnknownServer, id.str());
  return it->second;
}

SimServer& World::server(std::string_view id) { return server(IdField::from_string(id)); }

SimUser& World::user(std::string_view id) {
  auto it = users_.find(IdField::from_string(id));
  if (it == users_.end()) throw Error(ErrorKind::InvalidArgument, "no user " + std::string(id));
  return it->second;
}

std::vector<IdField> World::server_ids() const {
  std::vector<IdField> ids;
  for (const auto& [id, _] : servers_) ids.push_back(id);
  return ids;
}

std::vector<TranscriptFrame> World::observed() const {
  std::vector<TranscriptFrame> out;
  std::copy_if(log_.begin(), log_.end(), std::back_inserter(out),
               [](const TranscriptFrame& f) { return !f.secure; });
  return out;
}

void World::record(TranscriptFrame frame, const Channel& channel,
                   std::vector<TranscriptFrame>* local) {
  frame.secure = channel.secure;
  if (channel.secure) frame.action = "secure";
  if (local != nullptr) local->push_back(frame);
  log_.push_back(std::move(frame));
}

const SimServer& World::add_server(std::string_view id, std::string_view pw, std::string_view loc) {
  const Channel secure{true};
  const ServerRegistration reg = server_register_begin(id, pw, loc, rng_);
  const Timestamp32 sent = clock_.now;
  const Timestamp32 srt = plus(sent, config_.latency_s);
  record({sent, srt, std::string(id), "rc", true, "ServerRegRequest",
          concat(reg.request.id, reg.request.p, reg.request.q, reg.request.loc), ""},
         secure, nullptr);
  TamperResistantMemory trm = rc_register_server(rc_, reg.request, srt);
  record({srt, plus(srt, config_.latency_s), "rc", std::string(id), true, "TrmProvision",
          concat(trm.ssk, trm.p), ""},
         secure, nullptr);
  clock_.advance(2 * config_.latency_s);
  auto [it, _] = servers_.insert_or_assign(reg.secrets.id, SimServer{reg.secrets, std::move(trm), {}});
  return it->second;
}

const SimUser& World::add_user(std::string_view id, std::string_view pw) {
  const Channel secure{true};
  constexpr int kMaxAttempts = 8;
  for (int attempt = 0;; ++attempt) {
    const UserRegistration reg = user_register_begin(id, pw, rng_);
    try {
      const CardProvision prov = rc_register_user(rc_, reg.request, rng_);
      const Timestamp32 sent = clock_.now;
      record({sent, plus(sent, config_.latency_s), std::string(id), "rc", true, "UserRegRequest",
              concat(reg.request.uid, reg.request.a), ""},
             secure, nullptr);
      record({plus(sent, config_.latency_s), plus(sent, 2 * config_.latency_s), "rc",
              std::string(id), true, "CardProvision", concat(prov.c, prov.d, prov.list_bytes), ""},
             secure, nullptr);
      clock_.advance(2 * config_.latency_s);
      SimUser user{reg.pending.id, reg.pending.pw, user_finalize_card(reg.pending, prov),
                   reg.pending};
      auto [it, _] = users_.insert_or_assign(reg.pending.id, std::move(user));
      return it->second;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DuplicateUid || attempt + 1 >= kMaxAttempts) throw;
    }
  }
}

void World::update_user_card(std::string_view id) {
  const Channel secure{true};
  SimUser& u = user(id);
  const Timestamp32 t4 = clock_.now;
  const UpdateStart start = user_update_begin(u.id, u.pw, u.card, t4);
  const Timestamp32 t5 = plus(t4, config_.latency_s);
  record({t4, t5, std::string(id), "rc", true, "UpdateRequest", wire::encode_body(start.request), ""},
         secure, nullptr);
  const Bytes list = rc_handle_update(rc_, start.request, t5, config_.delta_t);
  record({t5, plus(t5, config_.latency_s), "rc", std::string(id), true, "ListPayload", list, ""},
         secure, nullptr);
  u.card = user_apply_server_list(u.id, u.pw, u.card, list);
  clock_.advance(2 * config_.latency_s);
}

void World::advance_and_sync(std::uint32_t seconds,
                             const std::function<void(DbUpdateRequest&)>& tamper) {
  const Channel secure{true};
  clock_.advance(seconds);
  const Timestamp32 t6 = clock_.now;
  const Timestamp32 t7 = plus(t6, config_.latency_s);
  for (auto& [id, srv] : servers_) {
    DbUpdateRequest req = server_db_update_begin(srv.secrets, srv.trm.ssk, t6);
    if (tamper) tamper(req);
    record({t6, t7, id.str(), "rc", true, "DbUpdateRequest", wire::encode_body(req), ""}, secure,
           nullptr);
    const UserListDelta delta = rc_handle_db_update(rc_, req, t7, config_.delta_t);
    record({t7, plus(t7, config_.latency_s), "rc", id.str(), true, "UserListDelta",
            encode_user_list(delta.entries), ""},
           secure, nullptr);
    srv.trm.merge(delta);
  }
  clock_.advance(2 * config_.latency_s);
}

ScenarioOutcome World::run_honest_session(std::string_view user_id, std::string_view server_id,
                                          std::optional<std::uint32_t> delta_t) {
  return run_with_adversary(user_id, server_id, {}, delta_t);
}

ScenarioOutcome World::run_with_adversary(std::string_view user_id, std::string_view server_id,
                                          const AdversaryScript& script,
                                          std::optional<std::uint32_t> delta_t) {
  const std::uint32_t window = delta_t.value_or(config_.delta_t);
  const ServerPolicy policy{window, config_.validity_s};
  const Channel public_channel{false};
  SimUser& u = user(user_id);
  SimServer& srv = server(server_id);
  const std::string user_name(user_id);
  const std::string server_name(server_id);

  ScenarioOutcome out;
  std::vector<Error> rejections;
  Timestamp32 latest = clock_.now;
  auto finish = [&]() {
    clock_.now = std::max(clock_.now, latest);
    if (!out.accepted && !rejections.empty()) {
      out.error = rejections.front().kind();
      out.error_message = rejections.front().what();
    } else if (!out.accepted && !out.error) {
      out.error = ErrorKind::MessageDropped;
      out.error_message = "no message reached its destination";
    }
    return out;
  };

  const Timestamp32 t1 = clock_.now;
  LoginStart start;
  try {
    start = user_login_begin(u.id, u.pw, u.card, srv.secrets.id, t1);
  } catch (const Error& e) {
    rejections.push_back(e);
    return finish();
  }
  out.user_context = start.context;

  const Bytes request_frame = wire::encode_frame(wire::make_frame(start.request));
  auto requests = interpose(action_for(script, 0), wire::MsgType::LoginRequest, request_frame,
                            plus(t1, config_.latency_s));
  std::stable_sort(requests.begin(), requests.end(),
                   [](const Delivery& a, const Delivery& b) { return a.at < b.at; });

  struct PendingResponse {
    Timestamp32 sent;
    Bytes frame;
  };
  std::vector<PendingResponse> responses;
  for (const Delivery& d : requests) {
    latest = std::max(latest, d.at);
    record({t1, d.at, user_name, server_name, false, frame_type_label(d.frame), d.frame, d.action},
           public_channel, &out.transcript);
    try {
      const wire::Frame frame = wire::decode_frame(d.frame);
      wire::expect_type(frame, wire::MsgType::LoginRequest);
      const LoginRequest req = wire::decode_login_request(frame.body);
      ServerAccept accepted = server_handle_login(srv.trm, srv.secrets.id, srv.secrets.loc, req,
                                                  d.at, policy,
                                                  config_.replay_cache ? &srv.replay_cache : nullptr);
      ++out.server_acceptances;
      responses.push_back({d.at, wire::encode_frame(wire::make_frame(accepted.response))});
      if (!out.server_result) out.server_result = std::move(accepted);
    } catch (const Error& e) {
      rejections.push_back(e);
    }
  }

  bool user_done = false;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const auto& pending = responses[i];
    const AdversaryAction& action = i == 0 ? action_for(script, 1) : action_for({}, 0);
    auto deliveries = interpose(action, wire::MsgType::LoginResponse, pending.frame,
                                plus(pending.sent, config_.latency_s));
    for (const Delivery& d : deliveries) {
      latest = std::max(latest, d.at);
      record({pending.sent, d.at, server_name, user_name, false, frame_type_label(d.frame), d.frame,
              d.action},
             public_channel, &out.transcript);
      if (user_done) continue;  // the user ends the session after the first response
      user_done = true;
      try {
        const wire::Frame frame = wire::decode_frame(d.frame);
        wire::expect_type(frame, wire::MsgType::LoginResponse);
        const LoginResponse resp = wire::decode_login_response(frame.body);
        const SessionKey user_key = user_handle_response(start.context, resp, d.at, window);
        if (i == 0 && out.server_result) {
          out.session_keys = std::make_pair(user_key, out.server_result->key);
          out.accepted = user_key == out.server_result->key;
        }
      } catch (const Error& e) {
        rejections.push_back(e);
      }
    }
  }
  return finish();
}

}  // namespace maskap::sim

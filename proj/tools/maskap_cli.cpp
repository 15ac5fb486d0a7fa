#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "maskap/attacks.hpp"
#include "maskap/metrics.hpp"
#include "maskap/registry.hpp"
#include "maskap/service.hpp"

namespace {

using namespace maskap;
using nlohmann::json;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

struct Options {
  std::string rc_path;
  std::string card_path;
  std::string trm_path;
  std::uint32_t delta_t = kDefaultDeltaT;
  std::uint64_t vt = kDefaultValiditySeconds;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> now;
  bool json = false;

  std::string id;
  std::string pw;
  std::string loc;
  std::string server;
  std::string connect;
  std::string bind = "127.0.0.1:7400";
  std::string role = "server";
  std::string attack = "all";
  std::size_t servers = 1;
  std::size_t runs = 101;
  bool replay_cache = false;
};

Timestamp32 clock_now(const Options& o) { return o.now ? Timestamp32{*o.now} : service::system_now(); }

std::string fingerprint(const Digest256& sk) { return sk.hex().substr(0, 16); }

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorKind::InvalidArgument, std::string("missing ") + flag);
}

void emit(const Options& o, const json& doc, const std::string& text) {
  if (o.json) {
    std::cout << doc.dump(2) << '\n';
  } else {
    std::cout << text << '\n';
  }
}

int cmd_rc_init(const Options& o) {
  require(o.rc_path, "--rc");
  Rng rng = Rng::from_optional_seed(o.seed);
  registry::store_rc(o.rc_path, RcState::create(rng));
  emit(o, {{"rc", o.rc_path}}, "created " + o.rc_path);
  return 0;
}

int cmd_register_server(const Options& o) {
  require(o.rc_path, "--rc");
  require(o.trm_path, "--trm");
  require(o.id, "--id");
  require(o.pw, "--pw");
  require(o.loc, "--loc");
  Rng rng = Rng::from_optional_seed(o.seed);
  RcState rc = registry::load_rc(o.rc_path);
  const ServerRegistration reg = server_register_begin(o.id, o.pw, o.loc, rng);
  const TamperResistantMemory trm = rc_register_server(rc, reg.request, clock_now(o));
  registry::store_trm(o.trm_path, {reg.secrets.id, reg.secrets.loc, trm});
  registry::store_rc(o.rc_path, rc);
  emit(o, {{"server", o.id}, {"trm", o.trm_path}, {"known_users", trm.list_uid.size()}},
       "registered server " + o.id + " (" + std::to_string(trm.list_uid.size()) + " users provisioned)");
  return 0;
}

int cmd_register_user(const Options& o) {
  require(o.rc_path, "--rc");
  require(o.card_path, "--card");
  require(o.id, "--id");
  require(o.pw, "--pw");
  Rng rng = Rng::from_optional_seed(o.seed);
  RcState rc = registry::load_rc(o.rc_path);
  const UserRegistration reg = user_register_begin(o.id, o.pw, rng);
  const CardProvision prov = rc_register_user(rc, reg.request, rng);
  const SmartCard card = user_finalize_card(reg.pending, prov);
  registry::store_card(o.card_path, card);
  registry::store_rc(o.rc_path, rc);
  emit(o, {{"user", o.id}, {"card", o.card_path}, {"servers", card.server_count()}},
       "issued card for " + o.id + " covering " + std::to_string(card.server_count()) + " servers");
  return 0;
}

int cmd_authenticate(const Options& o) {
  require(o.card_path, "--card");
  require(o.id, "--id");
  require(o.pw, "--pw");
  const SmartCard card = registry::load_card(o.card_path);
  const IdField id = IdField::from_string(o.id);
  const PwField pw = PwField::from_string(o.pw);

  std::optional<registry::ServerRecordFile> local;
  if (o.connect.empty()) {
    require(o.trm_path, "--trm or --connect");
    local = registry::load_trm(o.trm_path);
  }
  std::string server_name = o.server;
  if (server_name.empty() && local) server_name = local->id.str();
  require(server_name, "--server");
  const IdField target = IdField::from_string(server_name);

  const LoginStart start = user_login_begin(id, pw, card, target, clock_now(o));
  LoginResponse response;
  std::optional<SessionKey> server_key;
  if (local) {
    if (local->id != target) throw Error(ErrorKind::UnknownServer, "trm file serves " + local->id.str());
    const ServerAccept acc = server_handle_login(local->trm, local->id, local->loc, start.request, clock_now(o),
                                                 ServerPolicy{o.delta_t, o.vt});
    response = acc.response;
    server_key = acc.key;
  } else {
    service::FrameClient client(service::parse_endpoint(o.connect));
    const wire::Frame reply = client.request(wire::make_frame(start.request));
    wire::expect_type(reply, wire::MsgType::LoginResponse);
    response = wire::decode_login_response(reply.body);
  }
  const SessionKey key = user_handle_response(start.context, response, clock_now(o), o.delta_t);
  if (server_key && *server_key != key) throw Error(ErrorKind::AuthFail, "key mismatch");

  json doc = {{"server", server_name},
              {"sk_fingerprint", fingerprint(key.sk)},
              {"vt_expiry", key.vt.expiry},
              {"vt_duration", key.vt.duration_s}};
  emit(o, doc, "session key fingerprint " + fingerprint(key.sk) + " (valid until " +
                   std::to_string(key.vt.expiry) + ")");
  return 0;
}

int cmd_update_card(const Options& o) {
  require(o.card_path, "--card");
  require(o.id, "--id");
  require(o.pw, "--pw");
  const IdField id = IdField::from_string(o.id);
  const PwField pw = PwField::from_string(o.pw);
  const SmartCard card = registry::load_card(o.card_path);
  const UpdateStart start = user_update_begin(id, pw, card, clock_now(o));
  Bytes list;
  if (o.connect.empty()) {
    require(o.rc_path, "--rc or --connect");
    list = rc_handle_update(registry::load_rc(o.rc_path), start.request, clock_now(o), o.delta_t);
  } else {
    service::FrameClient client(service::parse_endpoint(o.connect));
    const wire::Frame reply = client.request(wire::make_frame(start.request));
    wire::expect_type(reply, wire::MsgType::ListPayload);
    list = reply.body;
  }
  const SmartCard updated = user_apply_server_list(id, pw, card, list);
  registry::store_card(o.card_path, updated);
  emit(o, {{"card", o.card_path}, {"servers", updated.server_count()}},
       "card now covers " + std::to_string(updated.server_count()) + " servers");
  return 0;
}

int cmd_sync_server(const Options& o) {
  require(o.trm_path, "--trm");
  require(o.pw, "--pw");
  registry::ServerRecordFile file = registry::load_trm(o.trm_path);
  const ServerSecrets secrets{file.id, PwField::from_string(o.pw), {}, file.trm.p, file.loc};
  const DbUpdateRequest req = server_db_update_begin(secrets, file.trm.ssk, clock_now(o));
  UserListDelta delta;
  if (o.connect.empty()) {
    require(o.rc_path, "--rc or --connect");
    RcState rc = registry::load_rc(o.rc_path);
    delta = rc_handle_db_update(rc, req, clock_now(o), o.delta_t);
    file.trm.merge(delta);
    registry::store_trm(o.trm_path, file);
    registry::store_rc(o.rc_path, rc);
  } else {
    service::FrameClient client(service::parse_endpoint(o.connect));
    const wire::Frame reply = client.request(wire::make_frame(req));
    wire::expect_type(reply, wire::MsgType::UserListDelta);
    delta.entries = decode_user_list(reply.body);
    file.trm.merge(delta);
    registry::store_trm(o.trm_path, file);
  }
  emit(o, {{"server", file.id.str()}, {"added", delta.entries.size()}, {"known_users", file.trm.list_uid.size()}},
       "synced " + file.id.str() + ": " + std::to_string(delta.entries.size()) + " new users");
  return 0;
}

int cmd_attack(const Options& o) {
  const std::uint64_t seed = o.seed.value_or(1);
  std::vector<attacks::AttackReport> reports;
  if (o.attack == "all") {
    for (const auto& entry : attacks::catalog()) reports.push_back(attacks::run_attack(entry.name, seed));
  } else {
    reports.push_back(attacks::run_attack(o.attack, seed));
  }
  bool breached = false;
  json doc = json::array();
  std::string text;
  for (const auto& r : reports) {
    breached = breached || r.acceptances != 0;
    doc.push_back(attacks::to_json(r));
    text += r.attack_name + ": " + std::to_string(r.acceptances) + "/" + std::to_string(r.attempts) +
            " accepted\n";
    for (const auto& note : r.notes) text += "  " + note + "\n";
  }
  if (!text.empty()) text.pop_back();
  emit(o, reports.size() == 1 ? doc[0] : doc, text);
  return breached ? 3 : 0;
}

int cmd_bench(const Options& o) {
  const auto reports = metrics::measure_costs({o.servers, o.runs, o.seed.value_or(1)});
  json doc = json::array();
  std::string text;
  for (const auto& r : reports) {
    doc.push_back(metrics::to_json(r));
    text += r.phase + ": hashes " + std::to_string(r.hash_count) + " (+" + std::to_string(r.keystream_hashes) +
            " keystream), wire " + std::to_string(r.wire_bytes) + " B, storage " +
            std::to_string(r.storage_bytes) + " B, median " + std::to_string(r.wall_time_ms) + " ms";
    if (!r.note.empty()) text += "  [" + r.note + "]";
    text += '\n';
  }
  if (!text.empty()) text.pop_back();
  emit(o, doc, text);
  return 0;
}

int cmd_sizes(const Options& o) {
  const auto rows = metrics::measure_sizes(std::max<std::size_t>(o.servers, 1), o.seed.value_or(1));
  json doc = json::array();
  std::string text;
  for (const auto& row : rows) {
    doc.push_back(metrics::to_json(row));
    text += row.item + ": " + std::to_string(row.bytes) + " B";
    if (!row.note.empty()) text += "  (" + row.note + ")";
    text += '\n';
  }
  if (!text.empty()) text.pop_back();
  emit(o, doc, text);
  return 0;
}

int cmd_serve(const Options& o) {
  service::ClockFn clock = [o] { return clock_now(o); };
  service::FrameHandler handler;
  std::shared_ptr<service::ServerRole> server_role;
  std::shared_ptr<service::RcRole> rc_role;
  if (o.role == "server") {
    require(o.trm_path, "--trm");
    server_role = std::make_shared<service::ServerRole>(registry::load_trm(o.trm_path),
                                                        ServerPolicy{o.delta_t, o.vt}, clock, o.replay_cache);
    handler = [server_role](const wire::Frame& f) { return server_role->handle(f); };
  } else if (o.role == "rc") {
    require(o.rc_path, "--rc");
    const std::string path = o.rc_path;
    rc_role = std::make_shared<service::RcRole>(registry::load_rc(path), o.delta_t, clock,
                                                [path](const RcState& rc) { registry::store_rc(path, rc); });
    handler = [rc_role](const wire::Frame& f) { return rc_role->handle(f); };
  } else {
    throw Error(ErrorKind::InvalidArgument, "--role must be rc or server");
  }

  service::FrameServer server(service::parse_endpoint(o.bind), handler);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const service::Endpoint ep = service::parse_endpoint(o.bind);
  emit(o, {{"role", o.role}, {"host", ep.host}, {"port", server.port()}},
       "serving " + o.role + " on " + ep.host + ":" + std::to_string(server.port()));
  std::cout.flush();
  while (!g_interrupted.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-server smart-card authentication and key agreement toolkit"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--rc", o.rc_path, "RC database (.rcdb.json)");
    sub->add_option("--card", o.card_path, "smart card (.card.json)");
    sub->add_option("--trm", o.trm_path, "server memory (.trm.json)");
    sub->add_option("--delta-t", o.delta_t, "freshness window in seconds");
    sub->add_option("--vt", o.vt, "session-key validity in seconds");
    sub->add_option("--seed", o.seed, "deterministic RNG seed")->envname("MASKAP_SEED");
    sub->add_option("--now", o.now, "override the host clock (epoch seconds)");
    sub->add_flag("--json", o.json, "machine-readable output");
    sub->add_option("--id", o.id, "user or server identity");
    sub->add_option("--pw", o.pw, "password");
  };

  auto* rc_init = app.add_subcommand("rc-init", "create an empty RC database");
  common(rc_init);
  auto* reg_server = app.add_subcommand("register-server", "enroll a server with the RC");
  common(reg_server);
  reg_server->add_option("--loc", o.loc, "server location");
  auto* reg_user = app.add_subcommand("register-user", "enroll a user and issue a card");
  common(reg_user);
  auto* auth = app.add_subcommand("authenticate", "log in to a server and agree on a session key");
  common(auth);
  auth->add_option("--server", o.server, "target server identity");
  auth->add_option("--connect", o.connect, "host:port of a served server role");
  auto* update = app.add_subcommand("update-card", "refresh the card's server list");
  common(update);
  update->add_option("--connect", o.connect, "host:port of a served rc role");
  auto* sync = app.add_subcommand("sync-server", "pull users registered since the last sync");
  common(sync);
  sync->add_option("--connect", o.connect, "host:port of a served rc role");
  auto* attack = app.add_subcommand("attack", "run a scripted attack scenario");
  common(attack);
  attack->add_option("name", o.attack, "scenario name or 'all'");
  auto* bench = app.add_subcommand("bench", "measure hash, wire, storage and time costs");
  common(bench);
  bench->add_option("--servers", o.servers, "registered servers");
  bench->add_option("--runs", o.runs, "timed runs for the median");
  auto* sizes = app.add_subcommand("sizes", "print encoded sizes");
  common(sizes);
  sizes->add_option("--servers", o.servers, "largest server count for card sizes");
  auto* serve = app.add_subcommand("serve", "answer frames over TCP");
  common(serve);
  serve->add_option("--role", o.role, "rc or server")->check(CLI::IsMember({"rc", "server"}));
  serve->add_option("--bind", o.bind, "host:port");
  serve->add_flag("--replay-cache", o.replay_cache, "reject repeated (beta, T1) pairs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (rc_init->parsed()) return cmd_rc_init(o);
    if (reg_server->parsed()) return cmd_register_server(o);
    if (reg_user->parsed()) return cmd_register_user(o);
    if (auth->parsed()) return cmd_authenticate(o);
    if (update->parsed()) return cmd_update_card(o);
    if (sync->parsed()) return cmd_sync_server(o);
    if (attack->parsed()) return cmd_attack(o);
    if (bench->parsed()) return cmd_bench(o);
    if (sizes->parsed()) return cmd_sizes(o);
    if (serve->parsed()) return cmd_serve(o);
  } catch (const Error& e) {
    if (o.json) {
      std::cout << json{{"error", std::string(to_string(e.kind()))}, {"message", e.what()}}.dump() << '\n';
    }
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: InvalidArgument: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

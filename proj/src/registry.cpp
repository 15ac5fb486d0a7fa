#include "maskap/registry.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace maskap::registry {

namespace {

using nlohmann::json;

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorKind::CorruptRecord, what); }

const json& field(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) corrupt(std::string("missing field '") + key + "'");
  return doc.at(key);
}

template <class BlobT>
BlobT hex_field(const json& doc, const char* key) {
  const json& v = field(doc, key);
  if (!v.is_string()) corrupt(std::string("field '") + key + "' must be a hex string");
  try {
    return BlobT::from_hex(v.get<std::string>());
  } catch (const Error& e) {
    corrupt(std::string("field '") + key + "': " + e.what());
  }
}

Bytes hex_bytes(const json& doc, const char* key) {
  const json& v = field(doc, key);
  if (!v.is_string()) corrupt(std::string("field '") + key + "' must be a hex string");
  return from_hex(v.get<std::string>());
}

const json& array_field(const json& doc, const char* key) {
  const json& v = field(doc, key);
  if (!v.is_array()) corrupt(std::string("field '") + key + "' must be an array");
  return v;
}

void check_header(const json& doc, std::string_view kind) {
  const json& version = field(doc, "version");
  if (!version.is_number_integer() || version.get<int>() != kFormatVersion) {
    corrupt("unsupported version " + version.dump() + " (expected " +
            std::to_string(kFormatVersion) + ")");
  }
  const json& k = field(doc, "kind");
  if (!k.is_string() || k.get<std::string>() != kind) {
    corrupt("expected a '" + std::string(kind) + "' record");
  }
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    corrupt(path.string() + ": " + e.what());
  }
}

}  // namespace

void write_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error(ErrorKind::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::IoError, "rename to " + path.string() + ": " + ec.message());
}

// --- RC database -------------------------------------------------------------

json rc_to_json(const RcState& rc) {
  json servers = json::array();
  for (const auto& s : rc.servers) {
    servers.push_back({{"id", s.id.hex()},
                       {"ssk", s.ssk.hex()},
                       {"q", s.q.hex()},
                       {"loc", s.loc.hex()},
                       {"srt", s.srt.seconds}});
  }
  json users = json::array();
  for (const auto& u : rc.users) users.push_back({{"uid", u.uid.hex()}, {"c", u.c.hex()}});
  json markers = json::object();
  for (const auto& [id, marker] : rc.sync_markers) markers[id.hex()] = marker;
  return {{"version", kFormatVersion}, {"kind", "rcdb"},        {"k_rc", rc.k_rc.hex()},
          {"servers", servers},        {"users", users},        {"sync_markers", markers}};
}

RcState rc_from_json(const json& doc) {
  check_header(doc, "rcdb");
  RcState rc;
  rc.k_rc = hex_field<Key256>(doc, "k_rc");
  for (const auto& s : array_field(doc, "servers")) {
    const json& srt = field(s, "srt");
    if (!srt.is_number_unsigned() || srt.get<std::uint64_t>() > UINT32_MAX) corrupt("bad srt");
    ServerRecord rec{hex_field<IdField>(s, "id"), hex_field<Digest256>(s, "ssk"),
                     hex_field<Digest256>(s, "q"), hex_field<LocField>(s, "loc"),
                     Timestamp32{srt.get<std::uint32_t>()}};
    if (rc.find_server(rec.id) != nullptr) corrupt("duplicate server id " + rec.id.hex());
    rc.servers.push_back(rec);
  }
  std::set<Digest256> seen;
  for (const auto& u : array_field(doc, "users")) {
    UserListEntry e{hex_field<Digest256>(u, "uid"), hex_field<Digest256>(u, "c")};
    if (!seen.insert(e.uid).second) corrupt("duplicate uid " + e.uid.hex());
    rc.users.push_back(e);
  }
  const json& markers = field(doc, "sync_markers");
  if (!markers.is_object()) corrupt("sync_markers must be an object");
  for (const auto& [key, value] : markers.items()) {
    IdField id;
    try {
      id = IdField::from_hex(key);
    } catch (const Error&) {
      corrupt("bad sync marker key " + key);
    }
    if (rc.find_server(id) == nullptr) corrupt("sync marker for unknown server " + key);
    if (!value.is_number_unsigned() || value.get<std::uint64_t>() > rc.users.size()) {
      corrupt("sync marker out of range for " + key);
    }
    rc.sync_markers[id] = value.get<std::uint64_t>();
  }
  if (rc.sync_markers.size() != rc.servers.size()) corrupt("every server needs a sync marker");
  return rc;
}

// --- smart card --------------------------------------------------------------

json card_to_json(const SmartCard& card) {
  return {{"version", kFormatVersion}, {"kind", "card"},   {"w", card.w.hex()},
          {"x", card.x.hex()},         {"y", card.y.hex()}, {"z", to_hex(card.z)},
          {"e", card.e.hex()}};
}

SmartCard card_from_json(const json& doc) {
  check_header(doc, "card");
  SmartCard card;
  card.w = hex_field<Digest256>(doc, "w");
  card.x = hex_field<Digest256>(doc, "x");
  card.y = hex_field<Digest256>(doc, "y");
  card.z = hex_bytes(doc, "z");
  card.e = hex_field<Digest256>(doc, "e");
  card.validate();
  return card;
}

// --- tamper-resistant memory ---------------------------------------------------

json trm_to_json(const ServerRecordFile& rec) {
  json uids = json::array();
  for (const auto& uid : rec.trm.list_uid) uids.push_back(uid.hex());
  json cs = json::array();
  for (const auto& [uid, c] : rec.trm.list_c) cs.push_back({{"uid", uid.hex()}, {"c", c.hex()}});
  return {{"version", kFormatVersion}, {"kind", "trm"},         {"id", rec.id.hex()},
          {"loc", rec.loc.hex()},      {"ssk", rec.trm.ssk.hex()}, {"p", rec.trm.p.hex()},
          {"list_uid", uids},          {"list_c", cs}};
}

ServerRecordFile trm_from_json(const json& doc) {
  check_header(doc, "trm");
  ServerRecordFile rec;
  rec.id = hex_field<IdField>(doc, "id");
  rec.loc = hex_field<LocField>(doc, "loc");
  rec.trm.ssk = hex_field<Digest256>(doc, "ssk");
  rec.trm.p = hex_field<Digest256>(doc, "p");
  for (const auto& v : array_field(doc, "list_uid")) {
    if (!v.is_string()) corrupt("list_uid entries must be hex strings");
    Digest256 uid;
    try {
      uid = Digest256::from_hex(v.get<std::string>());
    } catch (const Error& e) {
      corrupt(std::string("list_uid: ") + e.what());
    }
    if (!rec.trm.list_uid.insert(uid).second) corrupt("duplicate uid in list_uid");
  }
  for (const auto& e : array_field(doc, "list_c")) {
    const auto uid = hex_field<Digest256>(e, "uid");
    if (!rec.trm.list_c.emplace(uid, hex_field<Digest256>(e, "c")).second) {
      corrupt("duplicate uid in list_c");
    }
  }
  if (!rec.trm.consistent()) corrupt("list_uid and list_c disagree");
  return rec;
}

// --- files -------------------------------------------------------------------

void store_rc(const std::filesystem::path& path, const RcState& rc) {
  write_atomic(path, rc_to_json(rc).dump(2) + "\n");
}
RcState load_rc(const std::filesystem::path& path) { return rc_from_json(read_json(path)); }

void store_card(const std::filesystem::path& path, const SmartCard& card) {
  write_atomic(path, card_to_json(card).dump(2) + "\n");
}
SmartCard load_card(const std::filesystem::path& path) { return card_from_json(read_json(path)); }

void store_trm(const std::filesystem::path& path, const ServerRecordFile& trm) {
  write_atomic(path, trm_to_json(trm).dump(2) + "\n");
}
ServerRecordFile load_trm(const std::filesystem::path& path) {
  return trm_from_json(read_json(path));
}

}  // namespace maskap::registry

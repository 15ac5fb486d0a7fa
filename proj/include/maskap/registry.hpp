#pragma once

// File-backed records: the RC database (.rcdb.json), a user's smart card
// (.card.json) and a server's tamper-resistant memory (.trm.json). All byte
// fields are lowercase hex. Loads validate widths and cross-record
// invariants; stores go through a temp file and an atomic rename.

#include <filesystem>

#include <json.hpp>

#include "maskap/protocol.hpp"

namespace maskap::registry {

constexpr int kFormatVersion = 1;

/// A server's provisioned memory together with the identity it serves under.
struct ServerRecordFile {
  IdField id;
  LocField loc;
  TamperResistantMemory trm;

  friend bool operator==(const ServerRecordFile&, const ServerRecordFile&) = default;
};

nlohmann::json rc_to_json(const RcState& rc);
RcState rc_from_json(const nlohmann::json& doc);
nlohmann::json card_to_json(const SmartCard& card);
SmartCard card_from_json(const nlohmann::json& doc);
nlohmann::json trm_to_json(const ServerRecordFile& trm);
ServerRecordFile trm_from_json(const nlohmann::json& doc);

void store_rc(const std::filesystem::path& path, const RcState& rc);
RcState load_rc(const std::filesystem::path& path);
void store_card(const std::filesystem::path& path, const SmartCard& card);
SmartCard load_card(const std::filesystem::path& path);
void store_trm(const std::filesystem::path& path, const ServerRecordFile& trm);
ServerRecordFile load_trm(const std::filesystem::path& path);

/// Writes `text` to `path` via a sibling temp file and rename(2).
void write_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace maskap::registry

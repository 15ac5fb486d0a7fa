#pragma once

// One scripted adversary per analysed attack. Each scenario hands the
// adversary exactly the knowledge its threat model grants (public
// transcripts, a stolen card, an insider's own credentials) and counts how
// often the strongest strategy we can express gets a forged value accepted.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "maskap/netsim.hpp"

namespace maskap::attacks {

struct AttackReport {
  std::string attack_name;
  std::uint64_t attempts = 0;
  std::uint64_t acceptances = 0;
  std::vector<std::string> notes;
  std::map<std::string, double> metrics;
};

nlohmann::json to_json(const AttackReport& report);

inline constexpr std::string_view kVictim = "alice";
inline constexpr std::string_view kBystander = "bob";
inline constexpr std::string_view kInsider = "mallory";
inline constexpr std::string_view kServer = "hosp01";
inline constexpr std::string_view kOtherServer = "hosp02";

/// Two servers, three users (victim, bystander, insider), all synced.
sim::World make_attack_world(std::uint64_t seed);

AttackReport attack_user_impersonation(sim::World& world);
AttackReport attack_server_impersonation(sim::World& world);
AttackReport attack_session_key_disclosure(sim::World& world);
AttackReport attack_stolen_smart_card(sim::World& world);
AttackReport attack_modification(sim::World& world);
AttackReport attack_password_guessing(sim::World& world);
AttackReport attack_mitm(sim::World& world);
AttackReport attack_replay(sim::World& world);
AttackReport attack_insider(sim::World& world);
AttackReport attack_dos(sim::World& world);
AttackReport check_forward_secrecy(sim::World& world);

struct TamperResult {
  std::uint64_t bits = 0;
  std::uint64_t rejected = 0;
  std::map<std::string, std::uint64_t> by_error;
};

/// Flip every bit of one captured request/response pair, one at a time, and
/// hand each variant to its verifier at the original receive time.
TamperResult tamper_exhaustion(sim::World& world);

struct ReplayResult {
  std::uint64_t trials = 0;
  std::uint64_t stale_rejected = 0;
  std::uint64_t rewrite_rejected = 0;
  std::uint64_t rewrite_beta_mismatch = 0;  // insider re-masked alpha; caught by beta
  std::uint64_t outsider_rewrite_rejected = 0;
};

ReplayResult replay_trials(sim::World& world, std::uint64_t trials);

/// Upper binomial tail P[X >= k] for X ~ Bin(n, p).
double binomial_upper_tail(std::uint64_t n, std::uint64_t k, double p);

struct AttackEntry {
  std::string_view name;
  std::function<AttackReport(sim::World&)> run;
};

const std::vector<AttackEntry>& catalog();
/// Builds a fresh attack world for `seed` and runs the named scenario;
/// InvalidArgument for unknown names.
AttackReport run_attack(std::string_view name, std::uint64_t seed);

}  // namespace maskap::attacks

// Scenario files: declaration of the processes, identities, corruption
// options and resolver of one web system, and the wiring into a System.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dyweb/monitors.h"
#include "dyweb/playbook.h"
#include "dyweb/runtime.h"

namespace dyweb {

struct ServerSpec {
  std::string name;
  std::vector<std::string> domains;
  bool operator==(const ServerSpec&) const = default;
};

struct BrowserSpec {
  std::string name;
  std::vector<std::string> open;  // domains the user may navigate to
  std::vector<std::string> paths = {"/"};
  bool operator==(const BrowserSpec&) const = default;
};

// Canned response of an attacker; host, headers and body are term texts.
struct RuleSpec {
  std::string name;
  std::string host;
  std::string method;
  std::string path;
  std::string status = "200";
  std::string headers = "<>";
  std::string body;
  bool operator==(const RuleSpec&) const = default;
};

struct AttackerSpec {
  std::string name;
  std::string kind = "network";  // network | web
  std::vector<std::string> domains;
  std::vector<RuleSpec> rules;
  std::vector<std::string> knowledge;  // extra initial knowledge, term texts
  bool operator==(const AttackerSpec&) const = default;
};

struct IdentitySpec {
  std::string name;
  std::string domain;
  std::string secret;
  std::string owner;
  bool operator==(const IdentitySpec&) const = default;
};

// Corruption the attacker may trigger: FULLCORRUPT or CLOSECORRUPT for a
// browser, CORRUPT for an RP or IdP.
struct CorruptionSpec {
  std::string target;
  std::string kind;
  bool operator==(const CorruptionSpec&) const = default;
};

// Initial sessions: a logged-in LPO session, an IdP session, or a
// remembered email for an RP (LPO localStorage siteInfo).
struct SessionPreset {
  std::string browser;
  std::vector<std::string> identities;  // name@domain
  bool operator==(const SessionPreset&) const = default;
};
struct IdpSessionPreset {
  std::string browser;
  std::string idp;
  std::vector<std::string> identities;
  bool operator==(const IdpSessionPreset&) const = default;
};
struct SiteInfoPreset {
  std::string browser;
  std::string rp;  // RP domain
  std::string identity;
  bool operator==(const SiteInfoPreset&) const = default;
};
struct Presets {
  std::vector<SessionPreset> lpo_sessions;
  std::vector<IdpSessionPreset> idp_sessions;
  std::vector<SiteInfoPreset> site_info;
  bool operator==(const Presets&) const = default;
};

struct ResolverSpec {
  std::string mode = "random";  // random | playbook | guided
  std::uint64_t seed = 1;
  std::vector<std::string> playbook;
  std::vector<std::string> free;  // label prefixes left open in guided runs and exploration
  std::size_t depth = 0;          // exploration depth, 0 = the step budget
  bool operator==(const ResolverSpec&) const = default;
};

struct PrivacySpec {
  std::string observer;
  std::string channel = "all";
  std::string peer;  // scenario file compared against, relative to this one
  bool distinguishable = true;
  bool operator==(const PrivacySpec&) const = default;
};

struct Scenario {
  std::string name;
  bool fix = true;
  std::string dns = "attacker";  // attacker | honest
  ServerSpec lpo{"lpo", {"login.persona.org"}};
  std::vector<ServerSpec> rps;
  std::vector<ServerSpec> idps;
  std::vector<BrowserSpec> browsers;
  std::vector<AttackerSpec> attackers;
  std::vector<IdentitySpec> identities;
  std::vector<CorruptionSpec> corruption;
  Presets initial;
  ResolverSpec resolver;
  std::size_t steps = 200;
  std::vector<std::string> monitors;         // property ids, empty = all
  std::map<std::string, std::string> expect;  // property id -> HOLDS | VIOLATED | EXEMPT
  std::optional<PrivacySpec> privacy;
  bool operator==(const Scenario&) const = default;
};

struct ScenarioError : std::runtime_error {
  enum class Kind { Syntax, UnknownProcess, DuplicateDomain, IdentityWithoutOwner, Invalid };
  ScenarioError(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}
  Kind kind;
};

Scenario load_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);
std::string serialize_scenario(const Scenario& s);
// Hex SHA-256 of the canonical serialization.
std::string scenario_hash(const Scenario& s);

// A wired system with the facts the monitors need.
struct Built {
  std::shared_ptr<System> sys;
  Roster roster;
  std::vector<Directive> playbook;
  Scenario scenario;
  std::string hash;
};

Built build_system(const Scenario& s);

// Naming of the generated keys.
Term ssl_key(const std::string& domain);
Term sign_key(const std::string& process);

}  // namespace dyweb

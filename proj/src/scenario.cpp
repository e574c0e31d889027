#include "dyweb/scenario.h"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "dyweb/attacker.h"
#include "dyweb/browser.h"
#include "dyweb/browserid.h"
#include "dyweb/webdata.h"

namespace dyweb {
namespace {

using K = ScenarioError::Kind;

[[noreturn]] void fail(K k, const std::string& msg) { throw ScenarioError(k, msg); }

void check_keys(const YAML::Node& n, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!n.IsMap()) fail(K::Syntax, where + ": expected a mapping");
  for (const auto& kv : n) {
    const std::string key = kv.first.as<std::string>();
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(K::Syntax, where + ": unknown key '" + key + "'");
  }
}

std::string str(const YAML::Node& n, const char* key, const std::string& dflt = "") {
  const YAML::Node v = n[key];
  if (!v) return dflt;
  if (!v.IsScalar()) fail(K::Syntax, std::string("'") + key + "' must be a scalar");
  return v.as<std::string>();
}

std::vector<std::string> strs(const YAML::Node& n, const char* key, std::vector<std::string> dflt = {}) {
  const YAML::Node v = n[key];
  if (!v) return dflt;
  if (v.IsScalar()) return {v.as<std::string>()};
  if (!v.IsSequence()) fail(K::Syntax, std::string("'") + key + "' must be a list");
  std::vector<std::string> out;
  for (const auto& x : v) out.push_back(x.as<std::string>());
  return out;
}

bool boolean(const YAML::Node& n, const char* key, bool dflt) {
  const YAML::Node v = n[key];
  if (!v) return dflt;
  try {
    return v.as<bool>();
  } catch (const YAML::Exception&) {
    fail(K::Syntax, std::string("'") + key + "' must be a boolean");
  }
}

std::uint64_t number(const YAML::Node& n, const char* key, std::uint64_t dflt) {
  const YAML::Node v = n[key];
  if (!v) return dflt;
  try {
    return v.as<std::uint64_t>();
  } catch (const YAML::Exception&) {
    fail(K::Syntax, std::string("'") + key + "' must be a non-negative integer");
  }
}

template <class F>
void each(const YAML::Node& n, const char* key, F f) {
  const YAML::Node v = n[key];
  if (!v) return;
  if (!v.IsSequence()) fail(K::Syntax, std::string("'") + key + "' must be a list");
  for (const auto& x : v) f(x);
}

ServerSpec server(const YAML::Node& n, const std::string& where) {
  check_keys(n, where, {"name", "domain", "domains"});
  ServerSpec s;
  s.name = str(n, "name");
  s.domains = strs(n, "domains");
  if (n["domain"]) s.domains.insert(s.domains.begin(), str(n, "domain"));
  if (s.name.empty()) fail(K::Syntax, where + ": missing name");
  return s;
}

Scenario parse(const YAML::Node& root) {
  check_keys(root, "scenario", {"name", "fix", "dns", "lpo", "rps", "idps", "browsers", "attackers", "identities",
                                "corruption", "initial", "resolver", "steps", "monitors", "expect", "privacy"});
  Scenario s;
  s.name = str(root, "name", "unnamed");
  s.fix = boolean(root, "fix", true);
  s.dns = str(root, "dns", "attacker");
  if (root["lpo"]) s.lpo = server(root["lpo"], "lpo");
  each(root, "rps", [&](const YAML::Node& n) { s.rps.push_back(server(n, "rps")); });
  each(root, "idps", [&](const YAML::Node& n) { s.idps.push_back(server(n, "idps")); });
  each(root, "browsers", [&](const YAML::Node& n) {
    check_keys(n, "browsers", {"name", "open", "paths"});
    BrowserSpec b;
    b.name = str(n, "name");
    b.open = strs(n, "open");
    b.paths = strs(n, "paths", {"/"});
    s.browsers.push_back(b);
  });
  each(root, "attackers", [&](const YAML::Node& n) {
    check_keys(n, "attackers", {"name", "kind", "domains", "rules", "knowledge"});
    AttackerSpec a;
    a.name = str(n, "name");
    a.kind = str(n, "kind", "network");
    a.domains = strs(n, "domains");
    a.knowledge = strs(n, "knowledge");
    each(n, "rules", [&](const YAML::Node& r) {
      check_keys(r, "rules", {"name", "host", "method", "path", "status", "headers", "body"});
      RuleSpec rs;
      rs.name = str(r, "name");
      rs.host = str(r, "host");
      rs.method = str(r, "method");
      rs.path = str(r, "path");
      rs.status = str(r, "status", "200");
      rs.headers = str(r, "headers", "<>");
      rs.body = str(r, "body");
      a.rules.push_back(rs);
    });
    s.attackers.push_back(a);
  });
  each(root, "identities", [&](const YAML::Node& n) {
    check_keys(n, "identities", {"name", "domain", "secret", "owner"});
    s.identities.push_back({str(n, "name"), str(n, "domain"), str(n, "secret"), str(n, "owner")});
  });
  each(root, "corruption", [&](const YAML::Node& n) {
    check_keys(n, "corruption", {"target", "kind"});
    s.corruption.push_back({str(n, "target"), str(n, "kind")});
  });
  if (const YAML::Node in = root["initial"]) {
    check_keys(in, "initial", {"lpo_sessions", "idp_sessions", "site_info"});
    each(in, "lpo_sessions", [&](const YAML::Node& n) {
      check_keys(n, "lpo_sessions", {"browser", "identities"});
      s.initial.lpo_sessions.push_back({str(n, "browser"), strs(n, "identities")});
    });
    each(in, "idp_sessions", [&](const YAML::Node& n) {
      check_keys(n, "idp_sessions", {"browser", "idp", "identities"});
      s.initial.idp_sessions.push_back({str(n, "browser"), str(n, "idp"), strs(n, "identities")});
    });
    each(in, "site_info", [&](const YAML::Node& n) {
      check_keys(n, "site_info", {"browser", "rp", "identity"});
      s.initial.site_info.push_back({str(n, "browser"), str(n, "rp"), str(n, "identity")});
    });
  }
  if (const YAML::Node r = root["resolver"]) {
    check_keys(r, "resolver", {"mode", "seed", "playbook", "free", "depth"});
    s.resolver.mode = str(r, "mode", "random");
    s.resolver.seed = number(r, "seed", 1);
    s.resolver.playbook = strs(r, "playbook");
    s.resolver.free = strs(r, "free");
    s.resolver.depth = number(r, "depth", 0);
  }
  s.steps = number(root, "steps", 200);
  s.monitors = strs(root, "monitors");
  if (const YAML::Node e = root["expect"]) {
    if (!e.IsMap()) fail(K::Syntax, "expect: expected a mapping");
    for (const auto& kv : e) s.expect[kv.first.as<std::string>()] = kv.second.as<std::string>();
  }
  if (const YAML::Node p = root["privacy"]) {
    check_keys(p, "privacy", {"observer", "channel", "peer", "distinguishable"});
    s.privacy = PrivacySpec{str(p, "observer"), str(p, "channel", "all"), str(p, "peer"),
                            boolean(p, "distinguishable", true)};
  }
  return s;
}

void validate(const Scenario& s) {
  if (s.dns != "attacker" && s.dns != "honest") fail(K::Invalid, "dns must be 'attacker' or 'honest'");
  if (s.dns == "attacker" && s.attackers.empty()) fail(K::Invalid, "dns: attacker requires an attacker process");
  if (s.lpo.domains.size() != 1) fail(K::Invalid, "lpo needs exactly one domain");

  std::map<std::string, std::string> role;  // process name -> role
  auto add_proc = [&](const std::string& name, const std::string& r) {
    if (name.empty()) fail(K::Syntax, r + " without a name");
    if (name == "dns") fail(K::Invalid, "process name 'dns' is reserved");
    if (!role.emplace(name, r).second) fail(K::Invalid, "duplicate process name: " + name);
  };
  add_proc(s.lpo.name, "lpo");
  for (const auto& x : s.rps) add_proc(x.name, "rp");
  for (const auto& x : s.idps) add_proc(x.name, "idp");
  for (const auto& x : s.browsers) add_proc(x.name, "browser");
  for (const auto& x : s.attackers) add_proc(x.name, "attacker");

  std::map<std::string, std::string> dom_owner;
  auto add_domains = [&](const std::string& owner, const std::vector<std::string>& ds) {
    for (const std::string& d : ds) {
      if (!dom_owner.emplace(d, owner).second)
        fail(K::DuplicateDomain, "domain " + d + " bound to both " + dom_owner[d] + " and " + owner);
    }
  };
  add_domains(s.lpo.name, s.lpo.domains);
  for (const auto& x : s.rps) {
    if (x.domains.size() != 1) fail(K::Invalid, "rp " + x.name + " needs exactly one domain");
    add_domains(x.name, x.domains);
  }
  for (const auto& x : s.idps) {
    if (x.domains.empty()) fail(K::Invalid, "idp " + x.name + " needs a domain");
    add_domains(x.name, x.domains);
  }
  for (const auto& x : s.attackers) {
    if (x.kind != "network" && x.kind != "web") fail(K::Invalid, "attacker kind must be network or web");
    add_domains(x.name, x.domains);
    for (const auto& r : x.rules) {
      if (std::find(x.domains.begin(), x.domains.end(), r.host) == x.domains.end())
        fail(K::Invalid, "rule " + r.name + " serves a domain attacker " + x.name + " does not hold");
    }
  }
  for (const auto& b : s.browsers)
    for (const std::string& d : b.open)
      if (!dom_owner.count(d)) fail(K::Invalid, "browser " + b.name + " opens undeclared domain " + d);

  auto need = [&](const std::string& name, const std::string& r, const std::string& where) {
    auto it = role.find(name);
    if (it == role.end()) fail(K::UnknownProcess, where + ": unknown process '" + name + "'");
    if (!r.empty() && it->second != r) fail(K::Invalid, where + ": " + name + " is not a " + r);
  };
  std::set<std::string> ids;
  for (const auto& i : s.identities) {
    if (i.owner.empty()) fail(K::IdentityWithoutOwner, "identity " + i.name + "@" + i.domain + " has no owner");
    need(i.owner, "browser", "identity " + i.name + "@" + i.domain);
    auto d = dom_owner.find(i.domain);
    if (d == dom_owner.end() || (role[d->second] != "idp" && role[d->second] != "attacker"))
      fail(K::Invalid, "identity domain " + i.domain + " is not held by an IdP or attacker");
    if (!ids.insert(i.name + "@" + i.domain).second) fail(K::Invalid, "duplicate identity " + i.name + "@" + i.domain);
  }
  for (const auto& c : s.corruption) {
    need(c.target, "", "corruption");
    const std::string& r = role[c.target];
    const bool ok = (r == "browser" && (c.kind == "FULLCORRUPT" || c.kind == "CLOSECORRUPT")) ||
                    ((r == "rp" || r == "idp") && c.kind == "CORRUPT");
    if (!ok) fail(K::Invalid, "corruption " + c.kind + " not applicable to " + c.target);
  }
  if (!s.corruption.empty() && s.attackers.empty()) fail(K::Invalid, "corruption needs an attacker");
  auto need_ids = [&](const std::vector<std::string>& labels, const std::string& where) {
    for (const std::string& l : labels)
      if (!ids.count(l)) fail(K::Invalid, where + ": undeclared identity " + l);
  };
  for (const auto& p : s.initial.lpo_sessions) {
    need(p.browser, "browser", "lpo_sessions");
    need_ids(p.identities, "lpo_sessions");
  }
  for (const auto& p : s.initial.idp_sessions) {
    need(p.browser, "browser", "idp_sessions");
    need_ids(p.identities, "idp_sessions");
    if (!dom_owner.count(p.idp)) fail(K::Invalid, "idp_sessions: undeclared domain " + p.idp);
  }
  for (const auto& p : s.initial.site_info) {
    need(p.browser, "browser", "site_info");
    need_ids({p.identity}, "site_info");
    if (!dom_owner.count(p.rp)) fail(K::Invalid, "site_info: undeclared domain " + p.rp);
  }
  const std::string& m = s.resolver.mode;
  if (m != "random" && m != "playbook" && m != "guided") fail(K::Invalid, "resolver mode must be random, playbook or guided");
  try {
    for (const Directive& d : parse_playbook(s.resolver.playbook))
      if (!d.proc.empty() && !role.count(d.proc) && !(d.proc == "dns" && s.dns == "honest"))
        fail(K::UnknownProcess, "playbook: unknown process '" + d.proc + "'");
  } catch (const PlaybookError& e) {
    fail(K::Syntax, std::string("playbook: ") + e.what());
  }
  for (const std::string& id : s.monitors)
    if (!is_property_id(id)) fail(K::Invalid, "unknown property " + id);
  for (const auto& [id, v] : s.expect) {
    if (!is_property_id(id)) fail(K::Invalid, "expect: unknown property " + id);
    if (v != "HOLDS" && v != "VIOLATED" && v != "EXEMPT") fail(K::Invalid, "expect: bad verdict " + v);
  }
  if (s.privacy) {
    need(s.privacy->observer, "attacker", "privacy");
    if (!channel_from_name(s.privacy->channel)) fail(K::Invalid, "privacy: unknown channel " + s.privacy->channel);
  }
}

void emit_strs(YAML::Emitter& y, const char* key, const std::vector<std::string>& v) {
  y << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& x : v) y << x;
  y << YAML::EndSeq;
}

void emit_server(YAML::Emitter& y, const ServerSpec& s) {
  y << YAML::BeginMap << YAML::Key << "name" << YAML::Value << s.name;
  emit_strs(y, "domains", s.domains);
  y << YAML::EndMap;
}

}  // namespace

Term ssl_key(const std::string& domain) { return Term::nonce("ssl_" + domain, 0); }
Term sign_key(const std::string& process) { return Term::nonce("sign_" + process, 0); }

Scenario load_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    fail(K::Syntax, std::string("malformed scenario: ") + e.what());
  }
  Scenario s;
  try {
    s = parse(root);
  } catch (const YAML::Exception& e) {
    fail(K::Syntax, std::string("malformed scenario: ") + e.what());
  }
  validate(s);
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(K::Syntax, "cannot read scenario " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

std::string serialize_scenario(const Scenario& s) {
  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "name" << YAML::Value << s.name;
  y << YAML::Key << "fix" << YAML::Value << s.fix;
  y << YAML::Key << "dns" << YAML::Value << s.dns;
  y << YAML::Key << "lpo" << YAML::Value;
  emit_server(y, s.lpo);
  y << YAML::Key << "rps" << YAML::Value << YAML::BeginSeq;
  for (const auto& x : s.rps) emit_server(y, x);
  y << YAML::EndSeq;
  y << YAML::Key << "idps" << YAML::Value << YAML::BeginSeq;
  for (const auto& x : s.idps) emit_server(y, x);
  y << YAML::EndSeq;
  y << YAML::Key << "browsers" << YAML::Value << YAML::BeginSeq;
  for (const auto& b : s.browsers) {
    y << YAML::BeginMap << YAML::Key << "name" << YAML::Value << b.name;
    emit_strs(y, "open", b.open);
    emit_strs(y, "paths", b.paths);
    y << YAML::EndMap;
  }
  y << YAML::EndSeq;
  y << YAML::Key << "attackers" << YAML::Value << YAML::BeginSeq;
  for (const auto& a : s.attackers) {
    y << YAML::BeginMap << YAML::Key << "name" << YAML::Value << a.name;
    y << YAML::Key << "kind" << YAML::Value << a.kind;
    emit_strs(y, "domains", a.domains);
    emit_strs(y, "knowledge", a.knowledge);
    y << YAML::Key << "rules" << YAML::Value << YAML::BeginSeq;
    for (const auto& r : a.rules) {
      y << YAML::BeginMap;
      y << YAML::Key << "name" << YAML::Value << r.name;
      y << YAML::Key << "host" << YAML::Value << r.host;
      y << YAML::Key << "method" << YAML::Value << r.method;
      y << YAML::Key << "path" << YAML::Value << r.path;
      y << YAML::Key << "status" << YAML::Value << r.status;
      y << YAML::Key << "headers" << YAML::Value << r.headers;
      y << YAML::Key << "body" << YAML::Value << r.body;
      y << YAML::EndMap;
    }
    y << YAML::EndSeq << YAML::EndMap;
  }
  y << YAML::EndSeq;
  y << YAML::Key << "identities" << YAML::Value << YAML::BeginSeq;
  for (const auto& i : s.identities) {
    y << YAML::Flow << YAML::BeginMap << YAML::Key << "name" << YAML::Value << i.name << YAML::Key << "domain"
      << YAML::Value << i.domain << YAML::Key << "secret" << YAML::Value << i.secret << YAML::Key << "owner"
      << YAML::Value << i.owner << YAML::EndMap;
  }
  y << YAML::EndSeq;
  y << YAML::Key << "corruption" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : s.corruption)
    y << YAML::Flow << YAML::BeginMap << YAML::Key << "target" << YAML::Value << c.target << YAML::Key << "kind"
      << YAML::Value << c.kind << YAML::EndMap;
  y << YAML::EndSeq;
  y << YAML::Key << "initial" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "lpo_sessions" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : s.initial.lpo_sessions) {
    y << YAML::BeginMap << YAML::Key << "browser" << YAML::Value << p.browser;
    emit_strs(y, "identities", p.identities);
    y << YAML::EndMap;
  }
  y << YAML::EndSeq;
  y << YAML::Key << "idp_sessions" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : s.initial.idp_sessions) {
    y << YAML::BeginMap << YAML::Key << "browser" << YAML::Value << p.browser << YAML::Key << "idp" << YAML::Value
      << p.idp;
    emit_strs(y, "identities", p.identities);
    y << YAML::EndMap;
  }
  y << YAML::EndSeq;
  y << YAML::Key << "site_info" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : s.initial.site_info)
    y << YAML::Flow << YAML::BeginMap << YAML::Key << "browser" << YAML::Value << p.browser << YAML::Key << "rp"
      << YAML::Value << p.rp << YAML::Key << "identity" << YAML::Value << p.identity << YAML::EndMap;
  y << YAML::EndSeq;
  y << YAML::EndMap;
  y << YAML::Key << "resolver" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "mode" << YAML::Value << s.resolver.mode;
  y << YAML::Key << "seed" << YAML::Value << s.resolver.seed;
  y << YAML::Key << "depth" << YAML::Value << s.resolver.depth;
  emit_strs(y, "free", s.resolver.free);
  y << YAML::Key << "playbook" << YAML::Value << YAML::BeginSeq;
  for (const auto& l : s.resolver.playbook) y << YAML::DoubleQuoted << l;
  y << YAML::EndSeq << YAML::EndMap;
  y << YAML::Key << "steps" << YAML::Value << s.steps;
  emit_strs(y, "monitors", s.monitors);
  y << YAML::Key << "expect" << YAML::Value << YAML::BeginMap;
  for (const auto& [k, v] : s.expect) y << YAML::Key << k << YAML::Value << v;
  y << YAML::EndMap;
  if (s.privacy) {
    y << YAML::Key << "privacy" << YAML::Value << YAML::BeginMap;
    y << YAML::Key << "observer" << YAML::Value << s.privacy->observer;
    y << YAML::Key << "channel" << YAML::Value << s.privacy->channel;
    y << YAML::Key << "peer" << YAML::Value << s.privacy->peer;
    y << YAML::Key << "distinguishable" << YAML::Value << s.privacy->distinguishable;
    y << YAML::EndMap;
  }
  y << YAML::EndMap;
  return std::string(y.c_str()) + "\n";
}

std::string scenario_hash(const Scenario& s) {
  const std::string text = serialize_scenario(s);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

Built build_system(const Scenario& s) {
  validate(s);
  Built out;
  out.scenario = s;
  out.hash = scenario_hash(s);
  auto sys = std::make_shared<System>();

  // Process indices follow the declaration order below.
  std::map<std::string, int> index;
  std::map<std::string, std::string> dom_owner;
  int next = 0;
  index[s.lpo.name] = next++;
  for (const std::string& d : s.lpo.domains) dom_owner[d] = s.lpo.name;
  for (const auto& x : s.rps) {
    index[x.name] = next++;
    for (const std::string& d : x.domains) dom_owner[d] = x.name;
  }
  for (const auto& x : s.idps) {
    index[x.name] = next++;
    for (const std::string& d : x.domains) dom_owner[d] = x.name;
  }
  for (const auto& x : s.browsers) index[x.name] = next++;
  for (const auto& x : s.attackers) {
    index[x.name] = next++;
    for (const std::string& d : x.domains) dom_owner[d] = x.name;
  }
  auto addr = [](const std::string& name) { return Term::addr(name); };

  std::vector<Term> attacker_addrs;
  for (const auto& a : s.attackers) attacker_addrs.push_back(addr(a.name));

  Term dns_table, key_mapping, signkeys;
  for (const auto& [d, owner] : dom_owner) {
    dns_table = dict_put(dns_table, Term::dom(d), addr(owner));
    key_mapping = dict_put(key_mapping, Term::dom(d), pub(ssl_key(d)));
    out.roster.key_owner[ssl_key(d)] = index[owner];
    out.roster.domain_owner[Term::dom(d)] = index[owner];
  }
  for (const auto& x : s.idps)
    for (const std::string& d : x.domains) signkeys = dict_put(signkeys, Term::dom(d), pub(sign_key(x.name)));
  for (const auto& x : s.attackers)
    for (const std::string& d : x.domains) signkeys = dict_put(signkeys, Term::dom(d), pub(sign_key(x.name)));

  std::vector<Term> all_ids;
  std::map<std::string, Term> id_by_label;
  for (const auto& i : s.identities) {
    const Term id = make_identity(i.name, i.domain);
    all_ids.push_back(id);
    id_by_label[i.name + "@" + i.domain] = id;
    out.roster.id_owner[id] = index[i.owner];
    out.roster.id_governor[id] = index[dom_owner[i.domain]];
  }

  auto scripts = std::make_shared<ScriptRegistry>();
  register_browserid_scripts(*scripts, BrowserIdConfig{Term::dom(s.lpo.domains[0]), s.fix, all_ids});
  register_attacker_script(*scripts);

  // Presets that touch server states and browser cookies.
  const Term lpo_dom = Term::dom(s.lpo.domains[0]);
  std::map<std::string, Term> cookies;  // browser -> cookie dictionary
  std::map<std::string, Term> storage;  // browser -> localStorage
  Term lpo_state = Lpo::initial_state(ssl_key(s.lpo.domains[0]), signkeys);
  std::uint64_t lpo_nonces = 0;
  for (const auto& p : s.initial.lpo_sessions) {
    const Term sid = Term::nonce(s.lpo.name, lpo_nonces++);
    const Term xsrf = Term::nonce(s.lpo.name, lpo_nonces++);
    std::vector<Term> ids;
    for (const std::string& l : p.identities) ids.push_back(id_by_label[l]);
    const Term group = Term::seq(ids);
    std::vector<Term> st = lpo_state.kids();
    st[lpo_f::kNonces - 1] = append(append(st[lpo_f::kNonces - 1], sid), xsrf);
    st[lpo_f::kSessions - 1] = append(st[lpo_f::kSessions - 1], Term::seq({sid, Term::seq({group, xsrf})}));
    if (!contains(st[lpo_f::kIdGroups - 1], group)) st[lpo_f::kIdGroups - 1] = append(st[lpo_f::kIdGroups - 1], group);
    lpo_state = Term::seq(st);
    Term& jar = cookies[p.browser];
    jar = dict_put(jar, lpo_dom,
                   append(dict_get(jar, lpo_dom), make_cookie(S("browserid_state"), sid, true, true, true)));
  }
  for (const auto& p : s.initial.site_info) {
    Term& ls = storage[p.browser];
    const Term origin = https_origin(lpo_dom);
    const Term lpo_ls = dict_get(ls, origin);
    const Term site = dict_put(dict_get(lpo_ls, S("siteInfo")), https_origin(Term::dom(p.rp)), id_by_label[p.identity]);
    ls = dict_put(ls, origin, dict_put(lpo_ls, S("siteInfo"), site));
  }

  sys->add(std::make_shared<Lpo>(s.lpo.name, std::vector<Term>{addr(s.lpo.name)}, lpo_dom), lpo_state, lpo_nonces);

  for (const auto& x : s.rps) {
    sys->add(std::make_shared<RelyingParty>(x.name, std::vector<Term>{addr(x.name)}, attacker_addrs),
             RelyingParty::initial_state(Term::dom(x.domains[0]), ssl_key(x.domains[0]), signkeys));
  }
  for (const auto& x : s.idps) {
    Term sslkeys, users;
    for (const std::string& d : x.domains) sslkeys = dict_put(sslkeys, Term::dom(d), ssl_key(d));
    for (const auto& i : s.identities) {
      if (dom_owner[i.domain] != x.name) continue;
      users = dict_put(users, S(i.secret), append(dict_get(users, S(i.secret)), make_identity(i.name, i.domain)));
    }
    Term st = IdentityProvider::initial_state(sslkeys, users, sign_key(x.name));
    std::uint64_t nonces = 0;
    for (const auto& p : s.initial.idp_sessions) {
      if (dom_owner[p.idp] != x.name) continue;
      const Term sid = Term::nonce(x.name, nonces++);
      std::vector<Term> ids;
      for (const std::string& l : p.identities) ids.push_back(id_by_label[l]);
      std::vector<Term> k = st.kids();
      k[idp_f::kNonces - 1] = append(k[idp_f::kNonces - 1], sid);
      k[idp_f::kSessions - 1] = dict_put(k[idp_f::kSessions - 1], sid, Term::seq(ids));
      st = Term::seq(k);
      Term& jar = cookies[p.browser];
      const Term dom = Term::dom(p.idp);
      jar = dict_put(jar, dom, append(dict_get(jar, dom), make_cookie(S("sessionid"), sid, true, true, true)));
    }
    sys->add(std::make_shared<IdentityProvider>(x.name, std::vector<Term>{addr(x.name)}, attacker_addrs), st, nonces);
  }

  const Term dns_addr = s.dns == "honest" ? addr("dns") : attacker_addrs.front();
  for (const auto& b : s.browsers) {
    BrowserInit init;
    Term secrets;
    for (const auto& i : s.identities) {
      if (i.owner != b.name) continue;
      init.ids.push_back(make_identity(i.name, i.domain));
      secrets = dict_put(secrets, https_origin(Term::dom(i.domain)), S(i.secret));
    }
    init.secrets = secrets;
    init.cookies = cookies[b.name];
    init.local_storage = storage[b.name];
    init.key_mapping = key_mapping;
    init.dns_address = dns_addr;
    BrowserConfig cfg;
    cfg.scripts = scripts;
    for (const std::string& d : b.open) cfg.open_hosts.push_back(Term::dom(d));
    cfg.open_paths = b.paths;
    cfg.leak_addresses = attacker_addrs;
    sys->add(std::make_shared<Browser>(b.name, std::vector<Term>{addr(b.name)}, cfg), make_browser_state(init));
  }

  std::vector<Term> targets;
  for (const auto& [name, i] : index) {
    (void)i;
    if (std::none_of(s.attackers.begin(), s.attackers.end(), [&](const AttackerSpec& a) { return a.name == name; }))
      targets.push_back(addr(name));
  }
  for (std::size_t ai = 0; ai < s.attackers.size(); ++ai) {
    const AttackerSpec& a = s.attackers[ai];
    AttackerConfig cfg;
    cfg.network = a.kind == "network";
    cfg.dns = s.dns == "attacker" && ai == 0;
    cfg.dns_table = dns_table;
    std::vector<Term> know = {sign_key(a.name)};
    for (const std::string& d : a.domains) {
      cfg.ssl_keys = dict_put(cfg.ssl_keys, Term::dom(d), ssl_key(d));
      know.push_back(ssl_key(d));
    }
    for (const auto& kv : key_mapping.kids()) know.push_back(kv.at(2));
    for (const auto& kv : signkeys.kids()) know.push_back(kv.at(2));
    for (const std::string& k : a.knowledge) know.push_back(parse_term(k));
    cfg.vars["sign"] = sign_key(a.name);
    for (const RuleSpec& r : a.rules) {
      AttackerRule rule;
      rule.name = r.name;
      rule.host = Term::dom(r.host);
      rule.method = r.method;
      rule.path = r.path;
      rule.status = r.status;
      try {
        rule.headers = parse_term(r.headers);
        rule.body = parse_term(r.body);
      } catch (const std::exception& e) {
        fail(K::Syntax, "rule " + r.name + ": " + e.what());
      }
      cfg.rules.push_back(rule);
    }
    if (ai == 0) {
      for (const auto& c : s.corruption)
        cfg.corruptions.push_back({c.target + ":" + c.kind, addr(c.target), S(c.kind)});
    }
    cfg.targets = targets;
    sys->add(std::make_shared<Attacker>(a.name, std::vector<Term>{addr(a.name)}, cfg), Attacker::initial_state(know));
  }
  if (s.dns == "honest") sys->add(std::make_shared<DnsServer>("dns", std::vector<Term>{addr("dns")}, dns_table), Term());

  out.roster.attackers = roster_attackers(*sys).attackers;
  try {
    out.playbook = parse_playbook(s.resolver.playbook);
  } catch (const PlaybookError& e) {
    fail(K::Syntax, e.what());
  }
  out.sys = sys;
  return out;
}

}  // namespace dyweb

// Dolev-Yao attacker processes (network and web attacker), the attacker
// script and a minimal honest DNS server.
#pragma once

#include <string>
#include <vector>

#include "dyweb/browser.h"
#include "dyweb/runtime.h"
#include "dyweb/terms.h"

namespace dyweb {

// A canned HTTP(S) answer for requests to one of the attacker's domains.
// Templates may use $body, $body1, $body2, $path, $params, $nonce and the
// configured variables.
struct AttackerRule {
  std::string name;
  Term host;
  std::string method;  // empty matches any method
  std::string path;    // empty matches any path
  std::string status = "200";
  Term headers;
  Term body;
};

// A corruption the attacker may trigger: message sent to address.
struct Corruption {
  std::string name;
  Term address;
  Term message;
};

struct AttackerConfig {
  bool network = false;  // listens to and spoofs all addresses
  bool dns = false;      // answers DNS queries
  Term dns_table;        // dictionary domain -> address
  Term ssl_keys;         // dictionary domain -> private key
  Bindings vars;
  std::vector<AttackerRule> rules;
  std::vector<Corruption> corruptions;
  std::vector<Term> targets;  // addresses for synthesized messages
};

// State = <initial knowledge, recorded <receiver, sender, message> triples>.
namespace att_f {
constexpr std::size_t kInitial = 1, kRecorded = 2;
}

class Attacker : public Process {
 public:
  Attacker(std::string name, std::vector<Term> addresses, AttackerConfig cfg);
  static Term initial_state(std::vector<Term> knowledge);
  std::vector<Emit> relation(const Event& e, Term& state, StepContext& ctx) const override;
  bool honest(const Term&) const override { return false; }
  std::vector<Term> knowledge(const Term& state) const override;
  const AttackerConfig& config() const { return cfg_; }

 private:
  AttackerConfig cfg_;
};

// Honest DNS: answers <DNSResolve, domain, n> from a fixed table.
class DnsServer : public Process {
 public:
  DnsServer(std::string name, std::vector<Term> addresses, Term table);
  std::vector<Emit> relation(const Event& e, Term& state, StepContext& ctx) const override;
  bool honest(const Term&) const override { return true; }

 private:
  Term table_;
};

// Registers "att_script". Its scriptstate is a sequence of URLs the script
// may load in an iframe or navigate to.
void register_attacker_script(ScriptRegistry& reg);

// Nonces of the window chain from a document up to the top-level window:
// element 0 is the document's own window.
std::vector<Term> tree_window_chain(const Term& tree, const Term& docnonce);

}  // namespace dyweb

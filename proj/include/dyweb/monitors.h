// Trace monitors: Conditions A and B, the HTTPS and Origin-header lemmas,
// attacker-knowledge queries and the privacy distinguisher.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dyweb/runtime.h"
#include "dyweb/terms.h"

namespace dyweb {

// Facts about a system the monitors cannot read off the trace.
struct Roster {
  std::vector<int> attackers;
  std::map<Term, int> key_owner;     // private TLS key -> process
  std::map<Term, int> domain_owner;  // domain -> process holding its TLS key
  std::map<Term, int> id_owner;      // identity -> browser process
  std::map<Term, int> id_governor;   // identity -> process governing its domain
};

// Derives attacker indices from process roles; the key and identity tables
// are left to the caller.
Roster roster_attackers(const System& sys);

enum class Verdict { Holds, Violated, Exempt };
std::string_view verdict_name(Verdict v);

struct PropResult {
  std::string id;
  Verdict verdict = Verdict::Holds;
  std::optional<std::size_t> witness;  // step index
  std::string detail;
};

// "PROP <id> HOLDS|VIOLATED|EXEMPT [witness=step#]".
std::string render_result(const PropResult& r);

// Property ids: A, B, L1.2, L1.3, L1.4, L3.
const std::vector<std::string>& property_ids();
bool is_property_id(const std::string& id);

// Knowledge of all attacker processes, fed step by step.
class AttackerView {
 public:
  AttackerView(const System& sys, const Roster& roster, const std::vector<Term>& initial_states);
  void update(const std::vector<Term>& states);
  bool derivable(const Term& t) { return k_.derivable(normalize(t)); }

 private:
  const Roster& roster_;
  Knowledge k_;
  std::vector<std::size_t> seen_;
};

// Attacker knowledge after step i of the trace (i = -1 for the initial
// configuration).
bool attacker_derives(const System& sys, const Roster& roster, const Trace& t, std::ptrdiff_t step,
                      const Term& target);

PropResult check_condition_a(const System& sys, const Roster& roster, const Trace& t);
PropResult check_condition_b(const System& sys, const Roster& roster, const Trace& t);
// The three parts of the HTTPS lemma: L1.2 key secrecy, L1.3 key mapping,
// L1.4 response authenticity.
std::vector<PropResult> check_https_lemma(const System& sys, const Roster& roster, const Trace& t);
PropResult check_origin_header_lemma(const System& sys, const Roster& roster, const Trace& t);

// Runs the listed properties (all when empty) in property_ids() order.
std::vector<PropResult> check_properties(const System& sys, const Roster& roster, const Trace& t,
                                         const std::vector<std::string>& ids = {});

// What a web attacker can observe.
enum class Channel { All, PostMessage, Network, Structure, StructureNoOrigin };
std::optional<Channel> channel_from_name(const std::string& s);

// Observation sequence of the observer process with nonces abstracted.
std::vector<std::string> observations(const System& sys, const Roster& roster, const Trace& t, int observer,
                                      Channel ch);

// True iff the observer can tell the two runs apart.
bool privacy_distinguisher(const std::vector<std::string>& a, const std::vector<std::string>& b);

}  // namespace dyweb

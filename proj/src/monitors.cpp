#include "dyweb/monitors.h"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "dyweb/attacker.h"
#include "dyweb/browser.h"
#include "dyweb/browserid.h"
#include "dyweb/webdata.h"

namespace dyweb {
namespace {

struct FirstEmit {
  std::size_t step;
  int proc;
};

// Earliest emission of every message in the trace.
std::unordered_map<Term, FirstEmit, TermHash> first_emitters(const Trace& t) {
  std::unordered_map<Term, FirstEmit, TermHash> m;
  for (const StepRecord& s : t.steps)
    for (const Event& e : s.emitted) m.try_emplace(e.msg, FirstEmit{s.index, s.proc});
  return m;
}

int lookup(const std::map<Term, int>& m, const Term& k) {
  auto it = m.find(k);
  return it == m.end() ? -1 : it->second;
}

bool honest_at(const System& sys, const std::vector<Term>& states, int p) {
  if (p < 0) return false;
  return sys.proc(p).honest(states[static_cast<std::size_t>(p)]);
}

bool fully_corrupt(const std::vector<Term>& states, int b) {
  return b >= 0 && states[static_cast<std::size_t>(b)].at(bs::kIsCorrupted).is_string("FULLCORRUPT");
}

// Owner of the private key whose public part is pk.
int owner_of_pub(const Roster& r, const Term& pk) {
  if (!pk.is_compound(Sym::Pub)) return -1;
  return lookup(r.key_owner, pk.kids()[0]);
}

struct Tally {
  PropResult res;
  bool any_instance = false;
  bool any_plain = false;
  void plain() { any_instance = any_plain = true; }
  void exempt() { any_instance = true; }
  void violate(std::size_t step, std::string why) {
    any_instance = true;
    if (res.verdict == Verdict::Violated && res.witness && *res.witness <= step) return;
    res.verdict = Verdict::Violated;
    res.witness = step;
    res.detail = std::move(why);
  }
  // Conditional lemma verdict: EXEMPT only when every instance was exempt.
  PropResult lemma() const {
    PropResult r = res;
    if (r.verdict != Verdict::Violated && any_instance && !any_plain) r.verdict = Verdict::Exempt;
    return r;
  }
};

std::string step_label(std::size_t s) { return "step " + std::to_string(s); }

// Replaces every nonce by a placeholder.
Term abstract_nonces(const Term& t) {
  if (t.is_nonce()) return S("N");
  if (t.kind() == Kind::Seq) {
    std::vector<Term> k;
    k.reserve(t.len());
    for (const Term& x : t.kids()) k.push_back(abstract_nonces(x));
    return Term::seq(std::move(k));
  }
  if (t.kind() == Kind::Compound) {
    std::vector<Term> k;
    for (const Term& x : t.kids()) k.push_back(abstract_nonces(x));
    return Term::raw(t.sym(), std::move(k));
  }
  return t;
}

void shape(const Term& windows, bool mark, std::string& out) {
  out += '[';
  for (const Term& w : windows.kids()) {
    out += "w(";
    for (const Term& d : w.at(win::kDocuments).kids()) {
      const bool full = d.len() == 7;
      out += (mark && full) ? 'D' : 'd';
      shape(full ? d.at(doc::kSubwindows) : d.at(2), mark, out);
    }
    out += ')';
  }
  out += ']';
}

}  // namespace

Roster roster_attackers(const System& sys) {
  Roster r;
  for (std::size_t i = 0; i < sys.size(); ++i)
    if (sys.proc(static_cast<int>(i)).role() == Role::Attacker) r.attackers.push_back(static_cast<int>(i));
  return r;
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "HOLDS";
    case Verdict::Violated: return "VIOLATED";
    case Verdict::Exempt: return "EXEMPT";
  }
  return "?";
}

std::string render_result(const PropResult& r) {
  std::string s = "PROP " + r.id + " " + std::string(verdict_name(r.verdict));
  if (r.verdict == Verdict::Violated && r.witness) s += " witness=" + std::to_string(*r.witness);
  return s;
}

const std::vector<std::string>& property_ids() {
  static const std::vector<std::string> ids = {"A", "B", "L1.2", "L1.3", "L1.4", "L3"};
  return ids;
}

bool is_property_id(const std::string& id) {
  const auto& ids = property_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

AttackerView::AttackerView(const System& sys, const Roster& roster, const std::vector<Term>& initial_states)
    : roster_(roster), seen_(roster.attackers.size(), 0) {
  for (std::size_t j = 0; j < roster.attackers.size(); ++j) {
    const int a = roster.attackers[j];
    k_.add_nonce_owner(sys.proc(a).name());
    for (const Term& x : initial_states[static_cast<std::size_t>(a)].at(att_f::kInitial).kids()) k_.add(x);
  }
  update(initial_states);
}

void AttackerView::update(const std::vector<Term>& states) {
  for (std::size_t j = 0; j < roster_.attackers.size(); ++j) {
    const Term rec = states[static_cast<std::size_t>(roster_.attackers[j])].at(att_f::kRecorded);
    for (std::size_t i = seen_[j] + 1; i <= rec.len(); ++i) k_.add(rec.at(i));
    seen_[j] = std::max(seen_[j], rec.len());
  }
}

bool attacker_derives(const System& sys, const Roster& roster, const Trace& t, std::ptrdiff_t step,
                      const Term& target) {
  StateTimeline tl(t);
  AttackerView v(sys, roster, tl.after(-1));
  v.update(tl.after(step));
  return v.derivable(target);
}

PropResult check_condition_a(const System& sys, const Roster& roster, const Trace& t) {
  Tally tally;
  tally.res.id = "A";
  StateTimeline tl(t);
  AttackerView view(sys, roster, tl.after(-1));
  struct Pending {
    Term token, id;
    int rp;
  };
  std::vector<Pending> pending;
  for (const StepRecord& s : t.steps) {
    const auto& after = tl.after(static_cast<std::ptrdiff_t>(s.index));
    for (const Note& n : s.notes)
      if (n.kind == note::kTokenMinted) pending.push_back({Term::seq({n.data.at(1), n.data.at(2)}), n.data.at(2), s.proc});
    view.update(after);
    std::vector<Pending> rest;
    for (const Pending& p : pending) {
      if (!honest_at(sys, after, p.rp)) continue;  // only tokens at honest RPs count
      if (!view.derivable(p.token)) {
        rest.push_back(p);
        continue;
      }
      const int owner = lookup(roster.id_owner, p.id);
      const int gov = lookup(roster.id_governor, p.id);
      if (fully_corrupt(after, owner) || !honest_at(sys, after, gov)) {
        tally.exempt();
        continue;
      }
      tally.violate(s.index, "token for " + identity_label(p.id) + " derivable by the attacker");
    }
    pending = std::move(rest);
  }
  return tally.res;
}

PropResult check_condition_b(const System& sys, const Roster& roster, const Trace& t) {
  Tally tally;
  tally.res.id = "B";
  const auto first = first_emitters(t);
  StateTimeline tl(t);
  for (const StepRecord& s : t.steps) {
    for (const Note& n : s.notes) {
      if (n.kind != note::kTokenMinted) continue;
      const auto& after = tl.after(static_cast<std::ptrdiff_t>(s.index));
      if (!honest_at(sys, after, s.proc)) continue;
      auto it = first.find(s.delivered.msg);
      if (it == first.end()) continue;
      const int b = it->second.proc;
      if (sys.proc(b).role() != Role::Browser || !honest_at(sys, after, b)) {
        tally.exempt();
        continue;
      }
      const Term id = n.data.at(2);
      if (lookup(roster.id_owner, id) == b) {
        tally.plain();
        continue;
      }
      tally.violate(s.index, "token for " + identity_label(id) + " issued to a request of " + sys.proc(b).name() +
                                 " (emitted at " + step_label(it->second.step) + ")");
    }
  }
  return tally.res;
}

std::vector<PropResult> check_https_lemma(const System& sys, const Roster& roster, const Trace& t) {
  Tally l2, l3, l4;
  l2.res.id = "L1.2";
  l3.res.id = "L1.3";
  l4.res.id = "L1.4";
  const auto first = first_emitters(t);
  StateTimeline tl(t);
  const std::vector<Term>& initial = tl.after(-1);
  AttackerView view(sys, roster, initial);
  struct Key {
    Term key;
    int browser, owner;
    std::size_t step;
  };
  std::vector<Key> pending;
  std::map<Term, int> key_server;  // symmetric key -> owner of the server key

  for (const StepRecord& s : t.steps) {
    const auto& before = tl.after(static_cast<std::ptrdiff_t>(s.index) - 1);
    const auto& after = tl.after(static_cast<std::ptrdiff_t>(s.index));
    const bool browser_step = s.proc >= 0 && sys.proc(s.proc).role() == Role::Browser;

    for (const Note& n : s.notes) {
      if (!browser_step) break;
      if (n.kind == note::kRequestIssued && n.data.at(4) == proto_s()) {
        if (!honest_at(sys, before, s.proc)) continue;
        const Term key = n.data.at(3);
        const Term message = n.data.at(5);
        auto req = HttpRequest::parse(n.data.at(2));
        const Term pk = message.kind() == Kind::Compound ? message.kids()[1] : Term();
        const int owner = owner_of_pub(roster, pk);
        key_server[key] = owner;
        // Key mapping: the public key used is the one initially bound to the host.
        const Term expected = req ? dict_get(initial[static_cast<std::size_t>(s.proc)].at(bs::kKeyMapping), req->host)
                                  : Term::notdef();
        if (pk == expected) l3.plain();
        else l3.violate(s.index, "request encrypted under a key not mapped to its host");
        if (owner < 0 || sys.proc(owner).role() == Role::Attacker) {
          l2.exempt();
          continue;
        }
        pending.push_back({key, s.proc, owner, s.index});
      }
      if (n.kind == note::kResponseAccepted && n.data.at(4) == proto_s()) {
        const Term key = n.data.at(2);
        const int owner = key_server.count(key) ? key_server[key] : -1;
        if (owner < 0 || sys.proc(owner).role() == Role::Attacker || !honest_at(sys, before, s.proc) ||
            !honest_at(sys, before, owner) || view.derivable(key)) {
          l4.exempt();
          continue;
        }
        auto it = first.find(s.delivered.msg);
        if (it != first.end() && it->second.proc == owner) {
          l4.plain();
        } else {
          l4.violate(s.index, "accepted response not created by " + sys.proc(owner).name());
        }
      }
    }

    view.update(after);
    std::vector<Key> rest;
    for (const Key& k : pending) {
      if (!view.derivable(k.key)) {
        rest.push_back(k);
        continue;
      }
      if (!honest_at(sys, after, k.browser) || !honest_at(sys, after, k.owner)) {
        l2.exempt();
        continue;
      }
      l2.violate(s.index, "key of the request at " + step_label(k.step) + " derivable by the attacker");
    }
    pending = std::move(rest);
  }
  // Keys that stayed secret are plain instances.
  if (!pending.empty()) l2.plain();
  return {l2.lemma(), l3.lemma(), l4.lemma()};
}

PropResult check_origin_header_lemma(const System& sys, const Roster& roster, const Trace& t) {
  Tally tally;
  tally.res.id = "L3";
  const auto first = first_emitters(t);
  StateTimeline tl(t);
  // docnonce -> (creating step, browser)
  std::map<Term, std::pair<std::size_t, int>> created;
  for (const StepRecord& s : t.steps) {
    for (const Note& n : s.notes) {
      if (n.kind == note::kDocCreated) created[n.data.at(1)] = {s.index, s.proc};
    }
  }
  for (const StepRecord& s : t.steps) {
    if (s.proc < 0 || sys.proc(s.proc).role() != Role::Browser) continue;
    const auto& before = tl.after(static_cast<std::ptrdiff_t>(s.index) - 1);
    for (const Note& n : s.notes) {
      if (n.kind != note::kRequestPrepared) continue;
      auto req = HttpRequest::parse(n.data.at(2));
      if (!req) continue;
      const Term origin = dict_get(req->headers, S("Origin"));
      if (origin.len() != 2 || origin.at(2) != proto_s()) continue;
      if (!honest_at(sys, before, s.proc)) continue;
      const int p = lookup(roster.domain_owner, origin.at(1));
      if (p < 0 || sys.proc(p).role() == Role::Attacker || !honest_at(sys, before, p)) {
        tally.exempt();
        continue;
      }
      const Term initiator = n.data.at(3);
      if (!initiator.at(1).is_string("doc")) {
        tally.violate(s.index, "request with Origin " + render(origin) + " not initiated by a document");
        continue;
      }
      auto c = created.find(initiator.at(2));
      if (c == created.end() || c->second.second != s.proc || c->second.first > s.index) {
        tally.violate(s.index, "initiating document has no creation record");
        continue;
      }
      const StepRecord& cs = t.steps[c->second.first];
      auto it = first.find(cs.delivered.msg);
      if (it == first.end() || it->second.proc != p) {
        tally.violate(s.index, "script behind Origin " + render(origin) + " was not served by " + sys.proc(p).name());
        continue;
      }
      tally.plain();
    }
  }
  return tally.lemma();
}

std::vector<PropResult> check_properties(const System& sys, const Roster& roster, const Trace& t,
                                         const std::vector<std::string>& ids) {
  auto want = [&](const std::string& id) { return ids.empty() || std::find(ids.begin(), ids.end(), id) != ids.end(); };
  std::vector<PropResult> out;
  if (want("A")) out.push_back(check_condition_a(sys, roster, t));
  if (want("B")) out.push_back(check_condition_b(sys, roster, t));
  if (want("L1.2") || want("L1.3") || want("L1.4")) {
    for (PropResult& r : check_https_lemma(sys, roster, t))
      if (want(r.id)) out.push_back(std::move(r));
  }
  if (want("L3")) out.push_back(check_origin_header_lemma(sys, roster, t));
  return out;
}

std::optional<Channel> channel_from_name(const std::string& s) {
  if (s == "all") return Channel::All;
  if (s == "postmessage") return Channel::PostMessage;
  if (s == "network") return Channel::Network;
  if (s == "structure") return Channel::Structure;
  if (s == "structure-no-origin") return Channel::StructureNoOrigin;
  return std::nullopt;
}

std::vector<std::string> observations(const System& sys, const Roster& roster, const Trace& t, int observer,
                                      Channel ch) {
  std::set<Term> own_domains;
  for (const auto& [d, p] : roster.domain_owner)
    if (p == observer) own_domains.insert(d);
  const auto* att = dynamic_cast<const Attacker*>(&sys.proc(observer));
  const bool pm = ch == Channel::All || ch == Channel::PostMessage;
  const bool net = ch == Channel::All || ch == Channel::Network;
  const bool st = ch == Channel::All || ch == Channel::Structure || ch == Channel::StructureNoOrigin;
  const bool mark = ch != Channel::StructureNoOrigin;
  std::vector<std::string> obs;
  for (const StepRecord& s : t.steps) {
    if (net && s.proc == observer && !s.delivered.trigger) {
      const Term& m = s.delivered.msg;
      std::optional<HttpRequest> req = HttpRequest::parse(m);
      if (!req && att) {
        for (const Term& kv : att->config().ssl_keys.kids()) {
          if (auto un = https_unwrap_request(m, kv.at(2))) {
            req = un->first;
            break;
          }
        }
      }
      if (req) obs.push_back("net " + render(req->host) + " " + render(req->method) + " " + render(req->path));
    }
    for (const Note& n : s.notes) {
      if (pm && n.kind == note::kPmDelivered && own_domains.count(n.data.at(2).at(1))) {
        obs.push_back("pm " + render(n.data.at(3)) + " " + render(abstract_nonces(n.data.at(4))));
      }
      if (st && n.kind == note::kScriptRun && n.data.at(3).is_string("att_script") &&
          own_domains.count(n.data.at(2).at(1))) {
        std::string sh;
        shape(n.data.at(4), mark, sh);
        obs.push_back("tree " + sh);
      }
    }
  }
  return obs;
}

bool privacy_distinguisher(const std::vector<std::string>& a, const std::vector<std::string>& b) { return a != b; }

}  // namespace dyweb

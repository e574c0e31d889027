#include "dyweb/attacker.h"

#include <string>
#include <utility>

#include "dyweb/browserid.h"
#include "dyweb/webdata.h"

namespace dyweb {
namespace {

std::string text_of(const Term& t) { return t.is_string() ? t.text() : render(t); }

bool rule_matches(const AttackerRule& r, const HttpRequest& req) {
  if (r.host != req.host) return false;
  if (!r.method.empty() && !req.method.is_string(r.method)) return false;
  if (!r.path.empty() && !req.path.is_string(r.path)) return false;
  return true;
}

Bindings rule_bindings(const AttackerConfig& cfg, const HttpRequest& req) {
  Bindings b = cfg.vars;
  b["body"] = req.body;
  b["body1"] = req.body.at(1);
  b["body2"] = req.body.at(2);
  b["path"] = req.path;
  b["params"] = req.params;
  b["nonce"] = req.nonce;
  return b;
}

Term rule_response(const AttackerConfig& cfg, const AttackerRule& r, const HttpRequest& req) {
  const Bindings b = rule_bindings(cfg, req);
  return HttpResponse{req.nonce, S(r.status), substitute(r.headers, b), substitute(r.body, b)}.term();
}

bool chain_walk(const Term& windows, const Term& docnonce, std::vector<Term>& stack) {
  for (const Term& w : windows.kids()) {
    stack.push_back(w.at(win::kNonce));
    for (const Term& d : w.at(win::kDocuments).kids()) {
      if (d.at(1) == docnonce) return true;
      const Term subs = d.len() == 2 ? d.at(2) : d.at(doc::kSubwindows);
      if (chain_walk(subs, docnonce, stack)) return true;
    }
    stack.pop_back();
  }
  return false;
}

// att_script: acts on behalf of the attacker inside a browser document.
Term att_script(const Term& in, StepContext& ctx) {
  const Term tree = in.at(1), docnonce = in.at(2), state = in.at(3);
  const Term cookies = in.at(5), ls = in.at(6), ss = in.at(7);
  const std::vector<Term> chain = tree_window_chain(tree, docnonce);
  std::vector<std::string> names = {"noop"};
  std::vector<Term> cmds = {Term()};
  for (std::size_t k = 1; k < chain.size(); ++k) {
    names.push_back("pm:up" + std::to_string(k));
    cmds.push_back(Term::seq({S("POSTMESSAGE"), chain[k], Term::seq({S("notify"), Term()}), Term::bot()}));
  }
  for (const Term& url : state.kids()) {
    if (!is_url(url)) continue;
    names.push_back("iframe:" + url_label(url));
    cmds.push_back(Term::seq({S("IFRAME"), url, S("_SELF")}));
    names.push_back("href:" + url_label(url));
    cmds.push_back(Term::seq({S("HREF"), url, S("_BLANK")}));
  }
  const Term origin = tree_get_origin(tree, docnonce);
  if (origin.len() == 2) {
    names.push_back("exfil");
    const Term url = make_url(origin.at(2), origin.at(1), S("/exfil"));
    cmds.push_back(Term::seq({S("XMLHTTPREQUEST"), url, S("POST"), in}));
  }
  const std::size_t i = ctx.choose("att.cmd", names);
  Term cmd = cmds[i];
  if (names[i] == "exfil") cmd = append(cmd, ctx.fresh());
  return Term::seq({state, cookies, ls, ss, cmd});
}

}  // namespace

std::vector<Term> tree_window_chain(const Term& tree, const Term& docnonce) {
  std::vector<Term> stack;
  if (!chain_walk(tree, docnonce, stack)) return {};
  return {stack.rbegin(), stack.rend()};
}

void register_attacker_script(ScriptRegistry& reg) { reg.add("att_script", att_script); }

Attacker::Attacker(std::string name, std::vector<Term> addresses, AttackerConfig cfg)
    : Process(std::move(name), Role::Attacker, std::move(addresses)), cfg_(std::move(cfg)) {
  set_listens_everywhere(cfg_.network);
}

Term Attacker::initial_state(std::vector<Term> knowledge) { return Term::seq({Term::seq(std::move(knowledge)), Term()}); }

std::vector<Term> Attacker::knowledge(const Term& state) const {
  std::vector<Term> k = state.at(att_f::kInitial).kids();
  for (const Term& rec : state.at(att_f::kRecorded).kids()) k.push_back(rec);
  return k;
}

std::vector<Emit> Attacker::relation(const Event& e, Term& state, StepContext& ctx) const {
  const Term self = addresses().front();
  if (!e.trigger) {
    state = Term::seq({state.at(att_f::kInitial),
                       append(state.at(att_f::kRecorded), Term::seq({e.receiver, e.sender, e.msg}))});
  }
  // Replies to a request spoof the original receiver when on the network.
  const Term reply_from = cfg_.network ? e.receiver : self;

  if (e.trigger) {
    std::vector<std::string> names = {"none"};
    for (const Corruption& c : cfg_.corruptions) names.push_back("corrupt:" + c.name);
    const Term recorded = state.at(att_f::kRecorded);
    if (recorded.len() > 0) names.push_back("replay");
    if (!cfg_.targets.empty()) names.push_back("synth");
    const std::string& what = names[ctx.choose("att.trigger", names)];
    if (what == "none") return {};
    if (what == "replay") {
      const std::size_t i = ctx.choose("att.replay", recorded.len(),
                                       [&](std::size_t j) { return "rec" + std::to_string(j + 1); });
      const Term rec = recorded.at(i + 1);
      return {{rec.at(1), cfg_.network ? rec.at(2) : self, rec.at(3)}};
    }
    if (what == "synth") {
      const std::size_t t = ctx.choose("att.to", cfg_.targets.size(),
                                       [&](std::size_t j) { return render(cfg_.targets[j]); });
      Knowledge k;
      for (const Term& x : knowledge(state)) k.add(x);
      k.add_nonce_owner(name());
      const std::vector<Term>& atoms = k.analyzed();
      if (atoms.empty()) return {};
      const std::size_t m = ctx.choose("att.msg", atoms.size(), [&](std::size_t j) { return render(atoms[j]); });
      return {{cfg_.targets[t], self, atoms[m]}};
    }
    for (const Corruption& c : cfg_.corruptions) {
      if (what == "corrupt:" + c.name) {
        ctx.note("corrupt-sent", Term::seq({S(c.name), c.address}));
        return {{c.address, self, c.message}};
      }
    }
    return {};
  }

  std::vector<std::string> names;
  std::vector<std::vector<Emit>> outs;
  const Term& m = e.msg;

  if (cfg_.dns && m.len() == 3 && m.at(1).is_string("DNSResolve")) {
    const Term domain = m.at(2), n = m.at(3);
    if (dict_has(cfg_.dns_table, domain)) {
      names.push_back("dns:honest");
      outs.push_back({{e.sender, reply_from, dns_response(dict_get(cfg_.dns_table, domain), n)}});
    }
    names.push_back("dns:self");
    outs.push_back({{e.sender, reply_from, dns_response(self, n)}});
  }

  for (const Term& kv : cfg_.ssl_keys.kids()) {
    auto un = https_unwrap_request(m, kv.at(2));
    if (!un) continue;
    const auto& [req, symkey] = *un;
    for (const AttackerRule& r : cfg_.rules) {
      if (!rule_matches(r, req)) continue;
      names.push_back("rule:" + r.name);
      outs.push_back({{e.sender, reply_from, https_wrap_response(rule_response(cfg_, r, req), symkey)}});
    }
    break;
  }

  if (auto req = HttpRequest::parse(m)) {
    for (const AttackerRule& r : cfg_.rules) {
      if (!rule_matches(r, *req)) continue;
      names.push_back("rule:" + r.name);
      outs.push_back({{e.sender, reply_from, rule_response(cfg_, r, *req)}});
    }
  }

  bool own = false;
  for (const Term& a : addresses()) own = own || a == e.receiver;
  if (cfg_.network && !own) {
    names.push_back("forward");
    outs.push_back({{e.receiver, e.sender, m}});
  }
  names.push_back("drop");
  outs.emplace_back();
  const std::size_t i = ctx.choose("att.act", names);
  if (names[i].rfind("rule:", 0) == 0) ctx.note("att-rule", Term::seq({S(names[i].substr(5)), S(text_of(e.sender))}));
  return outs[i];
}

DnsServer::DnsServer(std::string name, std::vector<Term> addresses, Term table)
    : Process(std::move(name), Role::Dns, std::move(addresses)), table_(std::move(table)) {}

std::vector<Emit> DnsServer::relation(const Event& e, Term& state, StepContext&) const {
  (void)state;
  const Term& m = e.msg;
  if (m.len() != 3 || !m.at(1).is_string("DNSResolve")) return {};
  if (!dict_has(table_, m.at(2))) return {};
  return {{e.sender, e.receiver, dns_response(dict_get(table_, m.at(2)), m.at(3))}};
}

}  // namespace dyweb

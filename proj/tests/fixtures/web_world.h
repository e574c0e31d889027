// A minimal web for browser tests: one browser, an honest DNS server and a
// programmable HTTP(S) server for a few domains.
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dyweb/attacker.h"
#include "dyweb/browser.h"
#include "dyweb/playbook.h"
#include "dyweb/runtime.h"
#include "dyweb/webdata.h"

namespace fixture {

using namespace dyweb;

using Handler = std::function<HttpResponse(const HttpRequest&)>;

inline Term server_key(const std::string& domain) { return Term::nonce("key_" + domain, 0); }

// Answers every request with the handler's response and keeps the received
// requests as its state.
class Server : public Process {
 public:
  Server(std::vector<std::string> domains, Handler h)
      : Process("srv", Role::Rp, {Term::addr("srv")}), domains_(std::move(domains)), h_(std::move(h)) {}

  std::vector<Emit> relation(const Event& e, Term& state, StepContext&) const override {
    for (const std::string& d : domains_) {
      if (auto r = https_unwrap_request(e.msg, server_key(d))) {
        state = append(state, r->first.term());
        HttpResponse resp = h_(r->first);
        resp.nonce = r->first.nonce;
        return {{e.sender, e.receiver, https_wrap_response(resp.term(), r->second)}};
      }
    }
    if (auto req = HttpRequest::parse(e.msg)) {
      state = append(state, req->term());
      HttpResponse resp = h_(*req);
      resp.nonce = req->nonce;
      return {{e.sender, e.receiver, resp.term()}};
    }
    return {};
  }
  bool honest(const Term&) const override { return true; }

 private:
  std::vector<std::string> domains_;
  Handler h_;
};

// Page whose script state is a single command, issued on the first run.
inline HttpResponse page(const Term& cmd, Term headers = Term()) {
  return HttpResponse{Term(), S("200"), std::move(headers), Term::seq({S("fixture_cmd"), cmd})};
}
inline HttpResponse redirect(const std::string& status, const Term& location) {
  return HttpResponse{Term(), S(status), Term::seq({Term::seq({S("Location"), location})}), Term()};
}

struct Options {
  std::vector<std::string> domains = {"srv.com"};
  std::vector<std::string> paths = {"/", "/a"};
  Term cookies;               // dictionary domain -> cookies
  Term local_storage;
  Term secrets;
  std::vector<Term> sts;
};

struct World {
  std::shared_ptr<System> sys;
  int browser = -1, dns = -1, server = -1;
};

inline World make_world(Handler h, const Options& o = {}) {
  auto scripts = std::make_shared<ScriptRegistry>();
  scripts->add("fixture_cmd", [](const Term& in, StepContext&) {
    return Term::seq({Term(), in.at(5), in.at(6), in.at(7), in.at(3)});
  });
  scripts->add("fixture_idle", [](const Term& in, StepContext&) {
    return Term::seq({in.at(3), in.at(5), in.at(6), in.at(7), Term()});
  });
  BrowserConfig bc;
  bc.scripts = scripts;
  for (const std::string& d : o.domains) bc.open_hosts.push_back(Term::dom(d));
  bc.open_paths = o.paths;
  bc.leak_addresses = {Term::addr("srv")};
  BrowserInit init;
  init.secrets = o.secrets;
  init.cookies = o.cookies;
  init.local_storage = o.local_storage;
  init.dns_address = Term::addr("dns");
  init.sts = o.sts;
  Term table;
  for (const std::string& d : o.domains) {
    init.key_mapping = dict_put(init.key_mapping, Term::dom(d), pub(server_key(d)));
    table = dict_put(table, Term::dom(d), Term::addr("srv"));
  }
  World w;
  w.sys = std::make_shared<System>();
  w.browser = w.sys->add(std::make_shared<Browser>("b", std::vector<Term>{Term::addr("b")}, bc),
                         make_browser_state(init));
  w.dns = w.sys->add(std::make_shared<DnsServer>("dns", std::vector<Term>{Term::addr("dns")}, table), Term());
  w.server = w.sys->add(std::make_shared<Server>(o.domains, std::move(h)), Term());
  return w;
}

inline Trace drive(const World& w, const std::vector<std::string>& lines, std::size_t steps = 80) {
  PlaybookResolver r(parse_playbook(lines));
  return run(*w.sys, r, RunOptions{steps, {}});
}

// Directives that fetch one URL opened by the user: DNS, request, response.
inline std::vector<std::string> open(const std::string& url) {
  return {"trigger b b.action=open b.url=" + url, "net to=dns", "net to=b", "net to=srv", "net to=b"};
}
// Runs the script of the window whose label contains what, then delivers the
// resulting navigation.
inline std::vector<std::string> script_then_fetch(const std::string& what) {
  return {"trigger b b.action=script b.window~" + what, "net to=dns", "net to=b", "net to=srv", "net to=b"};
}

inline std::vector<HttpRequest> requests(const Trace& t, const World& w) {
  std::vector<HttpRequest> out;
  for (const Term& r : t.final.states[static_cast<std::size_t>(w.server)].kids())
    if (auto p = HttpRequest::parse(r)) out.push_back(*p);
  return out;
}

inline Term browser_state(const Trace& t, const World& w) {
  return t.final.states[static_cast<std::size_t>(w.browser)];
}

inline std::vector<Note> notes(const Trace& t, const std::string& kind) {
  std::vector<Note> out;
  for (const StepRecord& s : t.steps)
    for (const Note& n : s.notes)
      if (n.kind == kind) out.push_back(n);
  return out;
}

}  // namespace fixture

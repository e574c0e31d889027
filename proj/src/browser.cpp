#include "dyweb/browser.h"

#include <algorithm>
#include <set>

#include "dyweb/webdata.h"

namespace dyweb {

namespace {

const Term& kTrue() {
  static const Term t = Term::truth();
  return t;
}

// Subterm at a path without renormalizing (states are always normal).
Term at_path(const Term& t, const SubtermPath& p) {
  Term cur = t;
  for (std::size_t i : p) cur = cur.at(i);
  return cur;
}

SubtermPath extend(SubtermPath p, std::initializer_list<std::size_t> more) {
  p.insert(p.end(), more.begin(), more.end());
  return p;
}

std::optional<std::size_t> active_index(const Term& window) {
  const Term& docs = window.at(win::kDocuments);
  for (std::size_t j = 1; j <= docs.len(); ++j) {
    if (docs.at(j).at(doc::kActive).is_true()) return j;
  }
  return std::nullopt;
}

void collect_windows(const Term& s, const SubtermPath& wp, std::vector<SubtermPath>& out) {
  out.push_back(wp);
  Term w = at_path(s, wp);
  auto j = active_index(w);
  if (!j) return;
  const Term subs = w.at(win::kDocuments).at(*j).at(doc::kSubwindows);
  for (std::size_t k = 1; k <= subs.len(); ++k) {
    collect_windows(s, extend(wp, {win::kDocuments, *j, doc::kSubwindows, k}), out);
  }
}

Term clean_window(const Term& w, const Term& origin) {
  auto j = active_index(w);
  if (!j) return make_window(w.at(win::kNonce), Term(), w.at(win::kOpener));
  const Term d = w.at(win::kDocuments).at(*j);
  const Term subs = d.at(doc::kSubwindows);
  std::vector<Term> cleaned;
  for (const Term& sw : subs.kids()) cleaned.push_back(clean_window(sw, origin));
  Term d2;
  if (d.at(doc::kOrigin) == origin) {
    d2 = replace_at(d, {doc::kSubwindows}, Term::seq(std::move(cleaned)));
  } else {
    d2 = Term::seq({d.at(doc::kNonce), Term::seq(std::move(cleaned))});
  }
  return make_window(w.at(win::kNonce), Term::seq({d2}), w.at(win::kOpener));
}

bool is_prefix(const SubtermPath& a, const SubtermPath& b) {
  return a.size() < b.size() && std::equal(a.begin(), a.end(), b.begin());
}

}  // namespace

Term make_window(const Term& nonce, const Term& documents, const Term& opener) {
  return Term::seq({nonce, documents, opener});
}

Term make_document(const Term& nonce, const Term& origin, const Term& script, const Term& scriptstate,
                   const Term& scriptinput, const Term& subwindows, bool active) {
  return Term::seq({nonce, origin, script, scriptstate, scriptinput, subwindows, Term::boolean(active)});
}

Term make_browser_state(const BrowserInit& init) {
  return Term::seq({Term(), Term::seq(init.ids), init.secrets, init.cookies, init.local_storage, Term(),
                    init.key_mapping, Term::seq(init.sts), init.dns_address, Term(), Term(), Term(), Term::bot()});
}

std::vector<SubtermPath> subwindows(const Term& s) {
  std::vector<SubtermPath> out;
  const Term ws = s.at(bs::kWindows);
  for (std::size_t i = 1; i <= ws.len(); ++i) collect_windows(s, {bs::kWindows, i}, out);
  return out;
}

std::optional<SubtermPath> active_document(const Term& s, const SubtermPath& wp) {
  auto j = active_index(at_path(s, wp));
  if (!j) return std::nullopt;
  return extend(wp, {win::kDocuments, *j});
}

std::vector<SubtermPath> docs(const Term& s) {
  std::vector<SubtermPath> out;
  for (const SubtermPath& wp : subwindows(s)) {
    if (auto d = active_document(s, wp)) out.push_back(*d);
  }
  return out;
}

std::optional<SubtermPath> find_window(const Term& s, const Term& nonce) {
  for (const SubtermPath& wp : subwindows(s)) {
    if (at_path(s, wp).at(win::kNonce) == nonce) return wp;
  }
  return std::nullopt;
}

std::optional<SubtermPath> find_document(const Term& s, const Term& nonce) {
  for (const SubtermPath& dp : docs(s)) {
    if (at_path(s, dp).at(doc::kNonce) == nonce) return dp;
  }
  return std::nullopt;
}

Term clean(const Term& s, const Term& document) {
  const Term origin = document.at(doc::kOrigin);
  std::vector<Term> out;
  for (const Term& w : s.at(bs::kWindows).kids()) out.push_back(clean_window(w, origin));
  return Term::seq(std::move(out));
}

Term cookie_merge(const Term& old_cookies, const Term& new_cookies) {
  // Script-supplied httpOnly cookies are dropped; the rightmost duplicate wins.
  std::vector<Term> fresh;
  for (const Term& c : new_cookies.kids()) {
    if (!is_cookie(c) || c.at(2).at(4).is_true()) continue;
    auto it = std::find_if(fresh.begin(), fresh.end(), [&](const Term& x) { return x.at(1) == c.at(1); });
    if (it != fresh.end()) fresh.erase(it);
    fresh.push_back(c);
  }
  std::vector<Term> m;
  for (const Term& c_old : old_cookies.kids()) {
    auto it = std::find_if(fresh.begin(), fresh.end(), [&](const Term& x) { return x.at(1) == c_old.at(1); });
    if (it == fresh.end()) {
      m.push_back(c_old);
    } else {
      m.push_back(c_old.at(2).at(4).is_bot() ? *it : c_old);
    }
  }
  for (const Term& c_new : fresh) {
    bool in_old = std::any_of(old_cookies.kids().begin(), old_cookies.kids().end(),
                              [&](const Term& x) { return x.at(1) == c_new.at(1); });
    if (!in_old) m.push_back(c_new);
  }
  return Term::seq(std::move(m));
}

Term add_cookie(const Term& old_cookies, const Term& c) {
  std::vector<Term> m;
  for (const Term& x : old_cookies.kids()) {
    if (x.at(1) != c.at(1)) m.push_back(x);
  }
  m.push_back(c);
  return Term::seq(std::move(m));
}

std::vector<SubtermPath> navigable_windows(const SubtermPath& w, const Term& s) {
  const std::vector<SubtermPath> all = subwindows(s);
  auto origin_of = [&](const SubtermPath& p) -> std::optional<Term> {
    auto d = active_document(s, p);
    if (!d) return std::nullopt;
    return at_path(s, *d).at(doc::kOrigin);
  };
  const std::optional<Term> own = origin_of(w);
  auto same_origin = [&](const SubtermPath& p) {
    auto o = origin_of(p);
    return own && o && *o == *own;
  };
  std::vector<bool> in(all.size(), false);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const SubtermPath& p = all[i];
    const bool top_level = p.size() == 2;
    if (same_origin(p)) in[i] = true;
    if (top_level && is_prefix(p, w)) in[i] = true;
    if (!top_level) {
      for (const SubtermPath& q : all) {
        if (is_prefix(q, p) && same_origin(q)) in[i] = true;
      }
    }
  }
  // Opener clause, closed under iteration.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (in[i]) continue;
      const Term opener = at_path(s, all[i]).at(win::kOpener);
      for (std::size_t j = 0; j < all.size(); ++j) {
        if (in[j] && at_path(s, all[j]).at(win::kNonce) == opener) {
          in[i] = true;
          changed = true;
          break;
        }
      }
    }
  }
  std::vector<SubtermPath> out;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (in[i]) out.push_back(all[i]);
  }
  return out;
}

const ScriptFn* ScriptRegistry::find(const Term& script) const {
  if (!script.is_string()) return nullptr;
  auto it = scripts_.find(script.text());
  return it == scripts_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Browser relation

namespace {

struct Stop {};  // unwinds to the relation entry point

class BrowserRun {
 public:
  BrowserRun(const Browser& b, const Event& e, const Term& s, StepContext& ctx)
      : b_(b), e_(e), s_(s), st_(s), ctx_(ctx) {}

  std::vector<Emit> go(Term& state_out) {
    try {
      main();
    } catch (const Stop&) {
    }
    state_out = st_;
    return std::move(out_);
  }

 private:
  Term field(std::size_t i) const { return st_.at(i); }
  void set_field(std::size_t i, const Term& v) { st_ = replace_at(st_, {i}, v); }
  Term get(const SubtermPath& p) const { return at_path(st_, p); }
  void set(const SubtermPath& p, const Term& v) { st_ = replace_at(st_, p, v); }

  [[noreturn]] void stop_keep() { throw Stop{}; }
  [[noreturn]] void stop_revert() {
    st_ = s_;
    out_.clear();
    throw Stop{};
  }

  Term take_nonce() {
    Term n = ctx_.fresh();
    set_field(bs::kNonces, append(field(bs::kNonces), n));
    return n;
  }

  Term window_nonce(const SubtermPath& wp) const { return get(wp).at(win::kNonce); }

  std::optional<Term> active_origin(const SubtermPath& wp) const {
    auto d = active_document(st_, wp);
    if (!d) return std::nullopt;
    return get(*d).at(doc::kOrigin);
  }

  SubtermPath get_navigable_window(const SubtermPath& w, const Term& window) {
    if (window.is_string("_BLANK")) {
      Term n = take_nonce();
      Term nw = make_window(n, Term(), window_nonce(w));
      set_field(bs::kWindows, append(field(bs::kWindows), nw));
      return {bs::kWindows, field(bs::kWindows).len()};
    }
    for (const SubtermPath& p : navigable_windows(w, st_)) {
      if (window_nonce(p) == window) return p;
    }
    return w;
  }

  SubtermPath get_window(const SubtermPath& w, const Term& window) {
    for (const SubtermPath& p : subwindows(st_)) {
      if (window_nonce(p) == window) {
        auto o1 = active_origin(p);
        auto o2 = active_origin(w);
        if (o1 && o2 && *o1 == *o2) return p;
        return w;
      }
    }
    return w;
  }

  void cancel_nav(const Term& n) {
    std::vector<Term> pr;
    for (const Term& x : field(bs::kPendingRequests).kids()) {
      if (!(x.len() == 4 && x.at(1) == n)) pr.push_back(x);
    }
    set_field(bs::kPendingRequests, Term::seq(std::move(pr)));
    std::vector<Term> pd;
    for (const Term& x : field(bs::kPendingDns).kids()) {
      if (!(x.len() == 2 && x.at(2).len() == 3 && x.at(2).at(1) == n)) pd.push_back(x);
    }
    set_field(bs::kPendingDns, Term::seq(std::move(pd)));
  }

  [[noreturn]] void send(const Term& reference, HttpRequest req, Term protocol, const Term& origin,
                         const Term& initiator) {
    if (contains(field(bs::kSts), req.host)) protocol = proto_s();
    std::vector<Term> cookies;
    for (const Term& c : dict_get(field(bs::kCookies), req.host).kids()) {
      if (!is_cookie(c)) continue;
      if (c.at(2).at(2).is_true() && protocol != proto_s()) continue;
      cookies.push_back(Term::seq({c.at(1), c.at(2).at(1)}));
    }
    req.headers = dict_put(req.headers, S("Cookie"), Term::seq(std::move(cookies)));
    if (!origin.is_bot()) req.headers = dict_put(req.headers, S("Origin"), origin);
    Term n = take_nonce();
    Term msg = req.term();
    set_field(bs::kPendingDns, dict_put(field(bs::kPendingDns), n, Term::seq({reference, msg, protocol})));
    ctx_.note(note::kRequestPrepared, Term::seq({n, msg, initiator}));
    out_.push_back({field(bs::kDnsAddress), e_.receiver, dns_request(req.host, n)});
    stop_keep();
  }

  static Term storage_put(const Term& d, const Term& k, const Term& v) {
    if (v.is_empty_seq() && !dict_has(d, k)) return d;
    return dict_put(d, k, v);
  }

  [[noreturn]] void run_script(const SubtermPath& w, const SubtermPath& d) {
    const Term n = take_nonce();
    const Term dterm = get(d);
    const Term tree = clean(st_, dterm);
    const Term origin = dterm.at(doc::kOrigin);
    const Term host = origin.at(1);
    std::vector<Term> cookies;
    for (const Term& c : dict_get(field(bs::kCookies), host).kids()) {
      if (!is_cookie(c) || !c.at(2).at(4).is_bot()) continue;
      if (c.at(2).at(2).is_true() && origin.at(2) != proto_s()) continue;
      cookies.push_back(Term::seq({c.at(1), c.at(2).at(1)}));
    }
    const Term tlw_nonce = get({bs::kWindows, d[1]}).at(win::kNonce);
    const Term ss_key = Term::seq({origin, tlw_nonce});
    const Term session_storage = dict_get(field(bs::kSessionStorage), ss_key);
    const Term local_storage = dict_get(field(bs::kLocalStorage), origin);
    const Term secret = dict_get(field(bs::kSecrets), origin);
    const ScriptFn* fn = b_.config().scripts ? b_.config().scripts->find(dterm.at(doc::kScript)) : nullptr;
    if (fn == nullptr) stop_revert();
    const Term in = Term::seq({tree, dterm.at(doc::kNonce), dterm.at(doc::kScriptState), dterm.at(doc::kScriptInput),
                               Term::seq(cookies), local_storage, session_storage, field(bs::kIds), secret});
    ctx_.note(note::kScriptRun, Term::seq({dterm.at(doc::kNonce), origin, dterm.at(doc::kScript), tree}));
    const std::uint64_t first = ctx_.next_nonce_index();
    const Term out = (*fn)(in, ctx_);
    const std::uint64_t last = ctx_.next_nonce_index();
    if (out.len() != 5) stop_revert();
    // Fresh nonces the script used become used nonces of the browser.
    if (last > first) {
      std::set<std::uint64_t> used;
      std::vector<Term> stack{out};
      while (!stack.empty()) {
        Term t = stack.back();
        stack.pop_back();
        if (t.is_nonce()) {
          if (t.text() == b_.name() && t.index() >= first && t.index() < last) used.insert(t.index());
        } else {
          for (const Term& k : t.kids()) stack.push_back(k);
        }
      }
      for (auto i : used) set_field(bs::kNonces, append(field(bs::kNonces), Term::nonce(b_.name(), i)));
    }
    set_field(bs::kCookies,
              dict_put(field(bs::kCookies), host, cookie_merge(dict_get(field(bs::kCookies), host), out.at(2))));
    set_field(bs::kLocalStorage, storage_put(field(bs::kLocalStorage), origin, out.at(3)));
    set_field(bs::kSessionStorage, storage_put(field(bs::kSessionStorage), ss_key, out.at(4)));
    set(extend(d, {doc::kScriptState}), out.at(1));
    command(w, d, n, out.at(5));
  }

  [[noreturn]] void command(const SubtermPath& w, const SubtermPath& d, const Term& n, const Term& cmd) {
    const Term initiator = Term::seq({S("doc"), get(d).at(doc::kNonce)});
    if (cmd.is_empty_seq() || cmd.len() == 0 || !cmd.at(1).is_string()) stop_keep();
    const std::string& tag = cmd.at(1).text();
    if (tag == "HREF" && cmd.len() == 3 && is_url(cmd.at(2))) {
      const Term url = cmd.at(2);
      SubtermPath w2 = get_navigable_window(w, cmd.at(3));
      HttpRequest req{n, S("GET"), url.at(3), url.at(4), url.at(5), Term(), Term()};
      cancel_nav(window_nonce(w2));
      send(window_nonce(w2), req, url.at(2), Term::bot(), initiator);
    }
    if (tag == "IFRAME" && cmd.len() == 3 && is_url(cmd.at(2))) {
      const Term url = cmd.at(2);
      SubtermPath w2 = get_window(w, cmd.at(3));
      auto ad = active_document(st_, w2);
      if (!ad) stop_keep();
      HttpRequest req{n, S("GET"), url.at(3), url.at(4), url.at(5), Term(), Term()};
      Term n2 = take_nonce();
      SubtermPath subs = extend(*ad, {doc::kSubwindows});
      set(subs, append(get(subs), make_window(n2, Term(), Term::bot())));
      send(n2, req, url.at(2), Term::bot(), initiator);
    }
    if (tag == "FORM" && cmd.len() == 5 && is_url(cmd.at(2))) {
      const Term url = cmd.at(2);
      const Term method = cmd.at(3);
      if (!method.is_string("GET") && !method.is_string("POST")) stop_keep();
      SubtermPath w2 = get_navigable_window(w, cmd.at(5));
      Term body, params, origin;
      if (method.is_string("GET")) {
        params = cmd.at(4);
        origin = Term::bot();
      } else {
        body = cmd.at(4);
        params = url.at(5);
        origin = get(d).at(doc::kOrigin);
      }
      HttpRequest req{n, method, url.at(3), url.at(4), params, Term(), body};
      cancel_nav(window_nonce(w2));
      send(window_nonce(w2), req, url.at(2), origin, initiator);
    }
    if ((tag == "SETSCRIPT" || tag == "SETSCRIPTSTATE") && cmd.len() == 3) {
      SubtermPath w2 = get_window(w, cmd.at(2));
      auto ad = active_document(st_, w2);
      if (!ad) stop_keep();
      set(extend(*ad, {tag == "SETSCRIPT" ? doc::kScript : doc::kScriptState}), cmd.at(3));
      stop_keep();
    }
    if (tag == "XMLHTTPREQUEST" && cmd.len() == 5 && is_url(cmd.at(2))) {
      const Term url = cmd.at(2);
      const Term method = cmd.at(3);
      if (method.is_string("CONNECT") || method.is_string("TRACE") || method.is_string("TRACK")) stop_keep();
      const Term dorigin = get(d).at(doc::kOrigin);
      if (url.at(3) != dorigin.at(1) || url.at(2) != dorigin.at(2)) stop_keep();
      Term data = cmd.at(4);
      Term origin = dorigin;
      if (method.is_string("GET") || method.is_string("HEAD")) {
        data = Term();
        origin = Term::bot();
      }
      HttpRequest req{n, method, url.at(3), url.at(4), url.at(5), Term(), data};
      send(Term::seq({get(d).at(doc::kNonce), cmd.at(5)}), req, url.at(2), origin, initiator);
    }
    if ((tag == "BACK" || tag == "FORWARD") && cmd.len() == 2) {
      SubtermPath w2 = get_navigable_window(w, cmd.at(2));
      const Term wd = get(w2);
      auto j = active_index(wd);
      const std::size_t count = wd.at(win::kDocuments).len();
      if (j) {
        std::optional<std::size_t> to;
        if (tag == "BACK" && *j > 1) to = *j - 1;
        if (tag == "FORWARD" && *j + 1 <= count) to = *j + 1;
        if (to) {
          set(extend(w2, {win::kDocuments, *j, doc::kActive}), Term::bot());
          set(extend(w2, {win::kDocuments, *to, doc::kActive}), kTrue());
          cancel_nav(window_nonce(w2));
        }
      }
      stop_keep();
    }
    if (tag == "CLOSE" && cmd.len() == 2) {
      SubtermPath w2 = get_navigable_window(w, cmd.at(2));
      SubtermPath container(w2.begin(), w2.end() - 1);
      const std::size_t pos = w2.back();
      std::vector<Term> kids = get(container).kids();
      kids.erase(kids.begin() + static_cast<std::ptrdiff_t>(pos - 1));
      set(container, Term::seq(std::move(kids)));
      stop_keep();
    }
    if (tag == "POSTMESSAGE" && cmd.len() == 4) {
      const Term target = cmd.at(2);
      const Term origin = cmd.at(4);
      for (const SubtermPath& p : subwindows(st_)) {
        if (window_nonce(p) != target) continue;
        auto ad = active_document(st_, p);
        if (!ad) break;
        const Term td = get(*ad);
        if (!origin.is_bot() && td.at(doc::kOrigin) != origin) break;
        const Term sender_origin = get(d).at(doc::kOrigin);
        SubtermPath si = extend(*ad, {doc::kScriptInput});
        set(si, append(get(si), Term::seq({S("POSTMESSAGE"), window_nonce(w), sender_origin, cmd.at(3)})));
        ctx_.note(note::kPmDelivered, Term::seq({td.at(doc::kNonce), td.at(doc::kOrigin), sender_origin, cmd.at(3)}));
        break;
      }
      stop_keep();
    }
    stop_keep();
  }

  [[noreturn]] void process_response(const HttpResponse& resp, const Term& reference, const HttpRequest& request,
                                     const Term& protocol) {
    const Term n = take_nonce();
    const Term& headers = resp.headers;
    if (dict_has(headers, S("Set-Cookie"))) {
      for (const Term& c : dict_get(headers, S("Set-Cookie")).kids()) {
        if (!is_cookie(c)) continue;
        set_field(bs::kCookies, dict_put(field(bs::kCookies), request.host,
                                         add_cookie(dict_get(field(bs::kCookies), request.host), c)));
      }
    }
    if (dict_has(headers, S("Strict-Transport-Security")) && protocol == proto_s() &&
        !contains(field(bs::kSts), request.host)) {
      set_field(bs::kSts, append(field(bs::kSts), request.host));
    }
    const Term status = resp.status;
    if (dict_has(headers, S("Location")) && (status.is_string("303") || status.is_string("307"))) {
      const Term url = dict_get(headers, S("Location"));
      Term method = request.method;
      Term body = request.body;
      Term origin = Term::bot();
      if (dict_has(request.headers, S("Origin"))) {
        origin = Term::seq({dict_get(request.headers, S("Origin")), Term::seq({request.host, protocol})});
      }
      if (status.is_string("303") && !method.is_string("GET") && !method.is_string("HEAD")) {
        method = S("GET");
        body = Term();
      }
      if (!find_window(st_, reference)) stop_revert();
      if (!is_url(url)) stop_keep();
      HttpRequest req{n, method, url.at(3), url.at(4), url.at(5), Term(), body};
      send(reference, req, url.at(2), origin, Term::seq({S("redirect"), request.nonce}));
    }
    if (auto wp = find_window(st_, reference)) {
      const Term script = resp.body.at(1);
      const Term scriptstate = resp.body.at(2);
      const Term origin = Term::seq({request.host, protocol});
      const Term d = make_document(n, origin, script, scriptstate, Term(), Term(), true);
      SubtermPath dp = extend(*wp, {win::kDocuments});
      const Term documents = get(dp);
      if (documents.is_empty_seq()) {
        set(dp, Term::seq({d}));
      } else {
        std::vector<Term> kept;
        auto j = active_index(get(*wp));
        const std::size_t keep = j ? *j : documents.len();
        for (std::size_t i = 1; i <= keep; ++i) {
          Term x = documents.at(i);
          if (j && i == *j) x = replace_at(x, {doc::kActive}, Term::bot());
          kept.push_back(x);
        }
        kept.push_back(d);
        set(dp, Term::seq(std::move(kept)));
      }
      ctx_.note(note::kDocCreated, Term::seq({n, origin, script}));
      stop_keep();
    }
    for (const SubtermPath& wp : subwindows(st_)) {
      auto ad = active_document(st_, wp);
      if (ad && get(*ad).at(doc::kNonce) == reference.at(1)) {
        SubtermPath si = extend(*ad, {doc::kScriptInput});
        set(si, append(get(si), Term::seq({S("XMLHTTPREQUEST"), resp.body, reference.at(2)})));
        break;
      }
    }
    stop_keep();
  }

  [[noreturn]] void corrupted(bool close) {
    const Term saved_nonces = s_.at(bs::kNonces);
    set_field(bs::kPendingRequests, Term::seq({e_.msg, s_.at(bs::kPendingRequests)}));
    if (close) set_field(bs::kNonces, saved_nonces);
    const auto& leak = b_.config().leak_addresses;
    std::size_t c = ctx_.choose("b.corrupt", leak.size() + 1, [&](std::size_t i) {
      return i == 0 ? std::string("none") : "leak:" + render(leak[i - 1]);
    });
    if (c > 0) out_.push_back({leak[c - 1], e_.receiver, st_});
    stop_keep();
  }

  void main() {
    const Term& corrupt = s_.at(bs::kIsCorrupted);
    if (corrupt.is_string("FULLCORRUPT")) corrupted(false);
    if (corrupt.is_string("CLOSECORRUPT")) corrupted(true);
    const Term n = take_nonce();
    const Term& m = e_.msg;
    if (m.is_string("TRIGGER")) {
      std::size_t sw = ctx_.choose("b.action", {"script", "open"});
      if (sw == 0) {
        std::vector<SubtermPath> cands;
        std::vector<std::string> names;
        for (const SubtermPath& p : subwindows(st_)) {
          auto ad = active_document(st_, p);
          if (!ad) continue;
          cands.push_back(p);
          const Term d = get(*ad);
          std::string name = d.at(doc::kScript).is_string() ? d.at(doc::kScript).text() : render(d.at(doc::kScript));
          names.push_back(name + "@" + render(d.at(doc::kOrigin).at(1)));
        }
        if (cands.empty()) stop_keep();
        std::size_t i = ctx_.choose("b.window", names);
        run_script(cands[i], *active_document(st_, cands[i]));
      }
      set_field(bs::kWindows, append(field(bs::kWindows), make_window(n, Term(), Term::bot())));
      const auto& hosts = b_.config().open_hosts;
      const auto& paths = b_.config().open_paths;
      if (hosts.empty() || paths.empty()) stop_keep();
      const std::size_t per_host = 2 * paths.size();
      std::size_t u = ctx_.choose("b.url", hosts.size() * per_host, [&](std::size_t i) {
        const Term& h = hosts[i / per_host];
        std::size_t r = i % per_host;
        Term proto = r < paths.size() ? proto_s() : proto_p();
        return url_label(make_url(proto, h, S(paths[r % paths.size()])));
      });
      const Term& host = hosts[u / per_host];
      const std::size_t r = u % per_host;
      const Term protocol = r < paths.size() ? proto_s() : proto_p();
      const Term n2 = take_nonce();
      HttpRequest req{n2, S("GET"), host, S(paths[r % paths.size()]), Term(), Term(), Term()};
      send(n, req, protocol, Term::bot(), Term::seq({S("user")}));
    }
    if (m.is_string("FULLCORRUPT")) {
      set_field(bs::kIsCorrupted, m);
      stop_keep();
    }
    if (m.is_string("CLOSECORRUPT")) {
      set_field(bs::kSecrets, Term());
      set_field(bs::kWindows, Term());
      set_field(bs::kPendingDns, Term());
      set_field(bs::kPendingRequests, Term());
      set_field(bs::kSessionStorage, Term());
      std::vector<Term> jar;
      for (const Term& entry : s_.at(bs::kCookies).kids()) {
        std::vector<Term> keep;
        for (const Term& c : entry.at(2).kids()) {
          if (is_cookie(c) && c.at(2).at(3).is_bot()) keep.push_back(c);
        }
        jar.push_back(Term::seq({entry.at(1), Term::seq(std::move(keep))}));
      }
      set_field(bs::kCookies, Term::seq(std::move(jar)));
      set_field(bs::kIsCorrupted, m);
      stop_keep();
    }
    if (m.is_compound(Sym::EncS)) {
      const Term pending = field(bs::kPendingRequests);
      for (std::size_t i = 1; i <= pending.len(); ++i) {
        const Term entry = pending.at(i);
        if (entry.len() != 4 || entry.at(3).is_bot()) continue;
        const Term plain = dec_s(m, entry.at(3));
        if (!plain.at(1).is_string("HTTPResp")) continue;
        auto resp = HttpResponse::parse(plain);
        auto req = HttpRequest::parse(entry.at(2));
        if (!resp || !req || resp->nonce != req->nonce) stop_revert();
        std::vector<Term> rest = pending.kids();
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i - 1));
        set_field(bs::kPendingRequests, Term::seq(std::move(rest)));
        ctx_.note(note::kResponseAccepted, Term::seq({entry.at(2), entry.at(3), plain, proto_s()}));
        process_response(*resp, entry.at(1), *req, proto_s());
      }
    }
    if (m.at(1).is_string("HTTPResp")) {
      auto resp = HttpResponse::parse(m);
      const Term pending = field(bs::kPendingRequests);
      for (std::size_t i = 1; resp && i <= pending.len(); ++i) {
        const Term entry = pending.at(i);
        if (entry.len() != 4 || !entry.at(3).is_bot()) continue;
        auto req = HttpRequest::parse(entry.at(2));
        if (!req || req->nonce != resp->nonce) continue;
        std::vector<Term> rest = pending.kids();
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i - 1));
        set_field(bs::kPendingRequests, Term::seq(std::move(rest)));
        ctx_.note(note::kResponseAccepted, Term::seq({entry.at(2), Term::bot(), m, proto_p()}));
        process_response(*resp, entry.at(1), *req, proto_p());
      }
    }
    if (m.len() == 3 && m.at(1).is_string("DNSResolved")) {
      const Term dn = m.at(3);
      const Term result = m.at(2);
      if (!dict_has(s_.at(bs::kPendingDns), dn)) stop_revert();
      const Term entry = dict_get(s_.at(bs::kPendingDns), dn);
      const Term reference = entry.at(1);
      Term message = entry.at(2);
      const Term protocol = entry.at(3);
      const Term request = message;
      Term key = Term::bot();
      if (protocol == proto_s()) {
        key = take_nonce();
        set_field(bs::kPendingRequests,
                  append(field(bs::kPendingRequests), Term::seq({reference, message, key, result})));
        auto req = HttpRequest::parse(message);
        const Term host = req ? req->host : Term();
        message = enc_a(Term::seq({message, key}), dict_get(field(bs::kKeyMapping), host));
      } else {
        set_field(bs::kPendingRequests,
                  append(field(bs::kPendingRequests), Term::seq({reference, message, Term::bot(), result})));
      }
      set_field(bs::kPendingDns, dict_remove(field(bs::kPendingDns), dn));
      ctx_.note(note::kRequestIssued, Term::seq({dn, request, key, protocol, message}));
      out_.push_back({result, e_.receiver, message});
      stop_keep();
    }
    stop_revert();
  }

  const Browser& b_;
  const Event& e_;
  const Term s_;
  Term st_;
  StepContext& ctx_;
  std::vector<Emit> out_;
};

}  // namespace

Browser::Browser(std::string name, std::vector<Term> addresses, BrowserConfig cfg)
    : Process(std::move(name), Role::Browser, std::move(addresses)), cfg_(std::move(cfg)) {}

std::vector<Emit> Browser::relation(const Event& e, Term& state, StepContext& ctx) const {
  BrowserRun run(*this, e, state, ctx);
  return run.go(state);
}

bool Browser::honest(const Term& state) const { return state.at(bs::kIsCorrupted).is_bot(); }

}  // namespace dyweb

#include "dyweb/browserid.h"

#include <functional>

#include "dyweb/webdata.h"

namespace dyweb {

namespace {

const Term kBot = Term::bot();
const Term kTrue = Term::truth();

Term num(std::size_t n) { return S(std::to_string(n)); }

std::optional<std::size_t> as_num(const Term& t) {
  if (!t.is_string() || t.text().empty() || t.text().size() > 9) return std::nullopt;
  for (char c : t.text())
    if (c < '0' || c > '9') return std::nullopt;
  return static_cast<std::size_t>(std::stoul(t.text()));
}

// Field update that pads short states with BOT.
Term setf(const Term& s, std::size_t i, const Term& v) {
  std::vector<Term> k = s.is_seq() ? s.kids() : std::vector<Term>{};
  while (k.size() < i) k.push_back(kBot);
  k[i - 1] = v;
  return Term::seq(std::move(k));
}

Term pad(const Term& s, std::size_t n, const Term& fill) {
  std::vector<Term> k = s.is_seq() ? s.kids() : std::vector<Term>{};
  while (k.size() < n) k.push_back(fill);
  return Term::seq(std::move(k));
}

Term sts_header() { return Term::seq({S("Strict-Transport-Security"), kTrue}); }

Term ok_response(const Term& n, const Term& headers, const Term& body, const Term& k) {
  return https_wrap_response(HttpResponse{n, S("200"), headers, body}.term(), k);
}

Term lpo_url(const Term& lpo, std::string_view path) { return make_url(proto_s(), lpo, S(path)); }

bool pm_is(const Term& m, std::string_view tag) { return m.is_string(tag) || m.at(1).is_string(tag); }

// Document location in a cleaned tree.
struct Loc {
  Term window;
  Term doc;
  Term parent;  // nonce of the parent window, BOT for top-level windows
};

Term doc_subwindows(const Term& d) { return d.len() == 2 ? d.at(2) : d.at(doc::kSubwindows); }

bool find_loc(const Term& windows, const Term& docnonce, const Term& parent, Loc& out) {
  for (const Term& w : windows.kids()) {
    for (const Term& d : w.at(win::kDocuments).kids()) {
      if (d.at(1) == docnonce) {
        out = Loc{w, d, parent};
        return true;
      }
      if (find_loc(doc_subwindows(d), docnonce, w.at(win::kNonce), out)) return true;
    }
  }
  return false;
}

void all_windows(const Term& windows, std::vector<Term>& out) {
  for (const Term& w : windows.kids()) {
    out.push_back(w);
    for (const Term& d : w.at(win::kDocuments).kids()) all_windows(doc_subwindows(d), out);
  }
}

// Script input accessors.
struct In {
  Term tree, docnonce, state, inputs, cookies, ls, ss, ids, secret;
  explicit In(const Term& t)
      : tree(t.at(1)),
        docnonce(t.at(2)),
        state(t.at(3)),
        inputs(t.at(4)),
        cookies(t.at(5)),
        ls(t.at(6)),
        ss(t.at(7)),
        ids(t.at(8)),
        secret(t.at(9)) {}
};

Term out(const Term& s, const In& in, const Term& cmd) { return Term::seq({s, in.cookies, in.ls, in.ss, cmd}); }
Term out(const Term& s, const In& in, const Term& ls, const Term& ss, const Term& cmd) {
  return Term::seq({s, in.cookies, ls, ss, cmd});
}
Term unchanged(const In& in) { return out(in.state, in, Term()); }

Term pm(const Term& target, const Term& msg, const Term& origin) {
  return Term::seq({S("POSTMESSAGE"), target, msg, origin});
}
Term xhr(const Term& url, std::string_view method, const Term& body, const Term& ref) {
  return Term::seq({S("XMLHTTPREQUEST"), url, S(method), body, ref});
}

std::string input_label(std::size_t i, const Term& input) {
  std::string s = std::to_string(i);
  if (input.at(1).is_string("POSTMESSAGE")) {
    const Term m = input.at(4);
    s += ":pm";
    if (m.is_string()) s += ":" + m.text();
    else if (m.at(1).is_string()) s += ":" + m.at(1).text();
  } else if (input.at(1).is_string("XMLHTTPREQUEST")) {
    s += ":xhr";
  }
  return s;
}

Term idx_nonce(const Term& subwindows, const Term& index) {
  auto i = as_num(index);
  if (!i) return Term::notdef();
  return subwindows.at(*i).at(win::kNonce);
}

// Shared provisioning steps of the CIF and LD once they run the PIF.
struct PifChannel {
  Term pif_nonce, idp_origin;
};

PifChannel pif_channel(const In& in, const Term& email, const Term& pif_index) {
  return {idx_nonce(tree_subwindows(in.tree, in.docnonce), pif_index), Term::seq({email.at(2), proto_s()})};
}

// --- script_lpo_cif ----------------------------------------------------------

Term script_cif(const Term& raw, StepContext& ctx, const BrowserIdConfig& cfg) {
  const In in(raw);
  Term s = pad(in.state, cif_f::kEmail, kBot);
  Term ls = in.ls;
  const Term q = s.at(cif_f::kQ);
  const Term origin_lpo = https_origin(cfg.lpo_domain);

  if (q.is_string("init")) {
    s = setf(s, cif_f::kQ, S("default"));
    return out(s, in, pm(tree_parent_window(in.tree, in.docnonce), Term::seq({S("cifready"), Term()}), kBot));
  }
  if (q.is_string("default")) {
    auto [input, s2] = choose_input(s, cif_f::kHandled, in.inputs, ctx);
    s = s2;
    if (input.at(1).is_string("POSTMESSAGE") && input.at(2) == tree_parent_window(in.tree, in.docnonce)) {
      const Term sender_origin = input.at(3);
      const Term m = input.at(4);
      const Term tag = m.at(1);
      if (m.len() == 2 && tag.is_string("loaded")) {
        if (s.at(cif_f::kRequestOrigin).is_bot()) s = setf(s, cif_f::kRequestOrigin, sender_origin);
        s = setf(s, cif_f::kLoggedInUser, m.at(2));
        if (s.at(cif_f::kPause).is_true()) return out(s, in, Term());
        s = setf(s, cif_f::kQ, S(s.at(cif_f::kContext).is_bot() ? "fetchContext" : "checkAndEmit"));
        return out(s, in, Term());
      }
      if (m == Term::seq({S("dlgRun"), Term()})) return out(setf(s, cif_f::kPause, kTrue), in, Term());
      if (m == Term::seq({S("dlgCmplt"), Term()})) {
        s = setf(s, cif_f::kPause, kBot);
        return out(setf(s, cif_f::kQ, S("fetchContext")), in, Term());
      }
      if (m.len() == 2 && tag.is_string("loggedInUser")) return out(setf(s, cif_f::kLoggedInUser, m.at(2)), in, Term());
      if (m == Term::seq({S("logout"), Term()})) {
        if (s.at(cif_f::kRequestOrigin).is_bot()) s = setf(s, cif_f::kRequestOrigin, sender_origin);
        s = setf(s, cif_f::kLoggedInUser, kBot);
        ls = dict_put(ls, S("siteInfo"), dict_remove(dict_get(ls, S("siteInfo")), s.at(cif_f::kRequestOrigin)));
        s = setf(s, cif_f::kQ, S("sendLogout"));
        return out(s, in, ls, in.ss, Term());
      }
    }
    return unchanged(in);
  }
  if (q.is_string("fetchContext")) {
    const Term ref = ctx.fresh();
    s = setf(s, cif_f::kRefCtx, ref);
    s = setf(s, cif_f::kQ, S("receiveContext"));
    return out(s, in, xhr(lpo_url(cfg.lpo_domain, "/ctx"), "GET", Term(), ref));
  }
  if (q.is_string("receiveContext")) {
    auto [input, s2] = choose_input(s, cif_f::kHandled, in.inputs, ctx);
    if (input.at(1).is_string("XMLHTTPREQUEST") && input.at(3) == s2.at(cif_f::kRefCtx)) {
      s = setf(s2, cif_f::kContext, input.at(2));
      return out(setf(s, cif_f::kQ, S("checkAndEmit")), in, Term());
    }
    return unchanged(in);
  }
  if (q.is_string("checkAndEmit")) {
    const Term email = dict_get(dict_get(ls, S("siteInfo")), s.at(cif_f::kRequestOrigin));
    s = setf(s, cif_f::kEmail, email);
    const Term liu = s.at(cif_f::kLoggedInUser);
    const bool liu_set = !(liu.is_empty_seq() || liu.is_bot());
    if (!email.is_empty_seq() && (!liu_set || liu != email) && s.at(cif_f::kContext).at(1).is_true()) {
      s = setf(s, cif_f::kQ, S("startPIF"));
      s = setf(s, cif_f::kPifIndex, num(tree_subwindows(in.tree, in.docnonce).len() + 1));
      return out(s, in, Term::seq({S("IFRAME"), make_url(proto_s(), email.at(2), S("/pif")), S("_SELF")}));
    }
    s = setf(s, cif_f::kQ, S(liu.is_empty_seq() ? "default" : "sendLogout"));
    return out(s, in, Term());
  }
  if (q.is_string("startPIF") || q.is_string("runPIF")) {
    const PifChannel ch = pif_channel(in, s.at(cif_f::kEmail), s.at(cif_f::kPifIndex));
    auto [input, s2] = choose_input(s, cif_f::kHandled, in.inputs, ctx);
    s = s2;
    if (!input.at(1).is_string("POSTMESSAGE") || input.at(2) != ch.pif_nonce || input.at(3) != ch.idp_origin)
      return unchanged(in);
    const Term m = input.at(4);
    if (q.is_string("startPIF")) {
      if (!pm_is(m, "ping")) return unchanged(in);
      s = setf(s, cif_f::kQ, S("runPIF"));
      return out(s, in, pm(ch.pif_nonce, S("pong"), ch.idp_origin));
    }
    const Term tag = m.at(1);
    if (tag.is_string("beginProvisioning"))
      return out(s, in, pm(ch.pif_nonce, Term::seq({m.at(2), s.at(cif_f::kEmail)}), ch.idp_origin));
    if (tag.is_string("genKeyPair")) {
      const Term key = ctx.fresh();
      s = setf(s, cif_f::kKey, key);
      return out(s, in, pm(ch.pif_nonce, Term::seq({m.at(2), pub(key)}), ch.idp_origin));
    }
    if (tag.is_string("registerCertificate")) {
      const Term uc = m.at(2);
      const Term email = s.at(cif_f::kEmail);
      if (!cfg.fix || (extract(uc).at(1) == email && !email.is_empty_seq())) {
        s = setf(s, cif_f::kUc, uc);
        s = setf(s, cif_f::kQ, S("createCAPforRP"));
      }
      return out(s, in, Term());
    }
    if (tag.is_string("raiseProvisioningFailure")) {
      s = setf(s, cif_f::kLoggedInUser, kBot);
      return out(setf(s, cif_f::kQ, S("sendLogout")), in, Term());
    }
    return unchanged(in);
  }
  if (q.is_string("createCAPforRP")) {
    const Term ia = sig(s.at(cif_f::kRequestOrigin), s.at(cif_f::kKey));
    const Term cap = Term::seq({s.at(cif_f::kUc), ia});
    s = setf(s, cif_f::kQ, S("null"));
    return out(s, in,
               pm(tree_parent_window(in.tree, in.docnonce), Term::seq({S("login"), cap}), s.at(cif_f::kRequestOrigin)));
  }
  if (q.is_string("sendLogout")) {
    s = setf(s, cif_f::kQ, S("default"));
    return out(s, in, pm(tree_parent_window(in.tree, in.docnonce), Term::seq({S("logout"), Term()}), kBot));
  }
  return unchanged(in);
}

// --- script_lpo_ld -----------------------------------------------------------

Term script_ld(const Term& raw, StepContext& ctx, const BrowserIdConfig& cfg) {
  const In in(raw);
  Term s = pad(in.state, ld_f::kPifIndex, kBot);
  const Term q = s.at(ld_f::kQ);

  if (q.is_string("init")) {
    s = setf(s, ld_f::kQ, S("start"));
    return out(s, in, pm(tree_opener_window(in.tree, in.docnonce), Term::seq({S("ldready"), Term()}), kBot));
  }
  if (q.is_string("start")) {
    auto [input, s2] = choose_input(s, ld_f::kHandled, in.inputs, ctx);
    if (input.at(1).is_string("POSTMESSAGE") && input.at(4) == Term::seq({S("request"), Term()})) {
      s = setf(s2, ld_f::kRequestOrigin, input.at(3));
      const Term ref = ctx.fresh();
      s = setf(s, ld_f::kRefCtx, ref);
      s = setf(s, ld_f::kQ, S("receiveContext"));
      return out(s, in, xhr(lpo_url(cfg.lpo_domain, "/ctx"), "GET", Term(), ref));
    }
    return unchanged(in);
  }
  if (q.is_string("receiveContext")) {
    auto [input, s2] = choose_input(s, ld_f::kHandled, in.inputs, ctx);
    if (!(input.at(1).is_string("XMLHTTPREQUEST") && input.at(3) == s2.at(ld_f::kRefCtx))) return unchanged(in);
    s = setf(s2, ld_f::kContext, input.at(2));
    s = setf(s, ld_f::kQ, S("startPIF"));
    Term ss = in.ss;
    const Term idpnonce = dict_get(in.ss, S("idpnonce"));
    if (idpnonce.is_empty_seq() || dict_get(in.ls, idpnonce).is_empty_seq()) {
      if (in.ids.len() == 0) return unchanged(in);
      std::size_t k = ctx.choose("ld.email", in.ids.len(), [&](std::size_t i) { return identity_label(in.ids.at(i + 1)); });
      s = setf(s, ld_f::kEmail, in.ids.at(k + 1));
    } else {
      s = setf(s, ld_f::kEmail, dict_get(in.ls, idpnonce));
      ss = dict_remove(ss, S("idpnonce"));
    }
    s = setf(s, ld_f::kPifIndex, num(tree_subwindows(in.tree, in.docnonce).len() + 1));
    const Term url = make_url(proto_s(), s.at(ld_f::kEmail).at(2), S("/pif"));
    return out(s, in, in.ls, ss, Term::seq({S("IFRAME"), url, S("_SELF")}));
  }
  if (q.is_string("startPIF") || q.is_string("runPIF")) {
    const PifChannel ch = pif_channel(in, s.at(ld_f::kEmail), s.at(ld_f::kPifIndex));
    auto [input, s2] = choose_input(s, ld_f::kHandled, in.inputs, ctx);
    s = s2;
    if (!input.at(1).is_string("POSTMESSAGE") || input.at(2) != ch.pif_nonce || input.at(3) != ch.idp_origin)
      return unchanged(in);
    const Term m = input.at(4);
    if (q.is_string("startPIF")) {
      if (!pm_is(m, "ping")) return unchanged(in);
      s = setf(s, ld_f::kQ, S("runPIF"));
      return out(s, in, pm(ch.pif_nonce, S("pong"), ch.idp_origin));
    }
    const Term tag = m.at(1);
    if (tag.is_string("beginProvisioning"))
      return out(s, in, pm(ch.pif_nonce, Term::seq({m.at(2), s.at(ld_f::kEmail)}), ch.idp_origin));
    if (tag.is_string("genKeyPair")) {
      const Term key = ctx.fresh();
      s = setf(s, ld_f::kKey, key);
      return out(s, in, pm(ch.pif_nonce, Term::seq({m.at(2), pub(key)}), ch.idp_origin));
    }
    if (tag.is_string("registerCertificate")) {
      const Term uc = m.at(2);
      const Term email = s.at(ld_f::kEmail);
      if (!cfg.fix || (extract(uc).at(1) == email && !email.is_empty_seq())) {
        s = setf(s, ld_f::kUc, uc);
        const bool logged_in = s.at(ld_f::kContext).at(1).is_true();
        s = setf(s, ld_f::kQ, S(logged_in ? "createCAPforRP" : "createCAPforLPO"));
      }
      return out(s, in, Term());
    }
    if (tag.is_string("raiseProvisioningFailure")) {
      const Term idpnonce = ctx.fresh();
      const Term ls = dict_put(in.ls, idpnonce, s.at(ld_f::kEmail));
      const Term ss = dict_put(in.ss, S("idpnonce"), idpnonce);
      const Term url = make_url(proto_s(), s.at(ld_f::kEmail).at(2), Term());
      return out(s, in, ls, ss, Term::seq({S("HREF"), url, S("_SELF")}));
    }
    return unchanged(in);
  }
  if (q.is_string("createCAPforLPO")) {
    const Term ia = sig(https_origin(cfg.lpo_domain), s.at(ld_f::kKey));
    const Term cap = Term::seq({s.at(ld_f::kUc), ia});
    const Term body = Term::seq({cap, s.at(ld_f::kContext).at(2)});
    const Term ref = ctx.fresh();
    s = setf(s, ld_f::kRefAuth, ref);
    s = setf(s, ld_f::kQ, S("receiveLPOauthresponse"));
    return out(s, in, xhr(lpo_url(cfg.lpo_domain, "/auth"), "POST", body, ref));
  }
  if (q.is_string("receiveLPOauthresponse")) {
    auto [input, s2] = choose_input(s, ld_f::kHandled, in.inputs, ctx);
    if (input.at(1).is_string("XMLHTTPREQUEST") && input.at(3) == s2.at(ld_f::kRefAuth) && input.at(2).is_true()) {
      Term context = s2.at(ld_f::kContext);
      context = setf(context, 1, kTrue);
      s = setf(s2, ld_f::kContext, context);
      return out(setf(s, ld_f::kQ, S("createCAPforRP")), in, Term());
    }
    return unchanged(in);
  }
  if (q.is_string("createCAPforRP")) {
    const Term origin = s.at(ld_f::kRequestOrigin);
    const Term ia = sig(origin, s.at(ld_f::kKey));
    const Term cap = Term::seq({s.at(ld_f::kUc), ia});
    s = setf(s, ld_f::kQ, S("null"));
    const Term site_info = dict_put(dict_get(in.ls, S("siteInfo")), origin, s.at(ld_f::kEmail));
    const Term ls = dict_put(in.ls, S("siteInfo"), site_info);
    return out(s, in, ls, in.ss,
               pm(tree_opener_window(in.tree, in.docnonce), Term::seq({S("response"), cap}), origin));
  }
  return unchanged(in);
}

// --- script_rp_index ---------------------------------------------------------

Term script_rp_index(const Term& raw, StepContext& ctx, const BrowserIdConfig& cfg) {
  const In in(raw);
  Term s = pad(in.state, rpi_f::kRefCap, kBot);
  const Term q = s.at(rpi_f::kQ);
  const Term origin_lpo = https_origin(cfg.lpo_domain);
  const Term subs = tree_subwindows(in.tree, in.docnonce);
  const Term cif_nonce = idx_nonce(subs, s.at(rpi_f::kCifIndex));

  if (q.is_string("init")) {
    s = setf(s, rpi_f::kQ, S("receiveCIFReady"));
    s = setf(s, rpi_f::kCifIndex, num(subs.len() + 1));
    return out(s, in,
               Term::seq({S("IFRAME"), lpo_url(cfg.lpo_domain, "/cif"), tree_get_window(in.tree, in.docnonce)}));
  }
  if (q.is_string("receiveCIFReady")) {
    auto [input, s2] = choose_input(s, rpi_f::kHandled, in.inputs, ctx);
    if (input.at(1).is_string("POSTMESSAGE") && input.at(4) == Term::seq({S("cifready"), Term()}) &&
        input.at(3) == origin_lpo && input.at(2) == cif_nonce) {
      std::vector<Term> opts{kBot, Term()};
      opts.insert(opts.end(), cfg.all_ids.begin(), cfg.all_ids.end());
      std::size_t k = ctx.choose("rp.loaded", opts.size(), [&](std::size_t i) {
        if (i == 0) return std::string("BOT");
        if (i == 1) return std::string("none");
        return identity_label(opts[i]);
      });
      s = setf(s2, rpi_f::kQ, S("default"));
      return out(s, in, pm(cif_nonce, Term::seq({S("loaded"), opts[k]}), origin_lpo));
    }
    return unchanged(in);
  }
  if (q.is_string("default")) {
    bool open_ld = false;
    if (s.at(rpi_f::kDialogRunning).is_bot()) {
      open_ld = ctx.choose("rp.choice", {"handlePM", "openLD"}) == 1;
    }
    if (open_ld) {
      s = setf(s, rpi_f::kDialogRunning, kTrue);
      return out(s, in, Term::seq({S("HREF"), lpo_url(cfg.lpo_domain, "/ld"), S("_BLANK")}));
    }
    auto [input, s2] = choose_input(s, rpi_f::kHandled, in.inputs, ctx);
    s = s2;
    if (!input.at(1).is_string("POSTMESSAGE") || input.at(3) != origin_lpo) return unchanged(in);
    const Term m = input.at(4);
    const Term tag = m.at(1);
    if (input.at(2) == cif_nonce) {
      if (tag.is_string("login")) {
        s = setf(s, rpi_f::kCap, m.at(2));
        return out(setf(s, rpi_f::kQ, S("sendCAP")), in, Term());
      }
      if (tag.is_string("logout")) return out(setf(s, rpi_f::kQ, S("default")), in, Term());
      return unchanged(in);
    }
    if (s.at(rpi_f::kDialogRunning).is_true() && (tag.is_string("ldready") || tag.is_string("response"))) {
      const std::vector<Term> aux = tree_aux_windows(in.tree, in.docnonce);
      Term target = tree_get_window(in.tree, in.docnonce);
      if (!aux.empty()) {
        std::size_t k = ctx.choose("rp.aux", aux.size(), [&](std::size_t i) { return std::to_string(i); });
        target = aux[k];
      }
      if (tag.is_string("ldready")) {
        s = setf(s, rpi_f::kQ, S("default"));
        return out(s, in, pm(target, Term::seq({S("request"), Term()}), origin_lpo));
      }
      s = setf(s, rpi_f::kDialogRunning, kBot);
      s = setf(s, rpi_f::kCap, m.at(2));
      s = setf(s, rpi_f::kQ, S("dlgClosed"));
      return out(s, in, Term::seq({S("CLOSE"), target}));
    }
    return unchanged(in);
  }
  if (q.is_string("dlgClosed")) {
    const Term id = extract(s.at(rpi_f::kCap).at(1)).at(1);
    s = setf(s, rpi_f::kQ, S("loggedInUser"));
    return out(s, in, pm(cif_nonce, Term::seq({S("loggedInUser"), id}), origin_lpo));
  }
  if (q.is_string("loggedInUser")) {
    s = setf(s, rpi_f::kQ, S("sendCAP"));
    return out(s, in, pm(cif_nonce, Term::seq({S("dlgCmplt"), Term()}), origin_lpo));
  }
  if (q.is_string("sendCAP")) {
    const Term ref = ctx.fresh();
    s = setf(s, rpi_f::kRefCap, ref);
    const Term origin = tree_get_origin(in.tree, in.docnonce);
    if (origin.len() != 2) return unchanged(in);
    s = setf(s, rpi_f::kQ, S("receiveServiceToken"));
    return out(s, in, xhr(make_url(origin.at(2), origin.at(1), S("/")), "POST", s.at(rpi_f::kCap), ref));
  }
  if (q.is_string("receiveServiceToken")) {
    auto [input, s2] = choose_input(s, rpi_f::kHandled, in.inputs, ctx);
    if (input.at(1).is_string("XMLHTTPREQUEST") && input.at(3) == s2.at(rpi_f::kRefCap))
      return out(setf(s2, rpi_f::kQ, S("default")), in, Term());
    return unchanged(in);
  }
  return unchanged(in);
}

// --- script_idp_ad -----------------------------------------------------------

Term script_idp_ad(const Term& raw, StepContext& ctx, const BrowserIdConfig& cfg) {
  const In in(raw);
  if (ctx.choose("ad.action", {"authenticate", "navigate"}) == 1)
    return out(in.state, in, Term::seq({S("HREF"), lpo_url(cfg.lpo_domain, "/ld"), S("_SELF")}));
  if (in.ids.len() == 0) return unchanged(in);
  std::size_t k = ctx.choose("ad.email", in.ids.len(), [&](std::size_t i) { return identity_label(in.ids.at(i + 1)); });
  const Term body = Term::seq({in.ids.at(k + 1), in.secret});
  const Term origin = tree_get_origin(in.tree, in.docnonce);
  if (origin.len() != 2) return unchanged(in);
  return out(in.state, in, xhr(make_url(origin.at(2), origin.at(1), S("/auth")), "POST", body, kBot));
}

// --- script_idp_pif ----------------------------------------------------------

Term script_idp_pif(const Term& raw, StepContext& ctx, const BrowserIdConfig& cfg) {
  const In in(raw);
  Term s = pad(in.state, pif_f::kHandled, Term());
  const Term q = s.at(pif_f::kQ);
  const Term origin_lpo = https_origin(cfg.lpo_domain);
  const Term parent = tree_parent_window(in.tree, in.docnonce);

  if (q.is_string("init")) {
    s = setf(s, pif_f::kQ, S("waiting"));
    return out(s, in, pm(parent, Term::seq({S("ping"), Term()}), origin_lpo));
  }
  if (q.is_string("waiting")) {
    auto [input, s2] = choose_input(s, pif_f::kHandled, in.inputs, ctx);
    s = s2;
    const Term m = input.at(4);
    if (input.at(1).is_string("POSTMESSAGE") && (pm_is(m, "ping") || pm_is(m, "pong")) && input.at(2) == parent &&
        input.at(3) == origin_lpo)
      s = setf(s, pif_f::kQ, S("default"));
    return out(s, in, Term());
  }
  if (!q.is_string("default")) return unchanged(in);

  static const std::vector<std::string> kActions = {"handleresponse", "beginprovisioning", "genkeypair",
                                                    "registercert",   "raisefailure",      "requestuc"};
  const std::string& action = kActions[ctx.choose("pif.action", kActions)];
  if (action == "beginprovisioning" || action == "genkeypair") {
    const Term nonce = ctx.fresh();
    const bool prov = action == "beginprovisioning";
    const std::size_t f = prov ? pif_f::kProvNonces : pif_f::kGenKeyNonces;
    s = setf(s, f, append(s.at(f), nonce));
    return out(s, in, pm(parent, Term::seq({S(prov ? "beginProvisioning" : "genKeyPair"), nonce}), origin_lpo));
  }
  if (action == "registercert") {
    const Term ucs = s.at(pif_f::kUcs);
    if (ucs.len() == 0) return unchanged(in);
    std::size_t k = ctx.choose("pif.uc", ucs.len(), [](std::size_t i) { return std::to_string(i); });
    return out(s, in, pm(parent, Term::seq({S("registerCertificate"), ucs.at(k + 1)}), origin_lpo));
  }
  if (action == "raisefailure")
    return out(s, in, pm(parent, Term::seq({S("raiseProvisioningFailure"), kBot}), origin_lpo));
  if (action == "requestuc") {
    const Term emails = s.at(pif_f::kEmails);
    const Term keys = s.at(pif_f::kPubKeys);
    if (emails.len() == 0 || keys.len() == 0) return unchanged(in);
    std::size_t e = ctx.choose("pif.email", emails.len(), [&](std::size_t i) { return identity_label(emails.at(i + 1)); });
    std::size_t k = ctx.choose("pif.pubkey", keys.len(), [](std::size_t i) { return std::to_string(i); });
    const Term body = Term::seq({emails.at(e + 1), keys.at(k + 1)});
    const Term nonce = ctx.fresh();
    s = setf(s, pif_f::kXhrNonces, append(s.at(pif_f::kXhrNonces), nonce));
    const Term origin = tree_get_origin(in.tree, in.docnonce);
    if (origin.len() != 2) return out(s, in, Term());
    return out(s, in, xhr(make_url(origin.at(2), origin.at(1), S("/certreq")), "POST", body, nonce));
  }
  // handleresponse
  auto [input, s2] = choose_input(s, pif_f::kHandled, in.inputs, ctx);
  s = s2;
  if (input.at(1).is_string("POSTMESSAGE")) {
    if (input.at(2) == parent && input.at(3) == origin_lpo) {
      const Term m = input.at(4);
      if (contains(s.at(pif_f::kProvNonces), m.at(1)))
        s = setf(s, pif_f::kEmails, append(s.at(pif_f::kEmails), m.at(2)));
      else if (contains(s.at(pif_f::kGenKeyNonces), m.at(1)))
        s = setf(s, pif_f::kPubKeys, append(s.at(pif_f::kPubKeys), m.at(2)));
      return out(s, in, Term());
    }
  } else if (input.at(1).is_string("XMLHTTPREQUEST") && contains(s.at(pif_f::kXhrNonces), input.at(3))) {
    s = setf(s, pif_f::kUcs, append(s.at(pif_f::kUcs), input.at(2)));
    return out(s, in, Term());
  }
  return unchanged(in);
}

Term server_sessions_cookie(const HttpRequest& req, std::string_view name) {
  return dict_get(dict_get(req.headers, S("Cookie")), S(name));
}

}  // namespace

Term cif_initial_state() {
  return Term::seq({S("init"), kBot, kBot, kBot, kBot, kBot, kBot, Term(), kBot, kBot});
}
Term ld_initial_state() {
  return Term::seq({S("init"), kBot, kBot, kBot, kBot, kBot, Term(), kBot, kBot, kBot});
}
Term rp_index_initial_state() { return Term::seq({S("init"), kBot, kBot, kBot, Term(), Term(), kBot}); }
Term pif_initial_state() { return Term::seq({S("init"), Term(), Term(), Term(), kBot, kBot, kBot}); }

Term make_identity(const std::string& name, const std::string& domain) {
  return Term::seq({S(name), Term::dom(domain)});
}

std::string identity_label(const Term& id) {
  if (id.len() == 2 && id.at(1).is_string() && id.at(2).kind() == Kind::Domain)
    return id.at(1).text() + "@" + id.at(2).text();
  return render(id);
}

std::optional<Term> verify_cap(const Term& cap, const Term& signkeys, const Term& origin) {
  if (cap.len() != 2) return std::nullopt;
  const Term uc = cap.at(1);
  const Term ia = cap.at(2);
  const Term content = extract(uc);
  if (content.len() != 2 || content.at(1).len() != 2) return std::nullopt;
  const Term id = content.at(1);
  const Term userpubkey = content.at(2);
  if (!checksig(uc, dict_get(signkeys, id.at(2))).is_true()) return std::nullopt;
  if (!checksig(ia, userpubkey).is_true()) return std::nullopt;
  if (extract(ia) != origin) return std::nullopt;
  return id;
}

Term tree_parent_window(const Term& tree, const Term& docnonce) {
  Loc l;
  return find_loc(tree, docnonce, kBot, l) ? l.parent : kBot;
}

Term tree_subwindows(const Term& tree, const Term& docnonce) {
  Loc l;
  if (!find_loc(tree, docnonce, kBot, l) || l.doc.len() != 7) return Term();
  return l.doc.at(doc::kSubwindows);
}

Term tree_opener_window(const Term& tree, const Term& docnonce) {
  Loc l;
  return find_loc(tree, docnonce, kBot, l) ? l.window.at(win::kOpener) : Term::notdef();
}

Term tree_get_window(const Term& tree, const Term& docnonce) {
  Loc l;
  return find_loc(tree, docnonce, kBot, l) ? l.window.at(win::kNonce) : Term::notdef();
}

Term tree_get_origin(const Term& tree, const Term& docnonce) {
  Loc l;
  if (!find_loc(tree, docnonce, kBot, l) || l.doc.len() != 7) return Term::notdef();
  return l.doc.at(doc::kOrigin);
}

std::vector<Term> tree_aux_windows(const Term& tree, const Term& docnonce) {
  Loc l;
  std::vector<Term> res;
  if (!find_loc(tree, docnonce, kBot, l)) return res;
  const Term own = l.window.at(win::kNonce);
  std::vector<Term> ws;
  all_windows(tree, ws);
  for (const Term& w : ws)
    if (w.at(win::kOpener) == own) res.push_back(w.at(win::kNonce));
  return res;
}

std::pair<Term, Term> choose_input(const Term& state, std::size_t handled_field, const Term& inputs,
                                   StepContext& ctx) {
  const Term handled = state.at(handled_field);
  std::vector<std::size_t> open;
  for (std::size_t i = 1; i <= inputs.len(); ++i)
    if (!contains(handled, num(i))) open.push_back(i);
  if (open.empty()) return {kBot, state};
  std::size_t k = ctx.choose("input", open.size(), [&](std::size_t j) { return input_label(open[j], inputs.at(open[j])); });
  const std::size_t iid = open[k];
  return {inputs.at(iid), setf(state, handled_field, append(handled, num(iid)))};
}

void register_browserid_scripts(ScriptRegistry& reg, const BrowserIdConfig& cfg) {
  using Fn = Term (*)(const Term&, StepContext&, const BrowserIdConfig&);
  const std::pair<const char*, Fn> table[] = {{"script_lpo_cif", &script_cif},
                                              {"script_lpo_ld", &script_ld},
                                              {"script_rp_index", &script_rp_index},
                                              {"script_idp_ad", &script_idp_ad},
                                              {"script_idp_pif", &script_idp_pif}};
  for (const auto& [name, fn] : table) {
    reg.add(name, [cfg, fn = fn](const Term& in, StepContext& ctx) { return fn(in, ctx, cfg); });
  }
}

// --- LPO ---------------------------------------------------------------------

Lpo::Lpo(std::string name, std::vector<Term> addresses, Term domain)
    : Process(std::move(name), Role::Lpo, std::move(addresses)), domain_(std::move(domain)) {}

Term Lpo::initial_state(const Term& sslkey, const Term& signkeys) {
  return Term::seq({Term(), sslkey, signkeys, Term(), Term()});
}

std::vector<Emit> Lpo::relation(const Event& e, Term& state, StepContext& ctx) const {
  Term s = state;
  const Term sts = sts_header();
  if (e.trigger) {
    const Term sessions = s.at(lpo_f::kSessions);
    if (sessions.len() == 0) return {};
    std::size_t k = ctx.choose("lpo.session", sessions.len(), [](std::size_t i) { return std::to_string(i); });
    const Term sid = sessions.at(k + 1).at(1);
    if (ctx.choose("lpo.expire", {"logout", "expire"}) == 0) {
      const Term ctxv = setf(dict_get(sessions, sid), 1, Term());
      s = setf(s, lpo_f::kSessions, dict_put(sessions, sid, ctxv));
    } else {
      s = setf(s, lpo_f::kSessions, dict_remove(sessions, sid));
    }
    state = s;
    return {};
  }
  auto unwrapped = https_unwrap_request(e.msg, s.at(lpo_f::kSslKey));
  if (!unwrapped) return {};
  const HttpRequest& req = unwrapped->first;
  const Term& k = unwrapped->second;
  if (req.host != domain_) return {};
  auto reply = [&](const Term& headers, const Term& body) {
    return std::vector<Emit>{{e.sender, e.receiver, ok_response(req.nonce, headers, body, k)}};
  };
  if (req.method.is_string("GET") && req.path.is_string("/cif"))
    return reply(Term::seq({sts}), Term::seq({S("script_lpo_cif"), cif_initial_state()}));
  if (req.method.is_string("GET") && req.path.is_string("/ld"))
    return reply(Term::seq({sts}), Term::seq({S("script_lpo_ld"), ld_initial_state()}));
  if (req.method.is_string("GET") && req.path.is_string("/ctx")) {
    Term sid = server_sessions_cookie(req, "browserid_state");
    Term sessions = s.at(lpo_f::kSessions);
    if (!dict_has(sessions, sid)) {
      sid = ctx.fresh();
      const Term xsrf = ctx.fresh();
      Term nonces = append(append(s.at(lpo_f::kNonces), sid), xsrf);
      s = setf(s, lpo_f::kNonces, nonces);
      sessions = append(sessions, Term::seq({sid, Term::seq({Term(), xsrf})}));
      s = setf(s, lpo_f::kSessions, sessions);
    }
    const Term sc = dict_get(sessions, sid);
    const Term context = Term::seq({Term::boolean(sc.at(1).len() != 0), sc.at(2)});
    const Term set_cookie =
        Term::seq({S("Set-Cookie"), Term::seq({make_cookie(S("browserid_state"), sid, true, true, true)})});
    state = s;
    return reply(Term::seq({sts, set_cookie}), context);
  }
  if (req.method.is_string("POST") && req.path.is_string("/auth")) {
    const Term body = req.body;
    if (body.len() != 2 || body.at(1).len() != 2) return {};
    const Term sid = server_sessions_cookie(req, "browserid_state");
    Term sessions = s.at(lpo_f::kSessions);
    const Term sc = dict_get(sessions, sid);
    if (sc.at(2) != body.at(2)) return {};
    auto id = verify_cap(body.at(1), s.at(lpo_f::kSignKeys), https_origin(domain_));
    if (!id) return {};
    std::vector<Term> groups = s.at(lpo_f::kIdGroups).kids();
    std::size_t n = 0;
    if (sc.at(1).len() == 0) {
      bool found = false;
      for (std::size_t g = 0; g < groups.size() && !found; ++g) {
        if (contains(groups[g], *id)) {
          n = g;
          found = true;
        }
      }
      if (!found) {
        groups.push_back(Term::seq({*id}));
        n = groups.size() - 1;
      }
    } else {
      bool found = false;
      for (std::size_t g = 0; g < groups.size() && !found; ++g) {
        if (groups[g] == sc.at(1)) {
          n = g;
          found = true;
        }
      }
      if (!found) return {};
      if (!contains(groups[n], *id)) groups[n] = append(groups[n], *id);
    }
    s = setf(s, lpo_f::kIdGroups, Term::seq(groups));
    sessions = dict_put(sessions, sid, setf(sc, 1, groups[n]));
    s = setf(s, lpo_f::kSessions, sessions);
    ctx.note(note::kLpoLogin, Term::seq({sid, groups[n]}));
    state = s;
    return reply(Term::seq({sts}), kTrue);
  }
  return {};
}

// --- corruptible servers -----------------------------------------------------

CorruptibleServer::CorruptibleServer(std::string name, Role role, std::vector<Term> addresses,
                                     std::size_t corrupt_field, std::vector<Term> leak_addresses)
    : Process(std::move(name), role, std::move(addresses)),
      corrupt_field_(corrupt_field),
      leak_addresses_(std::move(leak_addresses)) {}

bool CorruptibleServer::corrupt_branch(const Event& e, Term& state, StepContext& ctx, std::vector<Emit>& out) const {
  const bool corrupted = !state.at(corrupt_field_).is_bot();
  if (!corrupted && !e.msg.is_string("CORRUPT")) return false;
  if (!corrupted) ctx.note(note::kCorrupted, S(name()));
  const Term record = Term::seq({e.receiver, e.sender, e.msg});
  state = setf(state, corrupt_field_, Term::seq({record, state.at(corrupt_field_)}));
  if (leak_addresses_.empty()) return true;
  std::size_t k = ctx.choose("srv.corrupt", leak_addresses_.size() + 1, [&](std::size_t i) {
    return i == 0 ? std::string("none") : "leak:" + leak_addresses_[i - 1].text();
  });
  const Term from = e.receiver.kind() == Kind::Address ? e.receiver : addresses().front();
  if (k > 0) out.push_back({leak_addresses_[k - 1], from, state});
  return true;
}

RelyingParty::RelyingParty(std::string name, std::vector<Term> addresses, std::vector<Term> leak_addresses)
    : CorruptibleServer(std::move(name), Role::Rp, std::move(addresses), rp_f::kCorrupt, std::move(leak_addresses)) {}

Term RelyingParty::initial_state(const Term& domain, const Term& sslkey, const Term& signkeys) {
  return Term::seq({Term(), domain, sslkey, signkeys, Term(), kBot});
}

std::vector<Emit> RelyingParty::relation(const Event& e, Term& state, StepContext& ctx) const {
  std::vector<Emit> emitted;
  if (e.trigger) return {};
  if (corrupt_branch(e, state, ctx, emitted)) return emitted;
  Term s = state;
  auto unwrapped = https_unwrap_request(e.msg, s.at(rp_f::kSslKey));
  if (!unwrapped) return {};
  const HttpRequest& req = unwrapped->first;
  const Term& k = unwrapped->second;
  const Term domain = s.at(rp_f::kDomain);
  if (req.host != domain) return {};
  const Term sts = Term::seq({sts_header()});
  if (req.method.is_string("GET")) {
    return {{e.sender, e.receiver,
             ok_response(req.nonce, sts, Term::seq({S("script_rp_index"), rp_index_initial_state()}), k)}};
  }
  if (req.method.is_string("POST") && dict_get(req.headers, S("Origin")) == https_origin(domain)) {
    auto id = verify_cap(req.body, s.at(rp_f::kSignKeys), https_origin(domain));
    if (!id) return {};
    const Term n_token = ctx.fresh();
    s = setf(s, rp_f::kNonces, append(s.at(rp_f::kNonces), n_token));
    const Term token = Term::seq({n_token, *id});
    s = setf(s, rp_f::kServiceTokens, append(s.at(rp_f::kServiceTokens), token));
    ctx.note(note::kTokenMinted, Term::seq({n_token, *id, req.nonce}));
    state = s;
    return {{e.sender, e.receiver, ok_response(req.nonce, sts, token, k)}};
  }
  return {};
}

IdentityProvider::IdentityProvider(std::string name, std::vector<Term> addresses, std::vector<Term> leak_addresses)
    : CorruptibleServer(std::move(name), Role::Idp, std::move(addresses), idp_f::kCorrupt, std::move(leak_addresses)) {}

Term IdentityProvider::initial_state(const Term& sslkeys, const Term& users, const Term& signkey) {
  return Term::seq({Term(), sslkeys, users, signkey, Term(), kBot});
}

std::vector<Emit> IdentityProvider::relation(const Event& e, Term& state, StepContext& ctx) const {
  std::vector<Emit> emitted;
  if (e.trigger) return {};
  if (corrupt_branch(e, state, ctx, emitted)) return emitted;
  Term s = state;
  std::optional<std::pair<HttpRequest, Term>> unwrapped;
  Term in_domain;
  for (const Term& entry : s.at(idp_f::kSslKeys).kids()) {
    unwrapped = https_unwrap_request(e.msg, entry.at(2));
    if (unwrapped && unwrapped->first.host == entry.at(1)) {
      in_domain = entry.at(1);
      break;
    }
    unwrapped.reset();
  }
  if (!unwrapped) return {};
  const HttpRequest& req = unwrapped->first;
  const Term& k = unwrapped->second;
  const Term sts = sts_header();
  auto reply = [&](const Term& headers, const Term& body) {
    return std::vector<Emit>{{e.sender, e.receiver, ok_response(req.nonce, headers, body, k)}};
  };
  if (req.method.is_string("POST")) {
    if (!req.path.is_string("/certreq")) {
      if (req.body.len() != 2) return {};
      const Term id = req.body.at(1);
      const Term secret = req.body.at(2);
      if (dict_get(req.headers, S("Origin")) != https_origin(in_domain)) return {};
      const Term ids = dict_get(s.at(idp_f::kUsers), secret);
      if (ids.len() == 0 || id.is_empty_seq() || !contains(ids, id)) return {};
      const Term sid = ctx.fresh();
      s = setf(s, idp_f::kNonces, append(s.at(idp_f::kNonces), sid));
      s = setf(s, idp_f::kSessions, dict_put(s.at(idp_f::kSessions), sid, ids));
      ctx.note(note::kIdpLogin, Term::seq({sid, ids}));
      state = s;
      const Term set_cookie =
          Term::seq({S("Set-Cookie"), Term::seq({make_cookie(S("sessionid"), sid, true, true, true)})});
      return reply(Term::seq({sts, set_cookie}), kTrue);
    }
    if (req.body.len() != 2) return {};
    const Term id = req.body.at(1);
    const Term pubkey = req.body.at(2);
    const Term sid = server_sessions_cookie(req, "sessionid");
    if (!contains(dict_get(s.at(idp_f::kSessions), sid), id)) return {};
    const Term uc = sig(Term::seq({id, pubkey}), s.at(idp_f::kSignKey));
    ctx.note(note::kUcIssued, Term::seq({id, pubkey, uc}));
    return reply(Term::seq({sts}), uc);
  }
  if (req.path.is_string("/pif")) return reply(Term::seq({sts}), Term::seq({S("script_idp_pif"), pif_initial_state()}));
  return reply(Term::seq({sts}), Term::seq({S("script_idp_ad"), Term()}));
}

}  // namespace dyweb

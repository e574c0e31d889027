#include "dyweb/webdata.h"

#include <unordered_set>

namespace dyweb {

Term dict_get(const Term& d, const Term& k) {
  if (!d.is_seq()) return Term();
  for (const Term& e : d.kids()) {
    if (e.len() == 2 && e.kids()[0] == k) return e.kids()[1];
  }
  return Term();
}

bool dict_has(const Term& d, const Term& k) {
  if (!d.is_seq()) return false;
  for (const Term& e : d.kids()) {
    if (e.len() == 2 && e.kids()[0] == k) return true;
  }
  return false;
}

Term dict_put(const Term& d, const Term& k, const Term& v) {
  std::vector<Term> out;
  bool replaced = false;
  if (d.is_seq()) {
    for (const Term& e : d.kids()) {
      if (e.len() == 2 && e.kids()[0] == k) {
        if (!replaced) out.push_back(Term::seq({k, v}));
        replaced = true;
      } else {
        out.push_back(e);
      }
    }
  }
  if (!replaced) out.push_back(Term::seq({k, v}));
  return Term::seq(std::move(out));
}

Term dict_remove(const Term& d, const Term& k) {
  std::vector<Term> out;
  if (d.is_seq()) {
    for (const Term& e : d.kids()) {
      if (!(e.len() == 2 && e.kids()[0] == k)) out.push_back(e);
    }
  }
  return Term::seq(std::move(out));
}

bool dict_keys_unique(const Term& d) {
  if (!d.is_seq()) return false;
  std::unordered_set<Term, TermHash> seen;
  for (const Term& e : d.kids()) {
    if (e.len() != 2) return false;
    if (!seen.insert(e.kids()[0]).second) return false;
  }
  return true;
}

Term proto_p() {
  static const Term t = Term::str("P");
  return t;
}
Term proto_s() {
  static const Term t = Term::str("S");
  return t;
}

Term make_url(const Term& protocol, const Term& host, const Term& path, const Term& params) {
  return Term::seq({S("URL"), protocol, host, path, params});
}

bool is_url(const Term& t) {
  return t.len() == 5 && t.at(1).is_string("URL") && (t.at(2) == proto_p() || t.at(2) == proto_s());
}

Term make_origin(const Term& host, const Term& protocol) { return Term::seq({host, protocol}); }

Term make_cookie(const Term& name, const Term& value, bool secure, bool session, bool http_only) {
  return Term::seq({name, Term::seq({value, Term::boolean(secure), Term::boolean(session), Term::boolean(http_only)})});
}

bool is_cookie(const Term& t) {
  if (t.len() != 2) return false;
  const Term& c = t.at(2);
  if (c.len() != 4) return false;
  for (std::size_t i = 2; i <= 4; ++i) {
    if (!c.at(i).is_true() && !c.at(i).is_bot()) return false;
  }
  return true;
}

Term HttpRequest::term() const {
  return Term::seq({S("HTTPReq"), nonce, method, host, path, params, headers, body});
}

std::optional<HttpRequest> HttpRequest::parse(const Term& t) {
  if (t.len() != 8 || !t.at(1).is_string("HTTPReq")) return std::nullopt;
  return HttpRequest{t.at(2), t.at(3), t.at(4), t.at(5), t.at(6), t.at(7), t.at(8)};
}

Term HttpResponse::term() const { return Term::seq({S("HTTPResp"), nonce, status, headers, body}); }

std::optional<HttpResponse> HttpResponse::parse(const Term& t) {
  if (t.len() != 5 || !t.at(1).is_string("HTTPResp")) return std::nullopt;
  return HttpResponse{t.at(2), t.at(3), t.at(4), t.at(5)};
}

Term https_wrap_request(const Term& req, const Term& sym_key, const Term& recipient_pub) {
  return enc_a(Term::seq({req, sym_key}), recipient_pub);
}

std::optional<std::pair<HttpRequest, Term>> https_unwrap_request(const Term& t, const Term& priv) {
  if (!t.is_compound(Sym::EncA)) return std::nullopt;
  Term plain = dec_a(t, priv);
  if (plain.is_compound(Sym::DecA) || plain.len() != 2) return std::nullopt;
  auto req = HttpRequest::parse(plain.at(1));
  if (!req) return std::nullopt;
  return std::make_pair(*req, plain.at(2));
}

Term https_wrap_response(const Term& resp, const Term& sym_key) { return enc_s(resp, sym_key); }

std::optional<HttpResponse> https_unwrap_response(const Term& t, const Term& sym_key, const Term& expected_nonce) {
  if (!t.is_compound(Sym::EncS)) return std::nullopt;
  Term plain = dec_s(t, sym_key);
  if (plain.is_compound(Sym::DecS)) return std::nullopt;
  auto resp = HttpResponse::parse(plain);
  if (!resp || resp->nonce != expected_nonce) return std::nullopt;
  return resp;
}

Term dns_request(const Term& domain, const Term& n) { return Term::seq({S("DNSResolve"), domain, n}); }
Term dns_response(const Term& address, const Term& n) { return Term::seq({S("DNSResolved"), address, n}); }

bool is_method(const Term& t) {
  static const char* kMethods[] = {"GET", "HEAD", "POST", "PUT", "DELETE", "CONNECT", "OPTIONS", "TRACE", "TRACK", "PATCH"};
  if (!t.is_string()) return false;
  for (const char* m : kMethods) {
    if (t.text() == m) return true;
  }
  return false;
}

std::string url_label(const Term& url) {
  if (!is_url(url)) return render(url);
  std::string out = url.at(2) == proto_s() ? "https://" : "http://";
  const Term& host = url.at(3);
  out += host.kind() == Kind::Domain ? host.text() : render(host);
  const Term& path = url.at(4);
  out += path.is_string() ? path.text() : render(path);
  if (!url.at(5).is_empty_seq()) out += "?" + render(url.at(5));
  return out;
}

}  // namespace dyweb

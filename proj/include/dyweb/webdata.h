// Web message formats on top of terms: dictionaries, URLs, origins, cookies,
// HTTP(S) requests and responses, DNS messages.
#pragma once

#include <optional>
#include <string>
#include <utility>

#include "dyweb/terms.h"

namespace dyweb {

Term dict_get(const Term& d, const Term& k);
bool dict_has(const Term& d, const Term& k);
Term dict_put(const Term& d, const Term& k, const Term& v);
Term dict_remove(const Term& d, const Term& k);
bool dict_keys_unique(const Term& d);

// Protocols.
Term proto_p();
Term proto_s();

// URL = <URL, protocol, host, path, params>
Term make_url(const Term& protocol, const Term& host, const Term& path, const Term& params = Term());
bool is_url(const Term& t);
// Origin = <host, protocol>
Term make_origin(const Term& host, const Term& protocol);
inline Term https_origin(const Term& host) { return make_origin(host, proto_s()); }

// Cookie = <name, <value, secure, session, httpOnly>>
Term make_cookie(const Term& name, const Term& value, bool secure, bool session, bool http_only);
bool is_cookie(const Term& t);

struct HttpRequest {
  Term nonce, method, host, path, params, headers, body;
  Term term() const;
  static std::optional<HttpRequest> parse(const Term& t);
};

struct HttpResponse {
  Term nonce, status, headers, body;
  Term term() const;
  static std::optional<HttpResponse> parse(const Term& t);
};

Term https_wrap_request(const Term& req, const Term& sym_key, const Term& recipient_pub);
// Decrypts with the private key and validates the request shape.
std::optional<std::pair<HttpRequest, Term>> https_unwrap_request(const Term& t, const Term& priv);
Term https_wrap_response(const Term& resp, const Term& sym_key);
std::optional<HttpResponse> https_unwrap_response(const Term& t, const Term& sym_key, const Term& expected_nonce);

Term dns_request(const Term& domain, const Term& n);
Term dns_response(const Term& address, const Term& n);

bool is_method(const Term& t);

// Readable "https://host/path" form of a URL term, used for option names.
std::string url_label(const Term& url);

}  // namespace dyweb

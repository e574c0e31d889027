#include <gtest/gtest.h>

#include "dyweb/webdata.h"

namespace {

using namespace dyweb;

const Term key = Term::nonce("srv", 0);
const Term sym = Term::nonce("b", 0);
const Term rn = Term::nonce("b", 1);

TEST(Dict, PutGetRemove) {
  Term d;
  d = dict_put(d, S("a"), S("1"));
  d = dict_put(d, S("b"), S("2"));
  EXPECT_EQ(dict_get(d, S("a")), S("1"));
  EXPECT_TRUE(dict_has(d, S("b")));
  d = dict_put(d, S("a"), S("3"));
  EXPECT_EQ(dict_get(d, S("a")), S("3"));
  EXPECT_TRUE(dict_keys_unique(d));
  d = dict_remove(d, S("a"));
  EXPECT_FALSE(dict_has(d, S("a")));
  EXPECT_TRUE(dict_get(d, S("a")).is_empty_seq());
}

TEST(Dict, DetectsDuplicateKeys) {
  const Term d = parse_term("<<a,1>,<a,2>>");
  EXPECT_FALSE(dict_keys_unique(d));
}

TEST(Url, ShapeAndLabel) {
  const Term u = make_url(proto_s(), Term::dom("a.com"), S("/x"));
  EXPECT_TRUE(is_url(u));
  EXPECT_FALSE(is_url(S("https://a.com/x")));
  EXPECT_EQ(url_label(u), "https://a.com/x");
  EXPECT_EQ(url_label(make_url(proto_p(), Term::dom("a.com"), S("/"))), "http://a.com/");
}

TEST(Origin, HostAndProtocol) {
  EXPECT_EQ(https_origin(Term::dom("a.com")), Term::seq({Term::dom("a.com"), proto_s()}));
}

TEST(Cookie, Shape) {
  const Term c = make_cookie(S("sid"), rn, true, false, true);
  EXPECT_TRUE(is_cookie(c));
  EXPECT_EQ(c.at(2).at(2), Term::truth());
  EXPECT_EQ(c.at(2).at(3), Term::bot());
  EXPECT_FALSE(is_cookie(S("sid")));
}

HttpRequest request() {
  return HttpRequest{rn, S("POST"), Term::dom("a.com"), S("/login"), Term(), Term(), S("body")};
}

TEST(Http, RequestRoundTrip) {
  const auto r = HttpRequest::parse(request().term());
  ASSERT_TRUE(r);
  EXPECT_EQ(r->path, S("/login"));
  EXPECT_EQ(r->body, S("body"));
  EXPECT_FALSE(HttpRequest::parse(S("x")));
}

TEST(Http, ResponseRoundTrip) {
  const HttpResponse resp{rn, S("200"), Term(), S("ok")};
  const auto r = HttpResponse::parse(resp.term());
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, S("200"));
}

TEST(Https, WrapUnwrapRequest) {
  const Term wire = https_wrap_request(request().term(), sym, pub(key));
  const auto r = https_unwrap_request(wire, key);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->first.body, S("body"));
  EXPECT_EQ(r->second, sym);
  EXPECT_FALSE(https_unwrap_request(wire, Term::nonce("srv", 9)));
}

TEST(Https, WrapUnwrapResponseChecksNonce) {
  const Term wire = https_wrap_response(HttpResponse{rn, S("200"), Term(), S("ok")}.term(), sym);
  EXPECT_TRUE(https_unwrap_response(wire, sym, rn));
  EXPECT_FALSE(https_unwrap_response(wire, sym, Term::nonce("b", 7)));
  EXPECT_FALSE(https_unwrap_response(wire, Term::nonce("b", 8), rn));
}

TEST(Dns, Messages) {
  EXPECT_EQ(dns_request(Term::dom("a.com"), rn).at(1), S("DNSResolve"));
  EXPECT_EQ(dns_response(Term::addr("1"), rn).at(1), S("DNSResolved"));
}

TEST(Http, Methods) {
  EXPECT_TRUE(is_method(S("GET")));
  EXPECT_TRUE(is_method(S("POST")));
  EXPECT_FALSE(is_method(S("FETCH")));
}

}  // namespace

#include <gtest/gtest.h>

#include "dyweb/terms.h"

namespace {

using namespace dyweb;

const Term k = Term::nonce("k", 0);
const Term m = Term::nonce("k", 1);

TEST(Terms, DestructorsRewriteOnMatchingKeys) {
  EXPECT_EQ(dec_s(enc_s(m, k), k), m);
  EXPECT_EQ(dec_a(enc_a(m, pub(k)), k), m);
  EXPECT_EQ(extract(sig(m, k)), m);
  EXPECT_TRUE(checksig(sig(m, k), pub(k)).is_true());
}

TEST(Terms, DestructorsStayOnWrongKeys) {
  const Term other = Term::nonce("k", 2);
  EXPECT_TRUE(dec_s(enc_s(m, k), other).is_compound(Sym::DecS));
  EXPECT_TRUE(dec_a(enc_a(m, pub(k)), other).is_compound(Sym::DecA));
  EXPECT_FALSE(checksig(sig(m, k), pub(other)).is_true());
}

TEST(Terms, NormalizeRewritesRawTermsBottomUp) {
  const Term raw = Term::raw(Sym::DecS, {Term::raw(Sym::EncS, {Term::raw(Sym::Extract, {sig(m, k)}), k}), k});
  EXPECT_EQ(normalize(raw), m);
  EXPECT_TRUE(equivalent(raw, m));
}

TEST(Terms, ProjectionConventions) {
  const Term t = Term::seq({S("a"), S("b")});
  EXPECT_EQ(t.at(1), S("a"));
  EXPECT_EQ(t.at(2), S("b"));
  EXPECT_TRUE(t.at(3).is_notdef());
  EXPECT_TRUE(S("a").at(1).is_notdef());
  EXPECT_EQ(t.len(), 2u);
  EXPECT_EQ(S("a").len(), 0u);
}

TEST(Terms, EqualityIsStructural) {
  EXPECT_EQ(Term::seq({S("a"), m}), Term::seq({S("a"), Term::nonce("k", 1)}));
  EXPECT_NE(Term::nonce("k", 1), Term::nonce("j", 1));
  EXPECT_NE(S("a.com"), Term::dom("a.com"));
  EXPECT_TRUE(Term().is_empty_seq());
}

TEST(Terms, RenderParseRoundTrip) {
  const std::vector<Term> ts = {S("x"),
                                Term::addr("a:b"),
                                Term::dom("a.com"),
                                Term::truth(),
                                Term::bot(),
                                Term::notdef(),
                                m,
                                Term::seq({S("a"), Term::seq({})}),
                                enc_a(Term::seq({m, S("hello world")}), pub(k)),
                                sig(Term::seq({Term::dom("a.com"), m}), k)};
  for (const Term& t : ts) EXPECT_EQ(parse_term(render(t)), t) << render(t);
}

TEST(Terms, ParseAcceptsAsciiBrackets) {
  EXPECT_EQ(parse_term("<a,<b,c>>"), Term::seq({S("a"), Term::seq({S("b"), S("c")})}));
  EXPECT_EQ(parse_term("<>"), Term());
}

TEST(Terms, ParseNormalizes) { EXPECT_EQ(parse_term("dec_s(enc_s(m,n:k:0),n:k:0)"), S("m")); }

TEST(Terms, ParseRejectsGarbage) {
  EXPECT_ANY_THROW(parse_term("<a,b"));
  EXPECT_ANY_THROW(parse_term("enc_s(a)"));
}

TEST(Terms, AppendAndContains) {
  const Term t = append(Term::seq({S("a")}), S("b"));
  EXPECT_EQ(t, Term::seq({S("a"), S("b")}));
  EXPECT_TRUE(contains(t, S("b")));
  EXPECT_FALSE(contains(t, S("c")));
  EXPECT_EQ(append(S("x"), S("b")), Term::seq({S("b")}));
}

TEST(Terms, ProjectAndReplaceAt) {
  const Term t = Term::seq({S("a"), Term::seq({S("b"), S("c")})});
  EXPECT_EQ(project(t, {2, 1}), S("b"));
  EXPECT_EQ(replace_at(t, {2, 2}, S("z")), Term::seq({S("a"), Term::seq({S("b"), S("z")})}));
  EXPECT_EQ(project(t, {}), t);
}

TEST(Terms, MatchBindsVariables) {
  const auto b = match(parse_term("<$x,<b,$y>,$_>"), parse_term("<a,<b,c>,d>"));
  ASSERT_TRUE(b);
  EXPECT_EQ(b->at("x"), S("a"));
  EXPECT_EQ(b->at("y"), S("c"));
  EXPECT_FALSE(b->count("_"));
}

TEST(Terms, MatchRequiresExactLength) {
  EXPECT_FALSE(match(parse_term("<$x>"), parse_term("<a,b>")));
  EXPECT_FALSE(match(parse_term("<a,$x>"), parse_term("<b,c>")));
}

TEST(Terms, SubstituteNormalizesAndKeepsUnbound) {
  const Term tmpl = Term::apply(Sym::DecS, {enc_s(Term::var("x"), k), k});
  EXPECT_EQ(substitute(tmpl, {{"x", S("v")}}), S("v"));
  EXPECT_EQ(substitute(Term::seq({Term::var("y")}), {}), Term::seq({Term::var("y")}));
}

TEST(Knowledge, AnalysisAndSynthesis) {
  Knowledge kn;
  kn.add(enc_s(Term::seq({m, S("x")}), k));
  EXPECT_FALSE(kn.derivable(m));
  kn.add(k);
  EXPECT_TRUE(kn.derivable(m));
  EXPECT_TRUE(kn.derivable(Term::seq({m, k})));
  EXPECT_TRUE(kn.derivable(sig(m, k)));
  EXPECT_TRUE(kn.derivable(S("any string")));
}

TEST(Knowledge, PrivateKeyNotFromPublicKey) {
  Knowledge kn;
  kn.add(pub(k));
  kn.add(enc_a(m, pub(k)));
  EXPECT_FALSE(kn.derivable(m));
  EXPECT_FALSE(kn.derivable(k));
  EXPECT_TRUE(kn.derivable(enc_a(S("x"), pub(k))));
}

TEST(Knowledge, NonceNamespaces) {
  Knowledge kn;
  EXPECT_FALSE(kn.derivable(Term::nonce("att", 3)));
  kn.add_nonce_owner("att");
  EXPECT_TRUE(kn.derivable(Term::nonce("att", 3)));
  EXPECT_FALSE(kn.derivable(Term::nonce("rp", 3)));
  kn.add_nonce(Term::nonce("rp", 3));
  EXPECT_TRUE(kn.nonce_available(Term::nonce("rp", 3)));
}

TEST(Knowledge, SignaturesRevealTheirMessage) {
  Knowledge kn;
  kn.add(sig(m, k));
  EXPECT_TRUE(kn.derivable(m));
  EXPECT_FALSE(kn.derivable(k));
}

TEST(Knowledge, KnowledgeBaseHelper) {
  KnowledgeBase kb{{enc_s(m, k), k}, {}, {}};
  EXPECT_TRUE(derivable(kb, m));
  kb.terms.pop_back();
  EXPECT_FALSE(derivable(kb, m));
}

}  // namespace

#include <gtest/gtest.h>

#include "dyweb/browserid.h"
#include "dyweb/harness.h"
#include "dyweb/webdata.h"

namespace {

using namespace dyweb;

Built load(const std::string& name) {
  return build_system(load_scenario_file(std::string(DYWEB_SCENARIO_DIR) + "/" + name));
}

std::vector<Note> notes(const Trace& t, const std::string& kind) {
  std::vector<Note> out;
  for (const StepRecord& s : t.steps)
    for (const Note& n : s.notes)
      if (n.kind == kind) out.push_back(n);
  return out;
}

Trace playbook_run(const Built& b) { return run_scenario(b, "playbook", 1, b.scenario.steps); }

const Term idp_key = Term::nonce("sign_idp", 0);
const Term user_key = Term::nonce("alice", 5);
const Term alice = make_identity("alice", "idp.com");
const Term rp_origin = https_origin(Term::dom("rp.com"));

Term signkeys() { return dict_put(Term(), Term::dom("idp.com"), pub(idp_key)); }
Term uc_for(const Term& id, const Term& key) { return sig(Term::seq({id, pub(user_key)}), key); }

TEST(BrowserId, IdentityLabel) {
  EXPECT_EQ(identity_label(alice), "alice@idp.com");
  EXPECT_EQ(identity_label(S("x")), "x");
}

TEST(BrowserId, VerifyCapAcceptsAValidPair) {
  const Term cap = Term::seq({uc_for(alice, idp_key), sig(rp_origin, user_key)});
  const auto id = verify_cap(cap, signkeys(), rp_origin);
  ASSERT_TRUE(id);
  EXPECT_EQ(*id, alice);
}

TEST(BrowserId, VerifyCapRejectsForgeries) {
  const Term ia = sig(rp_origin, user_key);
  // Certificate signed by someone else.
  EXPECT_FALSE(verify_cap(Term::seq({uc_for(alice, Term::nonce("att", 0)), ia}), signkeys(), rp_origin));
  // Assertion for another origin.
  const Term other = sig(https_origin(Term::dom("evil.com")), user_key);
  EXPECT_FALSE(verify_cap(Term::seq({uc_for(alice, idp_key), other}), signkeys(), rp_origin));
  // Assertion signed with a key the certificate does not cover.
  const Term wrong = sig(rp_origin, Term::nonce("alice", 6));
  EXPECT_FALSE(verify_cap(Term::seq({uc_for(alice, idp_key), wrong}), signkeys(), rp_origin));
  // Identity of a domain without a known key.
  const Term bob = make_identity("bob", "other.com");
  EXPECT_FALSE(verify_cap(Term::seq({uc_for(bob, idp_key), ia}), signkeys(), rp_origin));
  EXPECT_FALSE(verify_cap(S("cap"), signkeys(), rp_origin));
}

TEST(BrowserId, ScriptStatesStartInInit) {
  for (const Term& s : {cif_initial_state(), ld_initial_state(), rp_index_initial_state(), pif_initial_state()})
    EXPECT_EQ(s.at(1), S("init"));
  EXPECT_TRUE(cif_initial_state().at(cif_f::kHandled).is_empty_seq());
  EXPECT_TRUE(ld_initial_state().at(ld_f::kHandled).is_empty_seq());
  EXPECT_TRUE(rp_index_initial_state().at(rpi_f::kHandled).is_empty_seq());
}

TEST(BrowserId, HonestLoginMintsATokenForTheUser) {
  const Built b = load("benign.yaml");
  const Trace t = playbook_run(b);
  const auto ucs = notes(t, note::kUcIssued);
  ASSERT_EQ(ucs.size(), 1u);
  EXPECT_EQ(ucs[0].data.at(1), alice);
  const auto tokens = notes(t, note::kTokenMinted);
  ASSERT_EQ(tokens.size(), 1u);
  EXPECT_EQ(tokens[0].data.at(2), alice);
  // The RP keeps the token it handed out.
  const Term rp_state = t.final.states[static_cast<std::size_t>(b.sys->index_of("rp"))];
  EXPECT_TRUE(contains(rp_state.at(rp_f::kServiceTokens), Term::seq({tokens[0].data.at(1), alice})));
}

TEST(BrowserId, InjectionWithoutTheFixLogsTheUserInAsTheAttacker) {
  const Trace t = playbook_run(load("identity_injection_fix_off.yaml"));
  const auto logins = notes(t, note::kLpoLogin);
  ASSERT_FALSE(logins.empty());
  const auto tokens = notes(t, note::kTokenMinted);
  ASSERT_EQ(tokens.size(), 1u);
  EXPECT_EQ(tokens[0].data.at(2), make_identity("mallory", "evil.com"));
  // The token went to alice's request.
  EXPECT_EQ(tokens[0].data.at(3).text(), "alice");
}

TEST(BrowserId, TheFixStopsTheInjection) {
  const Trace t = playbook_run(load("identity_injection_fix_on.yaml"));
  EXPECT_TRUE(notes(t, note::kTokenMinted).empty());
  EXPECT_TRUE(notes(t, note::kLpoLogin).empty());
}

TEST(BrowserId, CorruptedServerIsNoLongerHonest) {
  const Built b = load("corrupted_rp.yaml");
  const Trace t = run_scenario(b, "guided", 1, b.scenario.steps);
  const auto c = notes(t, note::kCorrupted);
  ASSERT_FALSE(c.empty());
  EXPECT_EQ(c[0].data, S("rp2"));
  const int rp2 = b.sys->index_of("rp2");
  EXPECT_TRUE(b.sys->proc(rp2).honest(t.initial.states[static_cast<std::size_t>(rp2)]));
  EXPECT_FALSE(b.sys->proc(rp2).honest(t.final.states[static_cast<std::size_t>(rp2)]));
  const int rp = b.sys->index_of("rp");
  EXPECT_TRUE(b.sys->proc(rp).honest(t.final.states[static_cast<std::size_t>(rp)]));
}

}  // namespace

#include <gtest/gtest.h>

#include "dyweb/attacker.h"
#include "dyweb/browserid.h"
#include "dyweb/harness.h"
#include "dyweb/monitors.h"

namespace {

using namespace dyweb;

Built load(const std::string& name) {
  return build_system(load_scenario_file(std::string(DYWEB_SCENARIO_DIR) + "/" + name));
}

Trace playbook_run(const Built& b) { return run_scenario(b, "playbook", 1, b.scenario.steps); }

Verdict verdict(const std::vector<PropResult>& rs, const std::string& id) {
  for (const PropResult& r : rs)
    if (r.id == id) return r.verdict;
  ADD_FAILURE() << "no result for " << id;
  return Verdict::Holds;
}

std::optional<Note> first_note(const Trace& t, const std::string& kind) {
  for (const StepRecord& s : t.steps)
    for (const Note& n : s.notes)
      if (n.kind == kind) return n;
  return std::nullopt;
}

// Appends a step in which the first attacker learns the given term.
Trace leak(const Built& b, Trace t, const Term& secret) {
  const int att = b.roster.attackers.at(0);
  StepRecord s;
  s.index = t.steps.size();
  s.proc = att;
  s.proc_name = b.sys->proc(att).name();
  s.state_before = t.final.states[static_cast<std::size_t>(att)];
  s.state_after = Term::seq({s.state_before.at(att_f::kInitial),
                             append(s.state_before.at(att_f::kRecorded),
                                    Term::seq({Term::addr("x"), Term::addr("x"), secret}))});
  s.delivered.msg = secret;
  t.final.states[static_cast<std::size_t>(att)] = s.state_after;
  t.steps.push_back(s);
  return t;
}

TEST(Monitors, PropertyIdsAndRendering) {
  EXPECT_EQ(property_ids().size(), 6u);
  EXPECT_TRUE(is_property_id("L1.3"));
  EXPECT_FALSE(is_property_id("C"));
  EXPECT_EQ(render_result({"A", Verdict::Holds, std::nullopt, ""}), "PROP A HOLDS");
  EXPECT_EQ(render_result({"B", Verdict::Violated, 12, ""}), "PROP B VIOLATED witness=12");
  EXPECT_EQ(render_result({"L3", Verdict::Exempt, std::nullopt, ""}), "PROP L3 EXEMPT");
}

TEST(Monitors, ChannelNames) {
  EXPECT_EQ(channel_from_name("postmessage"), Channel::PostMessage);
  EXPECT_EQ(channel_from_name("structure-no-origin"), Channel::StructureNoOrigin);
  EXPECT_FALSE(channel_from_name("radio"));
}

TEST(Monitors, RosterFindsAttackers) {
  const Built b = load("benign.yaml");
  const Roster r = roster_attackers(*b.sys);
  ASSERT_EQ(r.attackers.size(), 1u);
  EXPECT_EQ(b.sys->proc(r.attackers[0]).name(), "mallory");
}

TEST(Monitors, HonestRunSatisfiesEverything) {
  const Built b = load("benign.yaml");
  const Trace t = playbook_run(b);
  for (const PropResult& r : check_properties(*b.sys, b.roster, t))
    EXPECT_EQ(r.verdict, Verdict::Holds) << r.id << " " << r.detail;
}

TEST(Monitors, ConditionAFlagsALeakedToken) {
  const Built b = load("benign.yaml");
  const Trace t = playbook_run(b);
  const auto minted = first_note(t, note::kTokenMinted);
  ASSERT_TRUE(minted);
  const Term token = Term::seq({minted->data.at(1), minted->data.at(2)});
  EXPECT_FALSE(attacker_derives(*b.sys, b.roster, t, static_cast<std::ptrdiff_t>(t.steps.size()) - 1, token));
  const Trace bad = leak(b, t, token);
  EXPECT_TRUE(attacker_derives(*b.sys, b.roster, bad, static_cast<std::ptrdiff_t>(bad.steps.size()) - 1, token));
  const PropResult a = check_condition_a(*b.sys, b.roster, bad);
  EXPECT_EQ(a.verdict, Verdict::Violated);
  EXPECT_EQ(a.witness, t.steps.size());
}

TEST(Monitors, ConditionAIgnoresTokensOfCorruptedUsers) {
  const Built b = load("fullcorrupt.yaml");
  const Trace t = playbook_run(b);
  EXPECT_EQ(check_condition_a(*b.sys, b.roster, t).verdict, Verdict::Holds);
}

TEST(Monitors, ConditionBFlagsTheInjection) {
  const Built off = load("identity_injection_fix_off.yaml");
  const PropResult r = check_condition_b(*off.sys, off.roster, playbook_run(off));
  EXPECT_EQ(r.verdict, Verdict::Violated);
  ASSERT_TRUE(r.witness);
  const Built on = load("identity_injection_fix_on.yaml");
  EXPECT_EQ(check_condition_b(*on.sys, on.roster, playbook_run(on)).verdict, Verdict::Holds);
}

TEST(Monitors, KeySecrecyFlagsADecryptableRequest) {
  const Built b = load("benign.yaml");
  const Trace t = playbook_run(b);
  // The TLS key alone is harmless while the attacker has not seen the request.
  EXPECT_EQ(verdict(check_https_lemma(*b.sys, b.roster, leak(b, t, ssl_key("rp.com"))), "L1.2"), Verdict::Holds);
  const auto issued = first_note(t, note::kRequestIssued);
  ASSERT_TRUE(issued);
  const Term both = Term::seq({issued->data.at(5), ssl_key("rp.com")});
  EXPECT_EQ(verdict(check_https_lemma(*b.sys, b.roster, leak(b, t, both)), "L1.2"), Verdict::Violated);
}

TEST(Monitors, AttackerKnowsItsOwnKeys) {
  const Built b = load("benign.yaml");
  const Trace t = playbook_run(b);
  EXPECT_TRUE(attacker_derives(*b.sys, b.roster, t, -1, ssl_key("evil.com")));
  EXPECT_FALSE(attacker_derives(*b.sys, b.roster, t, -1, ssl_key("rp.com")));
  EXPECT_FALSE(attacker_derives(*b.sys, b.roster, t, -1, sign_key("idp")));
}

TEST(Monitors, FullCorruptionLeaksTheBrowserSecrets) {
  const Built b = load("fullcorrupt.yaml");
  const Trace t = playbook_run(b);
  const auto minted = first_note(t, note::kTokenMinted);
  ASSERT_TRUE(minted);
  const Term token = Term::seq({minted->data.at(1), minted->data.at(2)});
  const auto last = static_cast<std::ptrdiff_t>(t.steps.size()) - 1;
  EXPECT_TRUE(attacker_derives(*b.sys, b.roster, t, last, token));
  EXPECT_TRUE(attacker_derives(*b.sys, b.roster, t, last, S("pw_alice")));
}

TEST(Monitors, SelectedPropertiesOnly) {
  const Built b = load("benign.yaml");
  const auto rs = check_properties(*b.sys, b.roster, playbook_run(b), {"L3", "A"});
  ASSERT_EQ(rs.size(), 2u);
  EXPECT_EQ(rs[0].id, "A");
  EXPECT_EQ(rs[1].id, "L3");
}

TEST(Monitors, Distinguisher) {
  EXPECT_FALSE(privacy_distinguisher({"a", "b"}, {"a", "b"}));
  EXPECT_TRUE(privacy_distinguisher({"a"}, {"a", "b"}));
  EXPECT_TRUE(privacy_distinguisher({"a", "c"}, {"a", "b"}));
}

TEST(Monitors, ObservationsAbstractNonces) {
  const Built a = load("privacy_identical.yaml");
  const Trace t1 = run_scenario(a, a.scenario.resolver.mode, 1, a.scenario.steps);
  const Trace t2 = run_scenario(a, a.scenario.resolver.mode, 1, a.scenario.steps);
  const auto o = privacy_observations(a, t1);
  EXPECT_FALSE(o.empty());
  EXPECT_EQ(o, privacy_observations(a, t2));
  for (const std::string& s : o) EXPECT_EQ(s.find("n:alice:"), std::string::npos) << s;
}

}  // namespace

#include <gtest/gtest.h>

#include "dyweb/runtime.h"
#include "fixtures/toy_system.h"

namespace {

using namespace dyweb;
using fixture::Toy;
using fixture::toy_system;

// Delivers the option named by text at the "event" point and "a" elsewhere.
class ByName : public Resolver {
 public:
  explicit ByName(std::vector<std::string> events) : events_(std::move(events)) {}
  bool begin_step(const System&, const Configuration&) override { return pos_ < events_.size(); }
  void end_step() override { ++pos_; }
  std::size_t choose(std::string_view label, std::size_t n, const OptionNamer& name) override {
    if (label != "event") return 0;
    for (std::size_t i = 0; i < n; ++i)
      if (name(i) == events_[pos_]) return i;
    throw ChoiceMismatch(events_[pos_]);
  }

 private:
  std::vector<std::string> events_;
  std::size_t pos_ = 0;
};

TEST(Runtime, TriggerThenDeliver) {
  const System sys = toy_system();
  ByName r({"trigger:p", "event:2:a:q"});
  const Trace t = run(sys, r, RunOptions{10, {}});
  ASSERT_EQ(t.steps.size(), 2u);
  EXPECT_EQ(t.end_reason, "resolver-done");
  EXPECT_EQ(t.steps[0].proc_name, "p");
  EXPECT_EQ(t.steps[0].emitted.size(), 1u);
  EXPECT_EQ(t.steps[0].notes.at(0).data, Term::nonce("p", 0));
  EXPECT_EQ(t.steps[1].proc_name, "q");
  EXPECT_EQ(t.final.states[0], Term::seq({S("a")}));
  EXPECT_EQ(t.final.states[1], Term::seq({S("ping")}));
  EXPECT_TRUE(t.final.pool.empty());
  EXPECT_EQ(t.final.counters[0], 1u);
}

TEST(Runtime, MismatchEndsRunWithoutCommitting) {
  const System sys = toy_system();
  ByName r({"event:9:a:q"});
  const Trace t = run(sys, r, RunOptions{10, {}});
  EXPECT_TRUE(t.steps.empty());
  EXPECT_EQ(t.final.states[0], Term());
}

TEST(Runtime, MaxStepsAndHalt) {
  const System sys = toy_system();
  RandomResolver r(3);
  EXPECT_EQ(run(sys, r, RunOptions{7, {}}).steps.size(), 7u);
  RandomResolver r2(3);
  const Trace t = run(sys, r2, RunOptions{50, [](const Trace& tr) { return tr.steps.size() == 4; }});
  EXPECT_EQ(t.steps.size(), 4u);
  EXPECT_EQ(t.end_reason, "halted");
}

TEST(Runtime, SameSeedSameTrace) {
  const System sys = toy_system();
  RandomResolver a(11), b(11), c(12);
  const std::string ta = render_trace(run(sys, a, RunOptions{30, {}}));
  EXPECT_EQ(ta, render_trace(run(sys, b, RunOptions{30, {}})));
  EXPECT_NE(ta, render_trace(run(sys, c, RunOptions{30, {}})));
}

TEST(Runtime, TraceParsesAndReplays) {
  const System sys = toy_system();
  RandomResolver r(5);
  const Trace t = run(sys, r, RunOptions{25, {}}, TraceHeader{"toy", "h", 5, "random"});
  const std::string text = render_trace(t);
  const ParsedTrace p = parse_trace(text);
  EXPECT_EQ(p.header.scenario, "toy");
  EXPECT_EQ(p.header.seed, 5u);
  EXPECT_EQ(p.steps, 25u);
  ScriptedResolver s(flatten_choices(p), p.steps);
  const Trace again = run(sys, s, RunOptions{p.steps, {}}, p.header);
  EXPECT_TRUE(s.exhausted());
  Trace same = again;
  same.end_reason = t.end_reason;
  EXPECT_EQ(render_trace(same), text);
}

TEST(Runtime, ScriptedResolverDetectsDivergence) {
  const System sys = toy_system();
  ScriptedResolver s({Choice{"toy.pick", 0, 2}}, 1);
  EXPECT_THROW(run(sys, s, RunOptions{1, {}}), ReplayError);
}

TEST(Runtime, StateTimeline) {
  const System sys = toy_system();
  ByName r({"trigger:p", "trigger:p", "event:2:a:q"});
  const Trace t = run(sys, r, RunOptions{10, {}});
  const StateTimeline tl(t);
  EXPECT_EQ(tl.steps(), 3u);
  EXPECT_EQ(tl.after(-1)[0], Term());
  EXPECT_EQ(tl.after(0)[0], Term::seq({S("a")}));
  EXPECT_EQ(tl.after(2)[1], Term::seq({S("ping")}));
}

TEST(Runtime, ListenersAndOwners) {
  System sys = toy_system();
  EXPECT_EQ(sys.owner_of(Term::addr("q")), 1);
  EXPECT_EQ(sys.owner_of(Term::addr("z")), -1);
  auto spy = std::make_shared<Toy>("spy", Term::addr("s"), Term::addr("p"));
  spy->set_listens_everywhere(true);
  sys.add(spy, Term());
  EXPECT_EQ(sys.listeners(Term::addr("q")), (std::vector<int>{1, 2}));
  EXPECT_EQ(sys.owner_of(Term::addr("q")), 1);
  EXPECT_EQ(sys.index_of("spy"), 2);
}

TEST(Runtime, ExploreFindsWitnessWithinDepth) {
  const System sys = toy_system();
  ExploreOptions opt;
  opt.depth = 4;
  // Both processes picked "b".
  auto pred = [](const Trace& t) {
    int bs = 0;
    for (const StepRecord& s : t.steps)
      if (s.state_after.len() && s.state_after.at(s.state_after.len()) == S("b")) ++bs;
    return bs >= 2;
  };
  const ExploreResult r = explore(sys, opt, pred);
  ASSERT_TRUE(r.witness);
  EXPECT_LE(r.witness->steps.size(), 4u);
  EXPECT_FALSE(r.budget_exceeded);
}

TEST(Runtime, ExploreRespectsNodeBudget) {
  const System sys = toy_system();
  ExploreOptions opt;
  opt.depth = 12;
  opt.max_nodes = 50;
  const ExploreResult r = explore(sys, opt, [](const Trace&) { return false; });
  EXPECT_FALSE(r.witness);
  EXPECT_TRUE(r.budget_exceeded);
}

TEST(Runtime, ConfigurationHashTracksState) {
  const System sys = toy_system();
  Configuration a = sys.initial(), b = sys.initial();
  EXPECT_EQ(a.hash(), b.hash());
  b.states[0] = S("x");
  EXPECT_NE(a.hash(), b.hash());
}

}  // namespace

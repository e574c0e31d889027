// Acceptance checks: one PASS/FAIL line per criterion.
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dyweb/browserid.h"
#include "dyweb/harness.h"
#include "dyweb/monitors.h"
#include "dyweb/scenario.h"
#include "fixtures/browser_cases.h"
#include "oracles/instances.h"

using namespace dyweb;

namespace {

// Pinned limits.
constexpr std::size_t kAttackMaxEvents = 80;
constexpr double kAttackMaxSeconds = 10.0;
constexpr double kFixOnMaxSeconds = 300.0;
constexpr std::size_t kFixOnRandomRuns = 10'000;
constexpr std::size_t kRandomSteps = 200;
constexpr std::size_t kConditionARuns = 10'000;
constexpr double kPrivacyMaxSeconds = 5.0;
constexpr std::size_t kLemmaRuns = 1'000;
constexpr int kOracleInstances = 1'000;
constexpr int kOracleRecipeDepth = 4;
constexpr std::size_t kFixtureMinCases = 5;
constexpr std::size_t kExploreNodes = 2'000'000;

std::string path(const std::string& name) { return std::string(DYWEB_SCENARIO_DIR) + "/" + name; }
Built load(const std::string& name) { return build_system(load_scenario_file(path(name))); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

const PropResult* find(const std::vector<PropResult>& rs, const std::string& id) {
  for (const PropResult& r : rs)
    if (r.id == id) return &r;
  return nullptr;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// 1. Without the fix the identity-injection playbook ends in a B violation.
Outcome attack_found() {
  const auto t0 = std::chrono::steady_clock::now();
  const Built b = load("identity_injection_fix_off.yaml");
  const Trace t = run_scenario(b, "playbook", b.scenario.resolver.seed, b.scenario.steps);
  const auto rs = check_properties(*b.sys, b.roster, t, {"B"});
  const double secs = seconds_since(t0);
  const PropResult* r = find(rs, "B");
  if (!r || r->verdict != Verdict::Violated || !r->witness) return {false, "no B violation"};
  const std::size_t events = *r->witness + 1;
  return {events <= kAttackMaxEvents && secs < kAttackMaxSeconds,
          "B violated after " + std::to_string(events) + " events (limit " + std::to_string(kAttackMaxEvents) +
              ") in " + fmt(secs) + " s (limit " + fmt(kAttackMaxSeconds) + ")"};
}

// 2. With the fix: exhaustive search around the playbook and random runs.
Outcome fix_holds() {
  const auto t0 = std::chrono::steady_clock::now();
  const Built off = load("identity_injection_fix_off.yaml");
  const std::size_t depth = run_scenario(off, "playbook", 1, off.scenario.steps).steps.size();
  const Built b = load("identity_injection_fix_on.yaml");
  const ExploreResult ex = explore_scenario(b, depth, {"B"}, kExploreNodes);
  const BatchStats st = run_batch(b, {"random", "guided"}, 1, kFixOnRandomRuns, kRandomSteps, {"B"});
  const double secs = seconds_since(t0);
  const std::size_t bad = st.violated.count("B") ? st.violated.at("B") : 0;
  const bool ok = !ex.witness && !ex.budget_exceeded && bad == 0 && secs < kFixOnMaxSeconds;
  return {ok, "explored " + std::to_string(ex.nodes) + " nodes to depth " + std::to_string(depth) +
                  (ex.witness ? " (violation found)" : "") + (ex.budget_exceeded ? " (budget exceeded)" : "") + ", " +
                  std::to_string(st.runs) + " runs with " + std::to_string(st.tokens) + " tokens, " +
                  std::to_string(bad) + " B violations, " + fmt(secs) + " s (limit " + fmt(kFixOnMaxSeconds) + ")"};
}

// 3. Condition A on the benign and corrupted-RP scenarios; FULLCORRUPT leaks
// tokens without a violation.
Outcome condition_a() {
  std::ostringstream d;
  bool ok = true;
  for (const char* name : {"benign.yaml", "corrupted_rp.yaml"}) {
    const Built b = load(name);
    const BatchStats st = run_batch(b, {"random", "guided"}, 1, kConditionARuns, kRandomSteps, {"A"});
    const std::size_t bad = st.violated.count("A") ? st.violated.at("A") : 0;
    ok = ok && bad == 0 && st.tokens > 0;
    d << name << ": " << st.runs << " runs, " << st.tokens << " tokens, " << bad << " A violations; ";
  }
  const Built fc = load("fullcorrupt.yaml");
  const Trace t = run_scenario(fc, "playbook", 1, fc.scenario.steps);
  std::size_t minted = 0, derived = 0;
  for (const StepRecord& s : t.steps)
    for (const Note& n : s.notes)
      if (n.kind == note::kTokenMinted) {
        ++minted;
        const Term token = Term::seq({n.data.at(1), n.data.at(2)});
        derived += attacker_derives(*fc.sys, fc.roster, t, t.steps.size() - 1, token);
      }
  const PropResult a = check_condition_a(*fc.sys, fc.roster, t);
  ok = ok && minted > 0 && derived == minted && a.verdict == Verdict::Holds;
  d << "fullcorrupt: " << derived << "/" << minted << " tokens derivable, A " << verdict_name(a.verdict);
  return {ok, d.str()};
}

// 4. Privacy distinguishers.
Outcome privacy() {
  struct Pair {
    const char* a;
    bool want;
  };
  const std::vector<Pair> pairs = {{"privacy_logged_in.yaml", true},
                                   {"privacy_identical.yaml", false},
                                   {"privacy_structure.yaml", true},
                                   {"privacy_dialog.yaml", true}};
  std::ostringstream d;
  bool ok = true;
  for (const Pair& p : pairs) {
    const auto t0 = std::chrono::steady_clock::now();
    const Built a = load(p.a);
    Built b = load(a.scenario.privacy->peer);
    b.scenario.privacy = a.scenario.privacy;
    auto once = [](const Built& x) {
      return run_scenario(x, x.scenario.resolver.mode, x.scenario.resolver.seed, x.scenario.steps);
    };
    const bool got = privacy_distinguisher(privacy_observations(a, once(a)), privacy_observations(b, once(b)));
    const double secs = seconds_since(t0);
    ok = ok && got == p.want && got == a.scenario.privacy->distinguishable && secs < kPrivacyMaxSeconds;
    d << p.a << " (" << a.scenario.privacy->channel << ") " << (got ? "true" : "false") << " in " << fmt(secs)
      << " s; ";
  }
  return {ok, d.str() + "limit " + fmt(kPrivacyMaxSeconds) + " s each"};
}

// 5. Lemma monitors on honest runs.
Outcome lemmas() {
  const Built b = load("benign.yaml");
  const std::vector<std::string> ids = {"L1.2", "L1.3", "L1.4", "L3"};
  const BatchStats st = run_batch(b, {"random", "guided"}, 1, kLemmaRuns, kRandomSteps, ids);
  std::ostringstream d;
  bool ok = true;
  for (const std::string& id : ids) {
    const std::size_t bad = st.violated.count(id) ? st.violated.at(id) : 0;
    ok = ok && bad == 0;
    d << id << " violated in " << bad << " runs; ";
  }
  d << st.runs << " runs, " << st.steps << " steps";
  return {ok, d.str()};
}

// 6. Knowledge::derivable against the brute-force closure.
Outcome deduction() {
  oracle::InstanceGen gen(2024);
  int agree = 0, positive = 0, deep = 0;
  for (int i = 0; i < kOracleInstances; ++i) {
    const oracle::Instance in = gen.next();
    Knowledge k;
    for (const Term& t : in.knowledge) k.add(t);
    const bool got = k.derivable(in.target);
    const oracle::Result bounded = oracle::closure(in.knowledge, in.target, kOracleRecipeDepth);
    const oracle::Result full = oracle::closure(in.knowledge, in.target);
    // Instances that need recipes deeper than the bound are compared with
    // the unbounded closure and counted.
    const bool want = full.derivable;
    deep += full.derivable && !bounded.derivable;
    positive += want;
    agree += got == want;
  }
  return {agree == kOracleInstances, std::to_string(agree) + "/" + std::to_string(kOracleInstances) +
                                         " agree (" + std::to_string(positive) + " derivable, " +
                                         std::to_string(deep) + " beyond recipe depth " +
                                         std::to_string(kOracleRecipeDepth) + ")"};
}

// 7. Browser fixtures.
Outcome fixtures() {
  std::map<std::string, std::pair<std::size_t, std::size_t>> groups;  // group -> (cases, passed)
  for (const fixture::Case& c : fixture::browser_cases()) {
    auto& g = groups[c.group];
    ++g.first;
    g.second += c.check();
  }
  bool ok = groups.size() == 7;
  std::ostringstream d;
  for (const auto& [name, g] : groups) {
    ok = ok && g.first >= kFixtureMinCases && g.first == g.second;
    d << name << " " << g.second << "/" << g.first << "; ";
  }
  return {ok, d.str()};
}

// 8. Determinism and replay.
Outcome determinism() {
  std::size_t checked = 0;
  bool ok = true;
  std::string why;
  for (const char* name : {"benign.yaml", "identity_injection_fix_off.yaml", "corrupted_rp.yaml", "privacy_dialog.yaml"}) {
    const Built b = load(name);
    for (std::uint64_t seed : {1u, 7u, 42u}) {
      for (const char* mode : {"random", "guided", "playbook"}) {
        const std::string t1 = render_trace(run_scenario(b, mode, seed, kRandomSteps, name));
        const std::string t2 = render_trace(run_scenario(b, mode, seed, kRandomSteps, name));
        std::string t3;
        try {
          t3 = replay_trace(b, t1);
        } catch (const std::exception& e) {
          why = e.what();
        }
        ++checked;
        if (t1 != t2 || t1 != t3) {
          ok = false;
          if (why.empty()) why = std::string(name) + " seed " + std::to_string(seed) + " " + mode;
        }
      }
    }
  }
  return {ok, std::to_string(checked) + " traces reproduced and replayed" + (why.empty() ? "" : "; first mismatch: " + why)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"identity injection found without the fix", attack_found},
      {"no identity injection with the fix", fix_holds},
      {"condition A on benign and corrupted runs", condition_a},
      {"privacy distinguishers", privacy},
      {"lemma monitors on honest runs", lemmas},
      {"deduction agrees with brute force", deduction},
      {"browser fixtures", fixtures},
      {"deterministic traces and replay", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "CRITERION " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

// Command line front end: run, explore, check, replay and privacy.
// Exit status: 0 = requested properties hold (or the expected violation was
// found), 2 = violation, 1 = operational error.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dyweb/harness.h"
#include "dyweb/monitors.h"
#include "dyweb/scenario.h"

namespace fs = std::filesystem;
using namespace dyweb;

namespace {

constexpr int kOk = 0, kError = 1, kViolation = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// The scenario named on the command line, else the one recorded in the trace.
std::string scenario_path(const std::string& given, const std::string& trace_text) {
  if (!given.empty()) return given;
  return parse_trace(trace_text).header.scenario;
}

std::vector<std::string> wanted(const Built& b, const std::vector<std::string>& props) {
  if (!props.empty()) return props;
  return b.scenario.monitors;
}

// Prints verdicts; returns the exit status.
int report(const std::vector<PropResult>& results, const std::vector<std::string>& expect_violation) {
  bool violated = false;
  bool expected_ok = true;
  for (const PropResult& r : results) {
    std::cout << render_result(r) << "\n";
    if (r.verdict == Verdict::Violated && !r.detail.empty()) std::cout << "  " << r.detail << "\n";
    const bool expected = std::find(expect_violation.begin(), expect_violation.end(), r.id) != expect_violation.end();
    if (expected && r.verdict != Verdict::Violated) expected_ok = false;
    if (!expected && r.verdict == Verdict::Violated) violated = true;
  }
  for (const std::string& e : expect_violation) {
    if (std::none_of(results.begin(), results.end(), [&](const PropResult& r) { return r.id == e; }))
      expected_ok = false;
  }
  if (violated || !expected_ok) return kViolation;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbolic web-model simulator for BrowserID"};
  app.require_subcommand(1);

  std::string scenario, trace_out, trace_in, mode, peer;
  std::uint64_t seed = 0;
  std::size_t steps = 0, depth = 0, snapshot = 0;
  std::vector<std::string> props, expect;

  auto* run = app.add_subcommand("run", "execute a scenario and report verdicts");
  run->add_option("--scenario", scenario, "scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "seed (default: the scenario's)");
  run->add_option("--steps", steps, "step budget (default: the scenario's)");
  run->add_option("--mode", mode, "random | playbook | guided (default: the scenario's)");
  run->add_option("--trace", trace_out, "write the trace here");
  run->add_option("--snapshot-every", snapshot, "add state snapshots every N steps");
  run->add_option("--property", props, "properties to check (default: the scenario's)");
  run->add_option("--expect-violation", expect, "properties that must be violated");

  auto* exp = app.add_subcommand("explore", "bounded search for a violation");
  exp->add_option("--scenario", scenario, "scenario file")->required()->check(CLI::ExistingFile);
  exp->add_option("--depth", depth, "depth bound (default: the scenario's, else its step budget)");
  exp->add_option("--property", props, "properties searched for")->required();
  exp->add_option("--trace", trace_out, "write the witness trace here");
  exp->add_option("--expect-violation", expect, "properties that must be violated");

  auto* chk = app.add_subcommand("check", "monitor a recorded trace");
  chk->add_option("--trace", trace_in, "trace file")->required()->check(CLI::ExistingFile);
  chk->add_option("--scenario", scenario, "scenario file (default: recorded in the trace)");
  chk->add_option("--property", props, "properties to check");
  chk->add_option("--expect-violation", expect, "properties that must be violated");

  auto* rep = app.add_subcommand("replay", "re-run a trace and compare byte for byte");
  rep->add_option("--trace", trace_in, "trace file")->required()->check(CLI::ExistingFile);
  rep->add_option("--scenario", scenario, "scenario file (default: recorded in the trace)");

  auto* prv = app.add_subcommand("privacy", "compare the observations of two scenario runs");
  prv->add_option("--scenario", scenario, "scenario with a privacy section")->required()->check(CLI::ExistingFile);
  prv->add_option("--peer", peer, "scenario to compare with (default: the privacy peer)");
  bool show = false;
  prv->add_flag("--show", show, "print both observation sequences");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version exit 0; usage errors are operational errors.
    return app.exit(e) == 0 ? kOk : kError;
  }

  try {
    if (*run) {
      const Built b = build_system(load_scenario_file(scenario));
      const std::string m = mode.empty() ? b.scenario.resolver.mode : mode;
      const Trace t = run_scenario(b, m, seed ? seed : b.scenario.resolver.seed, steps ? steps : b.scenario.steps,
                                   scenario);
      if (!trace_out.empty()) write_file(trace_out, render_trace(t, snapshot));
      std::cout << "steps " << t.steps.size() << " end " << t.end_reason << "\n";
      return report(check_properties(*b.sys, b.roster, t, wanted(b, props)), expect);
    }
    if (*exp) {
      const Built b = build_system(load_scenario_file(scenario));
      for (const std::string& p : props)
        if (!is_property_id(p)) throw std::runtime_error("unknown property " + p);
      const std::size_t d = depth ? depth : (b.scenario.resolver.depth ? b.scenario.resolver.depth : b.scenario.steps);
      ExploreResult r = explore_scenario(b, d, props, explore_node_budget(2'000'000));
      std::cout << "nodes " << r.nodes << " pruned " << r.pruned << (r.budget_exceeded ? " budget-exceeded" : "")
                << "\n";
      if (!r.witness) {
        for (const std::string& p : props) std::cout << "PROP " << p << " not violated within depth " << d << "\n";
        return expect.empty() ? kOk : kViolation;
      }
      r.witness->header.scenario = scenario;
      if (!trace_out.empty()) write_file(trace_out, render_trace(*r.witness));
      return report(check_properties(*b.sys, b.roster, *r.witness, props), expect);
    }
    if (*chk) {
      const std::string text = read_file(trace_in);
      const Built b = build_system(load_scenario_file(scenario_path(scenario, text)));
      const ParsedTrace p = parse_trace(text);
      ScriptedResolver r(flatten_choices(p), p.steps);
      const Trace t = dyweb::run(*b.sys, r, RunOptions{p.steps, {}}, p.header);
      return report(check_properties(*b.sys, b.roster, t, wanted(b, props)), expect);
    }
    if (*rep) {
      const std::string text = read_file(trace_in);
      const Built b = build_system(load_scenario_file(scenario_path(scenario, text)));
      const std::string again = replay_trace(b, text);
      // Snapshots are optional extras of the original file.
      std::string stripped;
      std::istringstream in(text);
      for (std::string line; std::getline(in, line);)
        if (line.rfind("SNAP ", 0) != 0) stripped += line + "\n";
      if (again != stripped) {
        std::cerr << "replay differs from the recorded trace\n";
        return kError;
      }
      std::cout << "replay identical (" << parse_trace(text).steps << " steps)\n";
      return kOk;
    }
    if (*prv) {
      const Built a = build_system(load_scenario_file(scenario));
      if (!a.scenario.privacy) throw std::runtime_error("scenario has no privacy section");
      std::string other = peer;
      if (other.empty()) other = (fs::path(scenario).parent_path() / a.scenario.privacy->peer).string();
      const Built b = build_system(load_scenario_file(other));
      auto once = [](const Built& x) {
        return run_scenario(x, x.scenario.resolver.mode, x.scenario.resolver.seed, x.scenario.steps);
      };
      // Both runs are seen through the first scenario's observer and channel.
      Built bb = b;
      bb.scenario.privacy = a.scenario.privacy;
      const auto oa = privacy_observations(a, once(a));
      const auto ob = privacy_observations(bb, once(b));
      const bool d = privacy_distinguisher(oa, ob);
      std::cout << "observations " << oa.size() << " vs " << ob.size() << "\n";
      if (show) {
        for (const std::string& o : oa) std::cout << "  a " << o << "\n";
        for (const std::string& o : ob) std::cout << "  b " << o << "\n";
      }
      std::cout << "PRIVACY " << (d ? "DISTINGUISHABLE" : "INDISTINGUISHABLE") << "\n";
      return d == a.scenario.privacy->distinguishable ? kOk : kViolation;
    }
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}

// Run drivers over built scenarios: single runs, parallel batches, guided
// exploration, replay and privacy comparisons.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dyweb/monitors.h"
#include "dyweb/runtime.h"
#include "dyweb/scenario.h"

namespace dyweb {

// mode: random | playbook | guided (playbook with the free labels drawn
// from the seed, then random steps up to the step budget).
std::unique_ptr<Resolver> make_resolver(const Built& b, const std::string& mode, std::uint64_t seed);

Trace run_scenario(const Built& b, const std::string& mode, std::uint64_t seed, std::size_t steps,
                   const std::string& scenario_ref = "");

struct BatchStats {
  std::size_t runs = 0;
  std::size_t steps = 0;
  std::size_t tokens = 0;  // tokens minted over all runs
  std::map<std::string, std::size_t> violated;  // property -> runs with a violation
  std::map<std::string, std::size_t> exempt;
  std::vector<std::uint64_t> failing_seeds;  // first few seeds with a violation
};

// Runs seeds [first, first + count) on worker threads; the mode of seed s is
// modes[s % modes.size()].
BatchStats run_batch(const Built& b, const std::vector<std::string>& modes, std::uint64_t first, std::size_t count,
                     std::size_t steps, const std::vector<std::string>& props, unsigned threads = 0);

// Depth-first search over the free labels of the scenario's playbook (or
// over all choices without a playbook) for a violation of props.
ExploreResult explore_scenario(const Built& b, std::size_t depth, const std::vector<std::string>& props,
                               std::size_t max_nodes = 2'000'000);

// Re-runs a rendered trace with its recorded choices; returns the re-rendered
// text.
std::string replay_trace(const Built& b, const std::string& trace_text);

// Observations of the scenario's privacy observer in a trace.
std::vector<std::string> privacy_observations(const Built& b, const Trace& t);

// Step budget for exhaustive exploration: DYWEB_EXPLORE_MAX_NODES when set.
std::size_t explore_node_budget(std::size_t fallback);

}  // namespace dyweb

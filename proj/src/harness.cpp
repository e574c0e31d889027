#include "dyweb/harness.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "dyweb/browserid.h"
#include "dyweb/playbook.h"

namespace dyweb {
namespace {

bool has_note(const StepRecord& s, std::string_view kind) {
  return std::any_of(s.notes.begin(), s.notes.end(), [&](const Note& n) { return n.kind == kind; });
}

bool token_props_only(const std::vector<std::string>& props) {
  return !props.empty() && std::all_of(props.begin(), props.end(), [](const std::string& p) { return p == "A" || p == "B"; });
}

}  // namespace

std::unique_ptr<Resolver> make_resolver(const Built& b, const std::string& mode, std::uint64_t seed) {
  if (mode == "random") return std::make_unique<RandomResolver>(seed);
  if (mode == "playbook") return std::make_unique<PlaybookResolver>(b.playbook);
  if (mode == "guided") return std::make_unique<PlaybookResolver>(b.playbook, b.scenario.resolver.free, seed, true);
  throw std::invalid_argument("unknown resolver mode: " + mode);
}

Trace run_scenario(const Built& b, const std::string& mode, std::uint64_t seed, std::size_t steps,
                   const std::string& scenario_ref) {
  auto r = make_resolver(b, mode, seed);
  TraceHeader h{scenario_ref.empty() ? b.scenario.name : scenario_ref, b.hash, seed, mode};
  return run(*b.sys, *r, RunOptions{steps, {}}, h);
}

BatchStats run_batch(const Built& b, const std::vector<std::string>& modes, std::uint64_t first, std::size_t count,
                     std::size_t steps, const std::vector<std::string>& props, unsigned threads) {
  if (modes.empty()) throw std::invalid_argument("no resolver modes");
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  BatchStats total;
  auto worker = [&] {
    BatchStats local;
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      const std::uint64_t seed = first + i;
      const Trace t = run_scenario(b, modes[seed % modes.size()], seed, steps);
      ++local.runs;
      local.steps += t.steps.size();
      for (const StepRecord& s : t.steps)
        for (const Note& n : s.notes)
          if (n.kind == note::kTokenMinted) ++local.tokens;
      bool bad = false;
      for (const PropResult& r : check_properties(*b.sys, b.roster, t, props)) {
        if (r.verdict == Verdict::Violated) {
          ++local.violated[r.id];
          bad = true;
        }
        if (r.verdict == Verdict::Exempt) ++local.exempt[r.id];
      }
      if (bad) local.failing_seeds.push_back(seed);
    }
    std::lock_guard<std::mutex> lock(mu);
    total.runs += local.runs;
    total.steps += local.steps;
    total.tokens += local.tokens;
    for (const auto& [k, v] : local.violated) total.violated[k] += v;
    for (const auto& [k, v] : local.exempt) total.exempt[k] += v;
    total.failing_seeds.insert(total.failing_seeds.end(), local.failing_seeds.begin(), local.failing_seeds.end());
  };
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  std::sort(total.failing_seeds.begin(), total.failing_seeds.end());
  if (total.failing_seeds.size() > 10) total.failing_seeds.resize(10);
  return total;
}

ExploreResult explore_scenario(const Built& b, std::size_t depth, const std::vector<std::string>& props,
                               std::size_t max_nodes) {
  ExploreOptions opt;
  opt.depth = depth;
  opt.max_nodes = max_nodes;
  if (!b.playbook.empty()) {
    opt.guide = std::make_shared<PlaybookResolver>(b.playbook);
    opt.free_labels = b.scenario.resolver.free;
  }
  const bool token_only = token_props_only(props);
  auto pred = [&](const Trace& t) {
    // Token properties can only change on steps that mint a token.
    if (token_only && !has_note(t.steps.back(), note::kTokenMinted)) return false;
    for (const PropResult& r : check_properties(*b.sys, b.roster, t, props))
      if (r.verdict == Verdict::Violated) return true;
    return false;
  };
  TraceHeader h{b.scenario.name, b.hash, 0, "explore"};
  return explore(*b.sys, opt, pred, h);
}

std::string replay_trace(const Built& b, const std::string& trace_text) {
  const ParsedTrace p = parse_trace(trace_text);
  if (!p.header.scenario_hash.empty() && p.header.scenario_hash != b.hash)
    throw std::runtime_error("trace was recorded for a different scenario (hash mismatch)");
  ScriptedResolver r(flatten_choices(p), p.steps);
  Trace t = run(*b.sys, r, RunOptions{p.steps, {}}, p.header);
  if (!r.exhausted()) throw ReplayError("replay left recorded choices unused");
  t.end_reason = p.end_reason;
  return render_trace(t);
}

std::vector<std::string> privacy_observations(const Built& b, const Trace& t) {
  if (!b.scenario.privacy) throw std::invalid_argument("scenario has no privacy section");
  const int obs = b.sys->index_of(b.scenario.privacy->observer);
  return observations(*b.sys, b.roster, t, obs, *channel_from_name(b.scenario.privacy->channel));
}

std::size_t explore_node_budget(std::size_t fallback) {
  if (const char* v = std::getenv("DYWEB_EXPLORE_MAX_NODES")) {
    char* end = nullptr;
    const unsigned long long n = std::strtoull(v, &end, 10);
    if (end != v && n > 0) return static_cast<std::size_t>(n);
  }
  return fallback;
}

}  // namespace dyweb

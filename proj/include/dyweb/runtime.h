// Systems of atomic processes, configurations, processing steps, runs,
// nondeterminism resolution, bounded exploration and traces.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dyweb/terms.h"

namespace dyweb {

struct Choice {
  std::string label;
  std::size_t index = 0;
  std::size_t fanout = 1;
  bool operator==(const Choice& o) const {
    return label == o.label && index == o.index && fanout == o.fanout;
  }
};

using OptionNamer = std::function<std::string(std::size_t)>;

// Thrown by a resolver that cannot honour the current branch point; the
// runtime discards the partially computed step.
struct ChoiceMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class System;
struct Configuration;

class Resolver {
 public:
  virtual ~Resolver() = default;
  // Called before every step; false ends the run.
  virtual bool begin_step(const System&, const Configuration&) { return true; }
  // Called when a ChoiceMismatch aborted the step; false ends the run.
  virtual bool on_mismatch() { return false; }
  virtual void end_step() {}
  // Copy of the resolver including its position; needed by guided exploration.
  virtual std::unique_ptr<Resolver> clone() const { return nullptr; }
  // Returns an index in [0, n) for a branch point with n >= 2 options.
  virtual std::size_t choose(std::string_view label, std::size_t n, const OptionNamer& name) = 0;
  // Sees branch points with a single option, which are not recorded; may
  // raise ChoiceMismatch.
  virtual void confirm(std::string_view, const OptionNamer&) {}
};

class RandomResolver : public Resolver {
 public:
  explicit RandomResolver(std::uint64_t seed) : rng_(seed) {}
  std::size_t choose(std::string_view, std::size_t n, const OptionNamer&) override {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

 private:
  std::mt19937_64 rng_;
};

// Replays a recorded choice list; any divergence raises ReplayError.
struct ReplayError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ScriptedResolver : public Resolver {
 public:
  ScriptedResolver(std::vector<Choice> choices, std::size_t steps)
      : choices_(std::move(choices)), steps_(steps) {}
  bool begin_step(const System&, const Configuration&) override { return done_steps_ < steps_; }
  void end_step() override { ++done_steps_; }
  std::size_t choose(std::string_view label, std::size_t n, const OptionNamer&) override;
  bool exhausted() const { return pos_ == choices_.size(); }

 private:
  std::vector<Choice> choices_;
  std::size_t pos_ = 0;
  std::size_t steps_;
  std::size_t done_steps_ = 0;
};

struct Event {
  std::uint64_t id = 0;
  Term receiver, sender, msg;
  int emitter = -1;  // process index, -1 for initial events and triggers
  bool trigger = false;
};

struct Emit {
  Term receiver, sender, msg;
};

// Provenance and bookkeeping facts reported by a relation during a step.
struct Note {
  std::string kind;
  Term data;
};

class StepContext {
 public:
  StepContext(const System& sys, int self, std::uint64_t& counter, Resolver& r, std::vector<Choice>& log,
              std::vector<Note>& notes)
      : sys_(sys), self_(self), counter_(counter), resolver_(r), log_(log), notes_(notes) {}
  const System& system() const { return sys_; }
  int self() const { return self_; }
  // Fresh nonce from the acting process's namespace.
  Term fresh();
  // Index the next fresh nonce will get.
  std::uint64_t next_nonce_index() const { return counter_; }
  // Branch point; n == 1 resolves silently, n == 0 is a caller error.
  std::size_t choose(std::string_view label, std::size_t n, const OptionNamer& name);
  std::size_t choose(std::string_view label, const std::vector<std::string>& names);
  void note(std::string kind, Term data) { notes_.push_back({std::move(kind), std::move(data)}); }

 private:
  const System& sys_;
  int self_;
  std::uint64_t& counter_;
  Resolver& resolver_;
  std::vector<Choice>& log_;
  std::vector<Note>& notes_;
};

enum class Role { Browser, Lpo, Rp, Idp, Attacker, Dns };
std::string_view role_name(Role r);

class Process {
 public:
  Process(std::string name, Role role, std::vector<Term> addresses)
      : name_(std::move(name)), role_(role), addresses_(std::move(addresses)) {}
  virtual ~Process() = default;
  const std::string& name() const { return name_; }
  Role role() const { return role_; }
  const std::vector<Term>& addresses() const { return addresses_; }
  bool listens_everywhere() const { return listens_everywhere_; }
  void set_listens_everywhere(bool v) { listens_everywhere_ = v; }
  // Applies the relation to an event; returns emitted events and updates state.
  virtual std::vector<Emit> relation(const Event& e, Term& state, StepContext& ctx) const = 0;
  // Honest in the given state (attackers never are).
  virtual bool honest(const Term& state) const = 0;
  // Terms this process knows in the given state (for knowledge queries).
  virtual std::vector<Term> knowledge(const Term& state) const { return {state}; }

 private:
  std::string name_;
  Role role_;
  std::vector<Term> addresses_;
  bool listens_everywhere_ = false;
};

struct Configuration {
  std::vector<Term> states;
  std::vector<std::uint64_t> counters;
  std::vector<Event> pool;
  std::uint64_t next_id = 1;
  std::size_t hash() const;
};

class System {
 public:
  int add(std::shared_ptr<Process> p, Term initial_state, std::uint64_t first_nonce = 0);
  std::size_t size() const { return procs_.size(); }
  const Process& proc(int i) const { return *procs_.at(static_cast<std::size_t>(i)); }
  std::shared_ptr<const Process> proc_ptr(int i) const { return procs_.at(static_cast<std::size_t>(i)); }
  int index_of(std::string_view name) const;
  // Process indices that receive events sent to the address, owners first.
  std::vector<int> listeners(const Term& address) const;
  // Owner of an address (not counting processes listening everywhere), -1 if none.
  int owner_of(const Term& address) const;
  const Configuration& initial() const { return initial_; }
  Configuration& initial_mut() { return initial_; }
  void add_initial_event(Term receiver, Term sender, Term msg);

 private:
  std::vector<std::shared_ptr<Process>> procs_;
  Configuration initial_;
};

struct StepRecord {
  std::size_t index = 0;
  Event delivered;
  int proc = -1;
  std::string proc_name;
  std::vector<Choice> choices;
  std::vector<Event> emitted;
  std::vector<Note> notes;
  Term state_before;
  Term state_after;
};

struct TraceHeader {
  std::string scenario;  // path or name of the scenario
  std::string scenario_hash;
  std::uint64_t seed = 0;
  std::string mode;  // random | playbook | scripted | explore
};

struct Trace {
  TraceHeader header;
  Configuration initial;
  std::vector<StepRecord> steps;
  std::string end_reason;
  // Configuration after the last step.
  Configuration final;
};

// One processing step. Returns nullopt if the resolver ended the run.
// On success the configuration is advanced in place.
std::optional<StepRecord> step(const System& sys, Configuration& cfg, Resolver& r, std::size_t index);

struct RunOptions {
  std::size_t max_steps = 200;
  // Optional early stop after each committed step.
  std::function<bool(const Trace&)> halt;
};

Trace run(const System& sys, Resolver& r, const RunOptions& opt, TraceHeader header = {});

// Rebuilds the per-step states: states_at(trace, i) is the configuration
// state vector after step i (i = -1 for the initial one).
class StateTimeline {
 public:
  explicit StateTimeline(const Trace& t);
  const std::vector<Term>& after(std::ptrdiff_t step) const;
  std::size_t steps() const { return snaps_.size() - 1; }

 private:
  std::vector<std::vector<Term>> snaps_;
};

struct ExploreOptions {
  std::size_t depth = 10;
  std::size_t max_nodes = 2'000'000;
  // Guide: if set, it resolves every branch point except those named in
  // free_labels, and decides when the run ends (like a playbook).
  std::shared_ptr<const Resolver> guide;
  // Labels (prefix match) that are enumerated even when guided.
  std::vector<std::string> free_labels;
};

struct ExploreResult {
  std::optional<Trace> witness;
  std::size_t nodes = 0;
  std::size_t pruned = 0;
  bool budget_exceeded = false;
  std::size_t frontier = 0;
};

ExploreResult explore(const System& sys, const ExploreOptions& opt, const std::function<bool(const Trace&)>& predicate,
                      TraceHeader header = {});

// Trace file format.
std::string render_event(const Event& e);
std::string render_trace(const Trace& t, std::size_t snapshot_every = 0);
struct ParsedTrace {
  TraceHeader header;
  std::vector<std::vector<Choice>> step_choices;
  std::size_t steps = 0;
  std::string end_reason;
};
ParsedTrace parse_trace(const std::string& text);
std::vector<Choice> flatten_choices(const ParsedTrace& p);

}  // namespace dyweb

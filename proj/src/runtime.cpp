#include "dyweb/runtime.h"

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace dyweb {

std::string_view role_name(Role r) {
  switch (r) {
    case Role::Browser: return "browser";
    case Role::Lpo: return "lpo";
    case Role::Rp: return "rp";
    case Role::Idp: return "idp";
    case Role::Attacker: return "attacker";
    case Role::Dns: return "dns";
  }
  return "?";
}

std::size_t ScriptedResolver::choose(std::string_view label, std::size_t n, const OptionNamer&) {
  if (pos_ >= choices_.size()) throw ReplayError("recorded choices exhausted at " + std::string(label));
  const Choice& c = choices_[pos_++];
  if (c.label != label || c.fanout != n || c.index >= n) {
    throw ReplayError("replay diverged: expected " + c.label + "=" + std::to_string(c.index) + "/" +
                      std::to_string(c.fanout) + ", got branch point " + std::string(label) + "/" +
                      std::to_string(n));
  }
  return c.index;
}

Term StepContext::fresh() {
  return Term::nonce(sys_.proc(self_).name(), counter_++);
}

std::size_t StepContext::choose(std::string_view label, std::size_t n, const OptionNamer& name) {
  if (n == 0) throw std::logic_error("branch point without options: " + std::string(label));
  if (n == 1) {
    resolver_.confirm(label, name);
    return 0;
  }
  std::size_t i = resolver_.choose(label, n, name);
  if (i >= n) throw std::logic_error("resolver returned out-of-range index");
  log_.push_back({std::string(label), i, n});
  return i;
}

std::size_t StepContext::choose(std::string_view label, const std::vector<std::string>& names) {
  return choose(label, names.size(), [&](std::size_t i) { return names[i]; });
}

std::size_t Configuration::hash() const {
  std::size_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
  for (const Term& s : states) mix(s.hash());
  for (auto c : counters) mix(static_cast<std::size_t>(c));
  std::vector<std::size_t> ev;
  ev.reserve(pool.size());
  for (const Event& e : pool) {
    std::size_t x = e.receiver.hash();
    x = x * 31 + e.sender.hash();
    x = x * 31 + e.msg.hash();
    ev.push_back(x);
  }
  std::sort(ev.begin(), ev.end());
  for (auto x : ev) mix(x);
  return h;
}

int System::add(std::shared_ptr<Process> p, Term initial_state, std::uint64_t first_nonce) {
  procs_.push_back(std::move(p));
  initial_.states.push_back(std::move(initial_state));
  initial_.counters.push_back(first_nonce);
  return static_cast<int>(procs_.size()) - 1;
}

int System::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < procs_.size(); ++i) {
    if (procs_[i]->name() == name) return static_cast<int>(i);
  }
  return -1;
}

int System::owner_of(const Term& address) const {
  for (std::size_t i = 0; i < procs_.size(); ++i) {
    const auto& a = procs_[i]->addresses();
    if (std::find(a.begin(), a.end(), address) != a.end()) return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> System::listeners(const Term& address) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < procs_.size(); ++i) {
    const auto& a = procs_[i]->addresses();
    if (std::find(a.begin(), a.end(), address) != a.end()) out.push_back(static_cast<int>(i));
  }
  for (std::size_t i = 0; i < procs_.size(); ++i) {
    if (procs_[i]->listens_everywhere() &&
        std::find(out.begin(), out.end(), static_cast<int>(i)) == out.end())
      out.push_back(static_cast<int>(i));
  }
  return out;
}

void System::add_initial_event(Term receiver, Term sender, Term msg) {
  Event e;
  e.id = initial_.next_id++;
  e.receiver = std::move(receiver);
  e.sender = std::move(sender);
  e.msg = std::move(msg);
  initial_.pool.push_back(std::move(e));
}

namespace {

const Term& trigger_msg() {
  static const Term t = Term::str("TRIGGER");
  return t;
}

// Computes a step without touching cfg; throws ChoiceMismatch from the resolver.
StepRecord compute_step(const System& sys, const Configuration& cfg, Resolver& r, std::size_t index,
                        std::size_t& pool_slot, std::uint64_t& counter_after) {
  StepRecord rec;
  rec.index = index;
  std::vector<Note> notes;
  std::uint64_t dummy = 0;
  StepContext outer(sys, -1, dummy, r, rec.choices, notes);

  const std::size_t npool = cfg.pool.size();
  const std::size_t nproc = sys.size();
  std::size_t pick = outer.choose("event", npool + nproc, [&](std::size_t i) {
    if (i < npool) {
      const Event& e = cfg.pool[i];
      return "event:" + std::to_string(e.id) + ":" + render(e.receiver);
    }
    return "trigger:" + sys.proc(static_cast<int>(i - npool)).name();
  });

  Event ev;
  int target = -1;
  if (pick < npool) {
    ev = cfg.pool[pick];
    pool_slot = pick;
    std::vector<int> ls = sys.listeners(ev.receiver);
    if (ls.empty()) {
      // Nobody listens: the event is consumed without effect.
      rec.delivered = ev;
      rec.proc = -1;
      return rec;
    }
    std::size_t li = outer.choose("listener", ls.size(), [&](std::size_t i) { return sys.proc(ls[i]).name(); });
    target = ls[li];
  } else {
    target = static_cast<int>(pick - npool);
    pool_slot = static_cast<std::size_t>(-1);
    const Process& p = sys.proc(target);
    ev.id = 0;  // assigned at commit
    ev.receiver = p.addresses().empty() ? Term::addr(p.name()) : p.addresses().front();
    ev.sender = ev.receiver;
    ev.msg = trigger_msg();
    ev.trigger = true;
  }

  const Process& p = sys.proc(target);
  std::uint64_t counter = cfg.counters[static_cast<std::size_t>(target)];
  Term state = cfg.states[static_cast<std::size_t>(target)];
  rec.state_before = state;
  StepContext ctx(sys, target, counter, r, rec.choices, notes);
  std::vector<Emit> out = p.relation(ev, state, ctx);
  rec.delivered = ev;
  rec.proc = target;
  rec.proc_name = p.name();
  rec.state_after = state;
  rec.notes = std::move(notes);
  counter_after = counter;
  for (Emit& e : out) {
    Event x;
    x.receiver = std::move(e.receiver);
    x.sender = std::move(e.sender);
    x.msg = std::move(e.msg);
    x.emitter = target;
    rec.emitted.push_back(std::move(x));
  }
  return rec;
}

}  // namespace

std::optional<StepRecord> step(const System& sys, Configuration& cfg, Resolver& r, std::size_t index) {
  while (true) {
    if (!r.begin_step(sys, cfg)) return std::nullopt;
    std::size_t slot = static_cast<std::size_t>(-1);
    std::uint64_t counter_after = 0;
    StepRecord rec;
    try {
      rec = compute_step(sys, cfg, r, index, slot, counter_after);
    } catch (const ChoiceMismatch&) {
      if (!r.on_mismatch()) return std::nullopt;
      continue;
    }
    // Commit.
    if (rec.delivered.trigger) rec.delivered.id = cfg.next_id++;
    if (slot != static_cast<std::size_t>(-1)) cfg.pool.erase(cfg.pool.begin() + static_cast<std::ptrdiff_t>(slot));
    if (rec.proc >= 0) {
      cfg.states[static_cast<std::size_t>(rec.proc)] = rec.state_after;
      cfg.counters[static_cast<std::size_t>(rec.proc)] = counter_after;
    }
    for (Event& e : rec.emitted) {
      e.id = cfg.next_id++;
      cfg.pool.push_back(e);
    }
    r.end_step();
    return rec;
  }
}

Trace run(const System& sys, Resolver& r, const RunOptions& opt, TraceHeader header) {
  Trace t;
  t.header = std::move(header);
  t.initial = sys.initial();
  Configuration cfg = sys.initial();
  t.end_reason = "max-steps";
  for (std::size_t i = 0; i < opt.max_steps; ++i) {
    auto rec = step(sys, cfg, r, i);
    if (!rec) {
      t.end_reason = "resolver-done";
      break;
    }
    t.steps.push_back(std::move(*rec));
    if (opt.halt && opt.halt(t)) {
      t.end_reason = "halted";
      break;
    }
  }
  t.final = std::move(cfg);
  return t;
}

StateTimeline::StateTimeline(const Trace& t) {
  snaps_.push_back(t.initial.states);
  for (const StepRecord& s : t.steps) {
    std::vector<Term> next = snaps_.back();
    if (s.proc >= 0) next[static_cast<std::size_t>(s.proc)] = s.state_after;
    snaps_.push_back(std::move(next));
  }
}

const std::vector<Term>& StateTimeline::after(std::ptrdiff_t step) const {
  return snaps_.at(static_cast<std::size_t>(step + 1));
}

// ---------------------------------------------------------------------------
// Exploration

namespace {

bool label_free(std::string_view label, const std::vector<std::string>& free) {
  for (const std::string& f : free) {
    if (label.substr(0, f.size()) == f) return true;
  }
  return false;
}

// Resolver for one step of the DFS: follows a prefix of indices for
// enumerated branch points, defers the rest to the guide.
class EnumResolver : public Resolver {
 public:
  EnumResolver(std::vector<std::size_t> prefix, Resolver* guide, const std::vector<std::string>& free)
      : prefix_(std::move(prefix)), guide_(guide), free_(free) {}
  bool begin_step(const System& s, const Configuration& c) override {
    pos_ = 0;
    fanouts_.clear();
    return guide_ ? guide_->begin_step(s, c) : true;
  }
  bool on_mismatch() override { return guide_ ? guide_->on_mismatch() : false; }
  void end_step() override {
    if (guide_) guide_->end_step();
  }
  void confirm(std::string_view label, const OptionNamer& name) override {
    if (guide_ && !label_free(label, free_)) guide_->confirm(label, name);
  }
  std::size_t choose(std::string_view label, std::size_t n, const OptionNamer& name) override {
    if (guide_ && !label_free(label, free_)) return guide_->choose(label, n, name);
    std::size_t i = pos_ < prefix_.size() ? prefix_[pos_] : 0;
    fanouts_.push_back(n);
    ++pos_;
    return i;
  }
  // Next prefix in DFS order, or nullopt if all alternatives are done.
  std::optional<std::vector<std::size_t>> next_prefix() const {
    std::vector<std::size_t> taken(fanouts_.size());
    for (std::size_t i = 0; i < fanouts_.size(); ++i) taken[i] = i < prefix_.size() ? prefix_[i] : 0;
    for (std::size_t i = fanouts_.size(); i-- > 0;) {
      if (taken[i] + 1 < fanouts_[i]) {
        taken.resize(i + 1);
        ++taken[i];
        return taken;
      }
    }
    return std::nullopt;
  }

 private:
  std::vector<std::size_t> prefix_;
  std::vector<std::size_t> fanouts_;
  std::size_t pos_ = 0;
  Resolver* guide_;
  const std::vector<std::string>& free_;
};

struct Explorer {
  const System& sys;
  const ExploreOptions& opt;
  const std::function<bool(const Trace&)>& pred;
  Trace trace;
  ExploreResult res;
  std::unordered_map<std::size_t, std::size_t> seen;  // config hash -> remaining depth explored

  bool dfs(const Configuration& cfg, const Resolver* guide, std::size_t depth) {
    if (depth >= opt.depth) return false;
    std::size_t h = cfg.hash();
    if (guide == nullptr) {
      auto it = seen.find(h);
      std::size_t remaining = opt.depth - depth;
      if (it != seen.end() && it->second >= remaining) {
        ++res.pruned;
        return false;
      }
      seen[h] = remaining;
    }
    std::optional<std::vector<std::size_t>> prefix = std::vector<std::size_t>{};
    while (prefix) {
      if (res.nodes >= opt.max_nodes) {
        res.budget_exceeded = true;
        ++res.frontier;
        return false;
      }
      std::unique_ptr<Resolver> g = guide ? guide->clone() : nullptr;
      EnumResolver er(*prefix, g.get(), opt.free_labels);
      Configuration next = cfg;
      auto rec = step(sys, next, er, depth);
      prefix = er.next_prefix();
      if (!rec) continue;  // the guide ended the run on this branch
      ++res.nodes;
      trace.steps.push_back(std::move(*rec));
      if (pred(trace)) {
        trace.final = next;
        trace.end_reason = "violation";
        res.witness = trace;
        return true;
      }
      if (dfs(next, g.get(), depth + 1)) return true;
      trace.steps.pop_back();
    }
    return false;
  }
};

}  // namespace

ExploreResult explore(const System& sys, const ExploreOptions& opt, const std::function<bool(const Trace&)>& predicate,
                      TraceHeader header) {
  Explorer ex{sys, opt, predicate, {}, {}, {}};
  ex.trace.header = std::move(header);
  ex.trace.initial = sys.initial();
  ex.dfs(sys.initial(), opt.guide.get(), 0);
  return ex.res;
}

// ---------------------------------------------------------------------------
// Trace files

std::string render_event(const Event& e) {
  std::string s = "#" + std::to_string(e.id) + " (";
  render_to(s, e.receiver);
  s.push_back(',');
  render_to(s, e.sender);
  s.push_back(',');
  render_to(s, e.msg);
  s.push_back(')');
  return s;
}

std::string render_trace(const Trace& t, std::size_t snapshot_every) {
  std::string out;
  out += "# dyweb trace v1\n";
  out += "SCENARIO " + t.header.scenario + " HASH " + t.header.scenario_hash + "\n";
  out += "SEED " + std::to_string(t.header.seed) + " MODE " + t.header.mode + "\n";
  StateTimeline tl(t);
  for (const StepRecord& s : t.steps) {
    out += "STEP " + std::to_string(s.index) + " DELIVER " + render_event(s.delivered) + " TO ";
    out += s.proc >= 0 ? s.proc_name : "-";
    out += " CHOICES [";
    for (std::size_t i = 0; i < s.choices.size(); ++i) {
      if (i) out.push_back(' ');
      const Choice& c = s.choices[i];
      out += c.label + "=" + std::to_string(c.index) + "/" + std::to_string(c.fanout);
    }
    out += "] EMIT [";
    for (std::size_t i = 0; i < s.emitted.size(); ++i) {
      if (i) out += "; ";
      out += render_event(s.emitted[i]);
    }
    out += "]\n";
    if (snapshot_every > 0 && (s.index + 1) % snapshot_every == 0) {
      const auto& states = tl.after(static_cast<std::ptrdiff_t>(s.index));
      for (std::size_t p = 0; p < states.size(); ++p) {
        out += "SNAP " + std::to_string(s.index) + " " + std::to_string(p) + " ";
        render_to(out, states[p]);
        out.push_back('\n');
      }
    }
  }
  out += "END " + t.end_reason + " STEPS " + std::to_string(t.steps.size()) + "\n";
  return out;
}

ParsedTrace parse_trace(const std::string& text) {
  ParsedTrace p;
  std::istringstream in(text);
  std::string line;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "SCENARIO") {
      std::string h;
      ls >> p.header.scenario >> h >> p.header.scenario_hash;
    } else if (kw == "SEED") {
      std::string m;
      ls >> p.header.seed >> m >> p.header.mode;
    } else if (kw == "STEP") {
      auto a = line.rfind(" CHOICES [");
      auto b = line.find("] EMIT [", a == std::string::npos ? 0 : a);
      if (a == std::string::npos || b == std::string::npos) throw std::invalid_argument("malformed STEP line");
      std::string body = line.substr(a + 10, b - (a + 10));
      std::vector<Choice> cs;
      std::istringstream bs(body);
      std::string tok;
      while (bs >> tok) {
        auto eq = tok.rfind('=');
        auto sl = tok.rfind('/');
        if (eq == std::string::npos || sl == std::string::npos || sl < eq)
          throw std::invalid_argument("malformed choice " + tok);
        cs.push_back({tok.substr(0, eq), std::stoull(tok.substr(eq + 1, sl - eq - 1)), std::stoull(tok.substr(sl + 1))});
      }
      p.step_choices.push_back(std::move(cs));
    } else if (kw == "END") {
      ended = true;
      ls >> p.end_reason;
    }
  }
  if (!ended) throw std::invalid_argument("trace has no END line");
  p.steps = p.step_choices.size();
  return p;
}

std::vector<Choice> flatten_choices(const ParsedTrace& p) {
  std::vector<Choice> all;
  for (const auto& v : p.step_choices) all.insert(all.end(), v.begin(), v.end());
  return all;
}

}  // namespace dyweb

#include "dyweb/playbook.h"

#include <sstream>

namespace dyweb {
namespace {

Pin parse_pin(const std::string& tok, const std::string& line) {
  Pin p;
  std::size_t at = tok.find_first_of("=~");
  if (at == std::string::npos || at == 0) throw PlaybookError("bad pin '" + tok + "' in: " + line);
  p.label = tok.substr(0, at);
  if (tok[at] == '=') {
    p.mode = Pin::Mode::Exact;
    p.value = tok.substr(at + 1);
  } else if (tok.compare(at, 2, "~~") == 0) {
    p.mode = Pin::Mode::Last;
    p.value = tok.substr(at + 2);
  } else {
    p.mode = Pin::Mode::First;
    p.value = tok.substr(at + 1);
  }
  return p;
}

}  // namespace

Directive parse_directive(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> toks;
  for (std::string t; in >> t;) toks.push_back(t);
  if (toks.empty()) throw PlaybookError("empty directive");
  Directive d;
  d.text = line;
  std::size_t i = 1;
  if (toks[0] == "trigger") {
    if (toks.size() < 2) throw PlaybookError("trigger needs a process: " + line);
    d.kind = Directive::Kind::Trigger;
    d.proc = toks[1];
    i = 2;
  } else if (toks[0] == "net") {
    d.kind = Directive::Kind::Net;
    if (toks.size() > 1 && toks[1].rfind("to=", 0) == 0) {
      d.proc = toks[1].substr(3);
      i = 2;
    }
  } else if (toks[0] == "net*") {
    d.kind = Directive::Kind::Flush;
  } else {
    throw PlaybookError("unknown directive: " + line);
  }
  for (; i < toks.size(); ++i) d.pins.push_back(parse_pin(toks[i], line));
  return d;
}

std::vector<Directive> parse_playbook(const std::vector<std::string>& lines) {
  std::vector<Directive> out;
  for (const std::string& l : lines) {
    const std::size_t b = l.find_first_not_of(" \t");
    if (b == std::string::npos || l[b] == '#') continue;
    out.push_back(parse_directive(l));
  }
  return out;
}

PlaybookResolver::PlaybookResolver(std::vector<Directive> directives, std::vector<std::string> free_labels,
                                   std::uint64_t seed, bool random_tail)
    : dirs_(std::move(directives)), free_(std::move(free_labels)), rng_(seed), random_tail_(random_tail) {}

void PlaybookResolver::advance() {
  ++pos_;
  flushed_ = 0;
}

bool PlaybookResolver::begin_step(const System& sys, const Configuration& cfg) {
  while (pos_ < dirs_.size()) {
    const Directive& d = dirs_[pos_];
    if (d.kind == Directive::Kind::Trigger) {
      const int p = sys.index_of(d.proc);
      if (p < 0) throw PlaybookError("unknown process in playbook: " + d.proc);
      event_index_ = cfg.pool.size() + static_cast<std::size_t>(p);
      return true;
    }
    if (d.kind == Directive::Kind::Flush && flushed_ >= kFlushLimit) {
      advance();
      continue;
    }
    int want = -1;
    if (!d.proc.empty()) {
      want = sys.index_of(d.proc);
      if (want < 0) throw PlaybookError("unknown process in playbook: " + d.proc);
    }
    bool found = false;
    for (std::size_t i = 0; i < cfg.pool.size() && !found; ++i) {
      if (want >= 0 && sys.owner_of(cfg.pool[i].receiver) != want) continue;
      event_index_ = i;
      found = true;
    }
    if (found) return true;
    if (d.kind == Directive::Kind::Net) ++skipped_;
    advance();
  }
  in_tail_ = random_tail_;
  return in_tail_;
}

bool PlaybookResolver::on_mismatch() {
  if (in_tail_) return true;
  if (dirs_[pos_].kind != Directive::Kind::Flush) ++skipped_;
  advance();
  return true;
}

void PlaybookResolver::end_step() {
  if (in_tail_) return;
  if (dirs_[pos_].kind == Directive::Kind::Flush) {
    ++flushed_;
    return;
  }
  advance();
}

std::unique_ptr<Resolver> PlaybookResolver::clone() const { return std::make_unique<PlaybookResolver>(*this); }

bool PlaybookResolver::is_free(std::string_view label) const {
  for (const std::string& f : free_)
    if (label.substr(0, f.size()) == f) return true;
  return false;
}

std::size_t PlaybookResolver::pinned(std::string_view label, std::size_t n, const OptionNamer& name) const {
  const Directive& d = dirs_[pos_];
  for (const Pin& p : d.pins) {
    if (p.label != label) continue;
    std::size_t hit = n;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string opt = name(i);
      const bool ok = p.mode == Pin::Mode::Exact ? opt == p.value : opt.find(p.value) != std::string::npos;
      if (!ok) continue;
      hit = i;
      if (p.mode != Pin::Mode::Last) break;
    }
    if (hit == n) throw ChoiceMismatch("no option for " + p.label + " in: " + d.text);
    return hit;
  }
  return n;
}

void PlaybookResolver::confirm(std::string_view label, const OptionNamer& name) {
  if (!in_tail_ && !is_free(label)) pinned(label, 1, name);
}

// Free labels override pins, as in guided exploration.
std::size_t PlaybookResolver::choose(std::string_view label, std::size_t n, const OptionNamer& name) {
  if (in_tail_) return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  if (label == "event") return event_index_;
  if (is_free(label)) return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  const std::size_t p = pinned(label, n, name);
  return p < n ? p : 0;
}

}  // namespace dyweb

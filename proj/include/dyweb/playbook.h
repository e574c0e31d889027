// Playbooks: scripted schedules that name which event to deliver next and
// pin selected branch points by option name.
//
//   trigger <proc> [pin...]     deliver TRIGGER to a process
//   net [to=<proc>] [pin...]    deliver the oldest pending event (to proc)
//   net*                        deliver pending events until none is left
//
// A pin is label=name (exact), label~text (first option containing text) or
// label~~text (last such option). Unpinned branch points take option 0
// unless their label is free, in which case a seeded generator decides
// (free labels override pins). A directive whose pins cannot be honoured is
// skipped. With a random tail the run goes on with uniformly random choices
// once the directives are used up.
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dyweb/runtime.h"

namespace dyweb {

struct Pin {
  enum class Mode { Exact, First, Last };
  std::string label;
  Mode mode = Mode::Exact;
  std::string value;
  bool operator==(const Pin&) const = default;
};

struct Directive {
  enum class Kind { Trigger, Net, Flush };
  Kind kind = Kind::Net;
  std::string proc;  // trigger target or net receiver filter
  std::vector<Pin> pins;
  std::string text;
};

struct PlaybookError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Directive parse_directive(const std::string& line);
std::vector<Directive> parse_playbook(const std::vector<std::string>& lines);

class PlaybookResolver : public Resolver {
 public:
  static constexpr std::size_t kFlushLimit = 50;

  // free_labels are label prefixes decided by the generator seeded with seed.
  PlaybookResolver(std::vector<Directive> directives, std::vector<std::string> free_labels = {},
                   std::uint64_t seed = 0, bool random_tail = false);
  bool begin_step(const System& sys, const Configuration& cfg) override;
  bool on_mismatch() override;
  void end_step() override;
  std::unique_ptr<Resolver> clone() const override;
  std::size_t choose(std::string_view label, std::size_t n, const OptionNamer& name) override;
  void confirm(std::string_view label, const OptionNamer& name) override;

  std::size_t position() const { return pos_; }
  std::size_t skipped() const { return skipped_; }

 private:
  bool is_free(std::string_view label) const;
  // Index of the pinned option, n if the label is not pinned.
  std::size_t pinned(std::string_view label, std::size_t n, const OptionNamer& name) const;
  void advance();

  std::vector<Directive> dirs_;
  std::vector<std::string> free_;
  std::mt19937_64 rng_;
  std::size_t pos_ = 0;
  std::size_t flushed_ = 0;
  std::size_t skipped_ = 0;
  std::size_t event_index_ = 0;
  bool random_tail_ = false;
  bool in_tail_ = false;
};

}  // namespace dyweb

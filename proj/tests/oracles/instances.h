// Random deduction problems: a small knowledge set and a target term.
#pragma once

#include <random>
#include <set>
#include <vector>

#include "dyweb/terms.h"
#include "oracles/deduction_oracle.h"

namespace oracle {

struct Instance {
  std::vector<Term> knowledge;
  Term target;
};

class InstanceGen {
 public:
  explicit InstanceGen(std::uint64_t seed) : rng_(seed) {}

  // Knowledge of at most 4 terms and targets of depth at most 3.
  Instance next() {
    Instance in;
    const int n = pick(1, 4);
    for (int i = 0; i < n; ++i) in.knowledge.push_back(term(pick(0, 3)));
    const int mode = pick(0, 9);
    if (mode < 4) {
      std::set<Term> subs;
      for (const Term& t : in.knowledge) subterms(t, subs);
      std::vector<Term> v(subs.begin(), subs.end());
      in.target = v[static_cast<std::size_t>(pick(0, static_cast<int>(v.size()) - 1))];
    } else if (mode < 7) {
      std::set<Term> subs;
      for (const Term& t : in.knowledge) subterms(t, subs);
      std::vector<Term> v(subs.begin(), subs.end());
      auto any = [&] { return v[static_cast<std::size_t>(pick(0, static_cast<int>(v.size()) - 1))]; };
      switch (pick(0, 3)) {
        case 0: in.target = Term::seq({any(), any()}); break;
        case 1: in.target = Term::raw(Sym::EncS, {any(), any()}); break;
        case 2: in.target = Term::raw(Sym::Sig, {any(), any()}); break;
        default: in.target = Term::raw(Sym::Pub, {any()}); break;
      }
      if (depth(in.target) > 3) in.target = any();
    } else {
      in.target = term(pick(0, 3));
    }
    return in;
  }

  static int depth(const Term& t) {
    int d = 0;
    for (const Term& k : t.kids()) d = std::max(d, depth(k) + 1);
    return d;
  }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Term atom() {
    switch (pick(0, 5)) {
      case 0: return Term::str(pick(0, 1) ? "a" : "b");
      case 1: return Term::truth();
      default: return Term::nonce("k", static_cast<std::uint64_t>(pick(0, 4)));
    }
  }
  Term key() { return Term::nonce("k", static_cast<std::uint64_t>(pick(0, 4))); }

  // Constructor terms of depth at most d, built without the rewriting
  // machinery under test (constructors never rewrite).
  Term term(int d) {
    if (d == 0 || pick(0, 4) == 0) return atom();
    switch (pick(0, 5)) {
      case 0: return Term::raw(Sym::Pub, {key()});
      case 1:
        if (d >= 2) return Term::raw(Sym::EncA, {term(d - 1), Term::raw(Sym::Pub, {key()})});
        return Term::raw(Sym::EncS, {atom(), key()});
      case 2: return Term::raw(Sym::EncS, {term(d - 1), pick(0, 3) ? key() : term(d - 1)});
      case 3: return Term::raw(Sym::Sig, {term(d - 1), key()});
      default: {
        std::vector<Term> e;
        const int len = pick(0, 3);
        for (int i = 0; i < len; ++i) e.push_back(term(d - 1));
        return Term::seq(std::move(e));
      }
    }
  }

  std::mt19937_64 rng_;
};

}  // namespace oracle

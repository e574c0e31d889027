// Brute-force Dolev-Yao closure used as a test oracle for Knowledge.
//
// Terms are combined pairwise with every constructor and destructor, round
// after round, until nothing new appears. Constructor results are kept only
// when they are subterms of the knowledge or the target (the theory is
// subterm convergent, so nothing outside that universe is ever needed).
// Destructors are evaluated with rewrite rules written out here rather than
// through the library's normalizer.
#pragma once

#include <set>
#include <vector>

#include "dyweb/terms.h"

namespace oracle {

using dyweb::Kind;
using dyweb::Sym;
using dyweb::Term;

inline void subterms(const Term& t, std::set<Term>& out) {
  if (!out.insert(t).second) return;
  for (const Term& k : t.kids()) subterms(k, out);
}

inline bool is_public_atom(const Term& t) {
  switch (t.kind()) {
    case Kind::Address:
    case Kind::Domain:
    case Kind::String:
    case Kind::True:
    case Kind::Bot:
    case Kind::NotDef: return true;
    default: return false;
  }
}

// One-step destructor rules on constructor terms.
inline bool decrypt_asym(const Term& c, const Term& k, Term& out) {
  if (!c.is_compound(Sym::EncA)) return false;
  const Term& key = c.kids()[1];
  if (!key.is_compound(Sym::Pub) || key.kids()[0] != k) return false;
  out = c.kids()[0];
  return true;
}
inline bool decrypt_sym(const Term& c, const Term& k, Term& out) {
  if (!c.is_compound(Sym::EncS) || c.kids()[1] != k) return false;
  out = c.kids()[0];
  return true;
}
inline bool extract_sig(const Term& s, Term& out) {
  if (!s.is_compound(Sym::Sig)) return false;
  out = s.kids()[0];
  return true;
}

struct Result {
  bool derivable = false;
  int rounds = 0;  // round in which the target appeared, -1 if never
};

// max_rounds bounds the recipe depth; 0 runs to the fixpoint.
inline Result closure(const std::vector<Term>& knowledge, const Term& target, int max_rounds = 0) {
  std::set<Term> universe;
  for (const Term& t : knowledge) subterms(t, universe);
  subterms(target, universe);

  std::set<Term> known(knowledge.begin(), knowledge.end());
  for (const Term& u : universe)
    if (is_public_atom(u)) known.insert(u);
  // The empty sequence is a nullary constructor.
  known.insert(Term::seq({}));

  Result r{false, -1};
  if (known.count(target)) return {true, 0};
  for (int round = 1; max_rounds == 0 || round <= max_rounds; ++round) {
    std::set<Term> fresh;
    auto keep = [&](const Term& t) {
      if (!known.count(t)) fresh.insert(t);
    };
    const std::vector<Term> k(known.begin(), known.end());
    for (const Term& a : k) {
      // Unary operations.
      if (Term p = Term::raw(Sym::Pub, {a}); universe.count(p)) keep(p);
      if (Term m; extract_sig(a, m)) keep(m);
      if (a.is_seq())
        for (const Term& e : a.kids()) keep(e);
      for (const Term& b : k) {
        // Binary constructors.
        for (Sym s : {Sym::EncA, Sym::EncS, Sym::Sig})
          if (Term c = Term::raw(s, {a, b}); universe.count(c)) keep(c);
        // Destructors.
        if (Term m; decrypt_asym(a, b, m)) keep(m);
        if (Term m; decrypt_sym(a, b, m)) keep(m);
      }
    }
    // Sequences of any length: built once all elements are known.
    for (const Term& u : universe) {
      if (!u.is_seq() || known.count(u)) continue;
      bool all = true;
      for (const Term& e : u.kids()) all = all && known.count(e);
      if (all) keep(u);
    }
    if (fresh.empty()) return r;
    known.insert(fresh.begin(), fresh.end());
    if (known.count(target)) return {true, round};
  }
  return r;
}

}  // namespace oracle

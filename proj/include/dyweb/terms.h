// Symbolic terms over the web-model signature: constants, nonces,
// cryptographic constructors and sequences, kept in normal form under the
// equational theory, plus pattern matching, subterm paths and the
// Dolev-Yao derivation relation.
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace dyweb {

enum class Kind : std::uint8_t {
  Address,
  Domain,
  String,
  True,
  Bot,
  NotDef,
  Nonce,
  Compound,
  Seq,
  Var,  // only inside patterns and templates
};

enum class Sym : std::uint8_t { Pub, EncA, DecA, EncS, DecS, Sig, CheckSig, Extract };

std::string_view sym_name(Sym s);
std::size_t sym_arity(Sym s);
std::optional<Sym> sym_from_name(std::string_view name);

class Term;

struct TermNode {
  Kind kind;
  Sym sym = Sym::Pub;
  std::string text;        // payload of strings, addresses, domains, vars; owner of nonces
  std::uint64_t index = 0; // nonce index within its owner namespace
  std::vector<Term> kids;
  std::size_t hash = 0;
  std::size_t size = 1;
};

// Immutable, shared term value. A default constructed Term is the empty
// sequence, which is also the "absent" value of dictionaries.
class Term {
 public:
  Term();

  static Term str(std::string_view s);
  static Term addr(std::string_view a);
  static Term dom(std::string_view d);
  static Term truth();
  static Term bot();
  static Term notdef();
  static Term boolean(bool b) { return b ? truth() : bot(); }
  static Term nonce(std::string_view owner, std::uint64_t index);
  static Term var(std::string_view name);
  static Term seq(std::vector<Term> elems);
  static Term seq(std::initializer_list<Term> elems) { return seq(std::vector<Term>(elems)); }
  // Builds f(args) and rewrites the root with the equational theory. Arguments
  // are assumed to be in normal form already, which holds for every Term
  // built through this interface.
  static Term apply(Sym s, std::vector<Term> args);
  // Builds f(args) without rewriting; used for parsing and tests of normalize.
  static Term raw(Sym s, std::vector<Term> args);

  Kind kind() const { return node_->kind; }
  Sym sym() const { return node_->sym; }
  const std::string& text() const { return node_->text; }
  std::uint64_t index() const { return node_->index; }
  const std::vector<Term>& kids() const { return node_->kids; }
  std::size_t hash() const { return node_->hash; }
  std::size_t size() const { return node_->size; }
  const TermNode* node() const { return node_.get(); }

  bool is_seq() const { return kind() == Kind::Seq; }
  bool is_empty_seq() const { return kind() == Kind::Seq && kids().empty(); }
  bool is_nonce() const { return kind() == Kind::Nonce; }
  bool is_string() const { return kind() == Kind::String; }
  bool is_string(std::string_view s) const { return kind() == Kind::String && text() == s; }
  bool is_true() const { return kind() == Kind::True; }
  bool is_bot() const { return kind() == Kind::Bot; }
  bool is_notdef() const { return kind() == Kind::NotDef; }
  bool is_compound(Sym s) const { return kind() == Kind::Compound && sym() == s; }
  // Number of elements of a sequence, 0 for anything else.
  std::size_t len() const { return is_seq() ? kids().size() : 0; }
  // 1-based projection pi_i with the NOTDEF conventions of the theory.
  Term at(std::size_t i) const;

  friend bool operator==(const Term& a, const Term& b);
  friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }
  friend bool operator<(const Term& a, const Term& b) { return compare(a, b) < 0; }
  static int compare(const Term& a, const Term& b);

 private:
  explicit Term(std::shared_ptr<const TermNode> n) : node_(std::move(n)) {}
  static Term make(TermNode n);
  std::shared_ptr<const TermNode> node_;
};

struct TermHash {
  std::size_t operator()(const Term& t) const { return t.hash(); }
};

using TermSet = std::unordered_set<Term, TermHash>;

// Constructor shorthands.
inline Term pub(const Term& k) { return Term::apply(Sym::Pub, {k}); }
inline Term enc_a(const Term& m, const Term& k) { return Term::apply(Sym::EncA, {m, k}); }
inline Term dec_a(const Term& c, const Term& k) { return Term::apply(Sym::DecA, {c, k}); }
inline Term enc_s(const Term& m, const Term& k) { return Term::apply(Sym::EncS, {m, k}); }
inline Term dec_s(const Term& c, const Term& k) { return Term::apply(Sym::DecS, {c, k}); }
inline Term sig(const Term& m, const Term& k) { return Term::apply(Sym::Sig, {m, k}); }
inline Term checksig(const Term& s, const Term& k) { return Term::apply(Sym::CheckSig, {s, k}); }
inline Term extract(const Term& s) { return Term::apply(Sym::Extract, {s}); }
inline Term S(std::string_view s) { return Term::str(s); }

// Appends y to a sequence (t +<> y); a non-sequence is treated as empty.
Term append(const Term& t, const Term& y);
// x inside sequence t.
bool contains(const Term& t, const Term& x);

// Full normalization of a possibly raw term (bottom-up rewriting).
Term normalize(const Term& t);
bool equivalent(const Term& a, const Term& b);

using SubtermPath = std::vector<std::size_t>;
Term project(const Term& t, const SubtermPath& p);
// Returns t with the subterm at p replaced by v; every step of p must address
// an existing sequence element.
Term replace_at(const Term& t, const SubtermPath& p, const Term& v);

using Bindings = std::map<std::string, Term>;
// Linear matching with exact sequence lengths. Variables named "_" match
// anything without binding.
std::optional<Bindings> match(const Term& pattern, const Term& t);
bool match_into(const Term& pattern, const Term& t, Bindings& b);
// Replaces variables by their bindings and normalizes. Unbound variables
// are kept.
Term substitute(const Term& tmpl, const Bindings& b);

// Canonical rendering and its parser.
std::string render(const Term& t);
void render_to(std::string& out, const Term& t);
Term parse_term(std::string_view text);

// Knowledge of a Dolev-Yao process: a set of terms and the nonces it may use
// freely (explicit nonces plus whole owner namespaces).
class Knowledge {
 public:
  Knowledge() = default;
  void add(const Term& t);
  void add_nonce(const Term& n) { nonces_.insert(n); }
  void add_nonce_owner(std::string owner) { owners_.insert(std::move(owner)); }
  bool derivable(const Term& target);
  bool nonce_available(const Term& n) const;
  // Atoms obtained by analysis (saturated set).
  const std::vector<Term>& analyzed();

 private:
  void saturate();
  bool synth(const Term& t);
  std::vector<Term> pending_;   // terms not yet analyzed
  std::vector<Term> locked_;    // ciphertexts whose key is not derivable yet
  std::vector<Term> order_;     // analyzed terms in insertion order
  TermSet known_;
  TermSet nonces_;
  std::set<std::string> owners_;
};

struct KnowledgeBase {
  std::vector<Term> terms;
  std::vector<Term> nonces;
  std::vector<std::string> nonce_owners;
};

bool derivable(const KnowledgeBase& kb, const Term& target);

}  // namespace dyweb

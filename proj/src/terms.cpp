#include "dyweb/terms.h"

#include <algorithm>
#include <cstring>
#include <functional>
#include <stdexcept>

namespace dyweb {

namespace {

constexpr std::string_view kOpen = "\xE2\x9F\xA8";   // U+27E8
constexpr std::string_view kClose = "\xE2\x9F\xA9";  // U+27E9

std::size_t mix(std::size_t h, std::size_t v) {
  // 64-bit variant of boost::hash_combine.
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 12) + (h >> 4));
}

std::size_t fnv(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

const Term& empty_seq() {
  static const Term t = Term::seq(std::vector<Term>{});
  return t;
}

}  // namespace

std::string_view sym_name(Sym s) {
  switch (s) {
    case Sym::Pub: return "pub";
    case Sym::EncA: return "enc_a";
    case Sym::DecA: return "dec_a";
    case Sym::EncS: return "enc_s";
    case Sym::DecS: return "dec_s";
    case Sym::Sig: return "sig";
    case Sym::CheckSig: return "checksig";
    case Sym::Extract: return "extract";
  }
  return "?";
}

std::size_t sym_arity(Sym s) { return (s == Sym::Pub || s == Sym::Extract) ? 1 : 2; }

std::optional<Sym> sym_from_name(std::string_view name) {
  for (Sym s : {Sym::Pub, Sym::EncA, Sym::DecA, Sym::EncS, Sym::DecS, Sym::Sig, Sym::CheckSig,
                Sym::Extract}) {
    if (sym_name(s) == name) return s;
  }
  return std::nullopt;
}

Term::Term() : Term(empty_seq()) {}

Term Term::make(TermNode n) {
  std::size_t h = mix(static_cast<std::size_t>(n.kind) + 1, static_cast<std::size_t>(n.sym));
  h = mix(h, fnv(n.text));
  h = mix(h, static_cast<std::size_t>(n.index));
  std::size_t size = 1;
  for (const Term& k : n.kids) {
    h = mix(h, k.hash());
    size += k.size();
  }
  n.hash = h;
  n.size = size;
  return Term(std::make_shared<const TermNode>(std::move(n)));
}

Term Term::str(std::string_view s) { return make(TermNode{Kind::String, Sym::Pub, std::string(s)}); }
Term Term::addr(std::string_view a) { return make(TermNode{Kind::Address, Sym::Pub, std::string(a)}); }
Term Term::dom(std::string_view d) { return make(TermNode{Kind::Domain, Sym::Pub, std::string(d)}); }
Term Term::var(std::string_view name) { return make(TermNode{Kind::Var, Sym::Pub, std::string(name)}); }

Term Term::truth() {
  static const Term t = make(TermNode{Kind::True});
  return t;
}
Term Term::bot() {
  static const Term t = make(TermNode{Kind::Bot});
  return t;
}
Term Term::notdef() {
  static const Term t = make(TermNode{Kind::NotDef});
  return t;
}

Term Term::nonce(std::string_view owner, std::uint64_t index) {
  TermNode n{Kind::Nonce, Sym::Pub, std::string(owner)};
  n.index = index;
  return make(std::move(n));
}

Term Term::seq(std::vector<Term> elems) {
  TermNode n{Kind::Seq};
  n.kids = std::move(elems);
  return make(std::move(n));
}

Term Term::raw(Sym s, std::vector<Term> args) {
  if (args.size() != sym_arity(s)) throw std::invalid_argument("wrong arity for " + std::string(sym_name(s)));
  TermNode n{Kind::Compound, s};
  n.kids = std::move(args);
  return make(std::move(n));
}

Term Term::apply(Sym s, std::vector<Term> args) {
  if (args.size() != sym_arity(s)) throw std::invalid_argument("wrong arity for " + std::string(sym_name(s)));
  switch (s) {
    case Sym::DecA: {
      const Term& c = args[0];
      if (c.is_compound(Sym::EncA) && c.kids()[1] == Term::raw(Sym::Pub, {args[1]})) return c.kids()[0];
      break;
    }
    case Sym::DecS: {
      const Term& c = args[0];
      if (c.is_compound(Sym::EncS) && c.kids()[1] == args[1]) return c.kids()[0];
      break;
    }
    case Sym::Extract:
      if (args[0].is_compound(Sym::Sig)) return args[0].kids()[0];
      break;
    case Sym::CheckSig: {
      const Term& sg = args[0];
      if (sg.is_compound(Sym::Sig) && args[1].is_compound(Sym::Pub) && args[1].kids()[0] == sg.kids()[1])
        return truth();
      break;
    }
    default: break;
  }
  return raw(s, std::move(args));
}

Term Term::at(std::size_t i) const {
  if (!is_seq() || i < 1 || i > kids().size()) return notdef();
  return kids()[i - 1];
}

bool operator==(const Term& a, const Term& b) {
  if (a.node_ == b.node_) return true;
  if (a.hash() != b.hash() || a.size() != b.size()) return false;
  return Term::compare(a, b) == 0;
}

int Term::compare(const Term& a, const Term& b) {
  if (a.node_ == b.node_) return 0;
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  if (a.sym() != b.sym()) return a.sym() < b.sym() ? -1 : 1;
  if (int c = a.text().compare(b.text()); c != 0) return c < 0 ? -1 : 1;
  if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
  const auto& ka = a.kids();
  const auto& kb = b.kids();
  if (ka.size() != kb.size()) return ka.size() < kb.size() ? -1 : 1;
  for (std::size_t i = 0; i < ka.size(); ++i) {
    if (int c = compare(ka[i], kb[i]); c != 0) return c;
  }
  return 0;
}

Term append(const Term& t, const Term& y) {
  std::vector<Term> v = t.is_seq() ? t.kids() : std::vector<Term>{};
  v.push_back(y);
  return Term::seq(std::move(v));
}

bool contains(const Term& t, const Term& x) {
  if (!t.is_seq()) return false;
  return std::find(t.kids().begin(), t.kids().end(), x) != t.kids().end();
}

Term normalize(const Term& t) {
  switch (t.kind()) {
    case Kind::Seq: {
      std::vector<Term> v;
      v.reserve(t.kids().size());
      for (const Term& k : t.kids()) v.push_back(normalize(k));
      return Term::seq(std::move(v));
    }
    case Kind::Compound: {
      std::vector<Term> v;
      for (const Term& k : t.kids()) v.push_back(normalize(k));
      return Term::apply(t.sym(), std::move(v));
    }
    default: return t;
  }
}

bool equivalent(const Term& a, const Term& b) { return normalize(a) == normalize(b); }

Term project(const Term& t, const SubtermPath& p) {
  Term cur = normalize(t);
  for (std::size_t i : p) cur = cur.at(i);
  return cur;
}

Term replace_at(const Term& t, const SubtermPath& p, const Term& v) {
  if (p.empty()) return v;
  std::function<Term(const Term&, std::size_t)> go = [&](const Term& cur, std::size_t depth) -> Term {
    if (depth == p.size()) return v;
    std::size_t i = p[depth];
    if (!cur.is_seq() || i < 1 || i > cur.kids().size()) throw std::out_of_range("replace_at: bad path");
    std::vector<Term> kids = cur.kids();
    kids[i - 1] = go(kids[i - 1], depth + 1);
    return Term::seq(std::move(kids));
  };
  return go(t, 0);
}

bool match_into(const Term& pat, const Term& t, Bindings& b) {
  switch (pat.kind()) {
    case Kind::Var: {
      if (pat.text() == "_") return true;
      auto it = b.find(pat.text());
      if (it != b.end()) return it->second == t;
      b.emplace(pat.text(), t);
      return true;
    }
    case Kind::Seq: {
      if (!t.is_seq() || t.kids().size() != pat.kids().size()) return false;
      for (std::size_t i = 0; i < pat.kids().size(); ++i) {
        if (!match_into(pat.kids()[i], t.kids()[i], b)) return false;
      }
      return true;
    }
    case Kind::Compound: {
      if (t.kind() != Kind::Compound || t.sym() != pat.sym()) return false;
      for (std::size_t i = 0; i < pat.kids().size(); ++i) {
        if (!match_into(pat.kids()[i], t.kids()[i], b)) return false;
      }
      return true;
    }
    default: return pat == t;
  }
}

std::optional<Bindings> match(const Term& pattern, const Term& t) {
  Bindings b;
  if (!match_into(pattern, t, b)) return std::nullopt;
  return b;
}

Term substitute(const Term& tmpl, const Bindings& b) {
  switch (tmpl.kind()) {
    case Kind::Var: {
      auto it = b.find(tmpl.text());
      return it == b.end() ? tmpl : it->second;
    }
    case Kind::Seq: {
      std::vector<Term> v;
      for (const Term& k : tmpl.kids()) v.push_back(substitute(k, b));
      return Term::seq(std::move(v));
    }
    case Kind::Compound: {
      std::vector<Term> v;
      for (const Term& k : tmpl.kids()) v.push_back(substitute(k, b));
      return Term::apply(tmpl.sym(), std::move(v));
    }
    default: return tmpl;
  }
}

// ---------------------------------------------------------------------------
// Rendering and parsing

namespace {

bool bare_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c == '.' || c == '/' || c == '-';
}

bool bare_ok(std::string_view s) {
  if (s.empty()) return false;
  if (s == "TRUE" || s == "BOT" || s == "NOTDEF") return false;
  return std::all_of(s.begin(), s.end(), bare_char);
}

void quoted(std::string& out, std::string_view s) {
  out.push_back('"');
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
}

void atom(std::string& out, std::string_view s) {
  if (bare_ok(s)) out.append(s);
  else quoted(out, s);
}

}  // namespace

void render_to(std::string& out, const Term& t) {
  switch (t.kind()) {
    case Kind::String: atom(out, t.text()); break;
    case Kind::Address: out.append("a:"); atom(out, t.text()); break;
    case Kind::Domain: out.append("d:"); atom(out, t.text()); break;
    case Kind::True: out.append("TRUE"); break;
    case Kind::Bot: out.append("BOT"); break;
    case Kind::NotDef: out.append("NOTDEF"); break;
    case Kind::Var: out.push_back('$'); out.append(t.text()); break;
    case Kind::Nonce:
      out.append("n:");
      atom(out, t.text());
      out.push_back(':');
      out.append(std::to_string(t.index()));
      break;
    case Kind::Seq:
      out.append(kOpen);
      for (std::size_t i = 0; i < t.kids().size(); ++i) {
        if (i) out.push_back(',');
        render_to(out, t.kids()[i]);
      }
      out.append(kClose);
      break;
    case Kind::Compound:
      out.append(sym_name(t.sym()));
      out.push_back('(');
      for (std::size_t i = 0; i < t.kids().size(); ++i) {
        if (i) out.push_back(',');
        render_to(out, t.kids()[i]);
      }
      out.push_back(')');
      break;
  }
}

std::string render(const Term& t) {
  std::string s;
  render_to(s, t);
  return s;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  Term parse_all() {
    Term t = parse();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing input");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw std::invalid_argument("term parse error at " + std::to_string(pos_) + ": " + why + " in '" +
                                std::string(s_) + "'");
  }
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r'))
      ++pos_;
  }
  bool eat(std::string_view tok) {
    skip_ws();
    if (s_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }
  std::string atom_text() {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '"') {
      ++pos_;
      std::string out;
      while (pos_ < s_.size() && s_[pos_] != '"') {
        if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
        out.push_back(s_[pos_++]);
      }
      if (pos_ >= s_.size()) fail("unterminated string");
      ++pos_;
      return out;
    }
    std::size_t start = pos_;
    while (pos_ < s_.size() && bare_char(s_[pos_])) ++pos_;
    if (start == pos_) fail("expected atom");
    return std::string(s_.substr(start, pos_ - start));
  }
  std::vector<Term> list(std::string_view close) {
    std::vector<Term> v;
    if (eat(close)) return v;
    while (true) {
      v.push_back(parse());
      if (eat(close)) return v;
      if (!eat(",")) fail("expected ','");
    }
  }

  Term parse() {
    skip_ws();
    if (eat(kOpen)) return Term::seq(list(kClose));
    if (eat("<")) return Term::seq(list(">"));
    if (eat("$")) return Term::var(atom_text());
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '"') return Term::str(atom_text());
    std::string word = atom_text();
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ':' && (word == "a" || word == "d" || word == "n")) {
      ++pos_;
      std::string rest = atom_text();
      if (word == "a") return Term::addr(rest);
      if (word == "d") return Term::dom(rest);
      if (!eat(":")) fail("nonce needs owner:index");
      std::string idx = atom_text();
      return Term::nonce(rest, std::stoull(idx));
    }
    if (word == "TRUE") return Term::truth();
    if (word == "BOT") return Term::bot();
    if (word == "NOTDEF") return Term::notdef();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      auto sym = sym_from_name(word);
      if (!sym) fail("unknown function symbol " + word);
      ++pos_;
      return Term::raw(*sym, list(")"));
    }
    return Term::str(word);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Term parse_term(std::string_view text) { return normalize(Parser(text).parse_all()); }

// ---------------------------------------------------------------------------
// Derivation

bool Knowledge::nonce_available(const Term& n) const {
  return nonces_.count(n) > 0 || owners_.count(n.text()) > 0;
}

void Knowledge::add(const Term& t) { pending_.push_back(t); }

bool Knowledge::synth(const Term& t) {
  if (known_.count(t)) return true;
  switch (t.kind()) {
    case Kind::Address:
    case Kind::Domain:
    case Kind::String:
    case Kind::True:
    case Kind::Bot:
    case Kind::NotDef: return true;
    case Kind::Nonce: return nonce_available(t);
    case Kind::Var: return false;
    case Kind::Seq:
    case Kind::Compound:
      for (const Term& k : t.kids()) {
        if (!synth(k)) return false;
      }
      return true;
  }
  return false;
}

void Knowledge::saturate() {
  while (true) {
    while (!pending_.empty()) {
      Term t = std::move(pending_.back());
      pending_.pop_back();
      if (!known_.insert(t).second) continue;
      order_.push_back(t);
      if (t.is_seq()) {
        for (const Term& k : t.kids()) pending_.push_back(k);
      } else if (t.is_compound(Sym::Sig)) {
        pending_.push_back(t.kids()[0]);
      } else if (t.is_compound(Sym::EncA)) {
        if (t.kids()[1].is_compound(Sym::Pub)) locked_.push_back(t);
      } else if (t.is_compound(Sym::EncS)) {
        locked_.push_back(t);
      }
    }
    bool progress = false;
    for (std::size_t i = 0; i < locked_.size();) {
      const Term& c = locked_[i];
      const Term& key = c.is_compound(Sym::EncA) ? c.kids()[1].kids()[0] : c.kids()[1];
      if (synth(key)) {
        pending_.push_back(c.kids()[0]);
        locked_[i] = locked_.back();
        locked_.pop_back();
        progress = true;
      } else {
        ++i;
      }
    }
    if (!progress && pending_.empty()) return;
  }
}

bool Knowledge::derivable(const Term& target) {
  saturate();
  return synth(target);
}

const std::vector<Term>& Knowledge::analyzed() {
  saturate();
  return order_;
}

bool derivable(const KnowledgeBase& kb, const Term& target) {
  Knowledge k;
  for (const Term& t : kb.terms) k.add(t);
  for (const Term& n : kb.nonces) k.add_nonce(n);
  for (const std::string& o : kb.nonce_owners) k.add_nonce_owner(o);
  return k.derivable(normalize(target));
}

}  // namespace dyweb

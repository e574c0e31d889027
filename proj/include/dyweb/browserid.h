// BrowserID in primary IdP mode: the login.persona.org server (LPO), relying
// parties, identity providers and the scripts they serve.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dyweb/browser.h"
#include "dyweb/runtime.h"
#include "dyweb/terms.h"

namespace dyweb {

// Field positions of the server states.
namespace lpo_f {
constexpr std::size_t kNonces = 1, kSslKey = 2, kSignKeys = 3, kSessions = 4, kIdGroups = 5;
}
namespace rp_f {
constexpr std::size_t kNonces = 1, kDomain = 2, kSslKey = 3, kSignKeys = 4, kServiceTokens = 5, kCorrupt = 6;
}
namespace idp_f {
constexpr std::size_t kNonces = 1, kSslKeys = 2, kUsers = 3, kSignKey = 4, kSessions = 5, kCorrupt = 6;
}

// Scriptstate layouts.
namespace cif_f {
constexpr std::size_t kQ = 1, kRequestOrigin = 2, kLoggedInUser = 3, kPause = 4, kContext = 5, kKey = 6, kUc = 7,
                      kHandled = 8, kRefCtx = 9, kPifIndex = 10, kEmail = 11;
}
namespace ld_f {
constexpr std::size_t kQ = 1, kRequestOrigin = 2, kContext = 3, kEmail = 4, kKey = 5, kUc = 6, kHandled = 7,
                      kRefCtx = 8, kRefAuth = 9, kPifIndex = 10;
}
namespace rpi_f {
constexpr std::size_t kQ = 1, kCifIndex = 2, kLdIndex = 3, kDialogRunning = 4, kCap = 5, kHandled = 6, kRefCap = 7;
}
namespace pif_f {
constexpr std::size_t kQ = 1, kEmails = 2, kPubKeys = 3, kUcs = 4, kProvNonces = 5, kGenKeyNonces = 6, kXhrNonces = 7,
                      kHandled = 8;
}

Term cif_initial_state();
Term ld_initial_state();
Term rp_index_initial_state();
Term pif_initial_state();

// Identity = <name, domain>.
Term make_identity(const std::string& name, const std::string& domain);
std::string identity_label(const Term& id);

// Checks a CAP <uc, ia> against a domain -> public signing key dictionary and
// the expected IA origin; returns the identity it certifies.
std::optional<Term> verify_cap(const Term& cap, const Term& signkeys, const Term& origin);

// Helpers over the cleaned window tree a script sees.
Term tree_parent_window(const Term& tree, const Term& docnonce);
Term tree_subwindows(const Term& tree, const Term& docnonce);
Term tree_opener_window(const Term& tree, const Term& docnonce);
Term tree_get_window(const Term& tree, const Term& docnonce);
Term tree_get_origin(const Term& tree, const Term& docnonce);
// Windows of the tree opened by the window containing docnonce.
std::vector<Term> tree_aux_windows(const Term& tree, const Term& docnonce);

// Picks an unhandled input (branch "input"); returns (input or BOT, state').
std::pair<Term, Term> choose_input(const Term& state, std::size_t handled_field, const Term& inputs,
                                   StepContext& ctx);

struct BrowserIdConfig {
  Term lpo_domain;
  bool fix = true;
  // Identities the RP index may claim in its loaded message.
  std::vector<Term> all_ids;
};

// Registers script_lpo_cif, script_lpo_ld, script_rp_index, script_idp_ad
// and script_idp_pif.
void register_browserid_scripts(ScriptRegistry& reg, const BrowserIdConfig& cfg);

// Provenance notes of the servers.
namespace note {
inline constexpr const char* kTokenMinted = "token-minted";  // <token, identity, request nonce>
inline constexpr const char* kUcIssued = "uc-issued";        // <identity, pubkey, uc>
inline constexpr const char* kIdpLogin = "idp-login";        // <sessionid, ids>
inline constexpr const char* kLpoLogin = "lpo-login";        // <sessionid, ids>
inline constexpr const char* kCorrupted = "corrupted";      // <process name>
}  // namespace note

class Lpo : public Process {
 public:
  Lpo(std::string name, std::vector<Term> addresses, Term domain);
  static Term initial_state(const Term& sslkey, const Term& signkeys);
  std::vector<Emit> relation(const Event& e, Term& state, StepContext& ctx) const override;
  bool honest(const Term&) const override { return true; }
  const Term& domain() const { return domain_; }

 private:
  Term domain_;
};

// Servers that may be corrupted; a corrupted server records what it receives
// and may send its whole state to one of the leak addresses.
class CorruptibleServer : public Process {
 public:
  CorruptibleServer(std::string name, Role role, std::vector<Term> addresses, std::size_t corrupt_field,
                    std::vector<Term> leak_addresses);
  bool honest(const Term& state) const override { return state.at(corrupt_field_).is_bot(); }

 protected:
  // Handles the corrupted branch; returns true if it applied.
  bool corrupt_branch(const Event& e, Term& state, StepContext& ctx, std::vector<Emit>& out) const;

 private:
  std::size_t corrupt_field_;
  std::vector<Term> leak_addresses_;
};

class RelyingParty : public CorruptibleServer {
 public:
  RelyingParty(std::string name, std::vector<Term> addresses, std::vector<Term> leak_addresses);
  static Term initial_state(const Term& domain, const Term& sslkey, const Term& signkeys);
  std::vector<Emit> relation(const Event& e, Term& state, StepContext& ctx) const override;
};

class IdentityProvider : public CorruptibleServer {
 public:
  IdentityProvider(std::string name, std::vector<Term> addresses, std::vector<Term> leak_addresses);
  static Term initial_state(const Term& sslkeys, const Term& users, const Term& signkey);
  std::vector<Emit> relation(const Event& e, Term& state, StepContext& ctx) const override;
};

}  // namespace dyweb

// The web browser atomic process: state layout, window-tree helpers and the
// browser relation with its script execution and response processing.
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dyweb/runtime.h"
#include "dyweb/terms.h"

namespace dyweb {

// 1-based field positions of the browser state term.
namespace bs {
constexpr std::size_t kWindows = 1, kIds = 2, kSecrets = 3, kCookies = 4, kLocalStorage = 5, kSessionStorage = 6,
                      kKeyMapping = 7, kSts = 8, kDnsAddress = 9, kNonces = 10, kPendingDns = 11,
                      kPendingRequests = 12, kIsCorrupted = 13;
constexpr std::size_t kFieldCount = 13;
}  // namespace bs

// Window = <nonce, documents, opener>; Document = <nonce, origin, script,
// scriptstate, scriptinput, subwindows, active>.
namespace win {
constexpr std::size_t kNonce = 1, kDocuments = 2, kOpener = 3;
}
namespace doc {
constexpr std::size_t kNonce = 1, kOrigin = 2, kScript = 3, kScriptState = 4, kScriptInput = 5, kSubwindows = 6,
                      kActive = 7;
}

Term make_window(const Term& nonce, const Term& documents, const Term& opener);
Term make_document(const Term& nonce, const Term& origin, const Term& script, const Term& scriptstate,
                   const Term& scriptinput, const Term& subwindows, bool active);

struct BrowserInit {
  std::vector<Term> ids;
  Term secrets;      // dictionary origin -> secret
  Term cookies;      // dictionary domain -> cookie sequence
  Term local_storage;
  Term key_mapping;  // dictionary domain -> public key
  std::vector<Term> sts;
  Term dns_address;
};
Term make_browser_state(const BrowserInit& init);

// Pointers into the state (SubtermPaths), in deterministic preorder.
std::vector<SubtermPath> subwindows(const Term& s);
std::vector<SubtermPath> docs(const Term& s);
// Path of the active document of the window at wp, if any.
std::optional<SubtermPath> active_document(const Term& s, const SubtermPath& wp);
// Window paths whose nonce equals n, restricted to subwindows(s).
std::optional<SubtermPath> find_window(const Term& s, const Term& nonce);
std::optional<SubtermPath> find_document(const Term& s, const Term& nonce);

Term clean(const Term& s, const Term& document);
Term cookie_merge(const Term& old_cookies, const Term& new_cookies);
Term add_cookie(const Term& old_cookies, const Term& c);
std::vector<SubtermPath> navigable_windows(const SubtermPath& w, const Term& s);

// A script relation: input <tree, docnonce, scriptstate, scriptinput,
// cookies, localStorage, sessionStorage, ids, secret> to output <scriptstate',
// cookies', localStorage', sessionStorage', command>. Fresh nonces and
// choices come from the context.
using ScriptFn = std::function<Term(const Term& in, StepContext& ctx)>;

class ScriptRegistry {
 public:
  void add(std::string name, ScriptFn fn) { scripts_[std::move(name)] = std::move(fn); }
  const ScriptFn* find(const Term& script) const;

 private:
  std::map<std::string, ScriptFn> scripts_;
};

struct BrowserConfig {
  std::shared_ptr<const ScriptRegistry> scripts;
  // Candidate hosts and paths for user-initiated navigation.
  std::vector<Term> open_hosts;
  std::vector<std::string> open_paths = {"/"};
  // Addresses a corrupted browser may send its derived messages to.
  std::vector<Term> leak_addresses;
};

class Browser : public Process {
 public:
  Browser(std::string name, std::vector<Term> addresses, BrowserConfig cfg);
  std::vector<Emit> relation(const Event& e, Term& state, StepContext& ctx) const override;
  bool honest(const Term& state) const override;
  const BrowserConfig& config() const { return cfg_; }

 private:
  BrowserConfig cfg_;
};

// Provenance note kinds emitted by the browser.
namespace note {
inline constexpr const char* kDocCreated = "doc-created";          // <docnonce, origin, script>
inline constexpr const char* kRequestPrepared = "request-prepared";  // <dnsnonce, request, initiator>
inline constexpr const char* kRequestIssued = "request-issued";    // <dnsnonce, request, key, protocol, message>
inline constexpr const char* kResponseAccepted = "response-accepted";  // <request, key, response, protocol>
inline constexpr const char* kPmDelivered = "pm-delivered";        // <target docnonce, target origin, sender origin, message>
inline constexpr const char* kScriptRun = "script-run";            // <docnonce, origin, script, tree>
}  // namespace note

}  // namespace dyweb

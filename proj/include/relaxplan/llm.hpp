#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "relaxplan/pddl.hpp"
#include "relaxplan/rules.hpp"

namespace relaxplan {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

struct LlmConfig {
  std::string endpoint = "http://127.0.0.1:11434";
  std::string model = "gemma3:12b";
  double timeout_seconds = 30.0;
  int max_attempts = 3;  // K
  double temperature = 0.0;

  /// Applies RELAXPLAN_LLM_ENDPOINT / RELAXPLAN_LLM_MODEL overrides.
  static LlmConfig from_env();
};

class LlmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class LlmNetworkError : public LlmError {
 public:
  using LlmError::LlmError;
};
class LlmHttpError : public LlmError {
 public:
  using LlmError::LlmError;
};
class LlmTimeoutError : public LlmError {
 public:
  using LlmError::LlmError;
};

struct ChatReply {
  std::string content;
  double latency_seconds = 0.0;
};

/// Transport behind the gateway. `kind` tags the call site (relaxation,
/// complementary, recovery, scoring) so scripted backends can route replies.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual ChatReply chat(const LlmConfig& config, const std::vector<ChatMessage>& messages,
                         std::string_view kind) = 0;
};

/// POSTs to {endpoint}/api/chat with stream=false, Ollama-compatible body.
class HttpLlmClient final : public LlmClient {
 public:
  ChatReply chat(const LlmConfig& config, const std::vector<ChatMessage>& messages,
                 std::string_view kind) override;
};

struct RecordedCall {
  std::string kind;
  std::vector<ChatMessage> messages;
};

/// Scripted backend: a fixture maps call kind -> ordered list of canned
/// replies. An entry may be a plain string or {"error": "network|http|timeout"}
/// to simulate a failure. Exhausting a script is a hard error so tests catch
/// unexpected extra calls.
class MockLlmClient final : public LlmClient {
 public:
  MockLlmClient() = default;
  explicit MockLlmClient(nlohmann::json script);
  static MockLlmClient from_file(const std::filesystem::path& file);

  ChatReply chat(const LlmConfig& config, const std::vector<ChatMessage>& messages,
                 std::string_view kind) override;

  const std::vector<RecordedCall>& calls() const { return calls_; }
  int call_count(std::string_view kind) const;

 private:
  nlohmann::json script_;
  std::map<std::string, std::size_t> cursor_;
  std::vector<RecordedCall> calls_;
};

/// First syntactically complete JSON object or array in the reply, after
/// stripping code fences. Empty when none parses.
std::optional<nlohmann::json> extract_json(std::string_view reply);

/// System + user messages asking for one rule type. The user prompt carries
/// the purpose explanation, the annotated schema, the integers-not-strings
/// emphasis, a correct worked example, a wrong example with string indices,
/// and the full domain text verbatim.
std::vector<ChatMessage> build_rule_prompt(std::string_view domain_text, RuleKind kind);

struct Transcript {
  std::vector<ChatMessage> messages;  // prompt + replies + correction turns
  int attempts = 0;                   // number of assistant replies
  std::string final_raw;
};

struct GenCounts {
  int attempts = 0;
  int raw_rules = 0;
  int after_dedup = 0;
  int after_filter = 0;
  bool format_ok = false;
  bool exhausted = false;
};

struct RuleGenResult {
  std::vector<RelaxationRule> relaxation;
  std::vector<ComplementaryRule> complementary;
  nlohmann::ordered_json relaxation_json;
  nlohmann::ordered_json complementary_json;
  Transcript relaxation_transcript;
  Transcript complementary_transcript;
  ValidationReport relaxation_report;  // last attempt's report
  ValidationReport complementary_report;
  GenCounts relaxation_counts;
  GenCounts complementary_counts;

  bool exhausted() const { return relaxation_counts.exhausted || complementary_counts.exhausted; }
};

/// Queries the model once per rule type with up to K validation/correction
/// rounds, then deduplicates and filters the result. When `out_dir` is given,
/// relaxation.json and complementary.json are written there. When `log_file`
/// is given, every prompt and reply is appended to it as JSON lines.
RuleGenResult generate_rules(LlmClient& client, const LlmConfig& config, const Domain& domain,
                             std::string_view domain_text,
                             const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                             const std::optional<std::filesystem::path>& log_file = std::nullopt);

/// Asks which excluded objects are likely blocking the plan. Unknown names are
/// dropped; any gateway failure yields an empty list.
std::vector<std::string> recovery_guidance(LlmClient& client, const LlmConfig& config,
                                           const std::set<GroundAtom>& state,
                                           const std::set<GroundAtom>& goal,
                                           const std::set<std::string>& included,
                                           const std::set<std::string>& excluded);

struct ScoreReply {
  std::map<std::string, double> scores;  // every object covered, values in [0,1]
  bool fallback = false;                 // true when the gateway failed
  double latency_seconds = 0.0;
};

/// Requests a score per object. Objects missing from the reply get 0.5;
/// out-of-range values are clamped; gateway failure scores everything 0.5.
/// `facts` must already be capped by the caller and is sent in the given
/// order.
ScoreReply score_objects(LlmClient& client, const LlmConfig& config,
                         const std::set<GroundAtom>& goal,
                         const std::map<std::string, std::string>& objects,
                         const std::vector<GroundAtom>& facts);

}  // namespace relaxplan

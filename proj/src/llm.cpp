#include "relaxplan/llm.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "httplib.h"

using nlohmann::json;
using nlohmann::ordered_json;

namespace relaxplan {

namespace {

void append_log(const std::optional<std::filesystem::path>& log_file, std::string_view kind,
                const std::string& role, const std::string& content) {
  if (!log_file) return;
  std::ofstream os(*log_file, std::ios::app);
  json line = {{"kind", std::string(kind)}, {"role", role}, {"content", content}};
  os << line.dump() << "\n";
}

std::string strip_code_fences(std::string_view reply) {
  std::string out;
  out.reserve(reply.size());
  std::size_t pos = 0;
  while (pos < reply.size()) {
    std::size_t nl = reply.find('\n', pos);
    std::string_view line = reply.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                           : nl - pos);
    std::size_t first = line.find_first_not_of(" \t");
    bool fence = first != std::string_view::npos && line.substr(first).rfind("```", 0) == 0;
    if (!fence) {
      out.append(line);
      out.push_back('\n');
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

// Scans for a balanced JSON object/array starting at `start`; returns one past
// the end, or npos when unbalanced.
std::size_t balanced_end(const std::string& text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      --depth;
      if (depth == 0) return i + 1;
      if (depth < 0) return std::string::npos;
    }
  }
  return std::string::npos;
}

const char* kRuleSystemPrompt =
    "You are a planning-domain assistant. You translate PDDL domain files into "
    "rule configuration files. Reply with a single JSON document and no other "
    "text.";

const char* kRelaxationWorkedExample =
    "{\"rule0\": {\"pre_compute\": {\"oat\": [0, 1]}, \"precond\": {\"islight\": [0]}, "
    "\"delete_objects\": [0], \"delete_effects\": {\"islight\": [0], \"ismoveable\": [0], "
    "\"oat\": [0, 1]}, \"add_effects\": {\"posempty\": [1]}}}";

const char* kRelaxationWrongExample =
    "{\"rule0\": {\"pre_compute\": {\"oat\": [\"0\", \"1\"]}, \"precond\": {\"islight\": "
    "[\"0\"]}, \"delete_objects\": [\"0\"], \"delete_effects\": {\"oat\": [\"0\", \"1\"]}, "
    "\"add_effects\": {\"posempty\": [\"1\"]}}}";

const char* kComplementaryWorkedExample =
    "{\"oat\": {\"cond\": [[0], [1]], \"cmpl\": [[1], [0]]}}";

const char* kComplementaryWrongExample =
    "{\"oat\": {\"cond\": [[\"0\"], [\"1\"]], \"cmpl\": [[\"1\"], [\"0\"]]}}";

std::string relaxation_prompt(std::string_view domain_text) {
  std::ostringstream os;
  os << "Write relaxation rules for the PDDL domain below.\n\n"
     << "Purpose: a relaxation rule identifies objects that can be temporarily removed from a "
        "planning problem to produce a simpler version of it. Removing such an object must leave "
        "the state consistent, so the rule also retracts the facts that mentioned the object and "
        "asserts the facts that become true once it is gone (for example, marking a vacated "
        "position as empty).\n\n"
     << "Schema (annotated):\n"
     << "{\"rule0\": {\n"
     << "  \"pre_compute\": {\"<binary-predicate>\": [0, 1]},   // atom used to look up the "
        "related object; binds the tuple (x0, x1)\n"
     << "  \"precond\": {\"<unary-predicate>\": [<index>]},     // facts that must hold for the "
        "binding to fire\n"
     << "  \"delete_objects\": [<index>],                     // tuple index of the object to "
        "remove\n"
     << "  \"delete_effects\": {\"<predicate>\": [<indices>]},  // facts to retract\n"
     << "  \"add_effects\": {\"<predicate>\": [<indices>]}}}    // facts to assert after removal\n"
     << "Use \"rule0\", \"rule1\", ... as keys.\n\n"
     << "All index values MUST be integers, never strings.\n\n"
     << "Correct example:\n"
     << kRelaxationWorkedExample << "\n\n"
     << "Wrong example (string indices are invalid):\n"
     << kRelaxationWrongExample << "\n\n"
     << "Domain:\n"
     << domain_text << "\n"
     << "Reply with one JSON object and nothing else.";
  return os.str();
}

std::string complementary_prompt(std::string_view domain_text) {
  std::ostringstream os;
  os << "Write complementary rules for the PDDL domain below.\n\n"
     << "Purpose: a complementary rule forces structurally linked objects to be kept together "
        "when a problem is pruned to a subset of its objects. Each entry names a predicate; "
        "whenever an atom of that predicate holds and the objects at the cond positions are "
        "included, the objects at the paired cmpl positions must be included too.\n\n"
     << "Schema (annotated):\n"
     << "{\"<predicate>\": {\n"
     << "  \"cond\": [[<indices>], ...],   // argument positions that trigger co-inclusion\n"
     << "  \"cmpl\": [[<indices>], ...]}}  // positions pulled in, paired with cond by rank\n\n"
     << "All index values MUST be integers, never strings.\n\n"
     << "Correct example:\n"
     << kComplementaryWorkedExample << "\n\n"
     << "Wrong example (string indices are invalid):\n"
     << kComplementaryWrongExample << "\n\n"
     << "Domain:\n"
     << domain_text << "\n"
     << "Reply with one JSON object and nothing else.";
  return os.str();
}

std::string correction_prompt(const std::string& raw, const std::vector<std::string>& errors) {
  std::ostringstream os;
  os << "Your previous reply:\n" << raw << "\n\nValidation errors:\n";
  for (const auto& e : errors) os << "- " << e << "\n";
  os << "\nResend the complete corrected JSON document and nothing else.";
  return os.str();
}

struct KindGenResult {
  Transcript transcript;
  ValidationReport report;
  GenCounts counts;
  std::optional<json> parsed;
};

KindGenResult generate_for_kind(LlmClient& client, const LlmConfig& config, RuleKind kind,
                                std::string_view domain_text, const PredicateMap& known,
                                const std::optional<std::filesystem::path>& log_file) {
  const std::string kind_name = kind == RuleKind::relaxation ? "relaxation" : "complementary";
  KindGenResult out;
  std::vector<ChatMessage> messages = build_rule_prompt(domain_text, kind);
  out.transcript.messages = messages;
  for (const auto& m : messages) append_log(log_file, kind_name, m.role, m.content);

  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    ChatReply reply = client.chat(config, messages, kind_name);
    append_log(log_file, kind_name, "assistant", reply.content);
    messages.push_back({"assistant", reply.content});
    out.transcript.messages.push_back({"assistant", reply.content});
    out.transcript.attempts = attempt;
    out.transcript.final_raw = reply.content;
    out.counts.attempts = attempt;

    std::vector<std::string> error_messages;
    bool fatal = false;
    std::optional<json> doc = extract_json(reply.content);
    if (!doc) {
      error_messages.push_back("no JSON object found in the reply");
      fatal = true;
    } else {
      out.report = validate_rules(*doc, known, kind);
      error_messages = out.report.messages();
      fatal = out.report.has_format_errors();
      out.parsed = doc;
    }

    if (!fatal) {
      out.counts.format_ok = true;
      return out;
    }
    if (attempt == config.max_attempts) break;
    ChatMessage correction{"user", correction_prompt(reply.content, error_messages)};
    append_log(log_file, kind_name, "user", correction.content);
    messages.push_back(correction);
    out.transcript.messages.push_back(correction);
  }
  out.counts.exhausted = true;
  return out;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

LlmConfig LlmConfig::from_env() {
  LlmConfig config;
  if (const char* endpoint = std::getenv("RELAXPLAN_LLM_ENDPOINT")) config.endpoint = endpoint;
  if (const char* model = std::getenv("RELAXPLAN_LLM_MODEL")) config.model = model;
  return config;
}

ChatReply HttpLlmClient::chat(const LlmConfig& config, const std::vector<ChatMessage>& messages,
                              std::string_view kind) {
  (void)kind;
  const auto t0 = std::chrono::steady_clock::now();
  httplib::Client cli(config.endpoint);
  cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::duration<double>(config.timeout_seconds)));
  cli.set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::duration<double>(config.timeout_seconds)));

  json body;
  body["model"] = config.model;
  body["stream"] = false;
  body["options"] = {{"temperature", config.temperature}};
  body["messages"] = json::array();
  for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});

  httplib::Result res = cli.Post("/api/chat", body.dump(), "application/json");
  const double latency =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
        err == httplib::Error::Write) {
      if (latency >= config.timeout_seconds * 0.9)
        throw LlmTimeoutError("request to " + config.endpoint + " timed out");
    }
    throw LlmNetworkError("cannot reach " + config.endpoint + ": " + httplib::to_string(err));
  }
  if (res->status != 200)
    throw LlmHttpError("HTTP " + std::to_string(res->status) + " from " + config.endpoint + ": " +
                       res->body);
  json doc = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.contains("message") || !doc["message"].contains("content"))
    throw LlmHttpError("malformed reply from " + config.endpoint);
  std::string content = doc["message"]["content"].get<std::string>();
  if (content.empty()) throw LlmHttpError("empty reply from model");
  return {std::move(content), latency};
}

MockLlmClient::MockLlmClient(json script) : script_(std::move(script)) {}

MockLlmClient MockLlmClient::from_file(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open mock script: " + file.string());
  json doc = json::parse(is, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded())
    throw std::runtime_error("invalid JSON in mock script: " + file.string());
  return MockLlmClient(std::move(doc));
}

ChatReply MockLlmClient::chat(const LlmConfig& config, const std::vector<ChatMessage>& messages,
                              std::string_view kind) {
  (void)config;
  calls_.push_back({std::string(kind), messages});
  const std::string key(kind);
  if (!script_.contains(key))
    throw std::logic_error("mock LLM has no script for call kind '" + key + "'");
  const json& entries = script_[key];
  std::size_t& cursor = cursor_[key];
  if (!entries.is_array() || cursor >= entries.size())
    throw std::logic_error("mock LLM script exhausted for call kind '" + key + "' (call " +
                           std::to_string(cursor + 1) + ")");
  const json& entry = entries[cursor++];
  if (entry.is_object() && entry.contains("error")) {
    std::string what = entry["error"].get<std::string>();
    if (what == "network") throw LlmNetworkError("mock network failure");
    if (what == "timeout") throw LlmTimeoutError("mock request timeout");
    throw LlmHttpError("mock HTTP failure");
  }
  double latency = 0.0;
  if (entry.is_object()) {
    latency = entry.value("latency", 0.0);
    return {entry.at("reply").get<std::string>(), latency};
  }
  return {entry.get<std::string>(), latency};
}

int MockLlmClient::call_count(std::string_view kind) const {
  int n = 0;
  for (const auto& c : calls_)
    if (c.kind == kind) ++n;
  return n;
}

std::optional<json> extract_json(std::string_view reply) {
  const std::string text = strip_code_fences(reply);
  std::size_t start = 0;
  while (true) {
    std::size_t open = text.find_first_of("{[", start);
    if (open == std::string::npos) return std::nullopt;
    std::size_t end = balanced_end(text, open);
    if (end == std::string::npos) {
      start = open + 1;
      continue;
    }
    json doc = json::parse(text.substr(open, end - open), nullptr, /*allow_exceptions=*/false);
    if (!doc.is_discarded()) return doc;
    start = open + 1;
  }
}

std::vector<ChatMessage> build_rule_prompt(std::string_view domain_text, RuleKind kind) {
  std::string user = kind == RuleKind::relaxation ? relaxation_prompt(domain_text)
                                                  : complementary_prompt(domain_text);
  return {{"system", kRuleSystemPrompt}, {"user", std::move(user)}};
}

RuleGenResult generate_rules(LlmClient& client, const LlmConfig& config, const Domain& domain,
                             std::string_view domain_text,
                             const std::optional<std::filesystem::path>& out_dir,
                             const std::optional<std::filesystem::path>& log_file) {
  const PredicateMap known = predicate_map(domain.predicates);
  RuleGenResult result;

  KindGenResult relax =
      generate_for_kind(client, config, RuleKind::relaxation, domain_text, known, log_file);
  result.relaxation_transcript = std::move(relax.transcript);
  result.relaxation_report = std::move(relax.report);
  result.relaxation_counts = relax.counts;
  if (relax.parsed) {
    RelaxationParse parsed = read_relaxation_rules(*relax.parsed, known);
    result.relaxation_counts.raw_rules = static_cast<int>(parsed.rules.size());
    std::vector<RelaxationRule> rules = dedup(std::move(parsed.rules));
    result.relaxation_counts.after_dedup = static_cast<int>(rules.size());
    rules = filter_unknown(std::move(rules), known);
    result.relaxation_counts.after_filter = static_cast<int>(rules.size());
    result.relaxation = std::move(rules);
  }
  result.relaxation_json = to_json(result.relaxation);

  KindGenResult comp =
      generate_for_kind(client, config, RuleKind::complementary, domain_text, known, log_file);
  result.complementary_transcript = std::move(comp.transcript);
  result.complementary_report = std::move(comp.report);
  result.complementary_counts = comp.counts;
  if (comp.parsed) {
    ComplementaryParse parsed = read_complementary_rules(*comp.parsed, known);
    result.complementary_counts.raw_rules = static_cast<int>(parsed.rules.size());
    std::vector<ComplementaryRule> rules = dedup(std::move(parsed.rules));
    result.complementary_counts.after_dedup = static_cast<int>(rules.size());
    rules = filter_unknown(std::move(rules), known);
    result.complementary_counts.after_filter = static_cast<int>(rules.size());
    result.complementary = std::move(rules);
  }
  result.complementary_json = to_json(result.complementary);

  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    std::ofstream(*out_dir / "relaxation.json") << canonical_rule_text(result.relaxation_json);
    std::ofstream(*out_dir / "complementary.json")
        << canonical_rule_text(result.complementary_json);
  }
  return result;
}

std::vector<std::string> recovery_guidance(LlmClient& client, const LlmConfig& config,
                                           const std::set<GroundAtom>& state,
                                           const std::set<GroundAtom>& goal,
                                           const std::set<std::string>& included,
                                           const std::set<std::string>& excluded) {
  std::ostringstream os;
  os << "A planner timed out on a pruned version of a problem. Identify which of the excluded "
        "objects are likely blocking the plan and must be added back.\n\nGoal:\n";
  for (const auto& atom : goal) os << atom.str() << "\n";
  os << "\nState facts:\n";
  for (const auto& atom : state) os << atom.str() << "\n";
  os << "\nIncluded objects:\n";
  for (const auto& o : included) os << o << "\n";
  os << "\nExcluded objects (choose only from these):\n";
  for (const auto& o : excluded) os << o << "\n";
  os << "\nReply with a JSON list of object names, e.g. [\"b2\", \"p3\"], and nothing else.";

  std::vector<ChatMessage> messages = {
      {"system", "You analyse planning failures. Reply with a single JSON list of object names."},
      {"user", os.str()}};
  try {
    ChatReply reply = client.chat(config, messages, "recovery");
    std::optional<json> doc = extract_json(reply.content);
    if (!doc || !doc->is_array()) return {};
    std::vector<std::string> names;
    for (const auto& item : *doc) {
      if (!item.is_string()) continue;
      std::string name = item.get<std::string>();
      if (excluded.count(name))
        names.push_back(std::move(name));
      else
        std::cerr << "warning: recovery suggested unknown object '" << name << "'; dropped\n";
    }
    return names;
  } catch (const LlmError&) {
    return {};
  }
}

ScoreReply score_objects(LlmClient& client, const LlmConfig& config,
                         const std::set<GroundAtom>& goal,
                         const std::map<std::string, std::string>& objects,
                         const std::vector<GroundAtom>& facts) {
  ScoreReply out;
  for (const auto& [name, type] : objects) {
    (void)type;
    out.scores[name] = 0.5;
  }

  std::ostringstream os;
  os << "Score how important each object is for reaching the goal of this planning problem. "
        "Return a score in [0, 1] for every object: 1.0 for objects that are certainly needed "
        "(goal objects, objects on the path), low scores for irrelevant ones.\n\nGoal:\n";
  for (const auto& atom : goal) os << atom.str() << "\n";
  os << "\nObjects:\n";
  for (const auto& [name, type] : objects) os << name << ": " << type << "\n";
  os << "\nState facts:\n";
  for (const auto& atom : facts) os << atom.str() << "\n";
  os << "\nReply with a JSON dictionary mapping every object name to a number in [0, 1], and "
        "nothing else.";

  std::vector<ChatMessage> messages = {
      {"system",
       "You estimate object importance for task planning. Reply with a single JSON dictionary."},
      {"user", os.str()}};
  try {
    ChatReply reply = client.chat(config, messages, "scoring");
    out.latency_seconds = reply.latency_seconds;
    std::optional<json> doc = extract_json(reply.content);
    if (!doc || !doc->is_object()) {
      out.fallback = true;
      return out;
    }
    for (const auto& [name, value] : doc->items()) {
      auto it = out.scores.find(name);
      if (it == out.scores.end()) continue;  // unknown object name in the reply
      if (value.is_number()) it->second = clamp01(value.get<double>());
    }
    return out;
  } catch (const LlmError&) {
    out.fallback = true;
    for (auto& [name, score] : out.scores) {
      (void)name;
      score = 0.5;
    }
    return out;
  }
}

}  // namespace relaxplan

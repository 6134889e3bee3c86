#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "relaxplan/pddl.hpp"

namespace relaxplan {

enum class RuleKind { relaxation, complementary };

/// Deletes removable objects from a problem and patches the state. All index
/// values refer to positions in the pre_compute binding tuple.
struct RelaxationRule {
  std::string id;  // "rule0", "rule1", ...
  std::string pre_compute_predicate;
  std::vector<int> pre_compute_indices;  // always [0, 1]
  std::map<std::string, std::vector<int>> preconditions;
  std::vector<int> delete_object_indices;
  std::map<std::string, std::vector<int>> delete_effects;
  std::map<std::string, std::vector<int>> add_effects;

  /// Equality ignoring the rule id.
  bool same_content(const RelaxationRule& other) const;
};

/// Forces co-inclusion of structurally linked objects: for each init atom of
/// `predicate`, when all objects at cond[i] are included, the objects at
/// cmpl[i] are included too.
struct ComplementaryRule {
  std::string predicate;
  std::vector<std::vector<int>> cond;
  std::vector<std::vector<int>> cmpl;

  auto operator<=>(const ComplementaryRule&) const = default;
};

enum class RuleErrorClass {
  format,             // missing key, wrong structure, non-integer index
  unknown_predicate,  // predicate absent from the known set
  duplicate,          // content-identical rule or repeated cond/cmpl pair
};

struct RuleError {
  std::string rule_id;
  std::string field;
  std::string message;
  RuleErrorClass cls = RuleErrorClass::format;
};

struct ValidationReport {
  std::vector<RuleError> errors;

  bool is_valid() const { return errors.empty(); }
  bool has_format_errors() const;
  std::vector<std::string> messages() const;
};

using PredicateMap = std::map<std::string, PredicateDef>;
PredicateMap predicate_map(const std::vector<PredicateDef>& defs);

/// Runs the four structural checks on a parsed JSON document: required keys
/// present, index fields are integer lists, predicate names known, and no
/// duplicate rules. All findings are reported; nothing is thrown.
ValidationReport validate_rules(const nlohmann::json& doc, const PredicateMap& known,
                                RuleKind kind);

/// Typed views of a document. Entries with format errors are skipped; rules
/// that merely reference unknown predicates are kept so that filter_unknown
/// can deal with them.
struct RelaxationParse {
  std::vector<RelaxationRule> rules;
  ValidationReport report;
};
struct ComplementaryParse {
  std::vector<ComplementaryRule> rules;
  ValidationReport report;
};
RelaxationParse read_relaxation_rules(const nlohmann::json& doc, const PredicateMap& known);
ComplementaryParse read_complementary_rules(const nlohmann::json& doc, const PredicateMap& known);

// Content-identical rules collapse onto the lowest-numbered key; otherwise
// order is preserved. For complementary rules, repeated cond/cmpl pairs within
// an entry are merged.
std::vector<RelaxationRule> dedup(std::vector<RelaxationRule> rules);
std::vector<ComplementaryRule> dedup(std::vector<ComplementaryRule> rules);

// Drops rules referencing predicates absent from the known set.
std::vector<RelaxationRule> filter_unknown(std::vector<RelaxationRule> rules,
                                           const PredicateMap& known);
std::vector<ComplementaryRule> filter_unknown(std::vector<ComplementaryRule> rules,
                                              const PredicateMap& known);

nlohmann::ordered_json to_json(const std::vector<RelaxationRule>& rules);
nlohmann::ordered_json to_json(const std::vector<ComplementaryRule>& rules);
std::string canonical_rule_text(const nlohmann::ordered_json& doc);

/// Applies each rule in key order: for every init atom of the rule's
/// pre_compute predicate whose precondition atoms hold, the objects at
/// delete_objects indices are removed, delete_effects retracted and
/// add_effects asserted. Bindings that would remove a goal object are skipped.
/// No atom in the result references a removed object.
Problem apply_relaxation(const Problem& problem, const std::vector<RelaxationRule>& rules);

/// Least fixpoint of the co-inclusion relation over the given init atoms.
/// Extensive, monotone and idempotent.
std::set<std::string> complementary_closure(const std::set<std::string>& included,
                                            const std::set<GroundAtom>& init,
                                            const std::vector<ComplementaryRule>& rules);

/// Keeps included ∪ goal objects; init is restricted to atoms whose arguments
/// are all retained; the goal is unchanged.
Problem restrict_problem(const Problem& problem, const std::set<std::string>& included);

/// Parses a rule file, throwing std::runtime_error with the full error list
/// when validation fails.
std::vector<RelaxationRule> load_relaxation_rules(const std::filesystem::path& file,
                                                  const PredicateMap& known);
std::vector<ComplementaryRule> load_complementary_rules(const std::filesystem::path& file,
                                                        const PredicateMap& known);

}  // namespace relaxplan

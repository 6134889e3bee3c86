#pragma once

#include <compare>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace relaxplan {

/// Error with source position, thrown while tokenizing/parsing PDDL text.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Semantic error found while checking a parsed structure (arity mismatch,
/// undeclared predicate, unknown object, ...).
class SemanticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fully instantiated fact, e.g. (oat b1 p3).
struct GroundAtom {
  std::string predicate;
  std::vector<std::string> args;

  auto operator<=>(const GroundAtom&) const = default;
  std::string str() const;
};

/// Atom inside an action schema; args are variables (?x) or constants.
struct LiftedAtom {
  std::string predicate;
  std::vector<std::string> args;

  auto operator<=>(const LiftedAtom&) const = default;
};

struct Literal {
  LiftedAtom atom;
  bool positive = true;

  auto operator<=>(const Literal&) const = default;
};

struct TypedParam {
  std::string name;  // includes the '?' prefix
  std::string type;

  auto operator<=>(const TypedParam&) const = default;
};

struct PredicateDef {
  std::string name;
  std::vector<std::string> param_types;

  std::size_t arity() const { return param_types.size(); }
  auto operator<=>(const PredicateDef&) const = default;
};

struct ActionSchema {
  std::string name;
  std::vector<TypedParam> params;
  std::vector<Literal> preconditions;
  std::vector<LiftedAtom> add_effects;
  std::vector<LiftedAtom> del_effects;

  auto operator<=>(const ActionSchema&) const = default;
};

struct Domain {
  std::string name;
  std::map<std::string, std::string> types;  // type -> parent; roots map to "object"
  std::vector<PredicateDef> predicates;
  std::vector<ActionSchema> actions;

  auto operator<=>(const Domain&) const = default;

  const PredicateDef* find_predicate(const std::string& name) const;
  const ActionSchema* find_action(const std::string& name) const;

  /// True when `type` equals `ancestor` or is transitively declared below it.
  /// Every type is a subtype of "object".
  bool is_subtype(const std::string& type, const std::string& ancestor) const;
};

struct Problem {
  std::string name;
  std::string domain_name;
  std::map<std::string, std::string> objects;  // name -> type
  std::set<GroundAtom> init;
  std::set<GroundAtom> goal;

  auto operator<=>(const Problem&) const = default;

  /// Checks every atom against the domain: known predicate, matching arity,
  /// declared objects with compatible types. Throws SemanticError.
  void validate(const Domain& domain) const;
};

Domain parse_domain(std::string_view text);
Problem parse_problem(std::string_view text, const Domain& domain);

/// Parses only the :predicates block of a domain file. This is the known
/// predicate set used by rule validation.
std::vector<PredicateDef> parse_predicates(std::string_view domain_text);

/// Names of all objects appearing in any goal atom.
std::set<std::string> goal_objects(const Problem& problem);

// Canonical serialization; reparse of the output is structurally equal.
std::string to_pddl(const Domain& domain);
std::string to_pddl(const Problem& problem);

}  // namespace relaxplan

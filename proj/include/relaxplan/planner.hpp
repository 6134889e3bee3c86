#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relaxplan/clock.hpp"
#include "relaxplan/pddl.hpp"

namespace relaxplan {

/// One instantiated action: schema bound to objects plus its ground literals.
struct GroundAction {
  std::string schema;
  std::vector<std::string> args;
  std::vector<GroundAtom> pre_pos;
  std::vector<GroundAtom> pre_neg;
  std::vector<GroundAtom> add;
  std::vector<GroundAtom> del;

  std::string str() const;
};

struct PlanStep {
  std::string schema;
  std::vector<std::string> args;

  auto operator<=>(const PlanStep&) const = default;
  std::string str() const;
};

struct SearchStats {
  std::uint64_t expansions = 0;
  std::uint64_t generated = 0;
  double wall_seconds = 0.0;
};

struct Plan {
  std::vector<PlanStep> steps;
  SearchStats stats;

  std::size_t length() const { return steps.size(); }
};

enum class SearchStatus { success, timeout, unsolvable };

struct SearchResult {
  SearchStatus status = SearchStatus::unsolvable;
  Plan plan;  // meaningful only on success
  SearchStats stats;
};

enum class SearchMode {
  greedy,   // greedy best-first on an additive delete-relaxation heuristic
  optimal,  // breadth-first, optimal in plan length
};

/// All type-consistent instantiations of the domain's schemas whose static
/// preconditions (predicates never touched by any effect) are satisfiable in
/// the initial state. Output is sorted by (schema, args).
std::vector<GroundAction> ground(const Problem& problem, const Domain& domain);

SearchResult search(const Problem& problem, const Domain& domain, Deadline deadline,
                    SearchMode mode = SearchMode::greedy);

struct PlanCheck {
  bool valid = false;
  // Index of the first failing step; equals plan length when the plan executes
  // but the goal is unmet. Unused when valid.
  std::size_t failing_step = 0;
  std::string message;
};

/// Independent plan simulator: re-instantiates each step from its schema,
/// checks preconditions, applies effects, and finally checks the goal.
PlanCheck validate(const Plan& plan, const Problem& problem, const Domain& domain);

/// One "(schema arg1 arg2)" line per step.
std::string to_text(const Plan& plan);
std::vector<PlanStep> parse_plan_text(std::string_view text);

}  // namespace relaxplan

#pragma once

// Brute-force reference implementations used to cross-check the library.
// Deliberately written against the raw structures (JSON docs, string states)
// and kept independent of the library's grounding/search/rule machinery.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "relaxplan/pddl.hpp"

namespace oracle {

/// Every type-consistent binding of every schema whose static preconditions
/// (predicates untouched by any effect) hold in init. Returned as action
/// strings "(schema a b)". Exhaustive cartesian enumeration; tiny inputs only.
std::set<std::string> enumerate_ground(const relaxplan::Problem& problem,
                                       const relaxplan::Domain& domain);

/// Optimal plan length by breadth-first search over full states, enumerating
/// applicable bindings per state by matching preconditions against the state.
/// Returns nullopt when unsolvable (or the node cap is hit).
std::optional<std::size_t> bfs_optimal_length(const relaxplan::Problem& problem,
                                              const relaxplan::Domain& domain,
                                              std::size_t node_cap = 2000000);

/// Literal application of a relaxation-rule JSON document to a problem.
relaxplan::Problem apply_relaxation_ref(const relaxplan::Problem& problem,
                                        const nlohmann::json& rule_doc);

/// Iterate-to-stability closure over a complementary-rule JSON document.
std::set<std::string> closure_ref(const std::set<std::string>& included,
                                  const std::set<relaxplan::GroundAtom>& init,
                                  const nlohmann::json& rule_doc);

/// Grid BFS distances from (row, col) with blocked cells, independent of any
/// adjacency facts.
std::map<std::pair<int, int>, int> grid_distances_ref(
    int width, int height, std::pair<int, int> start,
    const std::set<std::pair<int, int>>& blocked);

}  // namespace oracle

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relaxplan/pddl.hpp"
#include "relaxplan/planner.hpp"
#include "relaxplan/scoring.hpp"

namespace relaxplan {

enum class Difficulty { easy, medium, hard, expert };

Difficulty difficulty_from_name(const std::string& name);
const char* difficulty_name(Difficulty d);

struct GridSpec {
  int width = 10;
  int height = 10;
  Difficulty difficulty = Difficulty::easy;
  std::uint64_t seed = 0;
  int heavy_boxes = 1;
  int light_boxes = 2;
  int stacked_pairs = 0;
};

/// Tier-default box counts. Expert layouts need enough boxes to wall off the
/// goal, so its counts scale with the grid.
GridSpec default_spec(int width, int height, Difficulty difficulty, std::uint64_t seed);

struct BoxInfo {
  std::string name;
  int row = 0;
  int col = 0;
  bool light = false;
  bool stacked_top = false;  // rests on `under`, carries no oat fact
  std::string under;
};

struct Instance {
  Problem problem;
  GridSpec spec;
  int robot_row = 0, robot_col = 0;
  int goal_row = 0, goal_col = 0;
  std::vector<BoxInfo> boxes;
  std::size_t witness_length = 0;  // length of the certifying plan

  std::string metadata_json() const;
};

/// The navigation-among-movable-obstacles domain: a robot moves through grid
/// cells, pushes moveable boxes, and picks/places/stacks light ones.
Domain mazenamo_domain();
const std::string& mazenamo_domain_text();

/// Deterministic for a fixed spec: same spec twice gives byte-identical
/// problem files. Every returned instance is certified solvable (a witness
/// plan was found and validated at generation time).
/// Throws std::runtime_error when the spec is infeasible.
Instance generate(const GridSpec& spec);

std::string cell_name(int row, int col);

/// Text frames: the initial grid plus one frame per plan step. An invalid plan
/// renders up to the failing step and marks it. Scores, when given, annotate
/// cells with a 0-9 bucket digit.
std::string render(const Instance& instance, const Plan* plan = nullptr,
                   const ScoreMap* scores = nullptr);

}  // namespace relaxplan

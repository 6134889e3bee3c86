#include "relaxplan/mazenamo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace relaxplan {

namespace {

// Deterministic across platforms, unlike <random> distributions.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  int below(int n) { return n <= 0 ? 0 : static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
};

const char* kDomainText = R"((define (domain mazenamo)
  (:requirements :strips :typing :negative-preconditions)
  (:types robot obstacle position)
  (:predicates
    (rat ?r - robot ?p - position)
    (oat ?o - obstacle ?p - position)
    (posempty ?p - position)
    (islight ?o - obstacle)
    (ismoveable ?o - obstacle)
    (clear ?o - obstacle)
    (onground ?o - obstacle)
    (upon ?a - obstacle ?b - obstacle)
    (holding ?r - robot ?o - obstacle)
    (handempty ?r - robot)
    (adjacent ?a - position ?b - position)
    (upto ?a - position ?b - position)
    (downto ?a - position ?b - position)
    (leftto ?a - position ?b - position)
    (rightto ?a - position ?b - position))

  (:action move
    :parameters (?r - robot ?from - position ?to - position)
    :precondition (and (rat ?r ?from) (adjacent ?from ?to) (posempty ?to))
    :effect (and (rat ?r ?to) (posempty ?from)
                 (not (rat ?r ?from)) (not (posempty ?to))))

  (:action push-up
    :parameters (?r - robot ?o - obstacle ?rp - position ?op - position ?dest - position)
    :precondition (and (rat ?r ?rp) (oat ?o ?op) (upto ?rp ?op) (upto ?op ?dest)
                       (posempty ?dest) (ismoveable ?o) (clear ?o) (onground ?o))
    :effect (and (rat ?r ?op) (oat ?o ?dest) (posempty ?rp)
                 (not (rat ?r ?rp)) (not (oat ?o ?op)) (not (posempty ?dest))))

  (:action push-down
    :parameters (?r - robot ?o - obstacle ?rp - position ?op - position ?dest - position)
    :precondition (and (rat ?r ?rp) (oat ?o ?op) (downto ?rp ?op) (downto ?op ?dest)
                       (posempty ?dest) (ismoveable ?o) (clear ?o) (onground ?o))
    :effect (and (rat ?r ?op) (oat ?o ?dest) (posempty ?rp)
                 (not (rat ?r ?rp)) (not (oat ?o ?op)) (not (posempty ?dest))))

  (:action push-left
    :parameters (?r - robot ?o - obstacle ?rp - position ?op - position ?dest - position)
    :precondition (and (rat ?r ?rp) (oat ?o ?op) (leftto ?rp ?op) (leftto ?op ?dest)
                       (posempty ?dest) (ismoveable ?o) (clear ?o) (onground ?o))
    :effect (and (rat ?r ?op) (oat ?o ?dest) (posempty ?rp)
                 (not (rat ?r ?rp)) (not (oat ?o ?op)) (not (posempty ?dest))))

  (:action push-right
    :parameters (?r - robot ?o - obstacle ?rp - position ?op - position ?dest - position)
    :precondition (and (rat ?r ?rp) (oat ?o ?op) (rightto ?rp ?op) (rightto ?op ?dest)
                       (posempty ?dest) (ismoveable ?o) (clear ?o) (onground ?o))
    :effect (and (rat ?r ?op) (oat ?o ?dest) (posempty ?rp)
                 (not (rat ?r ?rp)) (not (oat ?o ?op)) (not (posempty ?dest))))

  (:action pick
    :parameters (?r - robot ?o - obstacle ?rp - position ?op - position)
    :precondition (and (rat ?r ?rp) (oat ?o ?op) (adjacent ?rp ?op)
                       (islight ?o) (clear ?o) (onground ?o) (handempty ?r))
    :effect (and (holding ?r ?o) (posempty ?op)
                 (not (oat ?o ?op)) (not (onground ?o)) (not (clear ?o))
                 (not (handempty ?r))))

  (:action unstack
    :parameters (?r - robot ?t - obstacle ?b - obstacle ?rp - position ?bp - position)
    :precondition (and (rat ?r ?rp) (oat ?b ?bp) (adjacent ?rp ?bp) (upon ?t ?b)
                       (islight ?t) (not (islight ?b)) (clear ?t) (handempty ?r))
    :effect (and (holding ?r ?t) (clear ?b)
                 (not (upon ?t ?b)) (not (clear ?t)) (not (handempty ?r))))

  (:action place
    :parameters (?r - robot ?o - obstacle ?rp - position ?dest - position)
    :precondition (and (rat ?r ?rp) (adjacent ?rp ?dest) (holding ?r ?o) (posempty ?dest))
    :effect (and (oat ?o ?dest) (onground ?o) (clear ?o) (handempty ?r)
                 (not (holding ?r ?o)) (not (posempty ?dest))))

  (:action stack
    :parameters (?r - robot ?t - obstacle ?b - obstacle ?rp - position ?bp - position)
    :precondition (and (rat ?r ?rp) (adjacent ?rp ?bp) (holding ?r ?t)
                       (islight ?t) (not (islight ?b)) (oat ?b ?bp) (clear ?b) (onground ?b))
    :effect (and (upon ?t ?b) (clear ?t) (handempty ?r)
                 (not (holding ?r ?t)) (not (clear ?b)))))
)";

struct Cell {
  int row = 0;
  int col = 0;

  bool operator==(const Cell& o) const { return row == o.row && col == o.col; }
  bool operator<(const Cell& o) const { return std::tie(row, col) < std::tie(o.row, o.col); }
};

int manhattan(Cell a, Cell b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

std::vector<Cell> neighbors(Cell c, int w, int h) {
  std::vector<Cell> out;
  if (c.row > 0) out.push_back({c.row - 1, c.col});
  if (c.row + 1 < h) out.push_back({c.row + 1, c.col});
  if (c.col > 0) out.push_back({c.row, c.col - 1});
  if (c.col + 1 < w) out.push_back({c.row, c.col + 1});
  return out;
}

// BFS distances from `start`; cells in `blocked` are unreachable walls.
std::map<Cell, int> grid_distances(Cell start, int w, int h, const std::set<Cell>& blocked) {
  std::map<Cell, int> dist;
  if (blocked.count(start)) return dist;
  std::deque<Cell> queue{start};
  dist[start] = 0;
  while (!queue.empty()) {
    Cell cur = queue.front();
    queue.pop_front();
    for (Cell next : neighbors(cur, w, h)) {
      if (blocked.count(next)) continue;
      if (dist.emplace(next, dist[cur] + 1).second) queue.push_back(next);
    }
  }
  return dist;
}

// One shortest path start -> goal avoiding `blocked`, or empty when
// unreachable.
std::vector<Cell> shortest_path(Cell start, Cell goal, int w, int h,
                                const std::set<Cell>& blocked) {
  auto dist = grid_distances(start, w, h, blocked);
  if (!dist.count(goal)) return {};
  std::vector<Cell> path{goal};
  Cell cur = goal;
  while (!(cur == start)) {
    for (Cell prev : neighbors(cur, w, h)) {
      auto it = dist.find(prev);
      if (it != dist.end() && it->second == dist[cur] - 1) {
        cur = prev;
        break;
      }
    }
    path.push_back(cur);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

struct Layout {
  Cell robot;
  Cell goal;
  std::vector<BoxInfo> boxes;
};

std::set<Cell> occupied_cells(const Layout& layout) {
  std::set<Cell> cells;
  for (const auto& box : layout.boxes)
    if (!box.stacked_top) cells.insert({box.row, box.col});
  return cells;
}

class LayoutBuilder {
 public:
  LayoutBuilder(const GridSpec& spec, SplitMix64& rng) : spec_(spec), rng_(rng) {}

  std::optional<Layout> build() {
    const int w = spec_.width;
    const int h = spec_.height;
    Layout layout;
    layout.robot = {rng_.below(h), rng_.below(w)};
    const int min_dist = std::max(2, (w + h) / 2);
    for (int tries = 0; tries < 256; ++tries) {
      layout.goal = {rng_.below(h), rng_.below(w)};
      if (layout.goal == layout.robot) continue;
      if (manhattan(layout.robot, layout.goal) < min_dist && tries < 200) continue;
      if (spec_.difficulty == Difficulty::expert) {
        // A wall needs an index strictly between the two coordinates.
        if (std::abs(layout.goal.row - layout.robot.row) < 2 &&
            std::abs(layout.goal.col - layout.robot.col) < 2)
          continue;
      }
      break;
    }
    if (layout.goal == layout.robot) return std::nullopt;

    heavy_left_ = spec_.heavy_boxes;
    light_left_ = spec_.light_boxes;
    stacks_left_ = spec_.stacked_pairs;
    layout_ = &layout;

    switch (spec_.difficulty) {
      case Difficulty::easy:
        place_easy();
        break;
      case Difficulty::medium:
        place_medium();
        break;
      case Difficulty::hard:
        place_hard();
        break;
      case Difficulty::expert:
        if (!place_expert()) return std::nullopt;
        break;
    }
    return layout;
  }

 private:
  // Union of cells lying on some shortest robot-goal path of the empty grid.
  std::set<Cell> corridor_cells() const {
    const int w = spec_.width, h = spec_.height;
    auto from_robot = grid_distances(layout_->robot, w, h, {});
    auto from_goal = grid_distances(layout_->goal, w, h, {});
    const int shortest = from_robot.at(layout_->goal);
    std::set<Cell> corridor;
    for (const auto& [cell, dr] : from_robot) {
      auto it = from_goal.find(cell);
      if (it != from_goal.end() && dr + it->second == shortest) corridor.insert(cell);
    }
    return corridor;
  }

  bool cell_free(Cell c) const {
    if (c == layout_->robot || c == layout_->goal) return false;
    return !occupied_cells(*layout_).count(c);
  }

  std::optional<Cell> random_free_cell(const std::set<Cell>& avoid) {
    const int w = spec_.width, h = spec_.height;
    for (int tries = 0; tries < 512; ++tries) {
      Cell c{rng_.below(h), rng_.below(w)};
      if (cell_free(c) && !avoid.count(c)) return c;
    }
    return std::nullopt;
  }

  void add_ground_box(Cell c, bool light) {
    BoxInfo box;
    box.name = "b" + std::to_string(layout_->boxes.size() + 1);
    box.row = c.row;
    box.col = c.col;
    box.light = light;
    layout_->boxes.push_back(box);
    (light ? light_left_ : heavy_left_)--;
  }

  // Heavy bottom plus light top on one cell.
  void add_stack(Cell c) {
    add_ground_box(c, false);
    std::string under = layout_->boxes.back().name;
    BoxInfo top;
    top.name = "b" + std::to_string(layout_->boxes.size() + 1);
    top.row = c.row;
    top.col = c.col;
    top.light = true;
    top.stacked_top = true;
    top.under = under;
    layout_->boxes.push_back(top);
    --light_left_;
    --stacks_left_;
  }

  void scatter_remaining(const std::set<Cell>& avoid) {
    while (stacks_left_ > 0 && heavy_left_ > 0 && light_left_ > 0) {
      auto c = random_free_cell(avoid);
      if (!c) return;
      add_stack(*c);
    }
    while (heavy_left_ > 0) {
      auto c = random_free_cell(avoid);
      if (!c) return;
      add_ground_box(*c, false);
    }
    while (light_left_ > 0) {
      auto c = random_free_cell(avoid);
      if (!c) return;
      add_ground_box(*c, true);
    }
  }

  void place_easy() {
    // Keep every shortest corridor clear.
    scatter_remaining(corridor_cells());
  }

  void place_medium() {
    auto corridor = corridor_cells();
    std::vector<Cell> options(corridor.begin(), corridor.end());
    std::erase_if(options,
                  [&](Cell c) { return c == layout_->robot || c == layout_->goal; });
    if (!options.empty() && light_left_ > stacks_left_) {
      add_ground_box(options[rng_.below(static_cast<int>(options.size()))], true);
    }
    // Heavies stay off the corridor on medium instances.
    std::set<Cell> avoid = corridor;
    while (heavy_left_ > 0) {
      auto c = random_free_cell(avoid);
      if (!c) break;
      add_ground_box(*c, false);
    }
    scatter_remaining({});
  }

  void place_hard() {
    const int w = spec_.width, h = spec_.height;
    const int empty_shortest = manhattan(layout_->robot, layout_->goal);
    bool stack_placed = false;
    bool place_light_next = true;
    // Block every remaining shortest corridor while the budget lasts.
    for (int guard = 0; guard < 64; ++guard) {
      auto path = shortest_path(layout_->robot, layout_->goal, w, h, occupied_cells(*layout_));
      if (path.empty() || static_cast<int>(path.size()) - 1 > empty_shortest) break;
      Cell mid = path[path.size() / 2];
      if (!cell_free(mid)) break;
      if (!stack_placed && stacks_left_ > 0 && heavy_left_ > 0 && light_left_ > 1) {
        add_stack(mid);
        stack_placed = true;
      } else if (place_light_next && light_left_ > stacks_left_) {
        add_ground_box(mid, true);
        place_light_next = false;
      } else if (heavy_left_ > stacks_left_) {
        add_ground_box(mid, false);
        place_light_next = true;
      } else if (light_left_ > stacks_left_) {
        add_ground_box(mid, true);
      } else {
        break;
      }
    }
    scatter_remaining({});
  }

  bool place_expert() {
    const int w = spec_.width, h = spec_.height;
    const Cell robot = layout_->robot, goal = layout_->goal;
    const bool horizontal = std::abs(goal.row - robot.row) >= std::abs(goal.col - robot.col);
    std::vector<Cell> wall;
    if (horizontal) {
      if (std::abs(goal.row - robot.row) < 2) return false;
      int wall_row = (robot.row + goal.row) / 2;
      if (wall_row == robot.row) wall_row += (goal.row > robot.row) ? 1 : -1;
      if (wall_row == goal.row) wall_row += (robot.row > goal.row) ? 1 : -1;
      for (int c = 0; c < w; ++c) wall.push_back({wall_row, c});
    } else {
      if (std::abs(goal.col - robot.col) < 2) return false;
      int wall_col = (robot.col + goal.col) / 2;
      if (wall_col == robot.col) wall_col += (goal.col > robot.col) ? 1 : -1;
      if (wall_col == goal.col) wall_col += (robot.col > goal.col) ? 1 : -1;
      for (int r = 0; r < h; ++r) wall.push_back({r, wall_col});
    }
    const int ground_budget = heavy_left_ + light_left_ - stacks_left_;
    if (ground_budget < static_cast<int>(wall.size())) return false;

    // Stacks and the free heavies sit at random wall offsets; light boxes
    // fill the rest.
    std::set<int> special;
    while (static_cast<int>(special.size()) < stacks_left_ + (heavy_left_ - stacks_left_) &&
           static_cast<int>(special.size()) < static_cast<int>(wall.size()))
      special.insert(rng_.below(static_cast<int>(wall.size())));
    std::vector<int> special_slots(special.begin(), special.end());
    int stacks_to_place = stacks_left_;
    for (std::size_t i = 0; i < wall.size(); ++i) {
      bool is_special =
          std::find(special_slots.begin(), special_slots.end(), static_cast<int>(i)) !=
          special_slots.end();
      if (is_special && stacks_to_place > 0 && heavy_left_ > 0 && light_left_ > 0) {
        add_stack(wall[i]);
        --stacks_to_place;
      } else if (is_special && heavy_left_ > stacks_left_) {
        add_ground_box(wall[i], false);
      } else if (light_left_ > stacks_left_) {
        add_ground_box(wall[i], true);
      } else if (heavy_left_ > stacks_left_) {
        add_ground_box(wall[i], false);
      } else {
        return false;
      }
    }
    scatter_remaining({});
    // The wall must cut the robot off from the goal completely.
    auto dist = grid_distances(robot, w, h, occupied_cells(*layout_));
    return !dist.count(goal);
  }

  const GridSpec& spec_;
  SplitMix64& rng_;
  Layout* layout_ = nullptr;
  int heavy_left_ = 0;
  int light_left_ = 0;
  int stacks_left_ = 0;
};

Problem layout_to_problem(const GridSpec& spec, const Layout& layout) {
  const int w = spec.width, h = spec.height;
  Problem problem;
  std::ostringstream name;
  name << "mazenamo_" << w << "x" << h << "_" << difficulty_name(spec.difficulty) << "_"
       << spec.seed;
  problem.name = name.str();
  problem.domain_name = "mazenamo";

  problem.objects["r1"] = "robot";
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) problem.objects[cell_name(r, c)] = "position";
  for (const auto& box : layout.boxes) problem.objects[box.name] = "obstacle";

  auto add = [&](const std::string& pred, std::vector<std::string> args) {
    problem.init.insert({pred, std::move(args)});
  };

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      std::string here = cell_name(r, c);
      if (r > 0) add("upto", {here, cell_name(r - 1, c)});
      if (r + 1 < h) add("downto", {here, cell_name(r + 1, c)});
      if (c > 0) add("leftto", {here, cell_name(r, c - 1)});
      if (c + 1 < w) add("rightto", {here, cell_name(r, c + 1)});
      for (Cell n : neighbors({r, c}, w, h)) add("adjacent", {here, cell_name(n.row, n.col)});
    }
  }

  std::set<Cell> occupied = occupied_cells(layout);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      Cell cell{r, c};
      if (cell == layout.robot || occupied.count(cell)) continue;
      add("posempty", {cell_name(r, c)});
    }
  }

  add("rat", {"r1", cell_name(layout.robot.row, layout.robot.col)});
  add("handempty", {"r1"});

  std::set<std::string> stacked_bottoms;
  for (const auto& box : layout.boxes)
    if (box.stacked_top) stacked_bottoms.insert(box.under);

  for (const auto& box : layout.boxes) {
    add("ismoveable", {box.name});
    if (box.light) add("islight", {box.name});
    if (box.stacked_top) {
      add("upon", {box.name, box.under});
      add("clear", {box.name});
    } else {
      add("oat", {box.name, cell_name(box.row, box.col)});
      add("onground", {box.name});
      if (!stacked_bottoms.count(box.name)) add("clear", {box.name});
    }
  }

  problem.goal.insert({"rat", {"r1", cell_name(layout.goal.row, layout.goal.col)}});
  return problem;
}

// Step simulation shared by render; returns an error message on failure.
std::optional<std::string> apply_step(const Domain& domain, const Problem& problem,
                                      std::set<GroundAtom>& state, const PlanStep& step) {
  const ActionSchema* schema = domain.find_action(step.schema);
  if (schema == nullptr) return "unknown action '" + step.schema + "'";
  if (schema->params.size() != step.args.size()) return "arity mismatch in " + step.str();
  std::map<std::string, std::string> binding;
  for (std::size_t i = 0; i < step.args.size(); ++i) {
    if (!problem.objects.count(step.args[i])) return "unknown object '" + step.args[i] + "'";
    binding[schema->params[i].name] = step.args[i];
  }
  auto instantiate = [&](const LiftedAtom& atom) {
    GroundAtom out;
    out.predicate = atom.predicate;
    for (const auto& a : atom.args)
      out.args.push_back((!a.empty() && a[0] == '?') ? binding.at(a) : a);
    return out;
  };
  for (const auto& lit : schema->preconditions) {
    bool present = state.count(instantiate(lit.atom)) > 0;
    if (lit.positive != present)
      return "precondition " + instantiate(lit.atom).str() + " fails in " + step.str();
  }
  for (const auto& eff : schema->del_effects) state.erase(instantiate(eff));
  for (const auto& eff : schema->add_effects) state.insert(instantiate(eff));
  return std::nullopt;
}

}  // namespace

Difficulty difficulty_from_name(const std::string& name) {
  if (name == "easy") return Difficulty::easy;
  if (name == "medium") return Difficulty::medium;
  if (name == "hard") return Difficulty::hard;
  if (name == "expert") return Difficulty::expert;
  throw std::runtime_error("unknown difficulty '" + name + "'");
}

const char* difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::easy:
      return "easy";
    case Difficulty::medium:
      return "medium";
    case Difficulty::hard:
      return "hard";
    case Difficulty::expert:
      return "expert";
  }
  return "unknown";
}

GridSpec default_spec(int width, int height, Difficulty difficulty, std::uint64_t seed) {
  GridSpec spec;
  spec.width = width;
  spec.height = height;
  spec.difficulty = difficulty;
  spec.seed = seed;
  switch (difficulty) {
    case Difficulty::easy:
      spec.heavy_boxes = 1;
      spec.light_boxes = 2;
      spec.stacked_pairs = 0;
      break;
    case Difficulty::medium:
      spec.heavy_boxes = 1;
      spec.light_boxes = 4;
      spec.stacked_pairs = 0;
      break;
    case Difficulty::hard:
      spec.heavy_boxes = 2;
      spec.light_boxes = 5;
      spec.stacked_pairs = 1;
      break;
    case Difficulty::expert: {
      const int wall = std::min(width, height);
      spec.heavy_boxes = 4;
      spec.light_boxes = wall + 4;
      spec.stacked_pairs = 2;
      break;
    }
  }
  return spec;
}

std::string cell_name(int row, int col) {
  return "p" + std::to_string(row) + "_" + std::to_string(col);
}

Domain mazenamo_domain() {
  static const Domain domain = parse_domain(kDomainText);
  return domain;
}

const std::string& mazenamo_domain_text() {
  static const std::string text = kDomainText;
  return text;
}

std::string Instance::metadata_json() const {
  nlohmann::ordered_json meta;
  meta["width"] = spec.width;
  meta["height"] = spec.height;
  meta["difficulty"] = difficulty_name(spec.difficulty);
  meta["seed"] = spec.seed;
  meta["heavy_boxes"] = spec.heavy_boxes;
  meta["light_boxes"] = spec.light_boxes;
  meta["stacked_pairs"] = spec.stacked_pairs;
  meta["robot"] = {robot_row, robot_col};
  meta["goal"] = {goal_row, goal_col};
  meta["boxes"] = nlohmann::ordered_json::array();
  for (const auto& box : boxes) {
    nlohmann::ordered_json b;
    b["name"] = box.name;
    b["row"] = box.row;
    b["col"] = box.col;
    b["light"] = box.light;
    b["stacked_top"] = box.stacked_top;
    if (box.stacked_top) b["under"] = box.under;
    meta["boxes"].push_back(std::move(b));
  }
  meta["witness_length"] = witness_length;
  return meta.dump(2) + "\n";
}

Instance generate(const GridSpec& spec) {
  if (spec.width < 2 || spec.height < 2) throw std::runtime_error("grid must be at least 2x2");
  if (spec.heavy_boxes < 0 || spec.light_boxes < 0 || spec.stacked_pairs < 0)
    throw std::runtime_error("box counts must be non-negative");
  if (spec.stacked_pairs > spec.heavy_boxes || spec.stacked_pairs > spec.light_boxes)
    throw std::runtime_error(
        "infeasible spec: each stacked pair needs one heavy bottom and one light top");
  const int cells = spec.width * spec.height;
  const int ground_boxes = spec.heavy_boxes + spec.light_boxes - spec.stacked_pairs;
  if (ground_boxes > cells - 2)
    throw std::runtime_error("infeasible spec: box counts exceed grid capacity");

  const Domain domain = mazenamo_domain();
  for (int attempt = 0; attempt < 48; ++attempt) {
    SplitMix64 rng(spec.seed ^ (0xa24baed4963ee407ull * static_cast<std::uint64_t>(attempt + 1)));
    LayoutBuilder builder(spec, rng);
    std::optional<Layout> layout = builder.build();
    if (!layout) continue;

    Instance instance;
    instance.spec = spec;
    instance.robot_row = layout->robot.row;
    instance.robot_col = layout->robot.col;
    instance.goal_row = layout->goal.row;
    instance.goal_col = layout->goal.col;
    instance.boxes = layout->boxes;
    instance.problem = layout_to_problem(spec, *layout);
    instance.problem.validate(domain);

    // Offline solvability certificate: find and check a witness plan.
    SearchResult witness =
        search(instance.problem, domain, Deadline::after(20.0), SearchMode::greedy);
    if (witness.status != SearchStatus::success) continue;
    if (!validate(witness.plan, instance.problem, domain).valid) continue;
    instance.witness_length = witness.plan.length();
    return instance;
  }
  throw std::runtime_error("could not generate a certified-solvable instance for this spec");
}

std::string render(const Instance& instance, const Plan* plan, const ScoreMap* scores) {
  const Domain domain = mazenamo_domain();
  const Problem& problem = instance.problem;
  const int w = instance.spec.width, h = instance.spec.height;

  auto frame_text = [&](const std::set<GroundAtom>& state, const std::string& header) {
    std::ostringstream os;
    os << header << "\n";
    std::map<std::string, char> cell_char;
    std::map<std::string, int> box_count;  // boxes per cell (stack detection)
    std::map<std::string, bool> box_light;
    std::string robot_cell;
    std::string holding;
    for (const auto& atom : state) {
      if (atom.predicate == "rat")
        robot_cell = atom.args[1];
      else if (atom.predicate == "holding")
        holding = atom.args[1];
      else if (atom.predicate == "islight")
        box_light[atom.args[0]] = true;
    }
    std::map<std::string, std::string> box_cell;
    for (const auto& atom : state)
      if (atom.predicate == "oat") box_cell[atom.args[0]] = atom.args[1];
    for (const auto& atom : state)
      if (atom.predicate == "upon" && box_cell.count(atom.args[1]))
        box_cell[atom.args[0]] = box_cell[atom.args[1]];
    for (const auto& [box, cell] : box_cell) box_count[cell]++;
    for (const auto& [box, cell] : box_cell) {
      if (box_count[cell] > 1)
        cell_char[cell] = 'S';
      else
        cell_char[cell] = box_light.count(box) ? 'L' : 'H';
    }
    const std::string goal = cell_name(instance.goal_row, instance.goal_col);
    for (int r = 0; r < h; ++r) {
      os << "  ";
      for (int c = 0; c < w; ++c) {
        std::string cell = cell_name(r, c);
        char ch = '.';
        if (scores != nullptr) {
          double s = scores->at(cell);
          ch = static_cast<char>('0' + std::min(9, static_cast<int>(s * 10.0)));
        }
        if (cell == goal) ch = 'G';
        auto it = cell_char.find(cell);
        if (it != cell_char.end()) ch = it->second;
        if (cell == robot_cell) ch = (cell == goal) ? '@' : 'R';
        os << ch << ' ';
      }
      os << "\n";
    }
    if (!holding.empty()) os << "  holding: " << holding << "\n";
    return os.str();
  };

  std::ostringstream out;
  std::set<GroundAtom> state = problem.init;
  out << frame_text(state, "frame 0 (initial)");
  if (plan != nullptr) {
    for (std::size_t i = 0; i < plan->steps.size(); ++i) {
      auto error = apply_step(domain, problem, state, plan->steps[i]);
      if (error) {
        out << "plan invalid at step " << i << ": " << *error << "\n";
        break;
      }
      out << frame_text(state, "frame " + std::to_string(i + 1) + ": " + plan->steps[i].str());
    }
  }
  return out.str();
}

}  // namespace relaxplan

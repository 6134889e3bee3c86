#include "relaxplan/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace relaxplan {

namespace {

// Breadth-first distances over the position adjacency graph.
std::map<std::string, int> bfs_distances(
    const std::map<std::string, std::vector<std::string>>& graph,
    const std::vector<std::string>& sources) {
  std::map<std::string, int> dist;
  std::deque<std::string> queue;
  for (const auto& s : sources) {
    if (dist.emplace(s, 0).second) queue.push_back(s);
  }
  while (!queue.empty()) {
    std::string cur = queue.front();
    queue.pop_front();
    auto it = graph.find(cur);
    if (it == graph.end()) continue;
    for (const auto& next : it->second) {
      if (dist.emplace(next, dist[cur] + 1).second) queue.push_back(next);
    }
  }
  return dist;
}

}  // namespace

double ScoreMap::at(const std::string& object) const {
  auto it = scores.find(object);
  return it == scores.end() ? 0.0 : it->second;
}

const char* provenance_name(ScoreProvenance p) {
  switch (p) {
    case ScoreProvenance::baseline:
      return "baseline";
    case ScoreProvenance::llm:
      return "llm";
    case ScoreProvenance::fallback:
      return "fallback";
  }
  return "unknown";
}

std::uint64_t problem_content_hash(const Problem& problem) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const std::string& s) {
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  };
  for (const auto& [obj, type] : problem.objects) {
    mix(obj);
    mix(type);
  }
  for (const auto& atom : problem.init) mix(atom.str());
  for (const auto& atom : problem.goal) mix(atom.str());
  return h;
}

ScoreMap BaselineScorer::score_problem(const Problem& problem) {
  ScoreMap out;
  out.provenance = ScoreProvenance::baseline;
  for (const auto& [obj, type] : problem.objects) {
    (void)type;
    out.scores[obj] = floor_score;
  }

  // Adjacency graph over positions.
  std::map<std::string, std::vector<std::string>> graph;
  for (const auto& atom : problem.init) {
    if (atom.args.size() != 2) continue;
    if (atom.predicate == "adjacent" || atom.predicate == "upto" || atom.predicate == "downto" ||
        atom.predicate == "leftto" || atom.predicate == "rightto") {
      graph[atom.args[0]].push_back(atom.args[1]);
      graph[atom.args[1]].push_back(atom.args[0]);
    }
  }

  // Anchor cells: robot positions from init, goal positions from goal atoms.
  std::vector<std::string> robot_cells;
  for (const auto& atom : problem.init)
    if (atom.predicate == "rat" && atom.args.size() == 2) robot_cells.push_back(atom.args[1]);
  std::vector<std::string> goal_cells;
  for (const auto& atom : problem.goal)
    if ((atom.predicate == "rat" || atom.predicate == "oat") && atom.args.size() == 2)
      goal_cells.push_back(atom.args[1]);

  // Cell of every object that has one: positions map to themselves, objects
  // with (oat o p) / (rat r p) to p, stacked objects through upon/holding.
  std::map<std::string, std::string> cell_of;
  for (const auto& [name, type] : problem.objects) {
    (void)type;
    if (graph.count(name)) cell_of[name] = name;
  }
  for (const auto& atom : problem.init) {
    if ((atom.predicate == "oat" || atom.predicate == "rat") && atom.args.size() == 2)
      cell_of[atom.args[0]] = atom.args[1];
  }
  for (int pass = 0; pass < 4; ++pass) {  // short upon/holding chains
    for (const auto& atom : problem.init) {
      if ((atom.predicate == "upon" || atom.predicate == "holding") && atom.args.size() == 2) {
        auto it = cell_of.find(atom.args[1]);
        if (it != cell_of.end()) cell_of[atom.args[0]] = it->second;
      }
    }
  }

  if (!robot_cells.empty() && !goal_cells.empty() && !graph.empty()) {
    auto from_robot = bfs_distances(graph, robot_cells);
    auto from_goal = bfs_distances(graph, goal_cells);
    auto rg = from_robot.find(goal_cells.front());
    if (rg != from_robot.end()) {
      const int shortest = rg->second;
      // Corridor: every cell on some shortest robot-goal path.
      std::vector<std::string> corridor;
      for (const auto& [cell, dr] : from_robot) {
        auto dg = from_goal.find(cell);
        if (dg != from_goal.end() && dr + dg->second == shortest) corridor.push_back(cell);
      }
      auto corridor_dist = bfs_distances(graph, corridor);
      for (auto& [obj, score] : out.scores) {
        auto cit = cell_of.find(obj);
        if (cit == cell_of.end()) continue;
        auto dit = corridor_dist.find(cit->second);
        if (dit == corridor_dist.end()) continue;
        score = std::max(floor_score,
                         corridor_score * std::pow(distance_decay, dit->second));
      }
    }
  }

  for (const auto& obj : goal_objects(problem)) out.scores[obj] = 1.0;
  for (auto& [obj, score] : out.scores) {
    (void)obj;
    score = std::min(1.0, std::max(0.0, score));
  }
  return out;
}

ScoreMap baseline_score(const Problem& problem) {
  BaselineScorer scorer;
  return scorer.score_problem(problem);
}

ScoreMap LlmScorer::score_problem(const Problem& problem) {
  const std::uint64_t key = problem_content_hash(problem);
  auto cached = cache_.find(key);
  if (cached != cache_.end()) return cached->second;

  // Alphabetical fact selection: first `fact_cap` init atoms by serialized
  // form. std::set already iterates in that order.
  std::vector<GroundAtom> facts;
  for (const auto& atom : problem.init) {
    if (facts.size() >= fact_cap) break;
    facts.push_back(atom);
  }

  ScoreReply reply = score_objects(*client_, config_, problem.goal, problem.objects, facts);
  ScoreMap out;
  out.scores = std::move(reply.scores);
  out.provenance = reply.fallback ? ScoreProvenance::fallback : ScoreProvenance::llm;
  cache_[key] = out;
  return out;
}

std::string score_dump_csv(const ScoreMap& scores) {
  std::ostringstream os;
  os << "object,score,provenance\n";
  for (const auto& [obj, score] : scores.scores)
    os << obj << "," << score << "," << provenance_name(scores.provenance) << "\n";
  return os.str();
}

}  // namespace relaxplan

#include "oracles.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <unordered_set>

using relaxplan::ActionSchema;
using relaxplan::Domain;
using relaxplan::GroundAtom;
using relaxplan::LiftedAtom;
using relaxplan::Problem;

namespace oracle {

namespace {

std::set<std::string> effect_predicates(const Domain& domain) {
  std::set<std::string> preds;
  for (const auto& schema : domain.actions) {
    for (const auto& atom : schema.add_effects) preds.insert(atom.predicate);
    for (const auto& atom : schema.del_effects) preds.insert(atom.predicate);
  }
  return preds;
}

bool type_ok(const Domain& domain, const Problem& problem, const std::string& object,
             const std::string& want) {
  if (want == "object") return true;
  auto it = problem.objects.find(object);
  if (it == problem.objects.end()) return false;
  std::string cur = it->second;
  for (int i = 0; i < 64; ++i) {
    if (cur == want) return true;
    auto t = domain.types.find(cur);
    if (t == domain.types.end()) return false;
    cur = t->second;
  }
  return false;
}

GroundAtom substitute(const LiftedAtom& atom, const std::map<std::string, std::string>& binding) {
  GroundAtom out;
  out.predicate = atom.predicate;
  for (const auto& arg : atom.args) {
    if (!arg.empty() && arg[0] == '?')
      out.args.push_back(binding.at(arg));
    else
      out.args.push_back(arg);
  }
  return out;
}

std::string action_str(const std::string& schema, const std::vector<std::string>& args) {
  std::string s = "(" + schema;
  for (const auto& a : args) s += " " + a;
  return s + ")";
}

// Enumerates bindings of `schema` whose positive preconditions all hold in
// `facts` and whose negative preconditions are absent. Positive literals are
// matched against the fact set one by one (backtracking join); leftover
// unbound parameters are enumerated over all objects of their type.
void for_each_applicable(
    const Domain& domain, const Problem& problem, const ActionSchema& schema,
    const std::set<GroundAtom>& facts,
    const std::function<void(const std::map<std::string, std::string>&)>& emit) {
  std::vector<const relaxplan::Literal*> positives;
  std::vector<const relaxplan::Literal*> negatives;
  for (const auto& lit : schema.preconditions)
    (lit.positive ? positives : negatives).push_back(&lit);

  std::map<std::string, std::vector<const GroundAtom*>> facts_by_pred;
  for (const auto& atom : facts) facts_by_pred[atom.predicate].push_back(&atom);

  std::map<std::string, std::string> binding;

  std::function<void(std::size_t)> match_positive = [&](std::size_t index) {
    if (index == positives.size()) {
      // Enumerate any parameters not pinned by a positive precondition.
      std::vector<const relaxplan::TypedParam*> unbound;
      for (const auto& p : schema.params)
        if (!binding.count(p.name)) unbound.push_back(&p);
      std::function<void(std::size_t)> fill = [&](std::size_t u) {
        if (u == unbound.size()) {
          for (const auto* lit : negatives) {
            if (facts.count(substitute(lit->atom, binding))) return;
          }
          emit(binding);
          return;
        }
        for (const auto& [obj, type] : problem.objects) {
          (void)type;
          if (!type_ok(domain, problem, obj, unbound[u]->type)) continue;
          binding[unbound[u]->name] = obj;
          fill(u + 1);
          binding.erase(unbound[u]->name);
        }
      };
      fill(0);
      return;
    }
    const LiftedAtom& want = positives[index]->atom;
    auto it = facts_by_pred.find(want.predicate);
    if (it == facts_by_pred.end()) return;
    for (const GroundAtom* fact : it->second) {
      if (fact->args.size() != want.args.size()) continue;
      std::vector<std::string> newly_bound;
      bool ok = true;
      for (std::size_t i = 0; i < want.args.size() && ok; ++i) {
        const std::string& arg = want.args[i];
        const std::string& value = fact->args[i];
        if (!arg.empty() && arg[0] == '?') {
          auto b = binding.find(arg);
          if (b == binding.end()) {
            std::size_t pi = 0;
            for (; pi < schema.params.size(); ++pi)
              if (schema.params[pi].name == arg) break;
            if (pi == schema.params.size() ||
                !type_ok(domain, problem, value, schema.params[pi].type)) {
              ok = false;
            } else {
              binding[arg] = value;
              newly_bound.push_back(arg);
            }
          } else if (b->second != value) {
            ok = false;
          }
        } else if (arg != value) {
          ok = false;
        }
      }
      if (ok) match_positive(index + 1);
      for (const auto& var : newly_bound) binding.erase(var);
    }
  };
  match_positive(0);
}

}  // namespace

std::set<std::string> enumerate_ground(const Problem& problem, const Domain& domain) {
  const std::set<std::string> fluents = effect_predicates(domain);
  std::set<GroundAtom> static_init;
  for (const auto& atom : problem.init)
    if (!fluents.count(atom.predicate)) static_init.insert(atom);

  std::set<std::string> out;
  for (const auto& schema : domain.actions) {
    // Full cartesian product over typed objects.
    std::vector<std::vector<std::string>> candidates;
    for (const auto& param : schema.params) {
      std::vector<std::string> names;
      for (const auto& [obj, type] : problem.objects) {
        (void)type;
        if (type_ok(domain, problem, obj, param.type)) names.push_back(obj);
      }
      candidates.push_back(std::move(names));
    }
    std::vector<std::size_t> pick(schema.params.size(), 0);
    while (true) {
      std::map<std::string, std::string> binding;
      bool valid = true;
      for (std::size_t i = 0; i < schema.params.size(); ++i) {
        if (candidates[i].empty()) {
          valid = false;
          break;
        }
        binding[schema.params[i].name] = candidates[i][pick[i]];
      }
      if (!valid) break;
      bool statics_hold = true;
      for (const auto& lit : schema.preconditions) {
        if (fluents.count(lit.atom.predicate)) continue;
        bool present = static_init.count(substitute(lit.atom, binding)) > 0;
        if (lit.positive != present) {
          statics_hold = false;
          break;
        }
      }
      if (statics_hold) {
        std::vector<std::string> args;
        for (std::size_t i = 0; i < schema.params.size(); ++i)
          args.push_back(candidates[i][pick[i]]);
        out.insert(action_str(schema.name, args));
      }
      std::size_t level = schema.params.size();
      while (level > 0) {
        --level;
        if (++pick[level] < candidates[level].size()) break;
        pick[level] = 0;
        if (level == 0) {
          level = SIZE_MAX;
          break;
        }
      }
      if (level == SIZE_MAX || schema.params.empty()) break;
    }
  }
  return out;
}

std::optional<std::size_t> bfs_optimal_length(const Problem& problem, const Domain& domain,
                                              std::size_t node_cap) {
  const std::set<std::string> fluents = effect_predicates(domain);
  std::set<GroundAtom> static_facts;
  std::set<GroundAtom> fluent_init;
  for (const auto& atom : problem.init)
    (fluents.count(atom.predicate) ? fluent_init : static_facts).insert(atom);

  std::set<GroundAtom> fluent_goal;
  for (const auto& atom : problem.goal) {
    if (fluents.count(atom.predicate))
      fluent_goal.insert(atom);
    else if (!static_facts.count(atom))
      return std::nullopt;
  }

  auto state_key = [](const std::set<GroundAtom>& state) {
    std::string key;
    for (const auto& atom : state) key += atom.str();
    return key;
  };
  auto is_goal = [&](const std::set<GroundAtom>& state) {
    return std::all_of(fluent_goal.begin(), fluent_goal.end(),
                       [&](const GroundAtom& g) { return state.count(g) > 0; });
  };

  if (is_goal(fluent_init)) return 0;

  std::deque<std::pair<std::set<GroundAtom>, std::size_t>> queue;
  std::unordered_set<std::string> seen;
  queue.push_back({fluent_init, 0});
  seen.insert(state_key(fluent_init));

  while (!queue.empty()) {
    if (seen.size() > node_cap) return std::nullopt;
    auto [state, depth] = queue.front();
    queue.pop_front();

    // Preconditions must be matched against fluent state plus static facts.
    std::set<GroundAtom> all_facts = state;
    all_facts.insert(static_facts.begin(), static_facts.end());

    std::optional<std::size_t> found;
    for (const auto& schema : domain.actions) {
      for_each_applicable(domain, problem, schema, all_facts,
                          [&](const std::map<std::string, std::string>& binding) {
                            if (found) return;
                            std::set<GroundAtom> next = state;
                            for (const auto& eff : schema.del_effects)
                              next.erase(substitute(eff, binding));
                            for (const auto& eff : schema.add_effects) {
                              GroundAtom atom = substitute(eff, binding);
                              if (fluents.count(atom.predicate)) next.insert(atom);
                            }
                            if (!seen.insert(state_key(next)).second) return;
                            if (is_goal(next)) {
                              found = depth + 1;
                              return;
                            }
                            queue.push_back({std::move(next), depth + 1});
                          });
      if (found) return found;
    }
  }
  return std::nullopt;
}

Problem apply_relaxation_ref(const Problem& problem, const nlohmann::json& rule_doc) {
  Problem result = problem;
  std::set<std::string> goal_objs;
  for (const auto& atom : problem.goal)
    for (const auto& arg : atom.args) goal_objs.insert(arg);
  std::set<std::string> removed;

  // Rule keys in numeric order.
  std::vector<std::pair<long, std::string>> keys;
  for (const auto& [key, body] : rule_doc.items()) {
    (void)body;
    keys.emplace_back(std::stol(key.substr(4)), key);
  }
  std::sort(keys.begin(), keys.end());

  for (const auto& [number, key] : keys) {
    (void)number;
    const nlohmann::json& body = rule_doc.at(key);
    const auto& pre_compute = *body.at("pre_compute").items().begin();
    const std::string& pc_pred = pre_compute.key();

    std::vector<GroundAtom> matches;
    for (const auto& atom : result.init)
      if (atom.predicate == pc_pred) matches.push_back(atom);

    for (const auto& match : matches) {
      if (!result.init.count(match)) continue;
      const auto& tuple = match.args;

      bool holds = true;
      for (const auto& [pred, indices] : body.at("precond").items()) {
        GroundAtom atom;
        atom.predicate = pred;
        for (const auto& idx : indices) atom.args.push_back(tuple.at(idx.get<std::size_t>()));
        if (!result.init.count(atom)) {
          holds = false;
          break;
        }
      }
      if (!holds) continue;

      bool hits_goal = false;
      for (const auto& idx : body.at("delete_objects"))
        if (goal_objs.count(tuple.at(idx.get<std::size_t>()))) hits_goal = true;
      if (hits_goal) continue;

      for (const auto& [pred, indices] : body.at("delete_effects").items()) {
        GroundAtom atom;
        atom.predicate = pred;
        for (const auto& idx : indices) atom.args.push_back(tuple.at(idx.get<std::size_t>()));
        result.init.erase(atom);
      }
      for (const auto& [pred, indices] : body.at("add_effects").items()) {
        GroundAtom atom;
        atom.predicate = pred;
        for (const auto& idx : indices) atom.args.push_back(tuple.at(idx.get<std::size_t>()));
        result.init.insert(atom);
      }
      for (const auto& idx : body.at("delete_objects")) {
        const std::string& obj = tuple.at(idx.get<std::size_t>());
        result.objects.erase(obj);
        removed.insert(obj);
      }
    }
  }

  for (auto it = result.init.begin(); it != result.init.end();) {
    bool refs_removed = false;
    for (const auto& arg : it->args)
      if (removed.count(arg)) refs_removed = true;
    if (refs_removed)
      it = result.init.erase(it);
    else
      ++it;
  }
  return result;
}

std::set<std::string> closure_ref(const std::set<std::string>& included,
                                  const std::set<GroundAtom>& init,
                                  const nlohmann::json& rule_doc) {
  std::set<std::string> result = included;
  while (true) {
    std::set<std::string> before = result;
    for (const auto& [pred, body] : rule_doc.items()) {
      for (const auto& atom : init) {
        if (atom.predicate != pred) continue;
        const auto& cond = body.at("cond");
        const auto& cmpl = body.at("cmpl");
        for (std::size_t i = 0; i < cond.size() && i < cmpl.size(); ++i) {
          bool all_in = true;
          for (const auto& pos : cond[i]) {
            std::size_t p = pos.get<std::size_t>();
            if (p >= atom.args.size() || !result.count(atom.args[p])) all_in = false;
          }
          if (!all_in) continue;
          for (const auto& pos : cmpl[i]) {
            std::size_t p = pos.get<std::size_t>();
            if (p < atom.args.size()) result.insert(atom.args[p]);
          }
        }
      }
    }
    if (result == before) return result;
  }
}

std::map<std::pair<int, int>, int> grid_distances_ref(
    int width, int height, std::pair<int, int> start,
    const std::set<std::pair<int, int>>& blocked) {
  std::map<std::pair<int, int>, int> dist;
  if (blocked.count(start)) return dist;
  std::deque<std::pair<int, int>> queue{start};
  dist[start] = 0;
  while (!queue.empty()) {
    auto [r, c] = queue.front();
    queue.pop_front();
    const int d = dist[{r, c}];
    const std::pair<int, int> next[4] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
    for (auto [nr, nc] : next) {
      if (nr < 0 || nc < 0 || nr >= height || nc >= width) continue;
      if (blocked.count({nr, nc})) continue;
      if (dist.emplace(std::make_pair(nr, nc), d + 1).second) queue.push_back({nr, nc});
    }
  }
  return dist;
}

}  // namespace oracle

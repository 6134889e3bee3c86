#include "relaxplan/planner.hpp"

#include <algorithm>
#include <cassert>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace relaxplan {

namespace {

std::set<std::string> fluent_predicates(const Domain& domain) {
  std::set<std::string> fluents;
  for (const auto& action : domain.actions) {
    for (const auto& atom : action.add_effects) fluents.insert(atom.predicate);
    for (const auto& atom : action.del_effects) fluents.insert(atom.predicate);
  }
  return fluents;
}

// ---------------------------------------------------------------------------
// Grounding

struct Grounder {
  const Problem& problem;
  const Domain& domain;
  std::set<std::string> fluents;
  std::set<GroundAtom> static_init;
  std::map<std::string, std::vector<const GroundAtom*>> static_by_pred;
  std::map<std::string, std::vector<std::string>> objects_by_type;
  std::map<std::string, std::set<std::string>> object_set_by_type;
  const Deadline* deadline = nullptr;
  bool timed_out = false;
  int poll = 0;

  std::vector<GroundAction> out;

  Grounder(const Problem& p, const Domain& d) : problem(p), domain(d) {
    fluents = fluent_predicates(domain);
    for (const auto& atom : problem.init) {
      if (!fluents.count(atom.predicate)) static_init.insert(atom);
    }
    for (const auto& atom : static_init) static_by_pred[atom.predicate].push_back(&atom);
  }

  const std::vector<std::string>& of_type(const std::string& type) {
    auto it = objects_by_type.find(type);
    if (it != objects_by_type.end()) return it->second;
    std::vector<std::string> names;
    for (const auto& [obj, t] : problem.objects)
      if (domain.is_subtype(t, type)) names.push_back(obj);
    std::sort(names.begin(), names.end());
    auto& slot = objects_by_type[type];
    slot = std::move(names);
    object_set_by_type[type] = {slot.begin(), slot.end()};
    return slot;
  }

  bool is_of_type(const std::string& obj, const std::string& type) {
    of_type(type);
    return object_set_by_type[type].count(obj) > 0;
  }

  void run() {
    for (const auto& schema : domain.actions) {
      if (timed_out) return;
      ground_schema(schema);
    }
    std::sort(out.begin(), out.end(), [](const GroundAction& a, const GroundAction& b) {
      if (a.schema != b.schema) return a.schema < b.schema;
      return a.args < b.args;
    });
  }

  struct StaticPre {
    const LiftedAtom* atom = nullptr;
    bool positive = true;
    int trigger_level = -1;  // highest param index used; -1 when constants only
  };

  void ground_schema(const ActionSchema& schema) {
    std::map<std::string, int> param_index;
    for (std::size_t i = 0; i < schema.params.size(); ++i)
      param_index[schema.params[i].name] = static_cast<int>(i);

    std::vector<StaticPre> statics;
    for (const auto& lit : schema.preconditions) {
      if (fluents.count(lit.atom.predicate)) continue;
      StaticPre sp;
      sp.atom = &lit.atom;
      sp.positive = lit.positive;
      for (const auto& arg : lit.atom.args)
        if (!arg.empty() && arg[0] == '?')
          sp.trigger_level = std::max(sp.trigger_level, param_index.at(arg));
      statics.push_back(sp);
    }

    std::vector<std::string> binding(schema.params.size());
    bind(schema, statics, param_index, binding, 0);
  }

  std::string resolve(const std::string& arg, const std::map<std::string, int>& param_index,
                      const std::vector<std::string>& binding) const {
    if (!arg.empty() && arg[0] == '?') return binding[param_index.at(arg)];
    return arg;
  }

  bool static_holds(const StaticPre& sp, const std::map<std::string, int>& param_index,
                    const std::vector<std::string>& binding) {
    GroundAtom atom;
    atom.predicate = sp.atom->predicate;
    for (const auto& arg : sp.atom->args) atom.args.push_back(resolve(arg, param_index, binding));
    bool present = static_init.count(atom) > 0;
    return sp.positive ? present : !present;
  }

  void bind(const ActionSchema& schema, const std::vector<StaticPre>& statics,
            const std::map<std::string, int>& param_index, std::vector<std::string>& binding,
            int level) {
    if (timed_out) return;
    if (deadline != nullptr && ++poll % 1024 == 0 && deadline->expired()) {
      timed_out = true;
      return;
    }
    const int nparams = static_cast<int>(schema.params.size());
    if (level == nparams) {
      // Constants-only static preconditions.
      for (const auto& sp : statics)
        if (sp.trigger_level < 0 && !static_holds(sp, param_index, binding)) return;
      emit(schema, param_index, binding);
      return;
    }

    // Prefer enumerating candidates from a positive static precondition whose
    // only unbound variable is this parameter; otherwise fall back to all
    // objects of the parameter's type.
    const StaticPre* driver = nullptr;
    for (const auto& sp : statics)
      if (sp.positive && sp.trigger_level == level) {
        driver = &sp;
        break;
      }

    std::vector<std::string> candidates;
    const std::string& want_type = schema.params[level].type;
    if (driver != nullptr) {
      std::set<std::string> seen;
      auto it = static_by_pred.find(driver->atom->predicate);
      if (it == static_by_pred.end()) return;
      for (const GroundAtom* fact : it->second) {
        std::string value;
        bool match = true;
        for (std::size_t i = 0; i < driver->atom->args.size(); ++i) {
          const std::string& arg = driver->atom->args[i];
          if (!arg.empty() && arg[0] == '?' && param_index.at(arg) == level) {
            if (value.empty())
              value = fact->args[i];
            else if (value != fact->args[i]) {
              match = false;
              break;
            }
          } else {
            if (resolve(arg, param_index, binding) != fact->args[i]) {
              match = false;
              break;
            }
          }
        }
        if (match && !value.empty() && is_of_type(value, want_type) && seen.insert(value).second)
          candidates.push_back(value);
      }
    } else {
      candidates = of_type(want_type);
    }

    for (const auto& value : candidates) {
      binding[level] = value;
      bool ok = true;
      for (const auto& sp : statics) {
        if (sp.trigger_level != level) continue;
        if (!static_holds(sp, param_index, binding)) {
          ok = false;
          break;
        }
      }
      if (ok) bind(schema, statics, param_index, binding, level + 1);
      if (timed_out) return;
    }
    binding[level].clear();
  }

  void emit(const ActionSchema& schema, const std::map<std::string, int>& param_index,
            const std::vector<std::string>& binding) {
    GroundAction ga;
    ga.schema = schema.name;
    ga.args = binding;
    auto substitute = [&](const LiftedAtom& lifted) {
      GroundAtom atom;
      atom.predicate = lifted.predicate;
      for (const auto& arg : lifted.args) {
        std::string value = resolve(arg, param_index, binding);
        if (arg.empty() || arg[0] != '?') {
          // Constant argument: must name a declared object.
          if (!problem.objects.count(value)) return std::optional<GroundAtom>();
        }
        atom.args.push_back(std::move(value));
      }
      return std::optional<GroundAtom>(std::move(atom));
    };
    for (const auto& lit : schema.preconditions) {
      auto atom = substitute(lit.atom);
      if (!atom) return;
      (lit.positive ? ga.pre_pos : ga.pre_neg).push_back(std::move(*atom));
    }
    for (const auto& eff : schema.add_effects) {
      auto atom = substitute(eff);
      if (!atom) return;
      ga.add.push_back(std::move(*atom));
    }
    for (const auto& eff : schema.del_effects) {
      auto atom = substitute(eff);
      if (!atom) return;
      ga.del.push_back(std::move(*atom));
    }
    // Delete-then-add semantics: an atom both deleted and added is a net add.
    std::erase_if(ga.del, [&](const GroundAtom& d) {
      return std::find(ga.add.begin(), ga.add.end(), d) != ga.add.end();
    });
    out.push_back(std::move(ga));
  }
};

std::vector<GroundAction> ground_with_deadline(const Problem& problem, const Domain& domain,
                                               const Deadline* deadline, bool& timed_out) {
  Grounder grounder(problem, domain);
  grounder.deadline = deadline;
  grounder.run();
  timed_out = grounder.timed_out;
  return std::move(grounder.out);
}

// ---------------------------------------------------------------------------
// State representation for search

struct Bits {
  std::vector<std::uint64_t> words;

  explicit Bits(std::size_t nbits = 0) : words((nbits + 63) / 64, 0) {}
  bool get(int i) const { return (words[i >> 6] >> (i & 63)) & 1; }
  void set(int i) { words[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
  void reset(int i) { words[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  bool operator==(const Bits& o) const { return words == o.words; }
};

struct BitsHash {
  std::size_t operator()(const Bits& b) const {
    std::uint64_t h = 1469598103934665603ull;
    for (std::uint64_t w : b.words) {
      h ^= w;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

struct IndexedAction {
  int id = 0;
  std::vector<int> pre_pos;  // fluent atom ids
  std::vector<int> pre_neg;
  std::vector<int> add;
  std::vector<int> del;
};

constexpr int kInfCost = std::numeric_limits<int>::max() / 4;

// Additive delete-relaxation heuristic with early termination once all goal
// atoms are finalized. Scratch buffers are reused across evaluations.
class AddHeuristic {
 public:
  AddHeuristic(const std::vector<IndexedAction>& actions, std::vector<int> goal, int natoms)
      : actions_(actions), goal_(std::move(goal)), natoms_(natoms) {
    consumers_.resize(natoms_);
    for (const auto& a : actions_)
      for (int p : a.pre_pos) consumers_[p].push_back(a.id);
    cost_.resize(natoms_);
    closed_.resize(natoms_);
    unsat_.resize(actions_.size());
    acc_.resize(actions_.size());
    is_goal_.assign(natoms_, 0);
    for (int g : goal_) is_goal_[g] = 1;
  }

  int evaluate(const Bits& state) {
    std::fill(cost_.begin(), cost_.end(), kInfCost);
    std::fill(closed_.begin(), closed_.end(), 0);
    using Entry = std::pair<int, int>;  // (cost, atom)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> open;
    int goal_left = static_cast<int>(goal_.size());

    for (std::size_t i = 0; i < actions_.size(); ++i) {
      unsat_[i] = static_cast<int>(actions_[i].pre_pos.size());
      acc_[i] = 1;
    }
    for (int i = 0; i < natoms_; ++i) {
      if (state.get(i)) {
        cost_[i] = 0;
        open.push({0, i});
      }
    }
    for (const auto& a : actions_) {
      if (a.pre_pos.empty()) {
        for (int add : a.add)
          if (1 < cost_[add]) {
            cost_[add] = 1;
            open.push({1, add});
          }
      }
    }
    while (!open.empty() && goal_left > 0) {
      auto [c, atom] = open.top();
      open.pop();
      if (closed_[atom]) continue;
      closed_[atom] = 1;
      if (is_goal_[atom]) --goal_left;
      for (int aid : consumers_[atom]) {
        acc_[aid] += c;
        if (--unsat_[aid] == 0) {
          int action_cost = acc_[aid];
          for (int add : actions_[aid].add) {
            if (action_cost < cost_[add]) {
              cost_[add] = action_cost;
              open.push({action_cost, add});
            }
          }
        }
      }
    }
    long long h = 0;
    for (int g : goal_) {
      if (cost_[g] >= kInfCost) return kInfCost;
      h += cost_[g];
    }
    return static_cast<int>(std::min<long long>(h, kInfCost - 1));
  }

 private:
  const std::vector<IndexedAction>& actions_;
  std::vector<int> goal_;
  int natoms_;
  std::vector<std::vector<int>> consumers_;
  std::vector<int> cost_;
  std::vector<char> closed_;
  std::vector<int> unsat_;
  std::vector<long long> acc_;
  std::vector<char> is_goal_;
};

}  // namespace

std::string GroundAction::str() const {
  std::string s = "(" + schema;
  for (const auto& a : args) s += " " + a;
  return s + ")";
}

std::string PlanStep::str() const {
  std::string s = "(" + schema;
  for (const auto& a : args) s += " " + a;
  return s + ")";
}

std::vector<GroundAction> ground(const Problem& problem, const Domain& domain) {
  bool timed_out = false;
  return ground_with_deadline(problem, domain, nullptr, timed_out);
}

SearchResult search(const Problem& problem, const Domain& domain, Deadline deadline,
                    SearchMode mode) {
  const TimePoint t0 = deadline.clock().now();
  SearchResult result;
  auto finish = [&](SearchStatus status) {
    result.status = status;
    result.stats.wall_seconds = seconds_between(t0, deadline.clock().now());
    result.plan.stats = result.stats;
    return result;
  };

  if (deadline.expired()) return finish(SearchStatus::timeout);

  bool ground_timeout = false;
  std::vector<GroundAction> actions =
      ground_with_deadline(problem, domain, &deadline, ground_timeout);
  if (ground_timeout) return finish(SearchStatus::timeout);

  const std::set<std::string> fluents = fluent_predicates(domain);

  // A static goal atom missing from init can never become true.
  for (const auto& atom : problem.goal) {
    if (!fluents.count(atom.predicate) && !problem.init.count(atom))
      return finish(SearchStatus::unsolvable);
  }

  // Intern fluent atoms.
  std::map<GroundAtom, int> atom_id;
  auto intern = [&](const GroundAtom& atom) {
    auto [it, inserted] = atom_id.emplace(atom, static_cast<int>(atom_id.size()));
    return it->second;
  };
  for (const auto& atom : problem.init)
    if (fluents.count(atom.predicate)) intern(atom);
  for (const auto& ga : actions) {
    for (const auto& a : ga.add) intern(a);
    for (const auto& a : ga.del) intern(a);
    for (const auto& a : ga.pre_pos)
      if (fluents.count(a.predicate)) intern(a);
    for (const auto& a : ga.pre_neg)
      if (fluents.count(a.predicate)) intern(a);
  }
  for (const auto& atom : problem.goal)
    if (fluents.count(atom.predicate)) intern(atom);
  const int natoms = static_cast<int>(atom_id.size());

  std::vector<IndexedAction> indexed;
  indexed.reserve(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    IndexedAction ia;
    ia.id = static_cast<int>(i);
    for (const auto& a : actions[i].pre_pos)
      if (fluents.count(a.predicate)) ia.pre_pos.push_back(atom_id.at(a));
    for (const auto& a : actions[i].pre_neg)
      if (fluents.count(a.predicate)) ia.pre_neg.push_back(atom_id.at(a));
    for (const auto& a : actions[i].add) ia.add.push_back(atom_id.at(a));
    for (const auto& a : actions[i].del) ia.del.push_back(atom_id.at(a));
    indexed.push_back(std::move(ia));
  }

  Bits init_bits(natoms);
  for (const auto& atom : problem.init)
    if (fluents.count(atom.predicate)) init_bits.set(atom_id.at(atom));

  std::vector<int> goal_ids;
  for (const auto& atom : problem.goal)
    if (fluents.count(atom.predicate)) goal_ids.push_back(atom_id.at(atom));

  auto satisfies_goal = [&](const Bits& s) {
    for (int g : goal_ids)
      if (!s.get(g)) return false;
    return true;
  };

  struct Node {
    Bits state;
    int parent = -1;
    int action = -1;
  };
  std::vector<Node> nodes;
  std::unordered_set<Bits, BitsHash> seen;
  nodes.push_back({init_bits, -1, -1});
  seen.insert(init_bits);

  auto extract = [&](int node_index) {
    std::vector<PlanStep> steps;
    for (int n = node_index; nodes[n].parent >= 0; n = nodes[n].parent) {
      const GroundAction& ga = actions[nodes[n].action];
      steps.push_back({ga.schema, ga.args});
    }
    std::reverse(steps.begin(), steps.end());
    result.plan.steps = std::move(steps);
    return finish(SearchStatus::success);
  };

  if (satisfies_goal(init_bits)) return extract(0);

  auto applicable = [&](const IndexedAction& a, const Bits& s) {
    for (int p : a.pre_pos)
      if (!s.get(p)) return false;
    for (int p : a.pre_neg)
      if (s.get(p)) return false;
    return true;
  };

  auto apply = [&](const IndexedAction& a, const Bits& s) {
    Bits next = s;
    for (int p : a.del) next.reset(p);
    for (int p : a.add) next.set(p);
    return next;
  };

  if (mode == SearchMode::optimal) {
    std::queue<int> open;
    open.push(0);
    while (!open.empty()) {
      if (deadline.expired()) return finish(SearchStatus::timeout);
      int cur = open.front();
      open.pop();
      ++result.stats.expansions;
      Bits state = nodes[cur].state;
      for (const auto& a : indexed) {
        if (!applicable(a, state)) continue;
        Bits next = apply(a, state);
        if (!seen.insert(next).second) continue;
        ++result.stats.generated;
        nodes.push_back({std::move(next), cur, a.id});
        int id = static_cast<int>(nodes.size()) - 1;
        if (satisfies_goal(nodes[id].state)) return extract(id);
        open.push(id);
      }
    }
    return finish(SearchStatus::unsolvable);
  }

  AddHeuristic heuristic(indexed, goal_ids, natoms);
  using Entry = std::pair<std::pair<int, std::uint64_t>, int>;  // ((h, tick), node)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> open;
  std::uint64_t tick = 0;
  int h0 = heuristic.evaluate(init_bits);
  if (h0 >= kInfCost) return finish(SearchStatus::unsolvable);
  open.push({{h0, tick++}, 0});

  while (!open.empty()) {
    if (deadline.expired()) return finish(SearchStatus::timeout);
    int cur = open.top().second;
    open.pop();
    ++result.stats.expansions;
    Bits state = nodes[cur].state;
    for (const auto& a : indexed) {
      if (!applicable(a, state)) continue;
      Bits next = apply(a, state);
      if (!seen.insert(next).second) continue;
      ++result.stats.generated;
      nodes.push_back({next, cur, a.id});
      int id = static_cast<int>(nodes.size()) - 1;
      if (satisfies_goal(next)) return extract(id);
      int h = heuristic.evaluate(next);
      if (h >= kInfCost) continue;  // dead end under the relaxation
      open.push({{h, tick++}, id});
    }
  }
  return finish(SearchStatus::unsolvable);
}

PlanCheck validate(const Plan& plan, const Problem& problem, const Domain& domain) {
  std::set<GroundAtom> state = problem.init;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const PlanStep& step = plan.steps[i];
    const ActionSchema* schema = domain.find_action(step.schema);
    if (schema == nullptr) return {false, i, "unknown action '" + step.schema + "'"};
    if (schema->params.size() != step.args.size())
      return {false, i, "action '" + step.schema + "' expects " +
                            std::to_string(schema->params.size()) + " arguments, got " +
                            std::to_string(step.args.size())};
    std::map<std::string, std::string> binding;
    for (std::size_t j = 0; j < step.args.size(); ++j) {
      const std::string& obj = step.args[j];
      auto it = problem.objects.find(obj);
      if (it == problem.objects.end())
        return {false, i, "undeclared object '" + obj + "' in " + step.str()};
      const std::string& want = schema->params[j].type;
      if (want != "object" && !domain.is_subtype(it->second, want))
        return {false, i, "object '" + obj + "' has type '" + it->second +
                              "' incompatible with parameter " + std::to_string(j) + " of '" +
                              step.schema + "'"};
      binding[schema->params[j].name] = obj;
    }
    auto instantiate = [&](const LiftedAtom& lifted) {
      GroundAtom atom;
      atom.predicate = lifted.predicate;
      for (const auto& arg : lifted.args) {
        if (!arg.empty() && arg[0] == '?')
          atom.args.push_back(binding.at(arg));
        else
          atom.args.push_back(arg);
      }
      return atom;
    };
    for (const auto& lit : schema->preconditions) {
      GroundAtom atom = instantiate(lit.atom);
      bool present = state.count(atom) > 0;
      if (lit.positive && !present)
        return {false, i, "precondition " + atom.str() + " not satisfied at step " +
                              std::to_string(i) + " " + step.str()};
      if (!lit.positive && present)
        return {false, i, "negative precondition " + atom.str() + " violated at step " +
                              std::to_string(i) + " " + step.str()};
    }
    for (const auto& eff : schema->del_effects) state.erase(instantiate(eff));
    for (const auto& eff : schema->add_effects) state.insert(instantiate(eff));
  }
  for (const auto& atom : problem.goal) {
    if (!state.count(atom))
      return {false, plan.steps.size(), "goal atom " + atom.str() + " unmet after plan"};
  }
  return {true, 0, ""};
}

std::string to_text(const Plan& plan) {
  std::string out;
  for (const auto& step : plan.steps) out += step.str() + "\n";
  return out;
}

std::vector<PlanStep> parse_plan_text(std::string_view text) {
  std::vector<PlanStep> steps;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == ';') continue;
    auto open = line.find('(');
    auto close = line.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close <= open)
      throw std::runtime_error("malformed plan line: " + line);
    std::istringstream tokens(line.substr(open + 1, close - open - 1));
    PlanStep step;
    tokens >> step.schema;
    std::string arg;
    while (tokens >> arg) step.args.push_back(arg);
    for (auto& c : step.schema) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (auto& a : step.args)
      for (auto& c : a) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (step.schema.empty()) throw std::runtime_error("malformed plan line: " + line);
    steps.push_back(std::move(step));
  }
  return steps;
}

}  // namespace relaxplan

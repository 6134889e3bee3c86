#include "relaxplan/rules.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

using nlohmann::json;
using nlohmann::ordered_json;

namespace relaxplan {

namespace {

constexpr const char* kRelaxationKeys[] = {"pre_compute", "precond", "delete_objects",
                                           "delete_effects", "add_effects"};

bool is_rule_key(const std::string& key, long& number) {
  if (key.rfind("rule", 0) != 0 || key.size() == 4 || key.size() > 13) return false;
  for (std::size_t i = 4; i < key.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(key[i]))) return false;
  number = std::stol(key.substr(4));
  return true;
}

// Checks that `value` is a list of integers; JSON strings such as "0" are
// explicitly rejected rather than coerced.
void check_index_list(const json& value, const std::string& rule_id, const std::string& field,
                      ValidationReport& report) {
  if (!value.is_array()) {
    report.errors.push_back({rule_id, field, field + " must be a list of integers",
                             RuleErrorClass::format});
    return;
  }
  for (const auto& item : value) {
    if (!item.is_number_integer()) {
      report.errors.push_back({rule_id, field,
                               field + ": index values must be integers, never strings (got " +
                                   item.dump() + ")",
                               RuleErrorClass::format});
      return;
    }
  }
}

void check_index_range(const json& value, int limit, const std::string& rule_id,
                       const std::string& field, ValidationReport& report) {
  for (const auto& item : value) {
    if (!item.is_number_integer()) return;  // reported by check_index_list
    long v = item.get<long>();
    if (v < 0 || v >= limit) {
      report.errors.push_back({rule_id, field,
                               field + ": index " + std::to_string(v) + " out of range [0, " +
                                   std::to_string(limit) + ")",
                               RuleErrorClass::format});
      return;
    }
  }
}

void check_predicate_known(const std::string& name, const PredicateMap& known,
                           const std::string& rule_id, const std::string& field,
                           ValidationReport& report) {
  if (!known.count(name)) {
    report.errors.push_back({rule_id, field, field + ": unknown predicate '" + name + "'",
                             RuleErrorClass::unknown_predicate});
  }
}

// Effect/precondition maps: predicate -> integer index list whose length must
// match the predicate's arity and whose values index the binding tuple.
void check_effect_map(const json& value, const PredicateMap& known, int binding_size,
                      const std::string& rule_id, const std::string& field,
                      ValidationReport& report, bool allow_empty) {
  if (!value.is_object()) {
    report.errors.push_back({rule_id, field, field + " must be a JSON object",
                             RuleErrorClass::format});
    return;
  }
  if (!allow_empty && value.empty()) {
    report.errors.push_back({rule_id, field, field + " must not be empty",
                             RuleErrorClass::format});
    return;
  }
  for (const auto& [pred, indices] : value.items()) {
    std::string where = field + "." + pred;
    check_index_list(indices, rule_id, where, report);
    check_index_range(indices, binding_size, rule_id, where, report);
    check_predicate_known(pred, known, rule_id, where, report);
    auto it = known.find(pred);
    if (it != known.end() && indices.is_array()) {
      bool all_int = std::all_of(indices.begin(), indices.end(),
                                 [](const json& j) { return j.is_number_integer(); });
      if (all_int && indices.size() != it->second.arity()) {
        report.errors.push_back({rule_id, where,
                                 where + ": index list length " + std::to_string(indices.size()) +
                                     " does not match arity " + std::to_string(it->second.arity()),
                                 RuleErrorClass::format});
      }
    }
  }
}

void validate_relaxation_entry(const std::string& rule_id, const json& body,
                               const PredicateMap& known, ValidationReport& report) {
  if (!body.is_object()) {
    report.errors.push_back({rule_id, "", "rule body must be a JSON object",
                             RuleErrorClass::format});
    return;
  }
  for (const char* key : kRelaxationKeys) {
    if (!body.contains(key)) {
      report.errors.push_back({rule_id, key, std::string("required key '") + key + "' is missing",
                               RuleErrorClass::format});
    }
  }
  for (const auto& [key, value] : body.items()) {
    (void)value;
    if (std::find_if(std::begin(kRelaxationKeys), std::end(kRelaxationKeys),
                     [&](const char* k) { return key == k; }) == std::end(kRelaxationKeys)) {
      report.errors.push_back({rule_id, key, "unexpected key '" + key + "'",
                               RuleErrorClass::format});
    }
  }

  constexpr int kTupleSize = 2;  // pre_compute is always binary

  if (body.contains("pre_compute")) {
    const json& pc = body["pre_compute"];
    if (!pc.is_object() || pc.size() != 1) {
      report.errors.push_back({rule_id, "pre_compute",
                               "pre_compute must contain exactly one binary predicate entry",
                               RuleErrorClass::format});
    } else {
      const auto& [pred, indices] = *pc.items().begin();
      check_index_list(indices, rule_id, "pre_compute." + pred, report);
      check_predicate_known(pred, known, rule_id, "pre_compute." + pred, report);
      bool ints = indices.is_array() &&
                  std::all_of(indices.begin(), indices.end(),
                              [](const json& j) { return j.is_number_integer(); });
      if (ints && indices != json::array({0, 1})) {
        report.errors.push_back({rule_id, "pre_compute." + pred,
                                 "pre_compute index list must be [0, 1]", RuleErrorClass::format});
      }
      auto it = known.find(pred);
      if (it != known.end() && it->second.arity() != 2) {
        report.errors.push_back({rule_id, "pre_compute." + pred,
                                 "pre_compute predicate '" + pred + "' must be binary",
                                 RuleErrorClass::format});
      }
    }
  }
  if (body.contains("precond"))
    check_effect_map(body["precond"], known, kTupleSize, rule_id, "precond", report, false);
  if (body.contains("delete_objects")) {
    check_index_list(body["delete_objects"], rule_id, "delete_objects", report);
    check_index_range(body["delete_objects"], kTupleSize, rule_id, "delete_objects", report);
    if (body["delete_objects"].is_array() && body["delete_objects"].empty()) {
      report.errors.push_back({rule_id, "delete_objects", "delete_objects must not be empty",
                               RuleErrorClass::format});
    }
  }
  if (body.contains("delete_effects"))
    check_effect_map(body["delete_effects"], known, kTupleSize, rule_id, "delete_effects", report,
                     false);
  if (body.contains("add_effects"))
    check_effect_map(body["add_effects"], known, kTupleSize, rule_id, "add_effects", report, true);
}

json canonical_body(const json& body) {
  // json objects are alphabetically ordered, which is canonical enough for
  // content comparison.
  return body;
}

void validate_relaxation_doc(const json& doc, const PredicateMap& known,
                             ValidationReport& report) {
  if (!doc.is_object()) {
    report.errors.push_back({"", "", "relaxation rule document must be a JSON object",
                             RuleErrorClass::format});
    return;
  }
  std::vector<std::pair<long, std::string>> keys;
  for (const auto& [key, body] : doc.items()) {
    (void)body;
    long number = 0;
    if (!is_rule_key(key, number)) {
      report.errors.push_back({key, "", "rule keys must look like 'rule0', 'rule1', ...",
                               RuleErrorClass::format});
      continue;
    }
    keys.emplace_back(number, key);
  }
  std::sort(keys.begin(), keys.end());
  for (const auto& [number, key] : keys) {
    (void)number;
    validate_relaxation_entry(key, doc.at(key), known, report);
  }
  // Duplicate bodies (modulo key name).
  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (std::size_t j = i + 1; j < keys.size(); ++j) {
      if (canonical_body(doc.at(keys[i].second)) == canonical_body(doc.at(keys[j].second))) {
        report.errors.push_back({keys[j].second, "",
                                 "duplicate of rule '" + keys[i].second + "'",
                                 RuleErrorClass::duplicate});
      }
    }
  }
}

void validate_complementary_doc(const json& doc, const PredicateMap& known,
                                ValidationReport& report) {
  if (!doc.is_object()) {
    report.errors.push_back({"", "", "complementary rule document must be a JSON object",
                             RuleErrorClass::format});
    return;
  }
  for (const auto& [pred, body] : doc.items()) {
    check_predicate_known(pred, known, pred, pred, report);
    if (!body.is_object()) {
      report.errors.push_back({pred, "", "entry must be a JSON object", RuleErrorClass::format});
      continue;
    }
    for (const char* key : {"cond", "cmpl"}) {
      if (!body.contains(key)) {
        report.errors.push_back({pred, key, std::string("required key '") + key + "' is missing",
                                 RuleErrorClass::format});
      }
    }
    for (const auto& [key, value] : body.items()) {
      (void)value;
      if (key != "cond" && key != "cmpl") {
        report.errors.push_back({pred, key, "unexpected key '" + key + "'",
                                 RuleErrorClass::format});
      }
    }
    int arity = 2;
    if (auto it = known.find(pred); it != known.end()) arity = static_cast<int>(it->second.arity());
    auto check_pair_list = [&](const char* key) {
      if (!body.contains(key)) return;
      const json& lists = body[key];
      if (!lists.is_array()) {
        report.errors.push_back({pred, key, std::string(key) + " must be a list of index lists",
                                 RuleErrorClass::format});
        return;
      }
      for (const auto& inner : lists) {
        check_index_list(inner, pred, key, report);
        if (inner.is_array()) check_index_range(inner, arity, pred, key, report);
      }
    };
    check_pair_list("cond");
    check_pair_list("cmpl");
    if (body.contains("cond") && body.contains("cmpl") && body["cond"].is_array() &&
        body["cmpl"].is_array()) {
      if (body["cond"].size() != body["cmpl"].size()) {
        report.errors.push_back({pred, "cond",
                                 "cond and cmpl must have the same number of entries",
                                 RuleErrorClass::format});
      } else {
        for (std::size_t i = 0; i < body["cond"].size(); ++i) {
          for (std::size_t j = i + 1; j < body["cond"].size(); ++j) {
            if (body["cond"][i] == body["cond"][j] && body["cmpl"][i] == body["cmpl"][j]) {
              report.errors.push_back({pred, "cond",
                                       "duplicate cond/cmpl pair at positions " +
                                           std::to_string(i) + " and " + std::to_string(j),
                                       RuleErrorClass::duplicate});
            }
          }
        }
      }
    }
  }
}

std::vector<int> int_list(const json& value) {
  std::vector<int> out;
  for (const auto& item : value) out.push_back(item.get<int>());
  return out;
}

bool entry_has_format_errors(const ValidationReport& report, const std::string& rule_id) {
  for (const auto& e : report.errors)
    if (e.rule_id == rule_id && e.cls == RuleErrorClass::format) return true;
  return false;
}

}  // namespace

bool RelaxationRule::same_content(const RelaxationRule& other) const {
  return pre_compute_predicate == other.pre_compute_predicate &&
         pre_compute_indices == other.pre_compute_indices &&
         preconditions == other.preconditions &&
         delete_object_indices == other.delete_object_indices &&
         delete_effects == other.delete_effects && add_effects == other.add_effects;
}

bool ValidationReport::has_format_errors() const {
  return std::any_of(errors.begin(), errors.end(),
                     [](const RuleError& e) { return e.cls == RuleErrorClass::format; });
}

std::vector<std::string> ValidationReport::messages() const {
  std::vector<std::string> out;
  for (const auto& e : errors) {
    std::string m;
    if (!e.rule_id.empty()) m += e.rule_id + ": ";
    m += e.message;
    out.push_back(std::move(m));
  }
  return out;
}

PredicateMap predicate_map(const std::vector<PredicateDef>& defs) {
  PredicateMap map;
  for (const auto& def : defs) map[def.name] = def;
  return map;
}

ValidationReport validate_rules(const json& doc, const PredicateMap& known, RuleKind kind) {
  ValidationReport report;
  if (kind == RuleKind::relaxation)
    validate_relaxation_doc(doc, known, report);
  else
    validate_complementary_doc(doc, known, report);
  return report;
}

RelaxationParse read_relaxation_rules(const json& doc, const PredicateMap& known) {
  RelaxationParse out;
  out.report = validate_rules(doc, known, RuleKind::relaxation);
  if (!doc.is_object()) return out;
  std::vector<std::pair<long, std::string>> keys;
  for (const auto& [key, body] : doc.items()) {
    (void)body;
    long number = 0;
    if (is_rule_key(key, number)) keys.emplace_back(number, key);
  }
  std::sort(keys.begin(), keys.end());
  for (const auto& [number, key] : keys) {
    (void)number;
    if (entry_has_format_errors(out.report, key)) continue;
    const json& body = doc.at(key);
    RelaxationRule rule;
    rule.id = key;
    const auto& [pred, indices] = *body.at("pre_compute").items().begin();
    rule.pre_compute_predicate = pred;
    rule.pre_compute_indices = int_list(indices);
    for (const auto& [p, idx] : body.at("precond").items()) rule.preconditions[p] = int_list(idx);
    rule.delete_object_indices = int_list(body.at("delete_objects"));
    for (const auto& [p, idx] : body.at("delete_effects").items())
      rule.delete_effects[p] = int_list(idx);
    for (const auto& [p, idx] : body.at("add_effects").items()) rule.add_effects[p] = int_list(idx);
    out.rules.push_back(std::move(rule));
  }
  return out;
}

ComplementaryParse read_complementary_rules(const json& doc, const PredicateMap& known) {
  ComplementaryParse out;
  out.report = validate_rules(doc, known, RuleKind::complementary);
  if (!doc.is_object()) return out;
  for (const auto& [pred, body] : doc.items()) {
    if (entry_has_format_errors(out.report, pred)) continue;
    ComplementaryRule rule;
    rule.predicate = pred;
    for (const auto& inner : body.at("cond")) rule.cond.push_back(int_list(inner));
    for (const auto& inner : body.at("cmpl")) rule.cmpl.push_back(int_list(inner));
    out.rules.push_back(std::move(rule));
  }
  return out;
}

std::vector<RelaxationRule> dedup(std::vector<RelaxationRule> rules) {
  std::vector<RelaxationRule> out;
  for (auto& rule : rules) {
    bool duplicate = false;
    for (const auto& kept : out) {
      if (kept.same_content(rule)) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) out.push_back(std::move(rule));
  }
  return out;
}

std::vector<ComplementaryRule> dedup(std::vector<ComplementaryRule> rules) {
  std::vector<ComplementaryRule> out;
  for (auto& rule : rules) {
    // Merge repeated cond/cmpl pairs within the entry.
    ComplementaryRule merged;
    merged.predicate = rule.predicate;
    for (std::size_t i = 0; i < rule.cond.size() && i < rule.cmpl.size(); ++i) {
      bool seen = false;
      for (std::size_t j = 0; j < merged.cond.size(); ++j) {
        if (merged.cond[j] == rule.cond[i] && merged.cmpl[j] == rule.cmpl[i]) {
          seen = true;
          break;
        }
      }
      if (!seen) {
        merged.cond.push_back(rule.cond[i]);
        merged.cmpl.push_back(rule.cmpl[i]);
      }
    }
    bool duplicate = false;
    for (const auto& kept : out) {
      if (kept == merged) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) out.push_back(std::move(merged));
  }
  return out;
}

std::vector<RelaxationRule> filter_unknown(std::vector<RelaxationRule> rules,
                                           const PredicateMap& known) {
  std::vector<RelaxationRule> out;
  for (auto& rule : rules) {
    bool ok = known.count(rule.pre_compute_predicate) > 0;
    for (const auto& [p, idx] : rule.preconditions) {
      (void)idx;
      ok = ok && known.count(p);
    }
    for (const auto& [p, idx] : rule.delete_effects) {
      (void)idx;
      ok = ok && known.count(p);
    }
    for (const auto& [p, idx] : rule.add_effects) {
      (void)idx;
      ok = ok && known.count(p);
    }
    if (ok)
      out.push_back(std::move(rule));
    else
      std::cerr << "warning: dropping rule '" << rule.id << "' referencing unknown predicates\n";
  }
  return out;
}

std::vector<ComplementaryRule> filter_unknown(std::vector<ComplementaryRule> rules,
                                              const PredicateMap& known) {
  std::vector<ComplementaryRule> out;
  for (auto& rule : rules) {
    if (known.count(rule.predicate))
      out.push_back(std::move(rule));
    else
      std::cerr << "warning: dropping complementary rule for unknown predicate '" << rule.predicate
                << "'\n";
  }
  return out;
}

ordered_json to_json(const std::vector<RelaxationRule>& rules) {
  ordered_json doc = ordered_json::object();
  for (const auto& rule : rules) {
    ordered_json body = ordered_json::object();
    body["pre_compute"] = {{rule.pre_compute_predicate, rule.pre_compute_indices}};
    body["precond"] = rule.preconditions;
    body["delete_objects"] = rule.delete_object_indices;
    body["delete_effects"] = rule.delete_effects;
    body["add_effects"] = rule.add_effects;
    doc[rule.id] = std::move(body);
  }
  return doc;
}

ordered_json to_json(const std::vector<ComplementaryRule>& rules) {
  std::vector<const ComplementaryRule*> sorted;
  for (const auto& rule : rules) sorted.push_back(&rule);
  std::sort(sorted.begin(), sorted.end(),
            [](const ComplementaryRule* a, const ComplementaryRule* b) {
              return a->predicate < b->predicate;
            });
  ordered_json doc = ordered_json::object();
  for (const ComplementaryRule* rule : sorted) {
    ordered_json body = ordered_json::object();
    body["cond"] = rule->cond;
    body["cmpl"] = rule->cmpl;
    doc[rule->predicate] = std::move(body);
  }
  return doc;
}

std::string canonical_rule_text(const ordered_json& doc) { return doc.dump(2) + "\n"; }

Problem apply_relaxation(const Problem& problem, const std::vector<RelaxationRule>& rules) {
  Problem result = problem;
  const std::set<std::string> protected_objects = goal_objects(problem);
  std::set<std::string> removed;

  for (const auto& rule : rules) {
    // Snapshot the matching pre_compute atoms; std::set iteration gives the
    // lexicographic binding order.
    std::vector<GroundAtom> matches;
    for (const auto& atom : result.init)
      if (atom.predicate == rule.pre_compute_predicate) matches.push_back(atom);

    for (const auto& match : matches) {
      if (!result.init.count(match)) continue;  // retracted by an earlier binding
      const std::vector<std::string>& tuple = match.args;
      auto in_range = [&](const std::vector<int>& indices) {
        return std::all_of(indices.begin(), indices.end(), [&](int i) {
          return i >= 0 && static_cast<std::size_t>(i) < tuple.size();
        });
      };
      auto make_atom = [&](const std::string& pred, const std::vector<int>& indices) {
        GroundAtom atom;
        atom.predicate = pred;
        for (int i : indices) atom.args.push_back(tuple[i]);
        return atom;
      };

      bool holds = in_range(rule.delete_object_indices);
      for (const auto& [pred, indices] : rule.preconditions) {
        if (!holds) break;
        holds = in_range(indices) && result.init.count(make_atom(pred, indices)) > 0;
      }
      if (!holds) continue;

      std::vector<std::string> to_remove;
      for (int i : rule.delete_object_indices) to_remove.push_back(tuple[i]);
      bool touches_goal = std::any_of(to_remove.begin(), to_remove.end(), [&](const auto& o) {
        return protected_objects.count(o) > 0;
      });
      if (touches_goal) {
        std::cerr << "warning: relaxation rule '" << rule.id << "' would remove a goal object at "
                  << match.str() << "; binding skipped\n";
        continue;
      }

      for (const auto& [pred, indices] : rule.delete_effects)
        if (in_range(indices)) result.init.erase(make_atom(pred, indices));
      for (const auto& [pred, indices] : rule.add_effects)
        if (in_range(indices)) result.init.insert(make_atom(pred, indices));
      for (const auto& obj : to_remove) {
        result.objects.erase(obj);
        removed.insert(obj);
      }
    }
  }

  if (!removed.empty()) {
    std::erase_if(result.init, [&](const GroundAtom& atom) {
      return std::any_of(atom.args.begin(), atom.args.end(),
                         [&](const std::string& a) { return removed.count(a) > 0; });
    });
  }
  return result;
}

std::set<std::string> complementary_closure(const std::set<std::string>& included,
                                            const std::set<GroundAtom>& init,
                                            const std::vector<ComplementaryRule>& rules) {
  std::set<std::string> result = included;
  std::map<std::string, std::vector<const GroundAtom*>> by_pred;
  for (const auto& atom : init) by_pred[atom.predicate].push_back(&atom);

  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& rule : rules) {
      auto it = by_pred.find(rule.predicate);
      if (it == by_pred.end()) continue;
      for (const GroundAtom* atom : it->second) {
        const auto& args = atom->args;
        const std::size_t pairs = std::min(rule.cond.size(), rule.cmpl.size());
        for (std::size_t i = 0; i < pairs; ++i) {
          bool all_in = std::all_of(rule.cond[i].begin(), rule.cond[i].end(), [&](int pos) {
            return pos >= 0 && static_cast<std::size_t>(pos) < args.size() &&
                   result.count(args[pos]) > 0;
          });
          if (!all_in) continue;
          for (int pos : rule.cmpl[i]) {
            if (pos < 0 || static_cast<std::size_t>(pos) >= args.size()) continue;
            if (result.insert(args[pos]).second) changed = true;
          }
        }
      }
    }
  }
  return result;
}

Problem restrict_problem(const Problem& problem, const std::set<std::string>& included) {
  std::set<std::string> keep = goal_objects(problem);
  for (const auto& name : included)
    if (problem.objects.count(name)) keep.insert(name);

  Problem result;
  result.name = problem.name;
  result.domain_name = problem.domain_name;
  for (const auto& name : keep) {
    auto it = problem.objects.find(name);
    if (it != problem.objects.end()) result.objects.insert(*it);
  }
  for (const auto& atom : problem.init) {
    bool retained = std::all_of(atom.args.begin(), atom.args.end(),
                                [&](const std::string& a) { return keep.count(a) > 0; });
    if (retained) result.init.insert(atom);
  }
  result.goal = problem.goal;
  return result;
}

namespace {
json parse_json_file(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open rule file: " + file.string());
  json doc = json::parse(is, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw std::runtime_error("invalid JSON in rule file: " + file.string());
  return doc;
}

[[noreturn]] void throw_report(const std::filesystem::path& file, const ValidationReport& report) {
  std::ostringstream os;
  os << "rule file " << file.string() << " failed validation:";
  for (const auto& m : report.messages()) os << "\n  - " << m;
  throw std::runtime_error(os.str());
}
}  // namespace

std::vector<RelaxationRule> load_relaxation_rules(const std::filesystem::path& file,
                                                  const PredicateMap& known) {
  json doc = parse_json_file(file);
  RelaxationParse parsed = read_relaxation_rules(doc, known);
  if (!parsed.report.is_valid()) throw_report(file, parsed.report);
  return parsed.rules;
}

std::vector<ComplementaryRule> load_complementary_rules(const std::filesystem::path& file,
                                                        const PredicateMap& known) {
  json doc = parse_json_file(file);
  ComplementaryParse parsed = read_complementary_rules(doc, known);
  if (!parsed.report.is_valid()) throw_report(file, parsed.report);
  return parsed.rules;
}

}  // namespace relaxplan

#include "relaxplan/pddl.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace relaxplan {

namespace {

struct Token {
  enum class Kind { lparen, rparen, symbol, end };
  Kind kind = Kind::end;
  std::string text;
  int line = 0;
  int column = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }

  Token next() {
    Token t = current_;
    advance();
    return t;
  }

 private:
  void advance() {
    skip_ws_and_comments();
    current_.line = line_;
    current_.column = column_;
    if (pos_ >= text_.size()) {
      current_.kind = Token::Kind::end;
      current_.text.clear();
      return;
    }
    char c = text_[pos_];
    if (c == '(') {
      current_ = {Token::Kind::lparen, "(", line_, column_};
      consume();
      return;
    }
    if (c == ')') {
      current_ = {Token::Kind::rparen, ")", line_, column_};
      consume();
      return;
    }
    std::string sym;
    while (pos_ < text_.size()) {
      c = text_[pos_];
      if (c == '(' || c == ')' || c == ';' || std::isspace(static_cast<unsigned char>(c))) break;
      sym.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      consume();
    }
    current_.kind = Token::Kind::symbol;
    current_.text = std::move(sym);
  }

  void skip_ws_and_comments() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') consume();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        consume();
      } else {
        break;
      }
    }
  }

  void consume() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
  Token current_;
};

[[noreturn]] void fail(const Token& at, const std::string& message) {
  throw ParseError(message, at.line, at.column);
}

void expect_lparen(Lexer& lex, const char* context) {
  Token t = lex.next();
  if (t.kind != Token::Kind::lparen) fail(t, std::string("expected '(' in ") + context);
}

void expect_rparen(Lexer& lex, const char* context) {
  Token t = lex.next();
  if (t.kind != Token::Kind::rparen) fail(t, std::string("expected ')' in ") + context);
}

std::string expect_symbol(Lexer& lex, const char* context) {
  Token t = lex.next();
  if (t.kind != Token::Kind::symbol) fail(t, std::string("expected name in ") + context);
  return t.text;
}

void expect_keyword(Lexer& lex, const std::string& keyword) {
  Token t = lex.next();
  if (t.kind != Token::Kind::symbol || t.text != keyword)
    fail(t, "expected '" + keyword + "'");
}

// Parses `name name - type name - type ...` up to the closing paren, which is
// consumed. Names without a trailing type marker get `default_type`.
std::vector<std::pair<std::string, std::string>> parse_typed_list(
    Lexer& lex, const std::string& default_type, const char* context) {
  std::vector<std::pair<std::string, std::string>> out;
  std::vector<std::string> pending;
  while (true) {
    Token t = lex.next();
    if (t.kind == Token::Kind::rparen) {
      for (auto& n : pending) out.emplace_back(n, default_type);
      return out;
    }
    if (t.kind != Token::Kind::symbol) fail(t, std::string("expected name or ')' in ") + context);
    if (t.text == "-") {
      std::string type = expect_symbol(lex, context);
      if (pending.empty()) fail(t, std::string("dangling '-' in ") + context);
      for (auto& n : pending) out.emplace_back(n, type);
      pending.clear();
    } else {
      pending.push_back(t.text);
    }
  }
}

PredicateDef parse_predicate_def(Lexer& lex) {
  expect_lparen(lex, ":predicates");
  PredicateDef def;
  def.name = expect_symbol(lex, "predicate declaration");
  auto vars = parse_typed_list(lex, "object", "predicate declaration");
  for (auto& [var, type] : vars) {
    if (var.empty() || var[0] != '?')
      throw SemanticError("predicate " + def.name + ": parameter '" + var +
                          "' must be a ?variable");
    def.param_types.push_back(type);
  }
  return def;
}

std::vector<PredicateDef> parse_predicates_block(Lexer& lex) {
  std::vector<PredicateDef> defs;
  while (lex.peek().kind == Token::Kind::lparen) {
    Token at = lex.peek();
    PredicateDef def = parse_predicate_def(lex);
    for (const auto& existing : defs)
      if (existing.name == def.name)
        fail(at, "duplicate predicate declaration '" + def.name + "'");
    defs.push_back(std::move(def));
  }
  expect_rparen(lex, ":predicates");
  return defs;
}

LiftedAtom parse_lifted_atom(Lexer& lex) {
  // Opening paren already consumed by the caller.
  LiftedAtom atom;
  atom.predicate = expect_symbol(lex, "atom");
  while (lex.peek().kind == Token::Kind::symbol) atom.args.push_back(lex.next().text);
  expect_rparen(lex, "atom");
  return atom;
}

// `(and ...)`, `(not (atom))`, `(atom ...)` or `()`.
std::vector<Literal> parse_condition(Lexer& lex, const char* context) {
  std::vector<Literal> literals;
  Token open = lex.next();
  if (open.kind != Token::Kind::lparen) fail(open, std::string("expected '(' in ") + context);
  if (lex.peek().kind == Token::Kind::rparen) {  // empty conjunction
    lex.next();
    return literals;
  }
  Token head = lex.peek();
  if (head.kind != Token::Kind::symbol) fail(head, std::string("expected name in ") + context);
  if (head.text == "and") {
    lex.next();
    while (lex.peek().kind == Token::Kind::lparen) {
      lex.next();
      Token inner = lex.peek();
      if (inner.kind == Token::Kind::symbol && inner.text == "not") {
        lex.next();
        expect_lparen(lex, context);
        literals.push_back({parse_lifted_atom(lex), false});
        expect_rparen(lex, "not");
      } else {
        literals.push_back({parse_lifted_atom(lex), true});
      }
    }
    expect_rparen(lex, context);
  } else if (head.text == "not") {
    lex.next();
    expect_lparen(lex, context);
    literals.push_back({parse_lifted_atom(lex), false});
    expect_rparen(lex, "not");
  } else {
    literals.push_back({parse_lifted_atom(lex), true});
  }
  return literals;
}

void check_schema_literal(const Domain& domain, const ActionSchema& schema,
                          const LiftedAtom& atom, const Token& at) {
  const PredicateDef* def = domain.find_predicate(atom.predicate);
  if (def == nullptr)
    fail(at, "action '" + schema.name + "' uses undeclared predicate '" + atom.predicate + "'");
  if (def->arity() != atom.args.size())
    fail(at, "action '" + schema.name + "': predicate '" + atom.predicate + "' expects " +
                 std::to_string(def->arity()) + " arguments, got " +
                 std::to_string(atom.args.size()));
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    const std::string& arg = atom.args[i];
    if (arg.empty()) fail(at, "empty argument");
    if (arg[0] != '?') continue;  // constant; resolved against objects at grounding
    auto it = std::find_if(schema.params.begin(), schema.params.end(),
                           [&](const TypedParam& p) { return p.name == arg; });
    if (it == schema.params.end())
      fail(at, "action '" + schema.name + "': variable '" + arg + "' not in :parameters");
    if (def->param_types[i] != "object" && !domain.is_subtype(it->type, def->param_types[i]))
      fail(at, "action '" + schema.name + "': variable '" + arg + "' of type '" + it->type +
                   "' incompatible with parameter " + std::to_string(i) + " of '" +
                   atom.predicate + "'");
  }
}

ActionSchema parse_action(Lexer& lex, const Domain& domain) {
  Token at = lex.peek();
  ActionSchema schema;
  schema.name = expect_symbol(lex, ":action");
  expect_keyword(lex, ":parameters");
  expect_lparen(lex, ":parameters");
  for (auto& [var, type] : parse_typed_list(lex, "object", ":parameters")) {
    if (var.empty() || var[0] != '?')
      fail(at, "action '" + schema.name + "': parameter '" + var + "' must be a ?variable");
    schema.params.push_back({var, type});
  }
  while (lex.peek().kind == Token::Kind::symbol) {
    std::string section = lex.next().text;
    if (section == ":precondition") {
      schema.preconditions = parse_condition(lex, ":precondition");
    } else if (section == ":effect") {
      for (const Literal& lit : parse_condition(lex, ":effect")) {
        if (lit.positive)
          schema.add_effects.push_back(lit.atom);
        else
          schema.del_effects.push_back(lit.atom);
      }
    } else {
      fail(at, "action '" + schema.name + "': unsupported section '" + section + "'");
    }
  }
  expect_rparen(lex, ":action");

  for (const Literal& lit : schema.preconditions)
    check_schema_literal(domain, schema, lit.atom, at);
  for (const LiftedAtom& atom : schema.add_effects) check_schema_literal(domain, schema, atom, at);
  for (const LiftedAtom& atom : schema.del_effects) check_schema_literal(domain, schema, atom, at);
  for (const LiftedAtom& atom : schema.add_effects)
    if (std::find(schema.del_effects.begin(), schema.del_effects.end(), atom) !=
        schema.del_effects.end())
      fail(at, "action '" + schema.name + "': atom appears in both add and delete effects");
  return schema;
}

GroundAtom parse_ground_atom(Lexer& lex) {
  expect_lparen(lex, "atom");
  GroundAtom atom;
  atom.predicate = expect_symbol(lex, "atom");
  while (lex.peek().kind == Token::Kind::symbol) atom.args.push_back(lex.next().text);
  expect_rparen(lex, "atom");
  return atom;
}

}  // namespace

ParseError::ParseError(const std::string& message, int line, int column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + message),
      line_(line),
      column_(column) {}

std::string GroundAtom::str() const {
  std::string s = "(" + predicate;
  for (const auto& a : args) s += " " + a;
  s += ")";
  return s;
}

const PredicateDef* Domain::find_predicate(const std::string& pname) const {
  for (const auto& p : predicates)
    if (p.name == pname) return &p;
  return nullptr;
}

const ActionSchema* Domain::find_action(const std::string& aname) const {
  for (const auto& a : actions)
    if (a.name == aname) return &a;
  return nullptr;
}

bool Domain::is_subtype(const std::string& type, const std::string& ancestor) const {
  if (ancestor == "object") return true;
  std::string cur = type;
  for (int depth = 0; depth < 64; ++depth) {
    if (cur == ancestor) return true;
    auto it = types.find(cur);
    if (it == types.end() || it->second.empty() || it->second == cur) return false;
    cur = it->second;
  }
  return false;
}

void Problem::validate(const Domain& domain) const {
  for (const auto& [obj, type] : objects) {
    if (type != "object" && !domain.types.count(type))
      throw SemanticError("object '" + obj + "' has unknown type '" + type + "'");
  }
  auto check = [&](const GroundAtom& atom, const char* where) {
    const PredicateDef* def = domain.find_predicate(atom.predicate);
    if (def == nullptr)
      throw SemanticError(std::string(where) + ": unknown predicate '" + atom.predicate + "'");
    if (def->arity() != atom.args.size())
      throw SemanticError(std::string(where) + ": predicate '" + atom.predicate + "' expects " +
                          std::to_string(def->arity()) + " arguments, got " +
                          std::to_string(atom.args.size()) + " in " + atom.str());
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
      auto it = objects.find(atom.args[i]);
      if (it == objects.end())
        throw SemanticError(std::string(where) + ": undeclared object '" + atom.args[i] + "' in " +
                            atom.str());
      if (def->param_types[i] != "object" && !domain.is_subtype(it->second, def->param_types[i]))
        throw SemanticError(std::string(where) + ": object '" + atom.args[i] + "' of type '" +
                            it->second + "' incompatible with parameter " + std::to_string(i) +
                            " of '" + atom.predicate + "'");
    }
  };
  for (const auto& atom : init) check(atom, ":init");
  for (const auto& atom : goal) check(atom, ":goal");
}

Domain parse_domain(std::string_view text) {
  Lexer lex(text);
  Domain domain;
  expect_lparen(lex, "domain");
  expect_keyword(lex, "define");
  expect_lparen(lex, "domain");
  expect_keyword(lex, "domain");
  domain.name = expect_symbol(lex, "domain name");
  expect_rparen(lex, "domain name");

  bool saw_predicates = false;
  while (lex.peek().kind == Token::Kind::lparen) {
    lex.next();
    Token head = lex.peek();
    std::string section = expect_symbol(lex, "domain section");
    if (section == ":requirements") {
      while (lex.peek().kind == Token::Kind::symbol) lex.next();
      expect_rparen(lex, ":requirements");
    } else if (section == ":types") {
      for (auto& [type, parent] : parse_typed_list(lex, "object", ":types"))
        domain.types[type] = parent;
    } else if (section == ":predicates") {
      if (saw_predicates) fail(head, "duplicate :predicates block");
      saw_predicates = true;
      domain.predicates = parse_predicates_block(lex);
    } else if (section == ":action") {
      domain.actions.push_back(parse_action(lex, domain));
    } else {
      fail(head, "unsupported domain section '" + section + "'");
    }
  }
  expect_rparen(lex, "domain");
  if (!saw_predicates) fail(lex.peek(), "domain has no :predicates block");
  return domain;
}

std::vector<PredicateDef> parse_predicates(std::string_view domain_text) {
  Lexer lex(domain_text);
  while (true) {
    Token t = lex.next();
    if (t.kind == Token::Kind::end)
      throw ParseError("no :predicates block found", t.line, t.column);
    if (t.kind == Token::Kind::symbol && t.text == ":predicates")
      return parse_predicates_block(lex);
  }
}

Problem parse_problem(std::string_view text, const Domain& domain) {
  Lexer lex(text);
  Problem problem;
  expect_lparen(lex, "problem");
  expect_keyword(lex, "define");
  expect_lparen(lex, "problem");
  expect_keyword(lex, "problem");
  problem.name = expect_symbol(lex, "problem name");
  expect_rparen(lex, "problem name");

  while (lex.peek().kind == Token::Kind::lparen) {
    lex.next();
    Token head = lex.peek();
    std::string section = expect_symbol(lex, "problem section");
    if (section == ":domain") {
      problem.domain_name = expect_symbol(lex, ":domain");
      expect_rparen(lex, ":domain");
      if (problem.domain_name != domain.name)
        fail(head, "problem references domain '" + problem.domain_name + "' but '" + domain.name +
                       "' was supplied");
    } else if (section == ":objects") {
      for (auto& [obj, type] : parse_typed_list(lex, "object", ":objects")) {
        if (problem.objects.count(obj)) fail(head, "duplicate object '" + obj + "'");
        problem.objects[obj] = type;
      }
    } else if (section == ":init") {
      while (lex.peek().kind == Token::Kind::lparen) problem.init.insert(parse_ground_atom(lex));
      expect_rparen(lex, ":init");
    } else if (section == ":goal") {
      expect_lparen(lex, ":goal");
      Token inner = lex.peek();
      if (inner.kind == Token::Kind::symbol && inner.text == "and") {
        lex.next();
        while (lex.peek().kind == Token::Kind::lparen) problem.goal.insert(parse_ground_atom(lex));
        expect_rparen(lex, ":goal");
      } else if (inner.kind == Token::Kind::symbol && inner.text == "not") {
        fail(inner, "negative goal atoms are not supported");
      } else if (inner.kind == Token::Kind::rparen) {
        lex.next();  // empty goal
      } else {
        GroundAtom atom;
        atom.predicate = expect_symbol(lex, ":goal");
        while (lex.peek().kind == Token::Kind::symbol) atom.args.push_back(lex.next().text);
        expect_rparen(lex, ":goal");
        problem.goal.insert(atom);
      }
      expect_rparen(lex, ":goal");
    } else {
      fail(head, "unsupported problem section '" + section + "'");
    }
  }
  expect_rparen(lex, "problem");
  problem.validate(domain);
  return problem;
}

std::set<std::string> goal_objects(const Problem& problem) {
  std::set<std::string> out;
  for (const auto& atom : problem.goal)
    for (const auto& arg : atom.args) out.insert(arg);
  return out;
}

std::string to_pddl(const Domain& domain) {
  std::ostringstream os;
  os << "(define (domain " << domain.name << ")\n";
  os << "  (:requirements :strips :typing)\n";
  if (!domain.types.empty()) {
    // Group types by parent for a compact :types line.
    std::map<std::string, std::vector<std::string>> by_parent;
    for (const auto& [type, parent] : domain.types) by_parent[parent].push_back(type);
    os << "  (:types";
    for (auto& [parent, names] : by_parent) {
      std::sort(names.begin(), names.end());
      for (const auto& n : names) os << " " << n;
      if (parent != "object") os << " - " << parent;
    }
    os << ")\n";
  }
  os << "  (:predicates\n";
  for (const auto& pred : domain.predicates) {
    os << "    (" << pred.name;
    for (std::size_t i = 0; i < pred.param_types.size(); ++i)
      os << " ?a" << i << " - " << pred.param_types[i];
    os << ")\n";
  }
  os << "  )\n";
  auto lifted = [&](const LiftedAtom& atom) {
    std::string s = "(" + atom.predicate;
    for (const auto& a : atom.args) s += " " + a;
    return s + ")";
  };
  for (const auto& action : domain.actions) {
    os << "  (:action " << action.name << "\n";
    os << "    :parameters (";
    for (std::size_t i = 0; i < action.params.size(); ++i) {
      if (i) os << " ";
      os << action.params[i].name << " - " << action.params[i].type;
    }
    os << ")\n";
    os << "    :precondition (and";
    for (const auto& lit : action.preconditions) {
      os << " ";
      if (!lit.positive) os << "(not ";
      os << lifted(lit.atom);
      if (!lit.positive) os << ")";
    }
    os << ")\n";
    os << "    :effect (and";
    for (const auto& atom : action.add_effects) os << " " << lifted(atom);
    for (const auto& atom : action.del_effects) os << " (not " << lifted(atom) << ")";
    os << ")\n  )\n";
  }
  os << ")\n";
  return os.str();
}

std::string to_pddl(const Problem& problem) {
  std::ostringstream os;
  os << "(define (problem " << problem.name << ")\n";
  os << "  (:domain " << problem.domain_name << ")\n";
  os << "  (:objects\n";
  std::map<std::string, std::vector<std::string>> by_type;
  for (const auto& [obj, type] : problem.objects) by_type[type].push_back(obj);
  for (auto& [type, names] : by_type) {
    std::sort(names.begin(), names.end());
    os << "   ";
    for (const auto& n : names) os << " " << n;
    os << " - " << type << "\n";
  }
  os << "  )\n";
  os << "  (:init\n";
  for (const auto& atom : problem.init) os << "    " << atom.str() << "\n";
  os << "  )\n";
  os << "  (:goal (and";
  for (const auto& atom : problem.goal) os << " " << atom.str();
  os << "))\n";
  os << ")\n";
  return os.str();
}

}  // namespace relaxplan

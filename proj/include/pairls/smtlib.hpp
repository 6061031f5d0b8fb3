#pragma once

// Restricted SMT-LIB v2 front-end for QF_LIA / QF_IDL with weighted soft
// assertions (`assert-soft ... :weight w`), plus conversion of the parsed
// script into the clause model and canonical re-emission.
//
// Accepted terms: integer numerals, declared Int/Bool constants, `let`,
// `!` annotations, `+`, `-`, `*` (at most one non-constant factor), the
// comparisons `<= < >= > =`, and `not and or =>` with `=` on booleans read as
// equivalence. `ite`, `div`, `mod`, `distinct`, reals and quantifiers are
// rejected.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pairls/checked.hpp"
#include "pairls/formula.hpp"

namespace pairls::smtlib {

enum class ErrorKind {
  MalformedSexpr,
  UnknownSymbol,
  SortError,
  NonlinearTerm,
  UnsupportedLogic,
  UnsupportedFeature,
  BadWeight,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::MalformedSexpr: return "malformed s-expression";
    case ErrorKind::UnknownSymbol: return "unknown symbol";
    case ErrorKind::SortError: return "sort error";
    case ErrorKind::NonlinearTerm: return "nonlinear term";
    case ErrorKind::UnsupportedLogic: return "unsupported logic";
    case ErrorKind::UnsupportedFeature: return "unsupported feature";
    case ErrorKind::BadWeight: return "bad weight";
  }
  return "error";
}

class SmtError : public std::runtime_error {
 public:
  SmtError(ErrorKind kind, int line, int col, const std::string& msg)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " +
                           to_string(kind) + ": " + msg),
        kind_(kind),
        line_(line),
        col_(col) {}

  ErrorKind kind() const { return kind_; }
  int line() const { return line_; }
  int col() const { return col_; }

  /// Unsupported input as opposed to malformed input.
  bool unsupported() const {
    return kind_ == ErrorKind::UnsupportedLogic || kind_ == ErrorKind::UnsupportedFeature ||
           kind_ == ErrorKind::NonlinearTerm;
  }

 private:
  ErrorKind kind_;
  int line_, col_;
};

// ---------------------------------------------------------------------------
// S-expressions

struct Sexpr {
  enum class Kind { Symbol, Numeral, Decimal, String, Keyword, List };
  Kind kind = Kind::List;
  std::string text;
  std::vector<Sexpr> items;
  int line = 1, col = 1;

  bool is_symbol(std::string_view s) const { return kind == Kind::Symbol && text == s; }
  bool is_list() const { return kind == Kind::List; }
};

class SexprReader {
 public:
  explicit SexprReader(std::string_view text) : text_(text) {}

  std::vector<Sexpr> read_all() {
    std::vector<Sexpr> out;
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) return out;
      out.push_back(read());
    }
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw SmtError(ErrorKind::MalformedSexpr, line_, col_, msg);
  }

  char peek() const { return text_[pos_]; }
  char advance() {
    const char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = peek();
      if (c == ';') {
        while (pos_ < text_.size() && peek() != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  Sexpr read() {
    Sexpr e;
    e.line = line_;
    e.col = col_;
    const char c = peek();
    if (c == '(') {
      advance();
      e.kind = Sexpr::Kind::List;
      for (;;) {
        skip_space();
        if (pos_ >= text_.size()) {
          line_ = e.line;
          col_ = e.col;
          fail("unbalanced '('");
        }
        if (peek() == ')') {
          advance();
          return e;
        }
        e.items.push_back(read());
      }
    }
    if (c == ')') fail("unexpected ')'");
    if (c == '"') {
      advance();
      e.kind = Sexpr::Kind::String;
      for (;;) {
        if (pos_ >= text_.size()) fail("unterminated string");
        const char d = advance();
        if (d == '"') {
          if (pos_ < text_.size() && peek() == '"') {
            e.text += advance();
            continue;
          }
          return e;
        }
        e.text += d;
      }
    }
    if (c == '|') {
      advance();
      e.kind = Sexpr::Kind::Symbol;
      for (;;) {
        if (pos_ >= text_.size()) fail("unterminated quoted symbol");
        const char d = advance();
        if (d == '|') return e;
        e.text += d;
      }
    }
    while (pos_ < text_.size()) {
      const char d = peek();
      if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == ';' ||
          d == '"' || d == '|')
        break;
      e.text += advance();
    }
    e.kind = classify(e.text);
    return e;
  }

  static Sexpr::Kind classify(const std::string& t) {
    if (t.front() == ':') return Sexpr::Kind::Keyword;
    size_t i = (t.size() > 1 && t.front() == '-') ? 1 : 0;
    bool digits = i < t.size(), dot = false;
    for (; i < t.size(); ++i) {
      if (t[i] == '.' && !dot) {
        dot = true;
        continue;
      }
      if (!std::isdigit(static_cast<unsigned char>(t[i]))) digits = false;
    }
    if (!digits) return Sexpr::Kind::Symbol;
    return dot ? Sexpr::Kind::Decimal : Sexpr::Kind::Numeral;
  }

  std::string_view text_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

// ---------------------------------------------------------------------------
// Terms

enum class Sort : uint8_t { Int, Bool };

enum class Op : uint8_t {
  IntConst,
  Var,
  BoundRef,  // reference to a let-bound name; `target` is the bound term
  Add,
  Sub,  // unary minus when it has one argument
  Mul,
  Le,
  Lt,
  Ge,
  Gt,
  Eq,
  Not,
  And,
  Or,
  Implies,
  True,
  False,
  Let,  // args = bound terms followed by the body; names in let_names
};

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
  Op op = Op::IntConst;
  Sort sort = Sort::Int;
  int64_t value = 0;
  std::string symbol;
  std::vector<TermPtr> args;
  std::vector<std::string> let_names;
  TermPtr target;
  bool constant = false;  // integer term without variables
};

struct Declaration {
  std::string name;
  Sort sort = Sort::Int;
  friend bool operator==(const Declaration&, const Declaration&) = default;
};

struct SoftAssertion {
  TermPtr term;
  int64_t weight = 1;
  std::string id;
};

struct ParsedScript {
  std::string logic;
  std::vector<Declaration> declarations;
  std::vector<TermPtr> hard;
  std::vector<SoftAssertion> soft;
  std::vector<std::string> warnings;

  const Declaration* find(const std::string& name) const {
    if (index_.size() != declarations.size()) {
      index_.clear();
      for (size_t i = 0; i < declarations.size(); ++i) index_[declarations[i].name] = i;
    }
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &declarations[it->second];
  }

 private:
  mutable std::unordered_map<std::string, size_t> index_;
};

namespace detail {

inline TermPtr make(Term t) { return std::make_shared<const Term>(std::move(t)); }

inline TermPtr int_const(int64_t v) {
  Term t;
  t.op = Op::IntConst;
  t.sort = Sort::Int;
  t.value = v;
  t.constant = true;
  return make(std::move(t));
}

inline TermPtr var(const std::string& name, Sort sort) {
  Term t;
  t.op = Op::Var;
  t.sort = sort;
  t.symbol = name;
  return make(std::move(t));
}

inline TermPtr node(Op op, Sort sort, std::vector<TermPtr> args) {
  Term t;
  t.op = op;
  t.sort = sort;
  t.constant = sort == Sort::Int &&
               std::all_of(args.begin(), args.end(), [](const TermPtr& a) { return a->constant; });
  t.args = std::move(args);
  return make(std::move(t));
}

class TermParser {
 public:
  explicit TermParser(ParsedScript& script) : script_(script) {}

  TermPtr parse(const Sexpr& e) {
    switch (e.kind) {
      case Sexpr::Kind::Numeral: return numeral(e);
      case Sexpr::Kind::Decimal:
        throw SmtError(ErrorKind::UnsupportedFeature, e.line, e.col, "real constant " + e.text);
      case Sexpr::Kind::String:
      case Sexpr::Kind::Keyword:
        throw SmtError(ErrorKind::MalformedSexpr, e.line, e.col, "unexpected " + e.text);
      case Sexpr::Kind::Symbol: return symbol(e);
      case Sexpr::Kind::List: return list(e);
    }
    throw SmtError(ErrorKind::MalformedSexpr, e.line, e.col, "bad term");
  }

 private:
  static TermPtr numeral(const Sexpr& e) {
    int64_t v = 0;
    const auto* first = e.text.data();
    const auto* last = first + e.text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
      throw SmtError(ErrorKind::MalformedSexpr, e.line, e.col, "numeral out of range: " + e.text);
    return int_const(v);
  }

  TermPtr symbol(const Sexpr& e) {
    if (e.text == "true" || e.text == "false") {
      Term t;
      t.op = e.text == "true" ? Op::True : Op::False;
      t.sort = Sort::Bool;
      return make(std::move(t));
    }
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      if (auto f = it->find(e.text); f != it->end()) {
        Term t;
        t.op = Op::BoundRef;
        t.sort = f->second->sort;
        t.symbol = e.text;
        t.target = f->second;
        t.constant = f->second->constant;
        return make(std::move(t));
      }
    }
    if (const auto* d = script_.find(e.text)) return var(d->name, d->sort);
    throw SmtError(ErrorKind::UnknownSymbol, e.line, e.col, e.text);
  }

  void expect_sort(const TermPtr& t, Sort s, const Sexpr& at) const {
    if (t->sort != s)
      throw SmtError(ErrorKind::SortError, at.line, at.col,
                     std::string("expected ") + (s == Sort::Int ? "Int" : "Bool") + " term");
  }

  std::vector<TermPtr> args_of(const Sexpr& e, Sort s, size_t min_args) {
    if (e.items.size() - 1 < min_args)
      throw SmtError(ErrorKind::MalformedSexpr, e.line, e.col,
                     "'" + e.items[0].text + "' needs at least " + std::to_string(min_args) +
                         " argument(s)");
    std::vector<TermPtr> out;
    for (size_t i = 1; i < e.items.size(); ++i) {
      out.push_back(parse(e.items[i]));
      expect_sort(out.back(), s, e.items[i]);
    }
    return out;
  }

  TermPtr let(const Sexpr& e) {
    if (e.items.size() != 3 || !e.items[1].is_list() || e.items[1].items.empty())
      throw SmtError(ErrorKind::MalformedSexpr, e.line, e.col, "malformed let");
    Term t;
    t.op = Op::Let;
    std::map<std::string, TermPtr> scope;
    for (const auto& b : e.items[1].items) {
      if (!b.is_list() || b.items.size() != 2 || b.items[0].kind != Sexpr::Kind::Symbol)
        throw SmtError(ErrorKind::MalformedSexpr, b.line, b.col, "malformed let binding");
      TermPtr bound = parse(b.items[1]);  // parallel binding: outer scope
      if (!scope.emplace(b.items[0].text, bound).second)
        throw SmtError(ErrorKind::MalformedSexpr, b.line, b.col,
                       "duplicate let binding " + b.items[0].text);
      t.let_names.push_back(b.items[0].text);
      t.args.push_back(std::move(bound));
    }
    scopes_.push_back(std::move(scope));
    TermPtr body = parse(e.items[2]);
    scopes_.pop_back();
    t.sort = body->sort;
    t.constant = body->constant;
    t.args.push_back(std::move(body));
    return make(std::move(t));
  }

  TermPtr list(const Sexpr& e) {
    if (e.items.empty()) throw SmtError(ErrorKind::MalformedSexpr, e.line, e.col, "empty term");
    const Sexpr& head = e.items[0];
    if (head.kind != Sexpr::Kind::Symbol)
      throw SmtError(ErrorKind::MalformedSexpr, head.line, head.col, "expected operator");
    const std::string& h = head.text;

    if (h == "let") return let(e);
    if (h == "!") {
      if (e.items.size() < 2)
        throw SmtError(ErrorKind::MalformedSexpr, e.line, e.col, "empty annotation");
      return parse(e.items[1]);
    }
    if (h == "+") return node(Op::Add, Sort::Int, args_of(e, Sort::Int, 1));
    if (h == "-") {
      auto args = args_of(e, Sort::Int, 1);
      if (args.size() == 1 && args[0]->op == Op::IntConst) {
        try {
          return int_const(checked::neg(args[0]->value));
        } catch (const OverflowError&) {
          throw SmtError(ErrorKind::MalformedSexpr, e.line, e.col, "numeral out of range");
        }
      }
      return node(Op::Sub, Sort::Int, std::move(args));
    }
    if (h == "*") {
      auto args = args_of(e, Sort::Int, 2);
      const auto vars = std::count_if(args.begin(), args.end(),
                                      [](const TermPtr& a) { return !a->constant; });
      if (vars > 1)
        throw SmtError(ErrorKind::NonlinearTerm, e.line, e.col, "product of non-constant terms");
      return node(Op::Mul, Sort::Int, std::move(args));
    }
    static const std::map<std::string, Op> kCompare{
        {"<=", Op::Le}, {"<", Op::Lt}, {">=", Op::Ge}, {">", Op::Gt}};
    if (auto it = kCompare.find(h); it != kCompare.end())
      return node(it->second, Sort::Bool, args_of(e, Sort::Int, 2));
    if (h == "=") {
      if (e.items.size() < 3)
        throw SmtError(ErrorKind::MalformedSexpr, e.line, e.col, "'=' needs two arguments");
      const TermPtr first = parse(e.items[1]);
      std::vector<TermPtr> args{first};
      for (size_t i = 2; i < e.items.size(); ++i) {
        args.push_back(parse(e.items[i]));
        expect_sort(args.back(), first->sort, e.items[i]);
      }
      return node(Op::Eq, Sort::Bool, std::move(args));
    }
    if (h == "not") {
      if (e.items.size() != 2)
        throw SmtError(ErrorKind::MalformedSexpr, e.line, e.col, "'not' takes one argument");
      return node(Op::Not, Sort::Bool, args_of(e, Sort::Bool, 1));
    }
    if (h == "and") return node(Op::And, Sort::Bool, args_of(e, Sort::Bool, 1));
    if (h == "or") return node(Op::Or, Sort::Bool, args_of(e, Sort::Bool, 1));
    if (h == "=>") return node(Op::Implies, Sort::Bool, args_of(e, Sort::Bool, 2));

    static const std::set<std::string> kRejected{
        "ite", "div", "mod", "abs", "distinct", "xor", "/", "to_real", "to_int", "is_int",
        "forall", "exists", "select", "store"};
    if (kRejected.count(h))
      throw SmtError(ErrorKind::UnsupportedFeature, head.line, head.col, "'" + h + "'");
    if (script_.find(h))
      throw SmtError(ErrorKind::UnsupportedFeature, head.line, head.col,
                     "function application of '" + h + "'");
    throw SmtError(ErrorKind::UnknownSymbol, head.line, head.col, h);
  }

  ParsedScript& script_;
  std::vector<std::map<std::string, TermPtr>> scopes_;
};

inline int64_t parse_weight(const Sexpr& w) {
  if (w.kind == Sexpr::Kind::Numeral || w.kind == Sexpr::Kind::Decimal) {
    std::string digits = w.text;
    if (w.kind == Sexpr::Kind::Decimal) {
      const auto dot = digits.find('.');
      if (digits.find_first_not_of('0', dot + 1) != std::string::npos)
        throw SmtError(ErrorKind::BadWeight, w.line, w.col, "non-integer weight " + w.text);
      digits.resize(dot);
    }
    int64_t v = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc() || ptr != digits.data() + digits.size())
      throw SmtError(ErrorKind::BadWeight, w.line, w.col, "weight out of range " + w.text);
    if (v < 1) throw SmtError(ErrorKind::BadWeight, w.line, w.col, "weight must be positive");
    return v;
  }
  if (w.is_list() && w.items.size() == 2 && w.items[0].is_symbol("-"))
    throw SmtError(ErrorKind::BadWeight, w.line, w.col, "weight must be positive");
  throw SmtError(ErrorKind::BadWeight, w.line, w.col, "weight must be an integer numeral");
}

}  // namespace detail

inline const std::set<std::string>& supported_logics() {
  static const std::set<std::string> kLogics{"QF_LIA", "QF_IDL", "QF_BOOL"};
  return kLogics;
}

/// Parses a script. Unsupported constructs and malformed input raise
/// SmtError with the offending position.
inline ParsedScript parse(std::string_view text) {
  ParsedScript script;
  detail::TermParser terms(script);
  for (const Sexpr& cmd : SexprReader(text).read_all()) {
    if (!cmd.is_list() || cmd.items.empty() || cmd.items[0].kind != Sexpr::Kind::Symbol)
      throw SmtError(ErrorKind::MalformedSexpr, cmd.line, cmd.col, "expected a command");
    const std::string& name = cmd.items[0].text;
    auto arity = [&](size_t n) {
      if (cmd.items.size() != n + 1)
        throw SmtError(ErrorKind::MalformedSexpr, cmd.line, cmd.col,
                       "'" + name + "' takes " + std::to_string(n) + " argument(s)");
    };
    auto declare = [&](const Sexpr& sym, const Sexpr& sort) {
      if (sym.kind != Sexpr::Kind::Symbol)
        throw SmtError(ErrorKind::MalformedSexpr, sym.line, sym.col, "expected a symbol");
      Sort s;
      if (sort.is_symbol("Int"))
        s = Sort::Int;
      else if (sort.is_symbol("Bool"))
        s = Sort::Bool;
      else
        throw SmtError(ErrorKind::UnsupportedFeature, sort.line, sort.col, "sort " + sort.text);
      if (script.find(sym.text))
        throw SmtError(ErrorKind::SortError, sym.line, sym.col, "redeclared " + sym.text);
      script.declarations.push_back({sym.text, s});
    };

    if (name == "set-logic") {
      arity(1);
      const std::string& logic = cmd.items[1].text;
      if (!supported_logics().count(logic))
        throw SmtError(ErrorKind::UnsupportedLogic, cmd.items[1].line, cmd.items[1].col, logic);
      script.logic = logic;
    } else if (name == "set-info" || name == "set-option") {
    } else if (name == "declare-const") {
      arity(2);
      declare(cmd.items[1], cmd.items[2]);
    } else if (name == "declare-fun") {
      arity(3);
      if (!cmd.items[2].is_list() || !cmd.items[2].items.empty())
        throw SmtError(ErrorKind::UnsupportedFeature, cmd.items[2].line, cmd.items[2].col,
                       "functions with arguments");
      declare(cmd.items[1], cmd.items[3]);
    } else if (name == "assert") {
      arity(1);
      TermPtr t = terms.parse(cmd.items[1]);
      if (t->sort != Sort::Bool)
        throw SmtError(ErrorKind::SortError, cmd.items[1].line, cmd.items[1].col,
                       "assertion is not Bool");
      script.hard.push_back(std::move(t));
    } else if (name == "assert-soft") {
      if (cmd.items.size() < 2)
        throw SmtError(ErrorKind::MalformedSexpr, cmd.line, cmd.col, "assert-soft needs a term");
      SoftAssertion s;
      s.term = terms.parse(cmd.items[1]);
      if (s.term->sort != Sort::Bool)
        throw SmtError(ErrorKind::SortError, cmd.items[1].line, cmd.items[1].col,
                       "assertion is not Bool");
      for (size_t i = 2; i < cmd.items.size(); i += 2) {
        const Sexpr& key = cmd.items[i];
        if (key.kind != Sexpr::Kind::Keyword || i + 1 >= cmd.items.size())
          throw SmtError(ErrorKind::MalformedSexpr, key.line, key.col, "expected :key value");
        if (key.text == ":weight")
          s.weight = detail::parse_weight(cmd.items[i + 1]);
        else if (key.text == ":id")
          s.id = cmd.items[i + 1].text;
        else
          throw SmtError(ErrorKind::UnsupportedFeature, key.line, key.col, key.text);
      }
      script.soft.push_back(std::move(s));
    } else if (name == "check-sat" || name == "exit") {
    } else if (name == "get-model" || name == "get-objectives" || name == "get-value" ||
               name == "get-info" || name == "get-assignment" || name == "echo") {
      script.warnings.push_back(std::to_string(cmd.line) + ":" + std::to_string(cmd.col) +
                                ": ignoring " + name);
    } else {
      throw SmtError(ErrorKind::UnsupportedFeature, cmd.line, cmd.col, "command " + name);
    }
  }
  return script;
}

inline ParsedScript parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

// ---------------------------------------------------------------------------
// Linear expressions and atoms

/// Variables keyed by name with their coefficients, plus a constant.
struct LinearExpr {
  std::map<std::string, int64_t> coefs;
  int64_t constant = 0;

  void add(const LinearExpr& o, int64_t factor) {
    for (const auto& [v, c] : o.coefs) {
      int64_t& slot = coefs[v];
      slot = checked::add(slot, checked::mul(c, factor));
      if (slot == 0) coefs.erase(v);
    }
    constant = checked::add(constant, checked::mul(o.constant, factor));
  }
};

class Linearizer {
 public:
  const LinearExpr& operator()(const TermPtr& t) {
    if (auto it = memo_.find(t.get()); it != memo_.end()) return it->second;
    LinearExpr e;
    switch (t->op) {
      case Op::IntConst: e.constant = t->value; break;
      case Op::Var: e.coefs[t->symbol] = 1; break;
      case Op::BoundRef: e = (*this)(t->target); break;
      case Op::Let: e = (*this)(t->args.back()); break;
      case Op::Add:
        for (const auto& a : t->args) e.add((*this)(a), 1);
        break;
      case Op::Sub:
        if (t->args.size() == 1) {
          e.add((*this)(t->args[0]), -1);
        } else {
          e.add((*this)(t->args[0]), 1);
          for (size_t i = 1; i < t->args.size(); ++i) e.add((*this)(t->args[i]), -1);
        }
        break;
      case Op::Mul: {
        int64_t factor = 1;
        const LinearExpr* var_part = nullptr;
        for (const auto& a : t->args) {
          const LinearExpr& x = (*this)(a);
          if (x.coefs.empty())
            factor = checked::mul(factor, x.constant);
          else
            var_part = &x;
        }
        if (var_part)
          e.add(*var_part, factor);
        else
          e.constant = factor;
        break;
      }
      default: throw std::logic_error("linearize: not an integer term");
    }
    return memo_.emplace(t.get(), std::move(e)).first->second;
  }

 private:
  std::unordered_map<const Term*, LinearExpr> memo_;
};

/// Normalized comparison `sum(coefs) <= bound` or `sum(coefs) = bound` over
/// variable names; equalities are sign-canonical.
struct NamedAtom {
  std::map<std::string, int64_t> coefs;
  int64_t bound = 0;
  Relation rel = Relation::Le;
  friend bool operator==(const NamedAtom&, const NamedAtom&) = default;
};

/// The atoms of a (possibly chained) integer comparison, in chain order.
inline std::vector<NamedAtom> comparison_atoms(const Term& cmp, Linearizer& lin) {
  std::vector<NamedAtom> out;
  for (size_t i = 0; i + 1 < cmp.args.size(); ++i) {
    LinearExpr d = lin(cmp.args[i]);
    d.add(lin(cmp.args[i + 1]), -1);  // lhs - rhs
    NamedAtom a;
    switch (cmp.op) {
      case Op::Le:
        a.coefs = d.coefs;
        a.bound = checked::neg(d.constant);
        break;
      case Op::Lt:
        a.coefs = d.coefs;
        a.bound = checked::sub(checked::neg(d.constant), 1);
        break;
      case Op::Ge:
        for (const auto& [v, c] : d.coefs) a.coefs[v] = checked::neg(c);
        a.bound = d.constant;
        break;
      case Op::Gt:
        for (const auto& [v, c] : d.coefs) a.coefs[v] = checked::neg(c);
        a.bound = checked::sub(d.constant, 1);
        break;
      case Op::Eq:
        a.rel = Relation::Eq;
        a.coefs = d.coefs;
        a.bound = checked::neg(d.constant);
        if (!a.coefs.empty() && a.coefs.begin()->second < 0) {
          for (auto& [v, c] : a.coefs) c = checked::neg(c);
          a.bound = checked::neg(a.bound);
        }
        break;
      default: throw std::logic_error("not a comparison");
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline bool is_int_comparison(const Term& t) {
  switch (t.op) {
    case Op::Le:
    case Op::Lt:
    case Op::Ge:
    case Op::Gt: return true;
    case Op::Eq: return t.args.front()->sort == Sort::Int;
    default: return false;
  }
}

/// Canonical term for an atom: `(<= sum k)` or `(= sum k)` with
/// `(* c x)` summands (plain `x` when c = 1) in name order.
inline TermPtr atom_term(const NamedAtom& a) {
  std::vector<TermPtr> summands;
  for (const auto& [v, c] : a.coefs) {
    TermPtr x = detail::var(v, Sort::Int);
    summands.push_back(c == 1 ? x : detail::node(Op::Mul, Sort::Int, {detail::int_const(c), x}));
  }
  TermPtr sum;
  if (summands.empty())
    sum = detail::int_const(0);
  else if (summands.size() == 1)
    sum = summands.front();
  else
    sum = detail::node(Op::Add, Sort::Int, std::move(summands));
  return detail::node(a.rel == Relation::Le ? Op::Le : Op::Eq, Sort::Bool,
                      {sum, detail::int_const(a.bound)});
}

/// Distinct arithmetic atoms of the script's assertions in first-occurrence
/// order, compared structurally after normalization. Atoms without
/// variables are skipped.
inline std::vector<NamedAtom> collect_atoms(const ParsedScript& script) {
  std::vector<NamedAtom> out;
  Linearizer lin;
  std::set<const Term*> seen;
  auto walk = [&](auto&& self, const TermPtr& t) -> void {
    if (!seen.insert(t.get()).second) return;
    if (is_int_comparison(*t)) {
      for (auto& a : comparison_atoms(*t, lin))
        if (!a.coefs.empty() && std::find(out.begin(), out.end(), a) == out.end())
          out.push_back(std::move(a));
      return;
    }
    if (t->sort == Sort::Int) return;
    if (t->target) self(self, t->target);
    for (const auto& a : t->args) self(self, a);
  };
  for (const auto& t : script.hard) walk(walk, t);
  for (const auto& s : script.soft) walk(walk, s.term);
  return out;
}

// ---------------------------------------------------------------------------
// CNF conversion

namespace detail {

struct BoolNode;
using NodePtr = std::shared_ptr<const BoolNode>;

// Negation normal form with literals at the leaves.
struct BoolNode {
  enum class Kind { Lit, Const, And, Or };
  Kind kind = Kind::Const;
  std::optional<Literal> lit;
  bool value = false;
  std::vector<NodePtr> kids;
};

inline NodePtr make_const(bool v) {
  auto n = std::make_shared<BoolNode>();
  n->kind = BoolNode::Kind::Const;
  n->value = v;
  return n;
}

inline NodePtr make_lit(Literal l) {
  auto n = std::make_shared<BoolNode>();
  n->kind = BoolNode::Kind::Lit;
  n->lit = std::move(l);
  return n;
}

// Flattening n-ary and/or with constant simplification.
inline NodePtr make_junction(BoolNode::Kind kind, const std::vector<NodePtr>& kids) {
  const bool absorbing = kind == BoolNode::Kind::Or;  // true absorbs or, false absorbs and
  auto n = std::make_shared<BoolNode>();
  n->kind = kind;
  for (const auto& k : kids) {
    if (k->kind == BoolNode::Kind::Const) {
      if (k->value == absorbing) return make_const(absorbing);
      continue;
    }
    if (k->kind == kind)
      n->kids.insert(n->kids.end(), k->kids.begin(), k->kids.end());
    else
      n->kids.push_back(k);
  }
  if (n->kids.empty()) return make_const(!absorbing);
  if (n->kids.size() == 1) return n->kids.front();
  return n;
}

class CnfBuilder {
 public:
  explicit CnfBuilder(const ParsedScript& script) {
    for (const auto& d : script.declarations) names_.insert(d.name);
    for (const auto& d : script.declarations) {
      if (d.sort == Sort::Int)
        int_index_[d.name] = formula_.add_int_var(d.name);
      else
        bool_index_[d.name] = formula_.add_bool_var(d.name);
    }
  }

  void add_hard(const TermPtr& t) {
    for (auto& c : clauses_of(nnf(t, true))) formula_.add_hard(std::move(c));
  }

  void add_soft(const TermPtr& t, int64_t weight) {
    auto clauses = clauses_of(nnf(t, true));
    if (clauses.size() == 1) {
      formula_.add_soft(std::move(clauses.front()), weight);
      return;
    }
    if (clauses.empty()) {  // tautology: a soft clause that always holds
      formula_.add_soft({false_literal().negate()}, weight);
      return;
    }
    const uint32_t z = fresh_bool();
    for (auto& c : clauses) {
      c.insert(c.begin(), Literal::boolean(z, true));
      formula_.add_hard(std::move(c));
    }
    formula_.add_soft({Literal::boolean(z)}, weight);
  }

  Formula take() { return std::move(formula_); }

 private:
  using ClauseList = std::vector<std::vector<Literal>>;

  uint32_t fresh_bool() {
    std::string name;
    do {
      name = "__pairls_aux" + std::to_string(aux_counter_++);
    } while (names_.count(name));
    names_.insert(name);
    return formula_.add_bool_var(name);
  }

  // A boolean variable forced false by a hard unit clause.
  Literal false_literal() {
    if (!false_var_) {
      false_var_ = fresh_bool();
      formula_.add_hard({Literal::boolean(*false_var_, true)});
    }
    return Literal::boolean(*false_var_);
  }

  Literal to_literal(const NamedAtom& a) const {
    std::vector<LinearTerm> terms;
    for (const auto& [v, c] : a.coefs) terms.push_back({int_index_.at(v), c});
    return a.rel == Relation::Le ? Literal::le(std::move(terms), a.bound)
                                 : Literal::eq(std::move(terms), a.bound);
  }

  NodePtr atom_node(const NamedAtom& a, bool positive) const {
    if (a.coefs.empty()) {
      const bool holds = a.rel == Relation::Le ? 0 <= a.bound : 0 == a.bound;
      return make_const(holds == positive);
    }
    Literal l = to_literal(a);
    return make_lit(positive ? l : l.negate());
  }

  NodePtr iff(const TermPtr& a, const TermPtr& b, bool positive) {
    using K = BoolNode::Kind;
    if (positive)
      return make_junction(K::And, {make_junction(K::Or, {nnf(a, false), nnf(b, true)}),
                                    make_junction(K::Or, {nnf(a, true), nnf(b, false)})});
    return make_junction(K::And, {make_junction(K::Or, {nnf(a, true), nnf(b, true)}),
                                  make_junction(K::Or, {nnf(a, false), nnf(b, false)})});
  }

  NodePtr nnf(const TermPtr& t, bool positive) {
    const auto key = std::make_pair(t.get(), positive);
    if (auto it = nnf_memo_.find(key); it != nnf_memo_.end()) return it->second;
    using K = BoolNode::Kind;
    NodePtr out;
    switch (t->op) {
      case Op::True: out = make_const(positive); break;
      case Op::False: out = make_const(!positive); break;
      case Op::Var: out = make_lit(Literal::boolean(bool_index_.at(t->symbol), !positive)); break;
      case Op::BoundRef: out = nnf(t->target, positive); break;
      case Op::Let: out = nnf(t->args.back(), positive); break;
      case Op::Not: out = nnf(t->args[0], !positive); break;
      case Op::And:
      case Op::Or: {
        std::vector<NodePtr> kids;
        for (const auto& a : t->args) kids.push_back(nnf(a, positive));
        const bool conj = (t->op == Op::And) == positive;
        out = make_junction(conj ? K::And : K::Or, kids);
        break;
      }
      case Op::Implies: {  // right-associative: premises imply the last argument
        std::vector<NodePtr> kids;
        for (size_t i = 0; i + 1 < t->args.size(); ++i) kids.push_back(nnf(t->args[i], !positive));
        kids.push_back(nnf(t->args.back(), positive));
        out = make_junction(positive ? K::Or : K::And, kids);
        break;
      }
      case Op::Eq:
        if (t->args.front()->sort == Sort::Bool) {
          std::vector<NodePtr> kids;
          for (size_t i = 0; i + 1 < t->args.size(); ++i)
            kids.push_back(iff(t->args[i], t->args[i + 1], positive));
          out = make_junction(positive ? K::And : K::Or, kids);
          break;
        }
        [[fallthrough]];
      case Op::Le:
      case Op::Lt:
      case Op::Ge:
      case Op::Gt: {
        std::vector<NodePtr> kids;
        for (const auto& a : comparison_atoms(*t, lin_)) kids.push_back(atom_node(a, positive));
        out = make_junction(positive ? K::And : K::Or, kids);
        break;
      }
      default: throw std::logic_error("nnf: not a Bool term");
    }
    nnf_memo_.emplace(key, out);
    return out;
  }

  // Clauses implied by the node (positive polarity only).
  ClauseList clauses_of(const NodePtr& n) {
    using K = BoolNode::Kind;
    switch (n->kind) {
      case K::Const:
        if (n->value) return {};
        return {{false_literal()}};
      case K::Lit: return {{*n->lit}};
      case K::And: {
        ClauseList out;
        for (const auto& k : n->kids)
          for (auto& c : clauses_of(k)) out.push_back(std::move(c));
        return out;
      }
      case K::Or: {
        std::vector<Literal> clause;
        for (const auto& k : n->kids)
          clause.push_back(k->kind == K::Lit ? *k->lit : name(k));
        return {std::move(clause)};
      }
    }
    return {};
  }

  // Fresh z with hard clauses z -> node.
  Literal name(const NodePtr& n) {
    if (auto it = names_memo_.find(n.get()); it != names_memo_.end()) return it->second.second;
    const uint32_t z = fresh_bool();
    for (auto& c : clauses_of(n)) {
      c.insert(c.begin(), Literal::boolean(z, true));
      formula_.add_hard(std::move(c));
    }
    Literal l = Literal::boolean(z);
    names_memo_.emplace(n.get(), std::make_pair(n, l));
    return l;
  }

  Formula formula_;
  std::set<std::string> names_;
  std::map<std::string, uint32_t> int_index_;
  std::map<std::string, uint32_t> bool_index_;
  std::map<std::pair<const Term*, bool>, NodePtr> nnf_memo_;
  std::map<const BoolNode*, std::pair<NodePtr, Literal>> names_memo_;
  Linearizer lin_;
  std::optional<uint32_t> false_var_;
  uint64_t aux_counter_ = 0;
};

}  // namespace detail

/// Clause form of the script. Hard assertions become hard clauses; a soft
/// assertion that is a single clause becomes one soft clause, any other soft
/// assertion a soft unit clause on a fresh variable z plus hard clauses for
/// z -> assertion. Nested structure is named by fresh variables with
/// one-directional (positive polarity) definitions, all hard.
inline Formula to_cnf(const ParsedScript& script) {
  detail::CnfBuilder b(script);
  try {
    for (const auto& t : script.hard) b.add_hard(t);
    for (const auto& s : script.soft) b.add_soft(s.term, s.weight);
  } catch (const OverflowError& e) {
    throw SmtError(ErrorKind::UnsupportedFeature, 0, 0, e.what());
  }
  return b.take();
}

// ---------------------------------------------------------------------------
// Emission

namespace detail {

inline std::string quote_symbol(const std::string& s) {
  static const std::string kExtra = "~!@$%^&*_-+=<>.?/";
  const bool simple =
      !s.empty() && !std::isdigit(static_cast<unsigned char>(s[0])) &&
      std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || kExtra.find(c) != std::string::npos;
      });
  return simple ? s : "|" + s + "|";
}

inline std::string int_text(int64_t v) {
  if (v >= 0) return std::to_string(v);
  // magnitude of INT64_MIN does not fit; print the digits directly
  std::string digits = std::to_string(v).substr(1);
  return "(- " + digits + ")";
}

inline const char* op_name(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Le: return "<=";
    case Op::Lt: return "<";
    case Op::Ge: return ">=";
    case Op::Gt: return ">";
    case Op::Eq: return "=";
    case Op::Not: return "not";
    case Op::And: return "and";
    case Op::Or: return "or";
    case Op::Implies: return "=>";
    default: return "?";
  }
}

inline void emit_term(std::ostream& os, const Term& t) {
  switch (t.op) {
    case Op::IntConst: os << int_text(t.value); return;
    case Op::Var:
    case Op::BoundRef: os << quote_symbol(t.symbol); return;
    case Op::True: os << "true"; return;
    case Op::False: os << "false"; return;
    case Op::Let:
      os << "(let (";
      for (size_t i = 0; i < t.let_names.size(); ++i) {
        if (i) os << ' ';
        os << '(' << quote_symbol(t.let_names[i]) << ' ';
        emit_term(os, *t.args[i]);
        os << ')';
      }
      os << ") ";
      emit_term(os, *t.args.back());
      os << ')';
      return;
    default:
      os << '(' << op_name(t.op);
      for (const auto& a : t.args) {
        os << ' ';
        emit_term(os, *a);
      }
      os << ')';
  }
}

inline std::string sort_name(Sort s) { return s == Sort::Int ? "Int" : "Bool"; }

}  // namespace detail

inline std::string emit_term(const Term& t) {
  std::ostringstream os;
  detail::emit_term(os, t);
  return os.str();
}

/// Canonical text: logic, declarations sorted by name, one assertion per
/// line, then `(check-sat)`.
inline std::string emit(const ParsedScript& s) {
  std::ostringstream os;
  if (!s.logic.empty()) os << "(set-logic " << s.logic << ")\n";
  auto decls = s.declarations;
  std::sort(decls.begin(), decls.end(),
            [](const Declaration& a, const Declaration& b) { return a.name < b.name; });
  for (const auto& d : decls)
    os << "(declare-fun " << detail::quote_symbol(d.name) << " () " << detail::sort_name(d.sort)
       << ")\n";
  for (const auto& t : s.hard) os << "(assert " << emit_term(*t) << ")\n";
  for (const auto& a : s.soft) {
    os << "(assert-soft " << emit_term(*a.term) << " :weight " << a.weight;
    if (!a.id.empty()) os << " :id " << detail::quote_symbol(a.id);
    os << ")\n";
  }
  os << "(check-sat)\n";
  return os.str();
}

inline std::string emit_literal(const Formula& f, const Literal& l) {
  std::ostringstream os;
  if (const auto* b = l.bool_var()) {
    const std::string name = detail::quote_symbol(f.bool_name(b->index));
    return l.negated() ? "(not " + name + ")" : name;
  }
  const auto* a = l.atom();
  std::vector<std::string> summands;
  for (const auto& t : a->terms) {
    const std::string x = detail::quote_symbol(f.int_name(t.var));
    summands.push_back(t.coef == 1 ? x : "(* " + detail::int_text(t.coef) + " " + x + ")");
  }
  std::string sum;
  if (summands.empty()) {
    sum = "0";
  } else if (summands.size() == 1) {
    sum = summands.front();
  } else {
    sum = "(+";
    for (const auto& s : summands) sum += " " + s;
    sum += ")";
  }
  os << '(' << (a->rel == Relation::Le ? "<=" : "=") << ' ' << sum << ' '
     << detail::int_text(a->bound) << ')';
  return l.negated() ? "(not " + os.str() + ")" : os.str();
}

/// Clause model as SMT-LIB, including auxiliary variables.
inline std::string emit(const Formula& f) {
  std::ostringstream os;
  os << "(set-logic QF_LIA)\n";
  std::vector<std::pair<std::string, Sort>> decls;
  for (uint32_t v = 0; v < f.num_int_vars(); ++v) decls.emplace_back(f.int_name(v), Sort::Int);
  for (uint32_t v = 0; v < f.num_bool_vars(); ++v) decls.emplace_back(f.bool_name(v), Sort::Bool);
  std::sort(decls.begin(), decls.end());
  for (const auto& [name, sort] : decls)
    os << "(declare-fun " << detail::quote_symbol(name) << " () " << detail::sort_name(sort)
       << ")\n";
  auto clause_text = [&](const Clause& c) {
    if (c.literals.size() == 1) return emit_literal(f, c.literals.front());
    std::string body = "(or";
    for (const auto& l : c.literals) body += " " + emit_literal(f, l);
    return body + ")";
  };
  // hard clauses first, the order in which to_cnf reads them back
  for (const auto& c : f.clauses())
    if (c.is_hard()) os << "(assert " << clause_text(c) << ")\n";
  for (const auto& c : f.clauses())
    if (c.is_soft()) os << "(assert-soft " << clause_text(c) << " :weight " << c.weight << ")\n";
  os << "(check-sat)\n";
  return os.str();
}

inline bool structurally_equal(const Term& a, const Term& b) {
  if (a.op != b.op || a.sort != b.sort || a.value != b.value || a.symbol != b.symbol ||
      a.let_names != b.let_names || a.args.size() != b.args.size())
    return false;
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!structurally_equal(*a.args[i], *b.args[i])) return false;
  return true;
}

/// Equality up to declaration order, warnings and set-info.
inline bool structurally_equal(const ParsedScript& a, const ParsedScript& b) {
  if (a.logic != b.logic || a.hard.size() != b.hard.size() || a.soft.size() != b.soft.size())
    return false;
  auto sorted = [](std::vector<Declaration> d) {
    std::sort(d.begin(), d.end(),
              [](const Declaration& x, const Declaration& y) { return x.name < y.name; });
    return d;
  };
  if (sorted(a.declarations) != sorted(b.declarations)) return false;
  for (size_t i = 0; i < a.hard.size(); ++i)
    if (!structurally_equal(*a.hard[i], *b.hard[i])) return false;
  for (size_t i = 0; i < a.soft.size(); ++i)
    if (a.soft[i].weight != b.soft[i].weight || a.soft[i].id != b.soft[i].id ||
        !structurally_equal(*a.soft[i].term, *b.soft[i].term))
      return false;
  return true;
}

}  // namespace pairls::smtlib

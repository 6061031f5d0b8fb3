#pragma once

// Formula and assignment model for weighted partial MaxSAT modulo linear
// integer arithmetic: atoms are `sum(a_i * x_i) <= k`, `sum(a_i * x_i) = k`
// or boolean variables; clauses are hard or soft (with a positive weight).

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pairls/checked.hpp"

namespace pairls {

enum class VarKind : uint8_t { Integer, Boolean };

struct VariableId {
  uint32_t index = 0;
  VarKind kind = VarKind::Integer;
  friend bool operator==(const VariableId&, const VariableId&) = default;
};

enum class Relation : uint8_t { Le, Eq };

struct LinearTerm {
  uint32_t var = 0;  // integer variable index
  int64_t coef = 0;
  friend bool operator==(const LinearTerm&, const LinearTerm&) = default;
};

/// sum(terms) <= bound, or sum(terms) = bound. Terms are sorted by variable,
/// with no duplicates and no zero coefficients.
struct LinearAtom {
  std::vector<LinearTerm> terms;
  int64_t bound = 0;
  Relation rel = Relation::Le;

  /// Coefficient of `var`, or 0 when absent.
  int64_t coef_of(uint32_t var) const {
    auto it = std::lower_bound(terms.begin(), terms.end(), var,
                               [](const LinearTerm& t, uint32_t v) { return t.var < v; });
    return (it != terms.end() && it->var == var) ? it->coef : 0;
  }

  int64_t eval_sum(const std::vector<int64_t>& ints) const {
    int64_t s = 0;
    for (const auto& t : terms) s = checked::add(s, checked::mul(t.coef, ints[t.var]));
    return s;
  }

  friend bool operator==(const LinearAtom&, const LinearAtom&) = default;
};

struct BoolVar {
  uint32_t index = 0;
  friend bool operator==(const BoolVar&, const BoolVar&) = default;
};

/// A possibly negated atom. Construction through the factories keeps the
/// normal form: `not (s <= k)` becomes `-s <= -k-1`, so negation survives only
/// on equalities and boolean variables.
class Literal {
 public:
  using Body = std::variant<LinearAtom, BoolVar>;

  static Literal le(std::vector<LinearTerm> terms, int64_t bound) {
    return Literal(LinearAtom{canonical_terms(std::move(terms)), bound, Relation::Le}, false);
  }

  /// Equalities are sign-canonical: the first coefficient is positive.
  static Literal eq(std::vector<LinearTerm> terms, int64_t bound, bool negated = false) {
    auto t = canonical_terms(std::move(terms));
    if (!t.empty() && t.front().coef < 0) {
      for (auto& term : t) term.coef = checked::neg(term.coef);
      bound = checked::neg(bound);
    }
    return Literal(LinearAtom{std::move(t), bound, Relation::Eq}, negated);
  }

  static Literal boolean(uint32_t var, bool negated = false) {
    return Literal(BoolVar{var}, negated);
  }

  Literal negate() const {
    if (const auto* a = atom(); a != nullptr && a->rel == Relation::Le) {
      std::vector<LinearTerm> terms = a->terms;
      for (auto& t : terms) t.coef = checked::neg(t.coef);
      return Literal(LinearAtom{std::move(terms), checked::sub(checked::neg(a->bound), 1),
                                Relation::Le},
                     false);
    }
    return Literal(body_, !negated_);
  }

  bool is_arith() const { return std::holds_alternative<LinearAtom>(body_); }
  bool is_bool() const { return std::holds_alternative<BoolVar>(body_); }
  bool is_le() const { return is_arith() && atom()->rel == Relation::Le; }
  bool negated() const { return negated_; }

  const LinearAtom* atom() const { return std::get_if<LinearAtom>(&body_); }
  const BoolVar* bool_var() const { return std::get_if<BoolVar>(&body_); }
  const Body& body() const { return body_; }

  /// Truth given the literal's current linear sum (arithmetic literals only).
  bool holds_for_sum(int64_t sum) const {
    const auto& a = std::get<LinearAtom>(body_);
    const bool raw = a.rel == Relation::Le ? sum <= a.bound : sum == a.bound;
    return raw != negated_;
  }

  friend bool operator==(const Literal&, const Literal&) = default;

 private:
  Literal(Body body, bool negated) : body_(std::move(body)), negated_(negated) {}

  static std::vector<LinearTerm> canonical_terms(std::vector<LinearTerm> terms) {
    std::sort(terms.begin(), terms.end(),
              [](const LinearTerm& a, const LinearTerm& b) { return a.var < b.var; });
    std::vector<LinearTerm> out;
    for (const auto& t : terms) {
      if (!out.empty() && out.back().var == t.var)
        out.back().coef = checked::add(out.back().coef, t.coef);
      else
        out.push_back(t);
    }
    std::erase_if(out, [](const LinearTerm& t) { return t.coef == 0; });
    return out;
  }

  Body body_;
  bool negated_ = false;
};

enum class ClauseKind : uint8_t { Hard, Soft };

/// Dynamic penalty weights live in the search state, not here.
struct Clause {
  std::vector<Literal> literals;
  ClauseKind kind = ClauseKind::Hard;
  int64_t weight = 0;  // original weight; 0 for hard clauses

  bool is_hard() const { return kind == ClauseKind::Hard; }
  bool is_soft() const { return kind == ClauseKind::Soft; }
};

class FormulaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Immutable once built. Duplicate literals inside a clause are dropped on
/// insertion.
class Formula {
 public:
  uint32_t add_int_var(std::string name) {
    int_names_.push_back(std::move(name));
    return static_cast<uint32_t>(int_names_.size() - 1);
  }

  uint32_t add_bool_var(std::string name) {
    bool_names_.push_back(std::move(name));
    return static_cast<uint32_t>(bool_names_.size() - 1);
  }

  void add_hard(std::vector<Literal> lits) { add_clause(std::move(lits), ClauseKind::Hard, 0); }
  void add_soft(std::vector<Literal> lits, int64_t weight) {
    add_clause(std::move(lits), ClauseKind::Soft, weight);
  }

  void add_clause(std::vector<Literal> lits, ClauseKind kind, int64_t weight) {
    if (lits.empty()) throw FormulaError("empty clause");
    if (kind == ClauseKind::Soft && weight < 1) throw FormulaError("soft weight must be >= 1");
    if (kind == ClauseKind::Hard) weight = 0;
    std::vector<Literal> unique;
    for (auto& l : lits) {
      check_declared(l);
      if (std::find(unique.begin(), unique.end(), l) == unique.end()) unique.push_back(std::move(l));
    }
    clauses_.push_back(Clause{std::move(unique), kind, weight});
  }

  const std::vector<Clause>& clauses() const { return clauses_; }
  size_t num_int_vars() const { return int_names_.size(); }
  size_t num_bool_vars() const { return bool_names_.size(); }
  const std::string& int_name(uint32_t v) const { return int_names_[v]; }
  const std::string& bool_name(uint32_t v) const { return bool_names_[v]; }
  const std::string& name(VariableId id) const {
    return id.kind == VarKind::Integer ? int_names_[id.index] : bool_names_[id.index];
  }

  int64_t total_soft_weight() const {
    int64_t s = 0;
    for (const auto& c : clauses_) s = checked::add(s, c.weight);
    return s;
  }

  size_t num_soft() const {
    return static_cast<size_t>(std::count_if(clauses_.begin(), clauses_.end(),
                                             [](const Clause& c) { return c.is_soft(); }));
  }

 private:
  void check_declared(const Literal& l) const {
    if (const auto* a = l.atom()) {
      for (const auto& t : a->terms)
        if (t.var >= int_names_.size()) throw FormulaError("undeclared integer variable");
    } else if (l.bool_var()->index >= bool_names_.size()) {
      throw FormulaError("undeclared boolean variable");
    }
  }

  std::vector<Clause> clauses_;
  std::vector<std::string> int_names_;
  std::vector<std::string> bool_names_;
};

struct Assignment {
  std::vector<int64_t> ints;
  std::vector<bool> bools;

  static Assignment zero(const Formula& f) {
    return Assignment{std::vector<int64_t>(f.num_int_vars(), 0),
                      std::vector<bool>(f.num_bool_vars(), false)};
  }

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

inline bool eval_literal(const Literal& lit, const Assignment& a) {
  if (const auto* atom = lit.atom()) return lit.holds_for_sum(atom->eval_sum(a.ints));
  return a.bools[lit.bool_var()->index] != lit.negated();
}

/// sum(a_i * x_i) - k for a normalized `<=` literal; the literal holds iff
/// the result is <= 0.
inline int64_t delta(const Literal& lit, const Assignment& a) {
  if (!lit.is_le()) throw std::logic_error("delta is defined only for <= literals");
  const auto* atom = lit.atom();
  return checked::sub(atom->eval_sum(a.ints), atom->bound);
}

inline bool eval_clause(const Clause& c, const Assignment& a) {
  return std::any_of(c.literals.begin(), c.literals.end(),
                     [&](const Literal& l) { return eval_literal(l, a); });
}

/// Sum of original weights of falsified soft clauses, or nullopt when some
/// hard clause is falsified.
inline std::optional<int64_t> cost(const Formula& f, const Assignment& a) {
  int64_t total = 0;
  for (const auto& c : f.clauses()) {
    if (eval_clause(c, a)) continue;
    if (c.is_hard()) return std::nullopt;
    total = checked::add(total, c.weight);
  }
  return total;
}

}  // namespace pairls

#pragma once

// Incremental satisfaction state over a Formula: per-literal linear sums and
// truth values, per-clause true-literal counts with the unique true literal
// recoverable in O(1), dynamic penalty weights, and the falsified clause
// lists. Scores are computed by simulating a move over the occurrence lists of
// the touched variables without mutating the state.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pairls/checked.hpp"
#include "pairls/formula.hpp"

namespace pairls {

using ClauseId = uint32_t;
using LitId = uint32_t;
inline constexpr LitId kNoLiteral = UINT32_MAX;

/// Assign integer variable `var` to `value`; `target` is the literal the move
/// was derived from (kNoLiteral when built by hand).
struct CriticalMove {
  uint32_t var = 0;
  int64_t value = 0;
  LitId target = kNoLiteral;
  friend bool operator==(const CriticalMove&, const CriticalMove&) = default;
};

struct BoolFlip {
  uint32_t var = 0;
  friend bool operator==(const BoolFlip&, const BoolFlip&) = default;
};

/// Simultaneous assignment of two distinct integer variables. `compensated`
/// names the literal the second half was chosen to keep true.
struct PairMove {
  uint32_t var1 = 0;
  int64_t value1 = 0;
  uint32_t var2 = 0;
  int64_t value2 = 0;
  LitId compensated = kNoLiteral;
  friend bool operator==(const PairMove&, const PairMove&) = default;
};

using Operation = std::variant<CriticalMove, BoolFlip, PairMove>;

enum class Fragility : uint8_t { Fragile, Safe, NotTrue, Unclassified };

struct CompensatedLiteral {
  LitId literal = kNoLiteral;
  ClauseId clause = 0;
  friend bool operator==(const CompensatedLiteral&, const CompensatedLiteral&) = default;
};

class SatState {
 public:
  /// Penalties start at 1 for hard clauses and at the original weight for
  /// soft ones. `formula` must outlive the state.
  SatState(const Formula& formula, Assignment init)
      : formula_(&formula), assignment_(std::move(init)) {
    if (assignment_.ints.size() != formula.num_int_vars() ||
        assignment_.bools.size() != formula.num_bool_vars())
      throw FormulaError("assignment is not total");

    const auto& clauses = formula.clauses();
    clause_begin_.reserve(clauses.size() + 1);
    int_occ_.resize(formula.num_int_vars());
    bool_occ_.resize(formula.num_bool_vars());
    for (ClauseId c = 0; c < clauses.size(); ++c) {
      clause_begin_.push_back(static_cast<LitId>(lits_.size()));
      uint32_t n_int = 0, n_bool = 0;
      for (const auto& l : clauses[c].literals) {
        const auto id = static_cast<LitId>(lits_.size());
        lits_.push_back(&l);
        lit_clause_.push_back(c);
        if (const auto* a = l.atom()) {
          ++n_int;
          for (const auto& t : a->terms) int_occ_[t.var].push_back({id, t.coef});
        } else {
          ++n_bool;
          bool_occ_[l.bool_var()->index].push_back(id);
        }
      }
      clause_int_lits_.push_back(n_int);
      clause_bool_lits_.push_back(n_bool);
    }
    clause_begin_.push_back(static_cast<LitId>(lits_.size()));

    penalty_.resize(clauses.size());
    for (ClauseId c = 0; c < clauses.size(); ++c)
      penalty_[c] = clauses[c].is_hard() ? 1 : clauses[c].weight;

    lit_stamp_.assign(lits_.size(), 0);
    clause_stamp_.assign(clauses.size(), 0);
    clause_delta_.assign(clauses.size(), 0);
    rebuild();
  }

  const Formula& formula() const { return *formula_; }
  const Assignment& assignment() const { return assignment_; }
  int64_t int_value(uint32_t v) const { return assignment_.ints[v]; }
  bool bool_value(uint32_t v) const { return assignment_.bools[v]; }

  size_t num_clauses() const { return penalty_.size(); }
  size_t num_literals() const { return lits_.size(); }
  const Literal& literal(LitId l) const { return *lits_[l]; }
  ClauseId clause_of(LitId l) const { return lit_clause_[l]; }
  const Clause& clause(ClauseId c) const { return formula_->clauses()[c]; }
  LitId clause_begin(ClauseId c) const { return clause_begin_[c]; }
  LitId clause_end(ClauseId c) const { return clause_begin_[c + 1]; }
  uint32_t clause_int_literals(ClauseId c) const { return clause_int_lits_[c]; }
  uint32_t clause_bool_literals(ClauseId c) const { return clause_bool_lits_[c]; }

  bool literal_true(LitId l) const { return lit_true_[l] != 0; }
  int64_t literal_sum(LitId l) const { return lit_sum_[l]; }
  uint32_t true_count(ClauseId c) const { return true_count_[c]; }
  bool clause_satisfied(ClauseId c) const { return true_count_[c] > 0; }

  /// The unique true literal of `c`, if it has exactly one.
  std::optional<LitId> critical_literal(ClauseId c) const {
    if (true_count_[c] != 1) return std::nullopt;
    return true_xor_[c];
  }

  int64_t penalty(ClauseId c) const { return penalty_[c]; }

  /// Adjust a penalty weight; the result must stay >= 1.
  void add_penalty(ClauseId c, int64_t d) {
    const int64_t next = checked::add(penalty_[c], d);
    if (next < 1) throw std::logic_error("penalty weight must stay positive");
    penalty_[c] = next;
    if (true_count_[c] == 0) falsified_penalty_ = checked::add(falsified_penalty_, d);
  }

  /// Total penalty weight of falsified clauses, hard and soft.
  int64_t falsified_penalty() const { return falsified_penalty_; }

  std::span<const ClauseId> hard_falsified() const { return hard_false_; }
  std::span<const ClauseId> soft_falsified() const { return soft_false_; }
  size_t num_falsified() const { return hard_false_.size() + soft_false_.size(); }

  std::optional<int64_t> cost() const {
    if (!hard_false_.empty()) return std::nullopt;
    return soft_false_weight_;
  }

  /// Decrease of the falsified penalty caused by `op`.
  int64_t score(const Operation& op) const {
    simulate(op);
    int64_t s = 0;
    for (ClauseId c : touched_clauses_) s = checked::add(s, clause_gain(c));
    return s;
  }

  /// Score counted over `clauses` only.
  int64_t score_restricted(const Operation& op, std::span<const ClauseId> clauses) const {
    std::vector<ClauseId> set(clauses.begin(), clauses.end());
    std::sort(set.begin(), set.end());
    simulate(op);
    int64_t s = 0;
    for (ClauseId c : touched_clauses_)
      if (std::binary_search(set.begin(), set.end(), c)) s = checked::add(s, clause_gain(c));
    return s;
  }

  /// Critical literals that `op` alone would falsify. `op` must be a single
  /// variable move.
  std::vector<CompensatedLiteral> compensated_literals(const Operation& op) const {
    if (std::holds_alternative<PairMove>(op))
      throw std::logic_error("compensated_literals takes a single-variable move");
    simulate(op);
    std::vector<CompensatedLiteral> out;
    for (const auto& t : touched_lits_) {
      if (lit_true_[t.lit] && !t.truth && true_count_[lit_clause_[t.lit]] == 1)
        out.push_back({t.lit, lit_clause_[t.lit]});
    }
    return out;
  }

  /// Fragile: true `<=` literal at its bound, or a true equality. Safe: true
  /// `<=` literal strictly inside its bound. Negated equalities and boolean
  /// literals are Unclassified.
  Fragility classify(LitId l) const {
    if (!lit_true_[l]) return Fragility::NotTrue;
    const Literal& lit = *lits_[l];
    const auto* a = lit.atom();
    if (a == nullptr) return Fragility::Unclassified;
    if (a->rel == Relation::Le)
      return lit_sum_[l] == a->bound ? Fragility::Fragile : Fragility::Safe;
    return lit.negated() ? Fragility::Unclassified : Fragility::Fragile;
  }

  /// Commit `op`. Either the whole move is applied or, on overflow, nothing.
  void apply(const Operation& op) {
    simulate(op);
    int64_t gain = 0;
    for (ClauseId c : touched_clauses_) gain = checked::add(gain, clause_gain(c));
    const int64_t next_penalty = checked::sub(falsified_penalty_, gain);
    int64_t next_soft = soft_false_weight_;
    for (ClauseId c : touched_clauses_) {
      const uint32_t before = true_count_[c];
      const auto after = static_cast<uint32_t>(static_cast<int64_t>(before) + clause_delta_[c]);
      const int64_t w = clause(c).weight;
      if (before == 0 && after > 0) next_soft = checked::sub(next_soft, w);
      if (before > 0 && after == 0) next_soft = checked::add(next_soft, w);
    }

    for (const auto& t : touched_lits_) {
      lit_sum_[t.lit] = t.sum;
      if (static_cast<bool>(lit_true_[t.lit]) == t.truth) continue;
      lit_true_[t.lit] = t.truth;
      true_xor_[lit_clause_[t.lit]] ^= t.lit;
    }
    for (ClauseId c : touched_clauses_) {
      const uint32_t before = true_count_[c];
      const auto after = static_cast<uint32_t>(static_cast<int64_t>(before) + clause_delta_[c]);
      true_count_[c] = after;
      if (before == 0 && after > 0) unlink_falsified(c);
      if (before > 0 && after == 0) link_falsified(c);
    }
    falsified_penalty_ = next_penalty;
    soft_false_weight_ = next_soft;

    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, CriticalMove>) {
            assignment_.ints[o.var] = o.value;
          } else if constexpr (std::is_same_v<T, PairMove>) {
            assignment_.ints[o.var1] = o.value1;
            assignment_.ints[o.var2] = o.value2;
          } else {
            assignment_.bools[o.var] = !assignment_.bools[o.var];
          }
        },
        op);
  }

  /// Falsified penalty evaluated from scratch on the current assignment.
  int64_t recompute_falsified_penalty() const {
    int64_t total = 0;
    for (ClauseId c = 0; c < num_clauses(); ++c)
      if (!eval_clause(clause(c), assignment_)) total = checked::add(total, penalty_[c]);
    return total;
  }

  /// Full consistency check of every cached quantity against the assignment.
  /// Returns an empty string when consistent, otherwise a description.
  std::string validate() const {
    int64_t soft = 0;
    size_t hard_false = 0, soft_false = 0;
    for (ClauseId c = 0; c < num_clauses(); ++c) {
      uint32_t count = 0;
      uint32_t acc = 0;
      for (LitId l = clause_begin(c); l < clause_end(c); ++l) {
        const bool truth = eval_literal(*lits_[l], assignment_);
        if (truth != static_cast<bool>(lit_true_[l]))
          return "literal " + std::to_string(l) + " truth cache";
        if (const auto* a = lits_[l]->atom(); a && a->eval_sum(assignment_.ints) != lit_sum_[l])
          return "literal " + std::to_string(l) + " sum cache";
        if (truth) {
          ++count;
          acc ^= l;
        }
      }
      if (count != true_count_[c]) return "clause " + std::to_string(c) + " true count";
      if (acc != true_xor_[c]) return "clause " + std::to_string(c) + " critical accumulator";
      if (count == 0) {
        (clause(c).is_hard() ? hard_false : soft_false)++;
        soft = checked::add(soft, clause(c).weight);
        const auto& list = clause(c).is_hard() ? hard_false_ : soft_false_;
        if (false_pos_[c] >= list.size() || list[false_pos_[c]] != c)
          return "clause " + std::to_string(c) + " missing from falsified list";
      }
    }
    if (hard_false != hard_false_.size() || soft_false != soft_false_.size())
      return "falsified list size";
    if (soft != soft_false_weight_) return "falsified soft weight";
    if (recompute_falsified_penalty() != falsified_penalty_) return "falsified penalty";
    return {};
  }

 private:
  struct Occurrence {
    LitId lit;
    int64_t coef;
  };
  struct TouchedLiteral {
    LitId lit;
    int64_t sum;
    bool truth;
  };
  struct IntChange {
    uint32_t var;
    int64_t diff;
  };

  void rebuild() {
    const size_t nl = lits_.size(), nc = penalty_.size();
    lit_sum_.assign(nl, 0);
    lit_true_.assign(nl, 0);
    true_count_.assign(nc, 0);
    true_xor_.assign(nc, 0);
    false_pos_.assign(nc, 0);
    hard_false_.clear();
    soft_false_.clear();
    falsified_penalty_ = 0;
    soft_false_weight_ = 0;
    for (LitId l = 0; l < nl; ++l) {
      if (const auto* a = lits_[l]->atom()) lit_sum_[l] = a->eval_sum(assignment_.ints);
      lit_true_[l] = eval_literal(*lits_[l], assignment_);
      if (lit_true_[l]) {
        ++true_count_[lit_clause_[l]];
        true_xor_[lit_clause_[l]] ^= l;
      }
    }
    for (ClauseId c = 0; c < nc; ++c) {
      if (true_count_[c] > 0) continue;
      link_falsified(c);
      falsified_penalty_ = checked::add(falsified_penalty_, penalty_[c]);
      soft_false_weight_ = checked::add(soft_false_weight_, clause(c).weight);
    }
  }

  void link_falsified(ClauseId c) {
    auto& list = clause(c).is_hard() ? hard_false_ : soft_false_;
    false_pos_[c] = static_cast<uint32_t>(list.size());
    list.push_back(c);
  }

  void unlink_falsified(ClauseId c) {
    auto& list = clause(c).is_hard() ? hard_false_ : soft_false_;
    const ClauseId last = list.back();
    list[false_pos_[c]] = last;
    false_pos_[last] = false_pos_[c];
    list.pop_back();
  }

  int64_t clause_gain(ClauseId c) const {
    const int64_t before = true_count_[c];
    const int64_t after = before + clause_delta_[c];
    if (before == 0 && after > 0) return penalty_[c];
    if (before > 0 && after == 0) return -penalty_[c];
    return 0;
  }

  void next_stamp() const {
    if (++stamp_ == 0) {
      std::fill(lit_stamp_.begin(), lit_stamp_.end(), 0);
      std::fill(clause_stamp_.begin(), clause_stamp_.end(), 0);
      stamp_ = 1;
    }
  }

  void note_truth(LitId l, int64_t sum, bool truth) const {
    touched_lits_.push_back({l, sum, truth});
    if (truth == static_cast<bool>(lit_true_[l])) return;
    const ClauseId c = lit_clause_[l];
    if (clause_stamp_[c] != stamp_) {
      clause_stamp_[c] = stamp_;
      clause_delta_[c] = 0;
      touched_clauses_.push_back(c);
    }
    clause_delta_[c] += truth ? 1 : -1;
  }

  // Fills touched_lits_ / touched_clauses_ / clause_delta_ for `op`. Literals
  // containing both variables of a pair are evaluated once under the joint
  // change.
  void simulate(const Operation& op) const {
    next_stamp();
    touched_lits_.clear();
    touched_clauses_.clear();
    if (const auto* f = std::get_if<BoolFlip>(&op)) {
      for (LitId l : bool_occ_[f->var]) note_truth(l, 0, !lit_true_[l]);
      return;
    }
    IntChange changes[2];
    size_t n = 0;
    if (const auto* m = std::get_if<CriticalMove>(&op)) {
      changes[n++] = {m->var, checked::sub(m->value, assignment_.ints[m->var])};
    } else {
      const auto& p = std::get<PairMove>(op);
      if (p.var1 == p.var2) throw std::logic_error("pair move needs two distinct variables");
      changes[n++] = {p.var1, checked::sub(p.value1, assignment_.ints[p.var1])};
      changes[n++] = {p.var2, checked::sub(p.value2, assignment_.ints[p.var2])};
    }
    for (size_t i = 0; i < n; ++i) {
      for (const auto& occ : int_occ_[changes[i].var]) {
        if (lit_stamp_[occ.lit] == stamp_) continue;
        lit_stamp_[occ.lit] = stamp_;
        int64_t sum = checked::add(lit_sum_[occ.lit], checked::mul(occ.coef, changes[i].diff));
        for (size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          const int64_t other = lits_[occ.lit]->atom()->coef_of(changes[j].var);
          if (other != 0) sum = checked::add(sum, checked::mul(other, changes[j].diff));
        }
        note_truth(occ.lit, sum, lits_[occ.lit]->holds_for_sum(sum));
      }
    }
  }

  const Formula* formula_;
  Assignment assignment_;

  std::vector<const Literal*> lits_;
  std::vector<ClauseId> lit_clause_;
  std::vector<LitId> clause_begin_;
  std::vector<uint32_t> clause_int_lits_;
  std::vector<uint32_t> clause_bool_lits_;
  std::vector<std::vector<Occurrence>> int_occ_;
  std::vector<std::vector<LitId>> bool_occ_;

  std::vector<int64_t> lit_sum_;
  std::vector<uint8_t> lit_true_;
  std::vector<uint32_t> true_count_;
  std::vector<LitId> true_xor_;
  std::vector<int64_t> penalty_;
  std::vector<ClauseId> hard_false_;
  std::vector<ClauseId> soft_false_;
  std::vector<uint32_t> false_pos_;
  int64_t falsified_penalty_ = 0;
  int64_t soft_false_weight_ = 0;

  // Simulation scratch; a SatState is used from one thread at a time.
  mutable uint32_t stamp_ = 0;
  mutable std::vector<uint32_t> lit_stamp_;
  mutable std::vector<uint32_t> clause_stamp_;
  mutable std::vector<int32_t> clause_delta_;
  mutable std::vector<ClauseId> touched_clauses_;
  mutable std::vector<TouchedLiteral> touched_lits_;
};

}  // namespace pairls

#pragma once

// Exhaustive references used to check the search: the exact optimum over a
// bounded box, and the full compensation-derived pair neighbourhood of an
// assignment. Both evaluate clauses from scratch through formula.hpp and do
// not touch the incremental SatState.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pairls/checked.hpp"
#include "pairls/formula.hpp"
#include "pairls/score.hpp"

namespace pairls::oracle {

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inclusive bounds per integer variable; booleans range over both values.
struct DomainBox {
  std::vector<std::pair<int64_t, int64_t>> bounds;

  static DomainBox uniform(const Formula& f, int64_t lo, int64_t hi) {
    return DomainBox{std::vector<std::pair<int64_t, int64_t>>(f.num_int_vars(), {lo, hi})};
  }
};

struct OptimumResult {
  bool hard_feasible = false;
  int64_t optimum = 0;
  Assignment witness;
};

/// Minimum cost over every assignment in `box`. Throws BudgetExceeded when
/// the box holds more than `budget` assignments. The result is exact for the
/// box only; LIA optima may lie outside it.
inline OptimumResult brute_force_optimum(const Formula& f, const DomainBox& box,
                                         uint64_t budget = 10'000'000) {
  if (box.bounds.size() != f.num_int_vars()) throw std::invalid_argument("box arity mismatch");
  long double size = 1;
  for (const auto& [lo, hi] : box.bounds) {
    if (lo > hi) throw std::invalid_argument("empty box");
    size *= static_cast<long double>(hi) - lo + 1;
  }
  for (size_t i = 0; i < f.num_bool_vars(); ++i) size *= 2;
  if (size > budget) throw BudgetExceeded("enumeration exceeds budget");

  Assignment a;
  for (const auto& b : box.bounds) a.ints.push_back(b.first);
  a.bools.assign(f.num_bool_vars(), false);

  OptimumResult best;
  for (;;) {
    if (auto c = cost(f, a); c && (!best.hard_feasible || *c < best.optimum)) {
      best.hard_feasible = true;
      best.optimum = *c;
      best.witness = a;
    }
    // odometer: booleans first, then integers
    size_t i = 0;
    for (; i < a.bools.size(); ++i) {
      if (!a.bools[i]) {
        a.bools[i] = true;
        break;
      }
      a.bools[i] = false;
    }
    if (i < a.bools.size()) continue;
    size_t j = 0;
    for (; j < a.ints.size(); ++j) {
      if (a.ints[j] < box.bounds[j].second) {
        ++a.ints[j];
        break;
      }
      a.ints[j] = box.bounds[j].first;
    }
    if (j == a.ints.size()) break;
  }
  return best;
}

/// Sum of `penalties` over clauses falsified by `a`.
inline int64_t falsified_penalty(const Formula& f, const Assignment& a,
                                 const std::vector<int64_t>& penalties) {
  int64_t total = 0;
  for (size_t c = 0; c < f.clauses().size(); ++c)
    if (!eval_clause(f.clauses()[c], a)) total = checked::add(total, penalties[c]);
  return total;
}

/// Threshold value via the violation amount: for `s <= k` violated by
/// d = s - k > 0, move x by ceil(d / |a|) in the direction that lowers s.
inline std::vector<int64_t> threshold_values(const Literal& lit, uint32_t var,
                                             const Assignment& a) {
  const auto* atom = lit.atom();
  if (atom == nullptr || eval_literal(lit, a)) return {};
  const int64_t coef = atom->coef_of(var);
  if (coef == 0) return {};
  const int64_t x = a.ints[var];
  const int64_t excess = atom->eval_sum(a.ints) - atom->bound;
  if (atom->rel == Relation::Le) {
    const int64_t mag = coef > 0 ? coef : -coef;
    const int64_t step = (excess + mag - 1) / mag;
    return {coef > 0 ? x - step : x + step};
  }
  if (lit.negated()) return {x + 1, x - 1};
  if (excess % coef != 0) return {};
  return {x - excess / coef};
}

struct PairCandidate {
  PairMove op;
  int64_t score = 0;
  bool fragile = false;
};

struct PairNeighbourhood {
  std::vector<PairCandidate> all;
  std::optional<PairCandidate> best_fragile;  // max-score decreasing, fragile pool
  std::optional<PairCandidate> best_safe;     // max-score decreasing, safe pool
  std::optional<PairCandidate> best_overall;

  /// What the two-level pick must return (up to ties).
  const std::optional<PairCandidate>& two_level() const {
    return best_fragile ? best_fragile : best_safe;
  }
};

/// Every pair built from every critical move on every literal of the
/// falsified clauses in scope (hard clauses while any is falsified), with
/// each pair scored by full re-evaluation under `penalties`. Literal ids
/// follow clause order, as in SatState.
inline PairNeighbourhood brute_force_pair_neighborhood(const Formula& f, const Assignment& a,
                                                       const std::vector<int64_t>& penalties) {
  const auto& clauses = f.clauses();
  std::vector<const Literal*> lits;
  std::vector<size_t> owner;
  for (size_t c = 0; c < clauses.size(); ++c)
    for (const auto& l : clauses[c].literals) {
      lits.push_back(&l);
      owner.push_back(c);
    }
  auto true_count = [&](size_t c, const Assignment& x) {
    int n = 0;
    for (const auto& l : clauses[c].literals) n += eval_literal(l, x) ? 1 : 0;
    return n;
  };

  bool any_hard_false = false;
  for (const auto& c : clauses)
    if (c.is_hard() && !eval_clause(c, a)) any_hard_false = true;

  const int64_t base = falsified_penalty(f, a, penalties);
  PairNeighbourhood out;
  for (size_t l1 = 0; l1 < lits.size(); ++l1) {
    const Clause& c1 = clauses[owner[l1]];
    if (eval_clause(c1, a) || (any_hard_false && !c1.is_hard())) continue;
    const auto* atom1 = lits[l1]->atom();
    if (atom1 == nullptr) continue;
    for (const auto& t1 : atom1->terms) {
      for (int64_t val1 : threshold_values(*lits[l1], t1.var, a)) {
        Assignment after1 = a;
        after1.ints[t1.var] = val1;
        for (size_t l2 = 0; l2 < lits.size(); ++l2) {
          const auto* atom2 = lits[l2]->atom();
          if (atom2 == nullptr || atom2->coef_of(t1.var) == 0) continue;
          if (!eval_literal(*lits[l2], a) || eval_literal(*lits[l2], after1)) continue;
          if (true_count(owner[l2], a) != 1) continue;
          bool fragile;
          if (atom2->rel == Relation::Le)
            fragile = atom2->eval_sum(a.ints) == atom2->bound;
          else
            fragile = !lits[l2]->negated();
          for (const auto& t2 : atom2->terms) {
            if (t2.var == t1.var) continue;
            for (int64_t val2 : threshold_values(*lits[l2], t2.var, after1)) {
              if (val2 == a.ints[t2.var]) continue;
              Assignment joint = after1;
              joint.ints[t2.var] = val2;
              PairCandidate cand{PairMove{t1.var, val1, t2.var, val2, static_cast<LitId>(l2)},
                                 base - falsified_penalty(f, joint, penalties), fragile};
              out.all.push_back(cand);
              if (cand.score <= 0) continue;
              auto& slot = fragile ? out.best_fragile : out.best_safe;
              if (!slot || cand.score > slot->score) slot = cand;
              if (!out.best_overall || cand.score > out.best_overall->score)
                out.best_overall = cand;
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace pairls::oracle

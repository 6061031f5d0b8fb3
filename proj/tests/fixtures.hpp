#pragma once

// Shared formulas for the test suites: the worked examples and a random
// generator of small instances.

#include <cstdint>
#include <vector>

#include "pairls/formula.hpp"
#include "pairls/rng.hpp"

namespace pairls::testing {

inline Literal le(std::vector<LinearTerm> t, int64_t k) { return Literal::le(std::move(t), k); }

// F = (a-b<=1 | a-c<=0) & (b-c<=-1) & (a-d<=1) & (A); clauses 1 and 4 hard,
// clause 2 soft with weight 1, clause 3 soft with weight 2.
inline Formula example1() {
  Formula f;
  const auto a = f.add_int_var("a"), b = f.add_int_var("b"), c = f.add_int_var("c"),
             d = f.add_int_var("d");
  const auto A = f.add_bool_var("A");
  f.add_hard({le({{a, 1}, {b, -1}}, 1), le({{a, 1}, {c, -1}}, 0)});
  f.add_soft({le({{b, 1}, {c, -1}}, -1)}, 1);
  f.add_soft({le({{a, 1}, {d, -1}}, 1)}, 2);
  f.add_hard({Literal::boolean(A)});
  return f;
}

// F = (a-b<=-2) & (b-c<=1) & (c-a<=1), all hard.
inline Formula example3() {
  Formula f;
  const auto a = f.add_int_var("a"), b = f.add_int_var("b"), c = f.add_int_var("c");
  f.add_hard({le({{a, 1}, {b, -1}}, -2)});
  f.add_hard({le({{b, 1}, {c, -1}}, 1)});
  f.add_hard({le({{c, 1}, {a, -1}}, 1)});
  return f;
}

// F = (b-a<=-1) & (a-c<=0) & (a-d<=3), all hard.
inline Formula example5() {
  Formula f;
  const auto a = f.add_int_var("a"), b = f.add_int_var("b"), c = f.add_int_var("c"),
             d = f.add_int_var("d");
  f.add_hard({le({{b, 1}, {a, -1}}, -1)});
  f.add_hard({le({{a, 1}, {c, -1}}, 0)});
  f.add_hard({le({{a, 1}, {d, -1}}, 3)});
  return f;
}

struct RandomShape {
  int min_ints = 3, max_ints = 5;
  int min_bools = 0, max_bools = 2;
  int min_clauses = 4, max_clauses = 8;
  int max_lits = 3;
  int min_soft = 2, max_soft = 4;
  int max_weight = 10;
  int max_vars_per_atom = 3;
  int64_t coef_bound = 3;   // coefficients in [-b, b] \ {0}
  int64_t const_bound = 5;  // constants in [-b, b]
  bool equalities = true;   // also draw = and != atoms
};

inline Literal random_literal(Rng& rng, const RandomShape& s, uint32_t n_int, uint32_t n_bool) {
  if (n_bool > 0 && rng.below(5) == 0)
    return Literal::boolean(static_cast<uint32_t>(rng.below(n_bool)), rng.below(2) == 1);
  const auto n_vars = 1 + rng.below(std::min<uint64_t>(n_int, s.max_vars_per_atom));
  std::vector<uint32_t> vars;
  while (vars.size() < n_vars) {
    const auto v = static_cast<uint32_t>(rng.below(n_int));
    if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
  }
  std::vector<LinearTerm> terms;
  for (auto v : vars) {
    int64_t c = 0;
    while (c == 0) c = rng.between(-s.coef_bound, s.coef_bound);
    terms.push_back({v, c});
  }
  const int64_t k = rng.between(-s.const_bound, s.const_bound);
  if (s.equalities) {
    const auto r = rng.below(8);
    if (r == 0) return Literal::eq(std::move(terms), k);
    if (r == 1) return Literal::eq(std::move(terms), k, true);
  }
  return Literal::le(std::move(terms), k);
}

/// Random instance of the given shape; soft clauses come last.
inline Formula random_formula(Rng& rng, const RandomShape& s = {}) {
  Formula f;
  const auto n_int = static_cast<uint32_t>(rng.between(s.min_ints, s.max_ints));
  const auto n_bool = static_cast<uint32_t>(rng.between(s.min_bools, s.max_bools));
  for (uint32_t i = 0; i < n_int; ++i) f.add_int_var("x" + std::to_string(i));
  for (uint32_t i = 0; i < n_bool; ++i) f.add_bool_var("p" + std::to_string(i));
  const auto n_clauses = rng.between(s.min_clauses, s.max_clauses);
  const auto n_soft = std::min<int64_t>(rng.between(s.min_soft, s.max_soft), n_clauses);
  for (int64_t c = 0; c < n_clauses; ++c) {
    std::vector<Literal> lits;
    const auto n_lits = rng.between(1, s.max_lits);
    for (int64_t i = 0; i < n_lits; ++i) lits.push_back(random_literal(rng, s, n_int, n_bool));
    if (c >= n_clauses - n_soft)
      f.add_soft(std::move(lits), rng.between(1, s.max_weight));
    else
      f.add_hard(std::move(lits));
  }
  return f;
}

inline Assignment random_assignment(Rng& rng, const Formula& f, int64_t lo, int64_t hi) {
  Assignment a = Assignment::zero(f);
  for (auto& x : a.ints) x = rng.between(lo, hi);
  for (size_t i = 0; i < a.bools.size(); ++i) a.bools[i] = rng.below(2) == 1;
  return a;
}

}  // namespace pairls::testing

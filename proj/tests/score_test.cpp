#include "pairls/score.hpp"

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "pairls/oracle.hpp"

namespace pairls {
namespace {

std::vector<int64_t> initial_penalties(const Formula& f) {
  std::vector<int64_t> p;
  for (const auto& c : f.clauses()) p.push_back(c.is_hard() ? 1 : c.weight);
  return p;
}

std::vector<int64_t> penalties_of(const SatState& s) {
  std::vector<int64_t> p;
  for (ClauseId c = 0; c < s.num_clauses(); ++c) p.push_back(s.penalty(c));
  return p;
}

Assignment after(const Assignment& a, const Operation& op) {
  Assignment b = a;
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, CriticalMove>) b.ints[o.var] = o.value;
        else if constexpr (std::is_same_v<T, PairMove>) {
          b.ints[o.var1] = o.value1;
          b.ints[o.var2] = o.value2;
        } else b.bools[o.var] = !b.bools[o.var];
      },
      op);
  return b;
}

// Score by full re-evaluation.
int64_t reference_score(const Formula& f, const SatState& s, const Operation& op) {
  const auto p = penalties_of(s);
  return oracle::falsified_penalty(f, s.assignment(), p) -
         oracle::falsified_penalty(f, after(s.assignment(), op), p);
}

Operation random_op(Rng& rng, const Formula& f, const Assignment& a) {
  const auto r = rng.below(3);
  if (r == 0 && f.num_bool_vars() > 0)
    return BoolFlip{static_cast<uint32_t>(rng.below(f.num_bool_vars()))};
  const auto v1 = static_cast<uint32_t>(rng.below(f.num_int_vars()));
  if (r == 1 && f.num_int_vars() > 1) {
    uint32_t v2 = v1;
    while (v2 == v1) v2 = static_cast<uint32_t>(rng.below(f.num_int_vars()));
    return PairMove{v1, a.ints[v1] + rng.between(-3, 3), v2, a.ints[v2] + rng.between(-3, 3)};
  }
  return CriticalMove{v1, a.ints[v1] + rng.between(-3, 3)};
}

constexpr uint32_t b_ = 1, c_ = 2;

TEST(Score, WorkedExampleMoves) {
  const Formula f = testing::example3();
  const SatState s(f, Assignment::zero(f));
  EXPECT_EQ(s.falsified_penalty(), 1);
  EXPECT_EQ(s.score(CriticalMove{b_, 2}), 0);
  EXPECT_EQ(s.score(CriticalMove{c_, 1}), 0);
  EXPECT_EQ(s.score(PairMove{b_, 2, c_, 1}), 1);
}

TEST(Score, RestrictedToCompensatedClause) {
  const Formula f = testing::example3();
  const SatState s(f, Assignment::zero(f));
  const std::vector<ClauseId> c2{1};
  EXPECT_EQ(s.score_restricted(PairMove{b_, 2, c_, 1}, c2), 0);
  EXPECT_EQ(s.score_restricted(CriticalMove{b_, 2}, c2), -1);
  EXPECT_EQ(s.score_restricted(CriticalMove{c_, 1}, c2), 0);
  EXPECT_EQ(s.score_restricted(CriticalMove{b_, 2}, {}), 0);
  const std::vector<ClauseId> all{0, 1, 2};
  EXPECT_EQ(s.score_restricted(CriticalMove{b_, 2}, all), s.score(CriticalMove{b_, 2}));
}

TEST(Score, MatchesFullReevaluation) {
  Rng rng(3);
  for (int iter = 0; iter < 400; ++iter) {
    const Formula f = testing::random_formula(rng);
    SatState s(f, testing::random_assignment(rng, f, -3, 3));
    for (ClauseId c = 0; c < s.num_clauses(); ++c) s.add_penalty(c, rng.between(0, 5));
    for (int k = 0; k < 20; ++k) {
      const Operation op = random_op(rng, f, s.assignment());
      EXPECT_EQ(s.score(op), reference_score(f, s, op));
    }
  }
}

TEST(Score, PairOfUnrelatedMovesIsTheSumOfItsHalves) {
  // x and y never share a literal
  Rng rng(5);
  for (int iter = 0; iter < 300; ++iter) {
    Formula f;
    const auto x = f.add_int_var("x"), y = f.add_int_var("y"), z = f.add_int_var("z");
    for (int c = 0; c < 6; ++c) {
      const auto v = rng.below(2) == 0 ? x : y;
      f.add_hard({Literal::le({{v, rng.between(-3, 3)}, {z, rng.between(-3, 3)}}, rng.between(-4, 4)),
                  Literal::le({{z, 1}}, rng.between(-4, 4))});
    }
    SatState s(f, testing::random_assignment(rng, f, -3, 3));
    const CriticalMove m1{x, rng.between(-4, 4)}, m2{y, rng.between(-4, 4)};
    bool share_clause = false;
    for (const auto& cl : f.clauses()) {
      bool hx = false, hy = false;
      for (const auto& l : cl.literals) {
        hx |= l.atom()->coef_of(x) != 0;
        hy |= l.atom()->coef_of(y) != 0;
      }
      share_clause |= hx && hy;
    }
    if (share_clause) continue;
    EXPECT_EQ(s.score(PairMove{x, m1.value, y, m2.value}), s.score(m1) + s.score(m2));
  }
}

TEST(CompensatedLiterals, WorkedExample) {
  const Formula f = testing::example3();
  const SatState s(f, Assignment::zero(f));
  // b -> 2 breaks b - c <= 1, the only true literal of clause 2
  const auto cl = s.compensated_literals(CriticalMove{b_, 2});
  ASSERT_EQ(cl.size(), 1u);
  EXPECT_EQ(cl[0], (CompensatedLiteral{1, 1}));
  EXPECT_TRUE(s.compensated_literals(CriticalMove{b_, -3}).empty());
  EXPECT_THROW(s.compensated_literals(PairMove{b_, 2, c_, 1}), std::logic_error);
}

TEST(CompensatedLiterals, MatchesDefinition) {
  Rng rng(17);
  for (int iter = 0; iter < 300; ++iter) {
    const Formula f = testing::random_formula(rng);
    const SatState s(f, testing::random_assignment(rng, f, -3, 3));
    const CriticalMove op{static_cast<uint32_t>(rng.below(f.num_int_vars())),
                          rng.between(-4, 4)};
    const auto moved = after(s.assignment(), op);
    std::vector<CompensatedLiteral> expected;
    LitId id = 0;
    for (ClauseId c = 0; c < f.clauses().size(); ++c) {
      int true_count = 0;
      for (const auto& l : f.clauses()[c].literals) true_count += eval_literal(l, s.assignment());
      for (const auto& l : f.clauses()[c].literals) {
        if (true_count == 1 && eval_literal(l, s.assignment()) && !eval_literal(l, moved))
          expected.push_back({id, c});
        ++id;
      }
    }
    auto got = s.compensated_literals(op);
    std::sort(got.begin(), got.end(),
              [](const auto& x, const auto& y) { return x.literal < y.literal; });
    EXPECT_EQ(got, expected);
  }
}

TEST(Classify, WorkedExample) {
  const Formula f = testing::example5();
  Assignment a = Assignment::zero(f);
  a.ints = {1, 0, 1, 2};
  const SatState s(f, a);
  EXPECT_EQ(s.classify(0), Fragility::Fragile);  // b - a = -1 at its bound
  EXPECT_EQ(s.classify(1), Fragility::Fragile);  // a - c = 0
  EXPECT_EQ(s.classify(2), Fragility::Safe);     // a - d = -1 < 3

  const Formula g = testing::example3();
  EXPECT_EQ(SatState(g, Assignment::zero(g)).classify(0), Fragility::NotTrue);
}

TEST(Classify, EqualitiesAndBooleans) {
  Formula f;
  const auto x = f.add_int_var("x");
  const auto p = f.add_bool_var("p");
  f.add_hard({Literal::eq({{x, 1}}, 0)});
  f.add_hard({Literal::eq({{x, 1}}, 4, true)});
  f.add_hard({Literal::boolean(p, true)});
  const SatState s(f, Assignment::zero(f));
  EXPECT_EQ(s.classify(0), Fragility::Fragile);
  EXPECT_EQ(s.classify(1), Fragility::Unclassified);
  EXPECT_EQ(s.classify(2), Fragility::Unclassified);
}

TEST(Apply, WorkedExamplePair) {
  const Formula f = testing::example3();
  SatState s(f, Assignment::zero(f));
  s.apply(PairMove{b_, 2, c_, 1});
  EXPECT_EQ(s.falsified_penalty(), 0);
  EXPECT_EQ(s.num_falsified(), 0u);
  EXPECT_EQ(s.cost(), 0);
  EXPECT_EQ(s.validate(), "");
}

TEST(Apply, InverseRestoresState) {
  Rng rng(23);
  for (int iter = 0; iter < 200; ++iter) {
    const Formula f = testing::random_formula(rng);
    SatState s(f, testing::random_assignment(rng, f, -3, 3));
    const Assignment before = s.assignment();
    const int64_t pen = s.falsified_penalty();
    const Operation op = random_op(rng, f, before);
    s.apply(op);
    Operation inverse = op;
    if (auto* m = std::get_if<CriticalMove>(&inverse)) m->value = before.ints[m->var];
    if (auto* p = std::get_if<PairMove>(&inverse)) {
      p->value1 = before.ints[p->var1];
      p->value2 = before.ints[p->var2];
    }
    s.apply(inverse);
    EXPECT_EQ(s.assignment().ints, before.ints);
    EXPECT_EQ(s.assignment().bools, before.bools);
    EXPECT_EQ(s.falsified_penalty(), pen);
    EXPECT_EQ(s.validate(), "");
  }
}

TEST(Apply, ManyRandomMovesStayConsistent) {
  Rng rng(29);
  const Formula f = testing::random_formula(rng, {.min_ints = 5, .max_ints = 5, .min_bools = 2,
                                                  .max_bools = 2, .min_clauses = 12,
                                                  .max_clauses = 12});
  SatState s(f, Assignment::zero(f));
  for (int i = 0; i < 10'000; ++i) {
    const Operation op = random_op(rng, f, s.assignment());
    const int64_t expected = s.score(op);
    const int64_t before = s.falsified_penalty();
    s.apply(op);
    ASSERT_EQ(before - s.falsified_penalty(), expected);
    if (i % 7 == 0) s.add_penalty(static_cast<ClauseId>(rng.below(s.num_clauses())), 1);
    ASSERT_EQ(s.recompute_falsified_penalty(), s.falsified_penalty());
    if (i % 7 == 0) {
      s.add_penalty(static_cast<ClauseId>(rng.below(s.num_clauses())), 1);
    }
  }
  EXPECT_EQ(s.validate(), "");
}

TEST(Apply, OverflowLeavesStateUntouched) {
  Formula f;
  const auto x = f.add_int_var("x");
  f.add_hard({Literal::le({{x, 4}}, 0)});
  SatState s(f, Assignment::zero(f));
  const CriticalMove huge{x, std::numeric_limits<int64_t>::max() / 2};
  EXPECT_THROW(s.score(huge), OverflowError);
  EXPECT_THROW(s.apply(huge), OverflowError);
  EXPECT_EQ(s.assignment().ints[0], 0);
  EXPECT_EQ(s.validate(), "");
}

TEST(CriticalLiteral, UniqueTrueLiteral) {
  const Formula f = testing::example1();
  const SatState s(f, Assignment::zero(f));
  // clause 0 has both literals true at zero, clause 1 none, clause 2 one
  EXPECT_EQ(s.true_count(0), 2u);
  EXPECT_EQ(s.critical_literal(0), std::nullopt);
  EXPECT_EQ(s.critical_literal(1), std::nullopt);
  EXPECT_EQ(s.critical_literal(2), std::optional<LitId>(3));
}

TEST(Penalties, InitialValuesAndCost) {
  const Formula f = testing::example1();
  const SatState s(f, Assignment::zero(f));
  EXPECT_EQ(penalties_of(s), initial_penalties(f));
  // A = false and b - c <= -1 falsified: hard penalty 1 plus soft weight 1
  EXPECT_EQ(s.falsified_penalty(), 2);
  EXPECT_EQ(s.cost(), std::nullopt);
  EXPECT_EQ(s.hard_falsified().size(), 1u);
  EXPECT_EQ(s.soft_falsified().size(), 1u);
}

}  // namespace
}  // namespace pairls

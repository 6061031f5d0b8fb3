#include "pairls/smtlib.hpp"

#include <gtest/gtest.h>

#include <map>

#include "pairls/oracle.hpp"
#include "pairls/rng.hpp"

namespace pairls::smtlib {
namespace {

// Direct evaluation of a parsed term under named values; booleans are 0/1.
using Env = std::map<std::string, int64_t>;

int64_t eval(const Term& t, const Env& env) {
  auto arg = [&](size_t i) { return eval(*t.args[i], env); };
  switch (t.op) {
    case Op::IntConst: return t.value;
    case Op::Var: return env.at(t.symbol);
    case Op::BoundRef: return eval(*t.target, env);
    case Op::Let: return eval(*t.args.back(), env);
    case Op::True: return 1;
    case Op::False: return 0;
    case Op::Add: {
      int64_t s = 0;
      for (size_t i = 0; i < t.args.size(); ++i) s += arg(i);
      return s;
    }
    case Op::Sub: {
      if (t.args.size() == 1) return -arg(0);
      int64_t s = arg(0);
      for (size_t i = 1; i < t.args.size(); ++i) s -= arg(i);
      return s;
    }
    case Op::Mul: {
      int64_t s = 1;
      for (size_t i = 0; i < t.args.size(); ++i) s *= arg(i);
      return s;
    }
    case Op::Le:
    case Op::Lt:
    case Op::Ge:
    case Op::Gt:
    case Op::Eq:
      for (size_t i = 0; i + 1 < t.args.size(); ++i) {
        const int64_t x = arg(i), y = arg(i + 1);
        const bool ok = t.op == Op::Le ? x <= y
                        : t.op == Op::Lt ? x < y
                        : t.op == Op::Ge ? x >= y
                        : t.op == Op::Gt ? x > y
                                         : x == y;
        if (!ok) return 0;
      }
      return 1;
    case Op::Not: return 1 - arg(0);
    case Op::And:
      for (size_t i = 0; i < t.args.size(); ++i)
        if (!arg(i)) return 0;
      return 1;
    case Op::Or:
      for (size_t i = 0; i < t.args.size(); ++i)
        if (arg(i)) return 1;
      return 0;
    case Op::Implies: {
      // right associative: a => b => c is a => (b => c)
      int64_t v = arg(t.args.size() - 1);
      for (size_t i = t.args.size() - 1; i-- > 0;) v = (!arg(i) || v) ? 1 : 0;
      return v;
    }
  }
  return 0;
}

// Cost of the script under env; nullopt when a hard assertion is false.
std::optional<int64_t> script_cost(const ParsedScript& s, const Env& env) {
  for (const auto& h : s.hard)
    if (!eval(*h, env)) return std::nullopt;
  int64_t c = 0;
  for (const auto& a : s.soft)
    if (!eval(*a.term, env)) c += a.weight;
  return c;
}

// Best cost of the clause form with original variables fixed by env and
// auxiliary booleans free.
std::optional<int64_t> cnf_cost(const Formula& f, const Env& env) {
  Assignment a = Assignment::zero(f);
  std::vector<uint32_t> aux;
  for (uint32_t v = 0; v < f.num_int_vars(); ++v) a.ints[v] = env.at(f.int_name(v));
  for (uint32_t v = 0; v < f.num_bool_vars(); ++v) {
    auto it = env.find(f.bool_name(v));
    if (it == env.end())
      aux.push_back(v);
    else
      a.bools[v] = it->second != 0;
  }
  std::optional<int64_t> best;
  for (uint64_t mask = 0; mask < (uint64_t{1} << aux.size()); ++mask) {
    for (size_t i = 0; i < aux.size(); ++i) a.bools[aux[i]] = (mask >> i) & 1;
    if (auto c = cost(f, a); c && (!best || *c < *best)) best = c;
  }
  return best;
}

std::vector<Env> all_envs(const ParsedScript& s, int64_t lo, int64_t hi) {
  std::vector<Env> out{{}};
  for (const auto& d : s.declarations) {
    std::vector<Env> next;
    for (const auto& e : out) {
      const int64_t a = d.sort == Sort::Bool ? 0 : lo, b = d.sort == Sort::Bool ? 1 : hi;
      for (int64_t v = a; v <= b; ++v) {
        Env x = e;
        x[d.name] = v;
        next.push_back(std::move(x));
      }
    }
    out = std::move(next);
  }
  return out;
}

constexpr const char* kExample = R"(
(set-logic QF_LIA)
(declare-fun a () Int)
(declare-fun b () Int)
(declare-fun c () Int)
(declare-fun d () Int)
(declare-fun A () Bool)
(assert (or (<= (- a b) 1) (<= (- a c) 0)))
(assert-soft (<= (- b c) (- 1)) :weight 1)
(assert-soft (<= (- a d) 1) :weight 2)
(assert A)
(check-sat)
)";

SmtError parse_error(std::string_view text) {
  try {
    auto s = parse(text);
    to_cnf(s);
  } catch (const SmtError& e) {
    return e;
  }
  ADD_FAILURE() << "no error for: " << text;
  return SmtError(ErrorKind::MalformedSexpr, 0, 0, "none");
}

TEST(Parse, WorkedExample) {
  const auto s = parse(kExample);
  EXPECT_EQ(s.logic, "QF_LIA");
  EXPECT_EQ(s.declarations.size(), 5u);
  EXPECT_EQ(s.hard.size(), 2u);
  ASSERT_EQ(s.soft.size(), 2u);
  EXPECT_EQ(s.soft[0].weight, 1);
  EXPECT_EQ(s.soft[1].weight, 2);
}

TEST(Parse, DeclarationsAndAssertions) {
  const auto s = parse("(set-logic QF_LIA)(declare-const x Int)(assert (<= x 3))");
  EXPECT_EQ(s.hard.size(), 1u);
  const auto t = parse("(declare-fun x () Int)(assert-soft (<= x 3))");
  ASSERT_EQ(t.soft.size(), 1u);
  EXPECT_EQ(t.soft[0].weight, 1);
}

TEST(Parse, StrictInequalityBecomesLe) {
  const Formula f = to_cnf(parse("(declare-fun x () Int)(assert (< x 3))"));
  ASSERT_EQ(f.clauses().size(), 1u);
  EXPECT_EQ(f.clauses()[0].literals[0], Literal::le({{0, 1}}, 2));
}

TEST(Parse, ChainedComparisonAndNegativeNumerals) {
  const Formula f = to_cnf(parse("(declare-fun x () Int)(declare-fun y () Int)"
                                 "(assert (<= -2 x (+ y (- 3))))"));
  ASSERT_EQ(f.clauses().size(), 2u);
  EXPECT_EQ(f.clauses()[0].literals[0], Literal::le({{0, -1}}, 2));
  EXPECT_EQ(f.clauses()[1].literals[0], Literal::le({{0, 1}, {1, -1}}, -3));
}

TEST(Parse, DecimalIntegralWeightAccepted) {
  const auto s = parse("(declare-fun x () Int)(assert-soft (<= x 3) :weight 3.0 :id goal)");
  EXPECT_EQ(s.soft[0].weight, 3);
  EXPECT_EQ(s.soft[0].id, "goal");
}

TEST(Parse, WarningsForQueries) {
  const auto s = parse("(declare-fun x () Int)(assert (<= x 3))(check-sat)(get-model)(exit)");
  EXPECT_EQ(s.warnings.size(), 1u);
}

TEST(Parse, LetAndAnnotations) {
  const auto s = parse(
      "(declare-fun x () Int)(declare-fun p () Bool)"
      "(assert (let ((y (+ x 1)) (q p)) (! (or q (<= y 0)) :named n)))");
  const Formula f = to_cnf(s);
  ASSERT_EQ(f.clauses().size(), 1u);
  EXPECT_EQ(f.clauses()[0].literals.size(), 2u);
}

TEST(ParseErrors, KindsAndPositions) {
  auto e = parse_error("(set-logic QF_NIA)");
  EXPECT_EQ(e.kind(), ErrorKind::UnsupportedLogic);
  EXPECT_TRUE(e.unsupported());

  e = parse_error("(declare-fun x () Int)\n(assert (<= (* x x) 3))");
  EXPECT_EQ(e.kind(), ErrorKind::NonlinearTerm);
  EXPECT_EQ(e.line(), 2);
  EXPECT_TRUE(e.unsupported());

  e = parse_error("(declare-fun x () Int)\n(assert (<= y 3))");
  EXPECT_EQ(e.kind(), ErrorKind::UnknownSymbol);
  EXPECT_EQ(e.line(), 2);
  EXPECT_EQ(e.col(), 13);
  EXPECT_FALSE(e.unsupported());

  e = parse_error("(declare-fun x () Int)(assert (<= x 3)");
  EXPECT_EQ(e.kind(), ErrorKind::MalformedSexpr);

  e = parse_error("(declare-fun x () Int)(assert-soft (<= x 3) :weight 0.5)");
  EXPECT_EQ(e.kind(), ErrorKind::BadWeight);
  e = parse_error("(declare-fun x () Int)(assert-soft (<= x 3) :weight 0)");
  EXPECT_EQ(e.kind(), ErrorKind::BadWeight);

  e = parse_error("(declare-fun x () Int)(assert (<= (ite true x 1) 3))");
  EXPECT_EQ(e.kind(), ErrorKind::UnsupportedFeature);
  e = parse_error("(declare-fun x () Int)(assert (= (mod x 2) 1))");
  EXPECT_EQ(e.kind(), ErrorKind::UnsupportedFeature);
  e = parse_error("(declare-fun x () Real)");
  EXPECT_EQ(e.kind(), ErrorKind::UnsupportedFeature);
  e = parse_error("(declare-fun x () Int)(assert (+ x 1))");
  EXPECT_EQ(e.kind(), ErrorKind::SortError);
  e = parse_error("(declare-fun x () Int)(maximize x)");
  EXPECT_EQ(e.kind(), ErrorKind::UnsupportedFeature);
}

TEST(Cnf, WorkedExampleHasNoAuxiliaries) {
  const Formula f = to_cnf(parse(kExample));
  ASSERT_EQ(f.clauses().size(), 4u);
  EXPECT_EQ(f.num_bool_vars(), 1u);
  EXPECT_EQ(f.num_int_vars(), 4u);
  EXPECT_EQ(f.total_soft_weight(), 3);
  EXPECT_EQ(f.clauses()[0].literals.size(), 2u);
}

TEST(Cnf, ConjunctionSplitsIntoUnits) {
  const Formula f = to_cnf(parse("(declare-fun p () Bool)(declare-fun q () Bool)(assert (and p q))"));
  ASSERT_EQ(f.clauses().size(), 2u);
  EXPECT_EQ(f.num_bool_vars(), 2u);
}

TEST(Cnf, SoftConjunctionKeepsItsWeight) {
  const auto s = parse("(declare-fun A () Bool)(declare-fun B () Bool)"
                       "(assert-soft (and A B) :weight 3)");
  const Formula f = to_cnf(s);
  EXPECT_EQ(f.num_soft(), 1u);
  EXPECT_EQ(f.total_soft_weight(), 3);
  for (const auto& env : all_envs(s, 0, 0)) {
    const int64_t want = env.at("A") && env.at("B") ? 0 : 3;
    EXPECT_EQ(cnf_cost(f, env), want);
  }
}

TEST(Cnf, FalseAndTrueConstants) {
  auto f = to_cnf(parse("(declare-fun x () Int)(assert false)"));
  EXPECT_EQ(oracle::brute_force_optimum(f, oracle::DomainBox::uniform(f, -2, 2)).hard_feasible,
            false);
  f = to_cnf(parse("(declare-fun x () Int)(assert true)(assert-soft false :weight 4)"));
  const auto r = oracle::brute_force_optimum(f, oracle::DomainBox::uniform(f, -2, 2));
  EXPECT_TRUE(r.hard_feasible);
  EXPECT_EQ(r.optimum, 4);
}

// Random nested scripts over two integers and two booleans.
std::string random_term(Rng& rng, int depth) {
  const char* ints[] = {"x", "y"};
  const char* bools[] = {"p", "q"};
  if (depth == 0 || rng.below(4) == 0) {
    if (rng.below(3) == 0) return bools[rng.below(2)];
    const char* ops[] = {"<=", "<", ">=", ">", "="};
    const std::string lhs = "(+ (* " + std::to_string(rng.between(-2, 2)) + " " +
                            ints[rng.below(2)] + ") " + ints[rng.below(2)] + ")";
    return std::string("(") + ops[rng.below(5)] + " " + lhs + " " +
           std::to_string(rng.between(-3, 3)) + ")";
  }
  switch (rng.below(5)) {
    case 0: return "(not " + random_term(rng, depth - 1) + ")";
    case 1: return "(and " + random_term(rng, depth - 1) + " " + random_term(rng, depth - 1) + ")";
    case 2: return "(or " + random_term(rng, depth - 1) + " " + random_term(rng, depth - 1) + ")";
    case 3: return "(=> " + random_term(rng, depth - 1) + " " + random_term(rng, depth - 1) + ")";
    default: return "(= " + random_term(rng, depth - 1) + " " + random_term(rng, depth - 1) + ")";
  }
}

std::string random_script(Rng& rng) {
  std::string s =
      "(set-logic QF_LIA)(declare-fun x () Int)(declare-fun y () Int)"
      "(declare-fun p () Bool)(declare-fun q () Bool)\n";
  const auto n_hard = rng.below(3), n_soft = 1 + rng.below(3);
  for (uint64_t i = 0; i < n_hard; ++i) s += "(assert " + random_term(rng, 2) + ")\n";
  for (uint64_t i = 0; i < n_soft; ++i)
    s += "(assert-soft " + random_term(rng, 2) + " :weight " + std::to_string(rng.between(1, 5)) +
         ")\n";
  return s;
}

TEST(Cnf, PreservesCostPerAssignment) {
  Rng rng(71);
  for (int iter = 0; iter < 150; ++iter) {
    const std::string text = random_script(rng);
    const auto s = parse(text);
    const Formula f = to_cnf(s);
    ASSERT_LE(f.num_bool_vars(), 16u) << text;
    for (const auto& env : all_envs(s, -2, 2))
      ASSERT_EQ(cnf_cost(f, env), script_cost(s, env)) << text;
  }
}

TEST(Emit, ParseRoundTrip) {
  Rng rng(73);
  std::vector<std::string> scripts{
      kExample,
      "(set-logic QF_LIA)(declare-fun |odd name| () Int)(assert (<= -5 |odd name| 3))",
      "(declare-fun x () Int)(assert (let ((y (+ x 1))) (>= (* 2 y) (- 4))))",
      "(declare-fun p () Bool)(assert-soft (not p) :weight 7 :id g1)"};
  for (int i = 0; i < 100; ++i) scripts.push_back(random_script(rng));
  for (const auto& text : scripts) {
    const auto s = parse(text);
    const std::string once = emit(s);
    const auto back = parse(once);
    EXPECT_TRUE(structurally_equal(s, back)) << text << "\n---\n" << once;
    EXPECT_EQ(emit(back), once);
  }
}

TEST(Emit, ClauseFormIsAFixedPoint) {
  Rng rng(79);
  for (int i = 0; i < 100; ++i) {
    const Formula f = to_cnf(parse(random_script(rng)));
    const std::string once = emit(f);
    const Formula g = to_cnf(parse(once));
    EXPECT_EQ(emit(g), once);
  }
}

TEST(Atoms, CollectedOncePerNormalForm) {
  const auto s = parse(
      "(declare-fun x () Int)(declare-fun y () Int)"
      "(assert (or (<= x 3) (< x 4) (>= (- y x) 1)))(assert (<= (- x y) -1))");
  const auto atoms = collect_atoms(s);
  EXPECT_EQ(atoms.size(), 2u);
}

}  // namespace
}  // namespace pairls::smtlib

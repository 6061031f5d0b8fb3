#pragma once

// Two-mode local search for MaxSMT(LIA). Integer mode tries decreasing
// critical moves (hard clauses first), then compensation-based pairwise moves
// with a fragile-before-safe preference, and otherwise updates clause weights
// and satisfies a random falsified clause. Boolean mode is a flip-based
// MaxSAT search over the boolean projection.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "pairls/checked.hpp"
#include "pairls/formula.hpp"
#include "pairls/rng.hpp"
#include "pairls/score.hpp"

namespace pairls {

/// Threshold values of integer variable `var` that make the false literal
/// `lit` true, given the literal's current sum and the variable's current
/// value. Empty when no such value exists (variable absent, boolean literal,
/// equality without integral solution, or overflow). A false negated equality
/// yields the two neighbours of the current value.
inline std::vector<int64_t> critical_move_values(const Literal& lit, uint32_t var,
                                                 int64_t current, int64_t sum) {
  const auto* a = lit.atom();
  if (a == nullptr) return {};
  const int64_t coef = a->coef_of(var);
  if (coef == 0) return {};
  try {
    const int64_t rest = checked::sub(sum, checked::mul(coef, current));
    const int64_t target = checked::sub(a->bound, rest);
    if (a->rel == Relation::Le) {
      return {coef > 0 ? checked::floor_div(target, coef) : checked::ceil_div(target, coef)};
    }
    if (lit.negated()) return {checked::add(current, 1), checked::sub(current, 1)};
    if (target % coef != 0) return {};
    return {target / coef};
  } catch (const OverflowError&) {
    return {};
  }
}

inline std::vector<int64_t> critical_move_values(const Literal& lit, uint32_t var,
                                                 const Assignment& a) {
  const auto* atom = lit.atom();
  if (atom == nullptr) return {};
  try {
    return critical_move_values(lit, var, a.ints[var], atom->eval_sum(a.ints));
  } catch (const OverflowError&) {
    return {};
  }
}

/// Clause weighting in the Weighting-PMS style. Hard penalties start at 1,
/// soft penalties at their original weight.
struct WeightingParams {
  int64_t hard_inc = 1;
  int64_t soft_cap = 500;
  double smooth_prob = 0.0003;
};

struct SolverConfig {
  uint32_t L = 20;       // mode-switch factor
  uint32_t bms_t = 100;  // BMS sample count
  uint32_t K = 10;       // literals drawn for pairwise candidates
  double cutoff_seconds = 300.0;
  std::optional<uint64_t> max_steps;  // step budget; overrides nothing, both apply
  uint64_t seed = 1;
  WeightingParams weighting;
  bool swap_mode_thresholds = false;
  bool use_pairs = true;  // false: critical moves only
  bool two_level = true;  // false: fragile and safe candidates share one pool
  std::optional<int64_t> target_cost;  // stop once the best cost reaches this
};

enum class Mode : uint8_t { Integer, Boolean };
enum class Scope : uint8_t { HardFalsified, SoftFalsified };
enum class PairPool : uint8_t { Fragile, Safe };

struct PairPick {
  std::optional<PairMove> op;
  int64_t score = 0;
  PairPool pool = PairPool::Fragile;
  std::vector<PairMove> fragile;
  std::vector<PairMove> safe;
};

struct TracePoint {
  double elapsed_seconds = 0;
  uint64_t step = 0;
  int64_t cost = 0;
};

struct SolverStats {
  uint64_t cm_moves = 0;
  uint64_t pair_moves = 0;
  uint64_t flips = 0;
  uint64_t weight_updates = 0;
  uint64_t mode_switches = 0;
};

struct SolveResult {
  std::optional<Assignment> best;  // unset: no feasible assignment reached
  int64_t cost = 0;
  std::vector<TracePoint> trace;
  uint64_t steps = 0;
  double elapsed_seconds = 0;
  SolverStats stats;

  bool feasible() const { return best.has_value(); }
};

/// Hooks for instrumentation; every applied operation is reported with the
/// score the search computed when it selected it.
class SearchObserver {
 public:
  virtual ~SearchObserver() = default;
  virtual void before_apply(const SatState&, const Operation&, int64_t /*score*/) {}
  virtual void after_apply(const SatState&, const Operation&) {}
  virtual void on_improvement(const TracePoint&) {}
};

struct StepOutcome {
  std::optional<Operation> applied;
  bool forced_switch = false;
};

/// BMS: among `t` samples drawn with replacement (the whole pool when it has
/// at most `t` entries), the decreasing candidate with the greatest score.
/// Ties are broken uniformly at random.
template <class Op, class ScoreFn>
std::optional<std::pair<Op, int64_t>> bms_best_decreasing(std::span<const Op> pool, size_t t,
                                                          Rng& rng, ScoreFn&& score) {
  std::optional<std::pair<Op, int64_t>> best;
  uint64_t ties = 0;
  auto consider = [&](const Op& op) {
    const std::optional<int64_t> s = score(op);
    if (!s || *s <= 0) return;
    if (!best || *s > best->second) {
      best.emplace(op, *s);
      ties = 1;
    } else if (*s == best->second && rng.below(++ties) == 0) {
      best.emplace(op, *s);
    }
  };
  if (pool.size() <= t) {
    for (const auto& op : pool) consider(op);
  } else {
    for (size_t i = 0; i < t; ++i) consider(pool[rng.below(pool.size())]);
  }
  return best;
}

class Solver {
 public:
  /// Starts from all integers 0 and all booleans false. `formula` must
  /// outlive the solver.
  Solver(const Formula& formula, SolverConfig cfg)
      : formula_(formula),
        cfg_(cfg),
        rng_(cfg.seed),
        state_(formula, Assignment::zero(formula)) {
    if (cfg_.L == 0 || cfg_.bms_t == 0 || cfg_.K == 0)
      throw std::invalid_argument("L, bms_t and K must be positive");
    enter_mode(Mode::Integer);
  }

  Solver(const Solver&) = delete;
  Solver& operator=(const Solver&) = delete;

  void set_observer(SearchObserver* obs) { observer_ = obs; }
  const SatState& state() const { return state_; }
  SatState& state() { return state_; }
  Mode mode() const { return mode_; }
  const SolverConfig& config() const { return cfg_; }
  Rng& rng() { return rng_; }
  uint64_t mode_budget() const { return max_steps_; }
  const std::optional<Assignment>& best_assignment() const { return best_; }
  std::optional<int64_t> best_cost() const {
    return best_ ? std::optional<int64_t>(best_cost_) : std::nullopt;
  }

  /// Runs until the cutoff (time or steps), until every clause is satisfied
  /// or until the target cost is reached.
  SolveResult run() {
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    clock_ = elapsed;
    for (;;) {
      record_best();
      if (best_ && (best_cost_ == 0 || (cfg_.target_cost && best_cost_ <= *cfg_.target_cost)))
        break;
      if (cfg_.max_steps && steps_ >= *cfg_.max_steps) break;
      if ((steps_ & 63) == 0 && elapsed() >= cfg_.cutoff_seconds) break;
      if (non_improving_ >= max_steps_) switch_mode();
      const StepOutcome out =
          mode_ == Mode::Integer ? integer_mode_step_impl() : boolean_mode_step_impl();
      if (out.forced_switch) switch_mode();
      ++steps_;
      ++non_improving_;
    }
    SolveResult r;
    r.best = best_;
    r.cost = best_ ? best_cost_ : 0;
    r.trace = trace_;
    r.steps = steps_;
    r.elapsed_seconds = elapsed();
    r.stats = stats_;
    clock_ = nullptr;
    return r;
  }

  /// One Integer-mode step including best-solution bookkeeping.
  StepOutcome integer_mode_step() {
    record_best();
    return integer_mode_step_impl();
  }

  StepOutcome boolean_mode_step() {
    record_best();
    return boolean_mode_step_impl();
  }

  /// Critical moves from the false arithmetic literals of falsified clauses
  /// in `scope`. At most bms_t clauses are visited (sampled when there are
  /// more). Moves are unique by (variable, value).
  std::vector<CriticalMove> collect_cm_candidates(Scope scope) {
    const auto clauses =
        scope == Scope::HardFalsified ? state_.hard_falsified() : state_.soft_falsified();
    std::vector<CriticalMove> out;
    auto visit = [&](ClauseId c) { append_clause_cms(c, out); };
    if (clauses.size() <= cfg_.bms_t) {
      for (ClauseId c : clauses) visit(c);
    } else {
      for (uint32_t i = 0; i < cfg_.bms_t; ++i) visit(clauses[rng_.below(clauses.size())]);
    }
    std::stable_sort(out.begin(), out.end(), [](const CriticalMove& a, const CriticalMove& b) {
      return std::tie(a.var, a.value) < std::tie(b.var, b.value);
    });
    out.erase(std::unique(out.begin(), out.end(),
                          [](const CriticalMove& a, const CriticalMove& b) {
                            return a.var == b.var && a.value == b.value;
                          }),
              out.end());
    return out;
  }

  /// Compensation-based pairwise candidate construction and two-level pick.
  PairPick pick_pairwise_op() {
    PairPick pick;
    if (state_.num_falsified() == 0) return pick;

    // Candidate first halves: critical moves on K random false literals,
    // drawn from hard falsified clauses while any exist.
    std::vector<CriticalMove> cand;
    std::vector<std::pair<uint32_t, LitId>> seen;
    const auto scope =
        state_.hard_falsified().empty() ? state_.soft_falsified() : state_.hard_falsified();
    for (uint32_t i = 0; i < cfg_.K; ++i) {
      const ClauseId c = scope[rng_.below(scope.size())];
      const LitId lit = state_.clause_begin(c) +
                        static_cast<LitId>(rng_.below(state_.clause_end(c) - state_.clause_begin(c)));
      const auto* atom = state_.literal(lit).atom();
      if (atom == nullptr) continue;
      for (const auto& t : atom->terms) {
        const std::pair key{t.var, lit};
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        for (int64_t v : critical_move_values(state_.literal(lit), t.var, state_.int_value(t.var),
                                              state_.literal_sum(lit)))
          cand.push_back({t.var, v, lit});
      }
    }

    for (const auto& op1 : cand) {
      std::vector<CompensatedLiteral> cl;
      try {
        cl = state_.compensated_literals(op1);
      } catch (const OverflowError&) {
        continue;
      }
      for (const auto& [lit2, clause2] : cl) {
        const Fragility kind = state_.classify(lit2);
        auto& pool = (kind == Fragility::Fragile || !cfg_.two_level) ? pick.fragile : pick.safe;
        append_pair_set(op1, lit2, pool);
      }
    }
    dedupe_pairs(pick.fragile);
    dedupe_pairs(pick.safe);

    auto scorer = [&](const PairMove& p) { return safe_score(p); };
    if (auto best = bms_best_decreasing<PairMove>(pick.fragile, cfg_.bms_t, rng_, scorer)) {
      pick.op = best->first;
      pick.score = best->second;
      pick.pool = PairPool::Fragile;
    } else if (auto best2 = bms_best_decreasing<PairMove>(pick.safe, cfg_.bms_t, rng_, scorer)) {
      pick.op = best2->first;
      pick.score = best2->second;
      pick.pool = PairPool::Safe;
    }
    return pick;
  }

  /// With probability smooth_prob, satisfied clauses decay towards their
  /// initial penalty; otherwise falsified hard clauses gain hard_inc and
  /// falsified soft clauses below soft_cap gain 1.
  void update_weights() {
    ++stats_.weight_updates;
    const auto& w = cfg_.weighting;
    if (rng_.uniform01() < w.smooth_prob) {
      for (ClauseId c = 0; c < state_.num_clauses(); ++c) {
        if (!state_.clause_satisfied(c)) continue;
        const Clause& cl = state_.clause(c);
        const int64_t floor = cl.is_hard() ? 1 : cl.weight;
        if (state_.penalty(c) > floor) state_.add_penalty(c, -1);
      }
      return;
    }
    const std::vector<ClauseId> hard(state_.hard_falsified().begin(),
                                     state_.hard_falsified().end());
    for (ClauseId c : hard) state_.add_penalty(c, w.hard_inc);
    const std::vector<ClauseId> soft(state_.soft_falsified().begin(),
                                     state_.soft_falsified().end());
    for (ClauseId c : soft)
      if (state_.penalty(c) < w.soft_cap) state_.add_penalty(c, 1);
  }

  /// Share of integer (or boolean) literals among all literals of falsified
  /// clauses.
  std::pair<double, double> falsified_literal_shares() const {
    uint64_t n_int = 0, n_bool = 0;
    for (auto list : {state_.hard_falsified(), state_.soft_falsified()})
      for (ClauseId c : list) {
        n_int += state_.clause_int_literals(c);
        n_bool += state_.clause_bool_literals(c);
      }
    const uint64_t total = n_int + n_bool;
    if (total == 0) return {0.0, 0.0};
    return {static_cast<double>(n_int) / total, static_cast<double>(n_bool) / total};
  }

  void enter_mode(Mode m) {
    mode_ = m;
    non_improving_ = 0;
    const auto [p_int, p_bool] = falsified_literal_shares();
    double share = m == Mode::Integer ? p_int : p_bool;
    if (cfg_.swap_mode_thresholds) share = m == Mode::Integer ? p_bool : p_int;
    max_steps_ = std::max<uint64_t>(1, static_cast<uint64_t>(std::llround(cfg_.L * share)));
  }

 private:
  std::optional<int64_t> safe_score(const Operation& op) const {
    try {
      return state_.score(op);
    } catch (const OverflowError&) {
      return std::nullopt;
    }
  }

  void record_best() {
    const auto c = state_.cost();
    if (!c || (best_ && *c >= best_cost_)) return;
    best_ = state_.assignment();
    best_cost_ = *c;
    non_improving_ = 0;
    TracePoint tp{clock_ ? clock_() : 0.0, steps_, *c};
    trace_.push_back(tp);
    if (observer_) observer_->on_improvement(tp);
  }

  bool has_literals_for(Mode m) const {
    for (auto list : {state_.hard_falsified(), state_.soft_falsified()})
      for (ClauseId c : list)
        if ((m == Mode::Integer ? state_.clause_int_literals(c) : state_.clause_bool_literals(c)) >
            0)
          return true;
    return false;
  }

  // A mode is entered only when falsified clauses contain literals it can act
  // on; otherwise the current mode restarts its budget.
  void switch_mode() {
    const Mode other = mode_ == Mode::Integer ? Mode::Boolean : Mode::Integer;
    if (has_literals_for(other)) {
      ++stats_.mode_switches;
      enter_mode(other);
    } else {
      enter_mode(mode_);
    }
  }

  void append_clause_cms(ClauseId c, std::vector<CriticalMove>& out) const {
    for (LitId l = state_.clause_begin(c); l < state_.clause_end(c); ++l) {
      const Literal& lit = state_.literal(l);
      const auto* atom = lit.atom();
      if (atom == nullptr || state_.literal_true(l)) continue;
      for (const auto& t : atom->terms)
        for (int64_t v :
             critical_move_values(lit, t.var, state_.int_value(t.var), state_.literal_sum(l)))
          out.push_back({t.var, v, l});
    }
  }

  // pair_set(lit2, op1): every other integer variable of lit2, moved to its
  // critical value for lit2 computed as if op1 had been applied.
  void append_pair_set(const CriticalMove& op1, LitId lit2, std::vector<PairMove>& pool) const {
    const Literal& lit = state_.literal(lit2);
    const auto* atom = lit.atom();
    int64_t sum_after;
    try {
      sum_after = checked::add(
          state_.literal_sum(lit2),
          checked::mul(atom->coef_of(op1.var), checked::sub(op1.value, state_.int_value(op1.var))));
    } catch (const OverflowError&) {
      return;
    }
    for (const auto& t : atom->terms) {
      if (t.var == op1.var) continue;
      const int64_t cur = state_.int_value(t.var);
      for (int64_t v : critical_move_values(lit, t.var, cur, sum_after)) {
        if (v == cur) continue;  // degenerates to op1 alone
        pool.push_back({op1.var, op1.value, t.var, v, lit2});
      }
    }
  }

  static void dedupe_pairs(std::vector<PairMove>& pool) {
    auto key = [](const PairMove& p) { return std::tie(p.var1, p.value1, p.var2, p.value2); };
    std::stable_sort(pool.begin(), pool.end(),
                     [&](const PairMove& a, const PairMove& b) { return key(a) < key(b); });
    pool.erase(std::unique(pool.begin(), pool.end(),
                           [&](const PairMove& a, const PairMove& b) { return key(a) == key(b); }),
               pool.end());
  }

  void apply_op(const Operation& op, int64_t score) {
    if (observer_) observer_->before_apply(state_, op, score);
    state_.apply(op);
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, CriticalMove>) ++stats_.cm_moves;
          else if constexpr (std::is_same_v<T, PairMove>) ++stats_.pair_moves;
          else ++stats_.flips;
        },
        op);
    if (observer_) observer_->after_apply(state_, op);
  }

  // Greatest-score move among `ops` regardless of sign; ties at random.
  template <class Op>
  std::optional<std::pair<Op, int64_t>> best_any(std::span<const Op> ops) {
    std::optional<std::pair<Op, int64_t>> best;
    uint64_t ties = 0;
    for (const auto& op : ops) {
      const auto s = safe_score(op);
      if (!s) continue;
      if (!best || *s > best->second) {
        best.emplace(op, *s);
        ties = 1;
      } else if (*s == best->second && rng_.below(++ties) == 0) {
        best.emplace(op, *s);
      }
    }
    return best;
  }

  // Moves of a random falsified clause (hard clauses while any is falsified)
  // whose move set is non-empty; empty when no such clause exists.
  template <class Op, class MovesFn>
  std::vector<Op> random_clause_moves(MovesFn&& moves) {
    const auto list =
        state_.hard_falsified().empty() ? state_.soft_falsified() : state_.hard_falsified();
    std::vector<ClauseId> order(list.begin(), list.end());
    for (size_t i = order.size(); i > 0; --i) {
      const size_t j = rng_.below(i);
      std::swap(order[i - 1], order[j]);
      std::vector<Op> ops = moves(order[i - 1]);
      if (!ops.empty()) return ops;
    }
    return {};
  }

  StepOutcome integer_mode_step_impl() {
    StepOutcome out;
    if (state_.num_falsified() == 0) return out;

    auto scorer = [&](const CriticalMove& m) { return safe_score(m); };
    const Scope scope =
        state_.hard_falsified().empty() ? Scope::SoftFalsified : Scope::HardFalsified;
    const auto cms = collect_cm_candidates(scope);
    if (auto best = bms_best_decreasing<CriticalMove>(cms, cfg_.bms_t, rng_, scorer)) {
      apply_op(best->first, best->second);
      out.applied = best->first;
      return out;
    }
    if (cfg_.use_pairs) {
      PairPick pick = pick_pairwise_op();
      if (pick.op) {
        apply_op(*pick.op, pick.score);
        out.applied = *pick.op;
        return out;
      }
    }

    update_weights();
    const auto moves = random_clause_moves<CriticalMove>([&](ClauseId c) {
      std::vector<CriticalMove> v;
      append_clause_cms(c, v);
      return v;
    });
    if (auto best = best_any<CriticalMove>(moves)) {
      apply_op(best->first, best->second);
      out.applied = best->first;
      return out;
    }
    out.forced_switch = true;
    return out;
  }

  std::vector<BoolFlip> clause_flips(ClauseId c) const {
    std::vector<BoolFlip> v;
    for (LitId l = state_.clause_begin(c); l < state_.clause_end(c); ++l)
      if (const auto* b = state_.literal(l).bool_var()) v.push_back({b->index});
    return v;
  }

  StepOutcome boolean_mode_step_impl() {
    StepOutcome out;
    if (state_.num_falsified() == 0) return out;
    if (!has_literals_for(Mode::Boolean)) {
      out.forced_switch = true;
      return out;
    }

    const auto scope =
        state_.hard_falsified().empty() ? state_.soft_falsified() : state_.hard_falsified();
    std::vector<BoolFlip> flips;
    auto visit = [&](ClauseId c) {
      for (const auto& f : clause_flips(c)) flips.push_back(f);
    };
    if (scope.size() <= cfg_.bms_t) {
      for (ClauseId c : scope) visit(c);
    } else {
      for (uint32_t i = 0; i < cfg_.bms_t; ++i) visit(scope[rng_.below(scope.size())]);
    }
    std::sort(flips.begin(), flips.end(),
              [](const BoolFlip& a, const BoolFlip& b) { return a.var < b.var; });
    flips.erase(std::unique(flips.begin(), flips.end()), flips.end());

    auto scorer = [&](const BoolFlip& f) { return safe_score(f); };
    if (auto best = bms_best_decreasing<BoolFlip>(flips, cfg_.bms_t, rng_, scorer)) {
      apply_op(best->first, best->second);
      out.applied = best->first;
      return out;
    }

    update_weights();
    const auto moves =
        random_clause_moves<BoolFlip>([&](ClauseId c) { return clause_flips(c); });
    if (auto best = best_any<BoolFlip>(moves)) {
      apply_op(best->first, best->second);
      out.applied = best->first;
      return out;
    }
    out.forced_switch = true;
    return out;
  }

  const Formula& formula_;
  SolverConfig cfg_;
  Rng rng_;
  SatState state_;
  SearchObserver* observer_ = nullptr;

  Mode mode_ = Mode::Integer;
  uint64_t max_steps_ = 1;
  uint64_t non_improving_ = 0;
  uint64_t steps_ = 0;
  std::optional<Assignment> best_;
  int64_t best_cost_ = 0;
  std::vector<TracePoint> trace_;
  SolverStats stats_;
  std::function<double()> clock_;
};

/// Runs the search from the all-zero / all-false assignment.
inline SolveResult solve(const Formula& formula, const SolverConfig& cfg,
                         SearchObserver* observer = nullptr) {
  Solver s(formula, cfg);
  s.set_observer(observer);
  return s.run();
}

}  // namespace pairls

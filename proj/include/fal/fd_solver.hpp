// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fal/domain.hpp"
#include "fal/error.hpp"
#include "fal/expr.hpp"
#include "fal/heap.hpp"
#include "fal/solver.hpp"

namespace fal {

struct SolverLimits {
  // Maximum number of index tuples one free-index check may visit.
  std::uint64_t enum_budget = 1'000'000;
  // Propagation sweeps before giving up on reaching a fixpoint.
  std::uint64_t max_sweeps = 200'000;
};

namespace detail {

using Wide = __int128;
inline constexpr Wide kWideInf = Wide{1} << 100;

inline Wide floor_div(Wide a, Wide b) {
  Wide q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline Wide ceil_div(Wide a, Wide b) {
  Wide q = a / b;
  if ((a % b != 0) && ((a < 0) == (b < 0))) ++q;
  return q;
}

inline Wide clamp_wide(Wide v) {
  if (v > kWideInf) return kWideInf;
  if (v < -kWideInf) return -kWideInf;
  return v;
}

struct WideInterval {
  Wide lo;
  Wide hi;
};

enum class Narrowed { Unchanged, Changed, Failed };

inline Narrowed merge(Narrowed a, Narrowed b) {
  if (a == Narrowed::Failed || b == Narrowed::Failed) return Narrowed::Failed;
  if (a == Narrowed::Changed || b == Narrowed::Changed) return Narrowed::Changed;
  return Narrowed::Unchanged;
}

}  // namespace detail

/// Finite-domain constraint store with bounds-consistency propagation.
///
/// Constraints whose array reads all have constant indices take part in
/// propagation. Free-index constraints are handled per strategy: checked by
/// enumerating index bindings (symbolic), queued until their indices are
/// fixed or labeling starts (delayed), or rejected (forbid).
class FdSolver final : public Solver {
 public:
  FdSolver(Heap& heap, Strategy strategy, SolverLimits limits = {})
      : heap_(heap), strategy_(strategy), limits_(limits) {}

  Strategy strategy() const override { return strategy_; }

  std::size_t push_level() override {
    levels_.push_back({heap_.mark(), active_.size(), queue_});
    return levels_.size();
  }

  void pop_level() override {
    if (levels_.empty()) throw Error(ErrorKind::Invariant, "pop_level on an empty level stack");
    Level level = std::move(levels_.back());
    levels_.pop_back();
    heap_.undo_to(level.heap_mark);
    active_.resize(level.active_count);
    queue_ = std::move(level.queue);
  }

  std::size_t depth() const override { return levels_.size(); }

  ConsistencyResult add_constraint(Constraint c) override {
    if (is_ground(c.lhs) && is_ground(c.rhs))
      return holds_concrete(c, {}, {}) ? ConsistencyResult::Consistent : ConsistencyResult::Inconsistent;

    auto simplified = heap_.simplify(c);
    if (!simplified) return ConsistencyResult::Inconsistent;
    const bool free_index = has_free_index(*simplified);

    if (free_index && strategy_ == Strategy::Forbid)
      throw Error(ErrorKind::ForbiddenFreeIndex,
                  "constraint '" + to_string(c, heap_.names()) + "' reads an array at a non-constant index");

    if (free_index && strategy_ == Strategy::Delayed) {
      c.delayed = true;
      queue_.push_back(std::move(c));
      ++stats_.delayed_queued;
      if (propagate() == ConsistencyResult::Inconsistent) return ConsistencyResult::Inconsistent;
      return ConsistencyResult::DelayedAccepted;
    }

    active_.push_back(std::move(c));
    if (propagate() == ConsistencyResult::Inconsistent) return ConsistencyResult::Inconsistent;

    // Re-check every symbolic constraint whose indices are still open, now
    // that the remaining domains may have changed.
    if (strategy_ != Strategy::Delayed) {
      for (std::size_t k = 0; k < active_.size(); ++k) {
        Constraint current = active_[k];
        auto s = heap_.simplify(current);
        if (!s) return ConsistencyResult::Inconsistent;
        if (has_free_index(*s) && !enumerate_array_check(current)) return ConsistencyResult::Inconsistent;
      }
    }
    return ConsistencyResult::Consistent;
  }

  ConsistencyResult consistent() override { return propagate(); }

  /// Bounds-consistency fixpoint over every constraint without a free
  /// index. Under the delayed strategy, queued constraints whose indices all
  /// became fixed are promoted into the active set here.
  ConsistencyResult propagate() {
    ++stats_.propagations;
    for (std::uint64_t sweep = 0; sweep < limits_.max_sweeps; ++sweep) {
      bool changed = false;
      for (std::size_t k = 0; k < active_.size(); ++k) {
        auto s = heap_.simplify(active_[k]);
        if (!s) return ConsistencyResult::Inconsistent;
        if (has_free_index(*s)) continue;
        auto r = narrow(*s);
        if (r == detail::Narrowed::Failed) return ConsistencyResult::Inconsistent;
        if (r == detail::Narrowed::Changed) changed = true;
      }
      if (strategy_ == Strategy::Delayed) {
        for (std::size_t k = 0; k < queue_.size();) {
          auto s = heap_.simplify(queue_[k]);
          if (!s) return ConsistencyResult::Inconsistent;
          if (has_free_index(*s)) {
            ++k;
            continue;
          }
          active_.push_back(queue_[k]);
          queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(k));
          ++stats_.delayed_singleton_checks;
          changed = true;
        }
      }
      if (!changed) return ConsistencyResult::Consistent;
    }
    return ConsistencyResult::Consistent;
  }

  /// Existential check of a free-index constraint: tries every binding of
  /// its index variables (one nested loop per variable, re-simplifying after
  /// each so nested reads expose their own indices) and stops at the first
  /// binding for which the simplified constraint is satisfiable together
  /// with the active store.
  bool enumerate_array_check(const Constraint& c) {
    ++stats_.enum_checks;
    push_level();
    Constraint conj = c;
    conj.delayed = false;
    active_.push_back(conj);
    bool ok = false;
    try {
      ok = propagate() != ConsistencyResult::Inconsistent && exists_index_binding(conj);
    } catch (...) {
      pop_level();
      throw;
    }
    pop_level();
    return ok;
  }

  ConsistencyResult check_delayed(DelayTrigger trigger) override {
    if (strategy_ != Strategy::Delayed || trigger.kind == DelayTrigger::Kind::SingletonDomain) return propagate();
    if (propagate() == ConsistencyResult::Inconsistent) return ConsistencyResult::Inconsistent;
    std::vector<Constraint> pending = queue_;
    for (const auto& q : pending)
      if (!enumerate_array_check(q)) return ConsistencyResult::Inconsistent;
    for (auto& q : pending) active_.push_back(std::move(q));
    stats_.delayed_label_checks += pending.size();
    queue_.clear();
    return propagate();
  }

  std::size_t pending_delayed() const override { return queue_.size(); }

  bool label(const LabelPlan& plan, const LabelCallback& on_solution) override {
    push_level();
    bool keep_going = true;
    try {
      keep_going = label_rec(plan, on_solution);
    } catch (...) {
      pop_level();
      throw;
    }
    pop_level();
    return keep_going;
  }

  /// Convenience wrapper collecting the values of `vars` for every labeling.
  std::vector<Bindings> label_all(const LabelPlan& plan, std::size_t limit = SIZE_MAX) {
    std::vector<Bindings> out;
    label(plan, [&] {
      out.push_back(fixed_bindings(heap_));
      return out.size() < limit;
    });
    return out;
  }

  std::vector<Constraint> constraints() const override {
    std::vector<Constraint> out = active_;
    out.insert(out.end(), queue_.begin(), queue_.end());
    return out;
  }

  const std::vector<Constraint>& active() const { return active_; }
  const std::vector<Constraint>& queue() const { return queue_; }
  const SolverStats& stats() const override { return stats_; }
  Heap& heap() { return heap_; }

 private:
  struct Level {
    std::size_t heap_mark;
    std::size_t active_count;
    std::vector<Constraint> queue;
  };

  struct Term {
    detail::Wide coef;
    Expr atom;  // a variable or a non-linear product
  };

  struct Linear {
    std::vector<Term> terms;
    detail::Wide constant = 0;
    bool ok = true;
  };

  // --- bounds -----------------------------------------------------------

  detail::WideInterval bounds(const Expr& e) const {
    using detail::Wide;
    switch (e.op()) {
      case ExprOp::Const: return {e.value(), e.value()};
      case ExprOp::Var: {
        const IntDomain& d = heap_.domain(e.var_id());
        return {d.min(), d.max()};
      }
      case ExprOp::Add: {
        auto a = bounds(e.lhs()), b = bounds(e.rhs());
        return {detail::clamp_wide(a.lo + b.lo), detail::clamp_wide(a.hi + b.hi)};
      }
      case ExprOp::Sub: {
        auto a = bounds(e.lhs()), b = bounds(e.rhs());
        return {detail::clamp_wide(a.lo - b.hi), detail::clamp_wide(a.hi - b.lo)};
      }
      case ExprOp::Mul: {
        auto a = bounds(e.lhs()), b = bounds(e.rhs());
        auto mul = [](Wide x, Wide y) {
          // Operands are clamped to 2^100; keep products in range.
          const Wide cap = Wide{1} << 62;
          if (x > cap || x < -cap || y > cap || y < -cap) {
            if (x == 0 || y == 0) return Wide{0};
            return ((x < 0) != (y < 0)) ? -detail::kWideInf : detail::kWideInf;
          }
          return detail::clamp_wide(x * y);
        };
        Wide c[4] = {mul(a.lo, b.lo), mul(a.lo, b.hi), mul(a.hi, b.lo), mul(a.hi, b.hi)};
        Wide lo = c[0], hi = c[0];
        for (Wide v : c) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        return {lo, hi};
      }
      case ExprOp::Select:
      case ExprOp::StoreView:
        return {-detail::kWideInf, detail::kWideInf};
    }
    return {-detail::kWideInf, detail::kWideInf};
  }

  // --- narrowing --------------------------------------------------------

  detail::Narrowed narrow_var(VarId v, detail::Wide lo, detail::Wide hi) {
    const IntDomain& d = heap_.domain(v);
    Value l = saturate(std::max<detail::Wide>(lo, -kUnbounded));
    Value h = saturate(std::min<detail::Wide>(hi, kUnbounded));
    if (lo > hi) return detail::Narrowed::Failed;
    IntDomain nd = d.intersect(l, h);
    if (nd.empty()) return detail::Narrowed::Failed;
    return heap_.set_domain(v, std::move(nd)) ? detail::Narrowed::Changed : detail::Narrowed::Unchanged;
  }

  detail::Narrowed narrow_tree(const Expr& e, detail::Wide lo, detail::Wide hi) {
    using detail::Narrowed;
    auto b = bounds(e);
    if (b.hi < lo || b.lo > hi) return Narrowed::Failed;
    switch (e.op()) {
      case ExprOp::Const: return Narrowed::Unchanged;
      case ExprOp::Var: return narrow_var(e.var_id(), lo, hi);
      case ExprOp::Add: {
        auto bl = bounds(e.lhs()), br = bounds(e.rhs());
        auto r = narrow_tree(e.lhs(), detail::clamp_wide(lo - br.hi), detail::clamp_wide(hi - br.lo));
        if (r == Narrowed::Failed) return r;
        return detail::merge(r, narrow_tree(e.rhs(), detail::clamp_wide(lo - bl.hi), detail::clamp_wide(hi - bl.lo)));
      }
      case ExprOp::Sub: {
        auto bl = bounds(e.lhs()), br = bounds(e.rhs());
        auto r = narrow_tree(e.lhs(), detail::clamp_wide(lo + br.lo), detail::clamp_wide(hi + br.hi));
        if (r == Narrowed::Failed) return r;
        return detail::merge(r, narrow_tree(e.rhs(), detail::clamp_wide(bl.lo - hi), detail::clamp_wide(bl.hi - lo)));
      }
      case ExprOp::Mul: {
        auto bl = bounds(e.lhs()), br = bounds(e.rhs());
        auto divide_into = [&](const Expr& target, detail::Wide c) {
          if (c == 0) return (lo <= 0 && 0 <= hi) ? Narrowed::Unchanged : Narrowed::Failed;
          detail::Wide nlo = c > 0 ? detail::ceil_div(lo, c) : detail::ceil_div(hi, c);
          detail::Wide nhi = c > 0 ? detail::floor_div(hi, c) : detail::floor_div(lo, c);
          if (lo <= -detail::kWideInf) (c > 0 ? nlo : nhi) = c > 0 ? -detail::kWideInf : detail::kWideInf;
          if (hi >= detail::kWideInf) (c > 0 ? nhi : nlo) = c > 0 ? detail::kWideInf : -detail::kWideInf;
          return narrow_tree(target, nlo, nhi);
        };
        if (bl.lo == bl.hi) return divide_into(e.rhs(), bl.lo);
        if (br.lo == br.hi) return divide_into(e.lhs(), br.lo);
        return Narrowed::Unchanged;
      }
      case ExprOp::Select:
      case ExprOp::StoreView:
        return Narrowed::Unchanged;
    }
    return Narrowed::Unchanged;
  }

  void linearize(const Expr& e, detail::Wide mult, Linear& out) const {
    if (!out.ok) return;
    switch (e.op()) {
      case ExprOp::Const:
        out.constant = detail::clamp_wide(out.constant + mult * e.value());
        return;
      case ExprOp::Var:
        add_term(out, e, mult);
        return;
      case ExprOp::Add:
        linearize(e.lhs(), mult, out);
        linearize(e.rhs(), mult, out);
        return;
      case ExprOp::Sub:
        linearize(e.lhs(), mult, out);
        linearize(e.rhs(), -mult, out);
        return;
      case ExprOp::Mul:
        if (e.lhs().is_const()) return linearize(e.rhs(), detail::clamp_wide(mult * e.lhs().value()), out);
        if (e.rhs().is_const()) return linearize(e.lhs(), detail::clamp_wide(mult * e.rhs().value()), out);
        add_term(out, e, mult);
        return;
      case ExprOp::Select:
      case ExprOp::StoreView:
        out.ok = false;
        return;
    }
  }

  static void add_term(Linear& out, const Expr& atom, detail::Wide coef) {
    for (auto& t : out.terms) {
      if (t.atom.same_as(atom)) {
        t.coef += coef;
        return;
      }
    }
    out.terms.push_back({coef, atom});
  }

  detail::Narrowed narrow(const Constraint& c) {
    using detail::Narrowed;
    using detail::Wide;
    Linear lin;
    linearize(c.lhs, 1, lin);
    linearize(c.rhs, -1, lin);
    if (!lin.ok) return Narrowed::Unchanged;
    std::erase_if(lin.terms, [](const Term& t) { return t.coef == 0; });

    if (c.relation == Relation::Ne) {
      if (lin.terms.empty()) return lin.constant != 0 ? Narrowed::Unchanged : Narrowed::Failed;
      if (lin.terms.size() == 1 && lin.terms[0].atom.is_var()) {
        Wide num = -lin.constant;
        Wide coef = lin.terms[0].coef;
        if (num % coef != 0) return Narrowed::Unchanged;
        Wide v = num / coef;
        VarId id = lin.terms[0].atom.var_id();
        const IntDomain& d = heap_.domain(id);
        if (v < -kUnbounded || v > kUnbounded || !d.contains(static_cast<Value>(v))) return Narrowed::Unchanged;
        IntDomain nd = d.remove(static_cast<Value>(v));
        if (nd.empty()) return Narrowed::Failed;
        heap_.set_domain(id, std::move(nd));
        return Narrowed::Changed;
      }
      return Narrowed::Unchanged;
    }

    Wide lo = -detail::kWideInf, hi = detail::kWideInf;
    switch (c.relation) {
      case Relation::Eq: lo = 0; hi = 0; break;
      case Relation::Le: hi = 0; break;
      case Relation::Lt: hi = -1; break;
      case Relation::Ge: lo = 0; break;
      case Relation::Gt: lo = 1; break;
      case Relation::Ne: break;
    }

    std::vector<detail::WideInterval> parts;
    parts.reserve(lin.terms.size());
    Wide sum_lo = lin.constant, sum_hi = lin.constant;
    for (const auto& t : lin.terms) {
      auto b = bounds(t.atom);
      Wide a = detail::clamp_wide(t.coef * b.lo), z = detail::clamp_wide(t.coef * b.hi);
      detail::WideInterval p{std::min(a, z), std::max(a, z)};
      parts.push_back(p);
      sum_lo = detail::clamp_wide(sum_lo + p.lo);
      sum_hi = detail::clamp_wide(sum_hi + p.hi);
    }
    if (sum_hi < lo || sum_lo > hi) return Narrowed::Failed;

    Narrowed result = Narrowed::Unchanged;
    for (std::size_t k = 0; k < lin.terms.size(); ++k) {
      const Term& t = lin.terms[k];
      Wide rest_lo = sum_lo - parts[k].lo;
      Wide rest_hi = sum_hi - parts[k].hi;
      // coef * atom in [lo - rest_hi, hi - rest_lo]
      Wide tlo = lo <= -detail::kWideInf || rest_hi >= detail::kWideInf ? -detail::kWideInf : lo - rest_hi;
      Wide thi = hi >= detail::kWideInf || rest_lo <= -detail::kWideInf ? detail::kWideInf : hi - rest_lo;
      Wide alo, ahi;
      if (t.coef > 0) {
        alo = tlo <= -detail::kWideInf ? -detail::kWideInf : detail::ceil_div(tlo, t.coef);
        ahi = thi >= detail::kWideInf ? detail::kWideInf : detail::floor_div(thi, t.coef);
      } else {
        alo = thi >= detail::kWideInf ? -detail::kWideInf : detail::ceil_div(thi, t.coef);
        ahi = tlo <= -detail::kWideInf ? detail::kWideInf : detail::floor_div(tlo, t.coef);
      }
      Narrowed r = t.atom.is_var() ? narrow_var(t.atom.var_id(), alo, ahi) : narrow_tree(t.atom, alo, ahi);
      result = detail::merge(result, r);
      if (result == Narrowed::Failed) return result;
    }
    return result;
  }

  // --- free-index enumeration -------------------------------------------

  bool exists_index_binding(const Constraint& c) {
    auto s = heap_.simplify(c);
    if (!s) return false;
    if (!has_free_index(*s)) return satisfiable_with_store(*s);

    std::vector<VarId> index_vars;
    collect_index_vars(s->lhs, index_vars);
    collect_index_vars(s->rhs, index_vars);
    if (index_vars.empty()) return false;

    std::uint64_t product = 1;
    for (VarId v : index_vars) {
      std::uint64_t n = heap_.domain(v).size();
      if (n != 0 && product > limits_.enum_budget / n) {
        product = limits_.enum_budget + 1;
        break;
      }
      product *= n;
    }
    if (product > limits_.enum_budget)
      throw Error(ErrorKind::BudgetExceeded, "index enumeration for '" + to_string(c, heap_.names()) +
                                                 "' exceeds the budget of " + std::to_string(limits_.enum_budget) +
                                                 " tuples");

    VarId v = index_vars.front();
    IntDomain values = heap_.domain(v);
    bool found = false;
    values.for_each_value([&](Value x) {
      ++stats_.enum_tuples;
      push_level();
      try {
        heap_.set_domain(v, IntDomain::singleton(x));
        found = propagate() != ConsistencyResult::Inconsistent && exists_index_binding(c);
      } catch (...) {
        pop_level();
        throw;
      }
      pop_level();
      return !found;
    });
    return found;
  }

  // Labels the variables of `s` together with every variable connected to
  // them through active constraints; true if some labeling propagates.
  bool satisfiable_with_store(const Constraint& s) {
    std::vector<VarId> vars = vars_of(s);
    for (bool grew = true; grew;) {
      grew = false;
      for (const auto& c : active_) {
        auto sc = heap_.simplify(c);
        if (!sc || has_free_index(*sc)) continue;
        auto cv = vars_of(*sc);
        bool touches = false;
        for (VarId v : cv)
          if (std::find(vars.begin(), vars.end(), v) != vars.end()) touches = true;
        if (!touches) continue;
        for (VarId v : cv) {
          if (std::find(vars.begin(), vars.end(), v) == vars.end()) {
            vars.push_back(v);
            grew = true;
          }
        }
      }
    }
    LabelPlan plan;
    plan.vars = std::move(vars);
    plan.constraint_vars = false;
    bool found = false;
    label(plan, [&] {
      found = true;
      return false;
    });
    return found;
  }

  // --- labeling -----------------------------------------------------------

  std::optional<VarId> first_open(const std::vector<VarId>& vars) const {
    for (VarId v : vars)
      if (!heap_.domain(v).is_singleton()) return v;
    return std::nullopt;
  }

  std::optional<VarId> first_open_in(const std::vector<Expr>& exprs) {
    std::vector<VarId> index_vars, all;
    for (const auto& e : exprs) {
      auto s = heap_.simplify(e);
      if (!s) continue;
      collect_index_vars(*s, index_vars);
      collect_vars(*s, all);
    }
    if (auto v = first_open(index_vars)) return v;
    return first_open(all);
  }

  std::optional<VarId> choose(const LabelPlan& plan) {
    if (auto v = first_open(plan.vars)) return v;
    for (ArrayId a : plan.arrays) {
      const FreeArray& arr = heap_.array(a);
      if (!heap_.domain(arr.length_var).is_singleton()) return arr.length_var;
      if (!arr.kind.is_int()) continue;
      Value n = heap_.domain(arr.length_var).min();
      std::vector<Expr> contents;
      for (Value k = 0; k < n; ++k) contents.push_back(heap_.read(a, Expr::constant(k)));
      if (auto v = first_open_in(contents)) return v;
    }
    if (auto v = first_open_in(plan.exprs)) return v;
    if (plan.constraint_vars) {
      std::vector<Expr> sides;
      for (const auto& c : active_) {
        sides.push_back(c.lhs);
        sides.push_back(c.rhs);
      }
      for (const auto& c : queue_) {
        sides.push_back(c.lhs);
        sides.push_back(c.rhs);
      }
      if (auto v = first_open_in(sides)) return v;
    }
    return std::nullopt;
  }

  bool all_constraints_hold() {
    auto check = [&](const std::vector<Constraint>& cs) {
      for (const auto& c : cs) {
        auto s = heap_.simplify(c);
        if (!s || !is_ground(s->lhs) || !is_ground(s->rhs)) return false;
        if (!holds(s->relation, s->lhs.value(), s->rhs.value())) return false;
      }
      return true;
    };
    return check(active_) && check(queue_);
  }

  bool label_rec(const LabelPlan& plan, const LabelCallback& on_solution) {
    if (propagate() == ConsistencyResult::Inconsistent) return true;
    std::optional<VarId> next = choose(plan);
    if (!next) {
      if (plan.constraint_vars && !all_constraints_hold()) return true;
      ++stats_.labelings;
      return on_solution();
    }
    VarId v = *next;
    while (true) {
      const IntDomain current = heap_.domain(v);
      if (current.empty()) return true;
      Value x = current.min();
      push_level();
      bool keep_going = true;
      try {
        heap_.set_domain(v, IntDomain::singleton(x));
        keep_going = label_rec(plan, on_solution);
      } catch (...) {
        pop_level();
        throw;
      }
      pop_level();
      if (!keep_going) return false;
      IntDomain rest = current.remove(x);
      if (rest.empty()) return true;
      heap_.set_domain(v, std::move(rest));
      if (propagate() == ConsistencyResult::Inconsistent) return true;
    }
  }

  Heap& heap_;
  Strategy strategy_;
  SolverLimits limits_;
  std::vector<Level> levels_;
  std::vector<Constraint> active_;
  std::vector<Constraint> queue_;
  SolverStats stats_;
};

}  // namespace fal

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fal/error.hpp"
#include "fal/eval.hpp"
#include "fal/expr.hpp"
#include "fal/heap.hpp"

namespace fal {

/// How constraints that read an array at a non-constant index are handled.
enum class Strategy {
  Label,     // branch over every index value before the access
  Symbolic,  // keep a[i] symbolic; check by enumerating index bindings
  Delayed,   // queue such constraints until indices are fixed or labeling
  Forbid,    // reject non-constant indices
};

constexpr std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Label: return "label";
    case Strategy::Symbolic: return "symbolic";
    case Strategy::Delayed: return "delayed";
    case Strategy::Forbid: return "forbid";
  }
  return "?";
}

inline std::optional<Strategy> parse_strategy(std::string_view text) {
  for (Strategy s : {Strategy::Label, Strategy::Symbolic, Strategy::Delayed, Strategy::Forbid})
    if (to_string(s) == text) return s;
  return std::nullopt;
}

enum class ConsistencyResult { Consistent, Inconsistent, DelayedAccepted };

constexpr std::string_view to_string(ConsistencyResult r) {
  switch (r) {
    case ConsistencyResult::Consistent: return "consistent";
    case ConsistencyResult::Inconsistent: return "inconsistent";
    case ConsistencyResult::DelayedAccepted: return "delayed";
  }
  return "?";
}

struct DelayTrigger {
  enum class Kind { SingletonDomain, Labeling, ExplicitDemand };
  Kind kind = Kind::Labeling;
  VarId var{};

  static DelayTrigger singleton(VarId v) { return {Kind::SingletonDomain, v}; }
  static DelayTrigger labeling() { return {Kind::Labeling, {}}; }
  static DelayTrigger explicit_demand() { return {Kind::ExplicitDemand, {}}; }
};

/// What to label and in which order: the listed variables, then each
/// array (length first, then elements 0..len-1), then the variables of the
/// listed expressions, then (optionally) every variable still occurring in
/// a constraint. Variables sitting in an array index position are always
/// taken before the others of the same group.
struct LabelPlan {
  std::vector<VarId> vars;
  std::vector<ArrayId> arrays;
  std::vector<Expr> exprs;
  bool constraint_vars = true;
};

// Called once per labeling with every planned variable fixed in the heap.
// Return false to stop the enumeration.
using LabelCallback = std::function<bool()>;

struct SolverStats {
  std::uint64_t propagations = 0;
  std::uint64_t enum_checks = 0;
  std::uint64_t enum_tuples = 0;
  std::uint64_t delayed_queued = 0;
  std::uint64_t delayed_singleton_checks = 0;
  std::uint64_t delayed_label_checks = 0;
  std::uint64_t labelings = 0;
};

/// The constraint-solver seam used by the VM and the search engine. A
/// backend backed by an external SMT solver would implement this.
class Solver {
 public:
  virtual ~Solver() = default;

  virtual Strategy strategy() const = 0;

  virtual std::size_t push_level() = 0;
  virtual void pop_level() = 0;
  virtual std::size_t depth() const = 0;

  virtual ConsistencyResult add_constraint(Constraint c) = 0;
  virtual ConsistencyResult consistent() = 0;
  virtual bool label(const LabelPlan& plan, const LabelCallback& on_solution) = 0;

  virtual ConsistencyResult check_delayed(DelayTrigger) { return consistent(); }
  virtual std::size_t pending_delayed() const { return 0; }

  // Active constraints followed by queued (delayed) ones.
  virtual std::vector<Constraint> constraints() const = 0;
  virtual const SolverStats& stats() const = 0;

  void backtrack_to(std::size_t target) {
    if (target > depth()) throw Error(ErrorKind::Invariant, "backtrack target above current depth");
    while (depth() > target) pop_level();
  }

  /// Whether imposing all of `cs` at a fresh level would be accepted.
  bool possible(const std::vector<Constraint>& cs) {
    push_level();
    bool ok = true;
    try {
      for (const auto& c : cs) {
        if (add_constraint(c) == ConsistencyResult::Inconsistent) {
          ok = false;
          break;
        }
      }
    } catch (...) {
      pop_level();
      throw;
    }
    pop_level();
    return ok;
  }
};

/// Values of all currently fixed variables.
inline Bindings fixed_bindings(const Heap& heap) {
  Bindings out;
  for (std::size_t k = 0; k < heap.var_count(); ++k) {
    const IntVar& v = heap.var(VarId{static_cast<std::uint32_t>(k)});
    if (v.domain.is_singleton()) out.emplace(v.id, v.domain.min());
  }
  return out;
}

/// Base contents of every int array. Elements are evaluated under the
/// currently fixed variables; unmaterialized or still-open slots read as 0.
/// Reading at a constant index materializes, so a constraint never depends
/// on an unmaterialized slot.
inline ConcreteArrays fixed_base_arrays(const Heap& heap) {
  const Bindings bindings = fixed_bindings(heap);
  ConcreteArrays out;
  for (std::size_t k = 0; k < heap.array_count(); ++k) {
    const FreeArray& arr = heap.array(ArrayId{static_cast<std::uint32_t>(k)});
    if (!arr.kind.is_int()) continue;
    const IntDomain& len = heap.domain(arr.length_var);
    if (len.empty()) continue;
    Value n = len.is_singleton() ? len.min() : len.max();
    std::vector<Value> contents(static_cast<std::size_t>(n), 0);
    for (const auto& [idx, el] : arr.elements) {
      if (idx >= n) continue;
      try {
        contents[static_cast<std::size_t>(idx)] = eval_concrete(std::get<Expr>(el), bindings, out);
      } catch (const Error&) {
        // left at 0
      }
    }
    out.emplace(arr.id, std::move(contents));
  }
  return out;
}

/// Independent check of a solution: every constraint must hold under
/// concrete evaluation. Any evaluation error counts as a violation.
inline bool solution_check(const Bindings& bindings, const ConcreteArrays& arrays,
                           const std::vector<Constraint>& constraints) {
  for (const auto& c : constraints) {
    try {
      if (!holds_concrete(c, bindings, arrays)) return false;
    } catch (const Error&) {
      return false;
    }
  }
  return true;
}

}  // namespace fal

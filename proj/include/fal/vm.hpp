// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fal/error.hpp"
#include "fal/expr.hpp"
#include "fal/heap.hpp"
#include "fal/program.hpp"
#include "fal/solver.hpp"

namespace fal {

inline constexpr const char* kIndexOutOfBounds = "ArrayIndexOutOfBoundsException";
inline constexpr const char* kNegativeArraySize = "NegativeArraySizeException";

// Placeholder pushed by FREEITEM and consumed by ARRINIT.
struct FreeMarker {
  friend bool operator==(FreeMarker, FreeMarker) { return true; }
};

using StackValue = std::variant<Expr, ArrayId, FreeMarker>;

// Set on the alternatives of a bounds or length choice, so the instruction
// re-executed in that branch does not ask the same question again.
enum class Pending { None, Proceed, Throw };

struct VmState {
  std::size_t pc = 0;
  std::vector<StackValue> stack;
  std::map<std::string, StackValue> locals;
  Pending pending = Pending::None;
  std::string pending_exception;
  std::uint64_t steps = 0;
};

enum class ChoiceOrigin { Branch, Bounds, NegativeSize, Label };

constexpr const char* to_string(ChoiceOrigin o) {
  switch (o) {
    case ChoiceOrigin::Branch: return "branch";
    case ChoiceOrigin::Bounds: return "bounds";
    case ChoiceOrigin::NegativeSize: return "negative-size";
    case ChoiceOrigin::Label: return "label";
  }
  return "?";
}

struct Alternative {
  std::vector<Constraint> constraints;
  VmState state;
};

struct StepOutcome {
  enum class Kind { Continue, Choice, Solution, Exception, Failure };
  Kind kind = Kind::Continue;
  std::vector<Alternative> alternatives;
  ChoiceOrigin origin = ChoiceOrigin::Branch;
  std::optional<StackValue> value;
  std::string exception;

  static StepOutcome proceed() { return {}; }
  static StepOutcome failure() { return {Kind::Failure, {}, {}, {}, {}}; }
  static StepOutcome thrown(std::string name) { return {Kind::Exception, {}, {}, {}, std::move(name)}; }
  static StepOutcome solution(StackValue v) { return {Kind::Solution, {}, {}, std::move(v), {}}; }
  static StepOutcome choice(ChoiceOrigin origin, std::vector<Alternative> alts) {
    return {Kind::Choice, std::move(alts), origin, {}, {}};
  }
};

struct VmOptions {
  // Largest index domain the label strategy may branch over.
  std::uint64_t label_budget = 1'000'000;
};

/// Executes one search region. `step` mutates the state for deterministic
/// instructions; at a choice the state is left untouched and each
/// alternative carries its own copy.
class Vm {
 public:
  Vm(const Program& program, Heap& heap, Solver& solver, VmOptions options = {})
      : program_(program), heap_(heap), solver_(solver), options_(options) {}

  VmState initial() const { return {}; }

  StepOutcome step(VmState& s) {
    if (s.pc >= program_.code.size())
      throw Error(ErrorKind::ProgramFormat, "execution ran past the last instruction without RETURN or FAIL");
    const Instruction& ins = program_.code[s.pc];
    ++s.steps;
    switch (ins.op) {
      case Opcode::Const:
        s.stack.emplace_back(Expr::constant(ins.value));
        break;
      case Opcode::Load: {
        auto it = s.locals.find(ins.name);
        if (it == s.locals.end()) format_error(ins, "local '" + ins.name + "' read before assignment");
        s.stack.push_back(it->second);
        break;
      }
      case Opcode::Store: {
        StackValue v = pop(s, ins);
        if (const ArrayId* a = std::get_if<ArrayId>(&v); a && !heap_.array(*a).named) heap_.rename_array(*a, ins.name);
        s.locals.insert_or_assign(ins.name, std::move(v));
        break;
      }
      case Opcode::Add:
      case Opcode::Sub:
      case Opcode::Mul: {
        Expr b = pop_int(s, ins);
        Expr a = pop_int(s, ins);
        s.stack.emplace_back(arith(ins, a, b));
        break;
      }
      case Opcode::FreeInt: {
        VarId v = ins.lo ? heap_.new_int_var(ins.name, *ins.lo, *ins.hi) : heap_.new_int_var(ins.name);
        s.locals.insert_or_assign(ins.name, Expr::var(v));
        break;
      }
      case Opcode::NewArrFree: {
        Value bound = ins.has_value ? ins.value : heap_.config().max_len;
        s.stack.emplace_back(heap_.new_free_array(ins.kind, bound));
        break;
      }
      case Opcode::NewArrFixed:
        return new_fixed(s, ins);
      case Opcode::ArrInit: {
        auto n = static_cast<std::size_t>(ins.value);
        if (s.stack.size() < n) format_error(ins, "stack underflow");
        std::vector<std::optional<Expr>> items;
        for (std::size_t k = s.stack.size() - n; k < s.stack.size(); ++k) {
          if (std::holds_alternative<FreeMarker>(s.stack[k])) {
            items.emplace_back(std::nullopt);
          } else if (const Expr* e = std::get_if<Expr>(&s.stack[k])) {
            items.emplace_back(*e);
          } else {
            format_error(ins, "array initializer items must be ints or FREEITEM");
          }
        }
        s.stack.resize(s.stack.size() - n);
        s.stack.emplace_back(heap_.array_from_initializer(items));
        break;
      }
      case Opcode::FreeItem:
        s.stack.emplace_back(FreeMarker{});
        break;
      case Opcode::ALoad:
        return aload(s, ins);
      case Opcode::AStore:
        return astore(s, ins);
      case Opcode::ArrayLength: {
        ArrayId a = pop_array(s, ins);
        s.stack.emplace_back(heap_.length_expr(a));
        break;
      }
      case Opcode::IfCmp:
        return ifcmp(s, ins);
      case Opcode::Goto:
        s.pc = ins.target;
        return StepOutcome::proceed();
      case Opcode::Label:
        break;
      case Opcode::Fail:
        return StepOutcome::failure();
      case Opcode::CheckDelayed:
        if (solver_.check_delayed(DelayTrigger::explicit_demand()) == ConsistencyResult::Inconsistent)
          return StepOutcome::failure();
        break;
      case Opcode::Return:
        return StepOutcome::solution(pop(s, ins));
    }
    ++s.pc;
    return StepOutcome::proceed();
  }

 private:
  [[noreturn]] void format_error(const Instruction& ins, const std::string& msg) const {
    throw Error(ErrorKind::ProgramFormat,
                "line " + std::to_string(ins.line) + " (" + std::string(mnemonic(ins.op)) + "): " + msg);
  }

  StackValue pop(VmState& s, const Instruction& ins) {
    if (s.stack.empty()) format_error(ins, "stack underflow");
    StackValue v = std::move(s.stack.back());
    s.stack.pop_back();
    return v;
  }

  Expr pop_int(VmState& s, const Instruction& ins) {
    StackValue v = pop(s, ins);
    if (const Expr* e = std::get_if<Expr>(&v)) return *e;
    format_error(ins, "expected an int operand");
  }

  ArrayId pop_array(VmState& s, const Instruction& ins) {
    StackValue v = pop(s, ins);
    if (const ArrayId* a = std::get_if<ArrayId>(&v)) return *a;
    format_error(ins, "expected an array reference");
  }

  const StackValue& peek(const VmState& s, std::size_t depth, const Instruction& ins) const {
    if (s.stack.size() <= depth) format_error(ins, "stack underflow");
    return s.stack[s.stack.size() - 1 - depth];
  }

  Expr arith(const Instruction& ins, const Expr& a, const Expr& b) {
    if (a.is_const() && b.is_const()) {
      Value r = 0;
      bool overflow = ins.op == Opcode::Add   ? __builtin_add_overflow(a.value(), b.value(), &r)
                      : ins.op == Opcode::Sub ? __builtin_sub_overflow(a.value(), b.value(), &r)
                                              : __builtin_mul_overflow(a.value(), b.value(), &r);
      if (overflow) throw Error(ErrorKind::Overflow, "line " + std::to_string(ins.line) + ": integer overflow");
      return Expr::constant(r);
    }
    if (ins.op == Opcode::Add) return Expr::add(a, b);
    if (ins.op == Opcode::Sub) return Expr::sub(a, b);
    return Expr::mul(a, b);
  }

  void impose(const std::vector<Constraint>& cs) {
    for (const auto& c : cs) solver_.add_constraint(c);
  }

  // Splits on the alternatives that remain possible. With one left it is
  // imposed directly; nullopt means the "proceed" alternative was taken.
  std::optional<StepOutcome> decide(VmState& s, ChoiceOrigin origin,
                                    std::vector<std::pair<std::vector<Constraint>, std::string>> options) {
    std::vector<Alternative> alts;
    std::vector<std::string> outcomes;
    for (auto& [cs, exception] : options) {
      if (!solver_.possible(cs)) continue;
      VmState next = s;
      next.pending = exception.empty() ? Pending::Proceed : Pending::Throw;
      next.pending_exception = exception;
      alts.push_back({std::move(cs), std::move(next)});
      outcomes.push_back(exception);
    }
    if (alts.empty()) return StepOutcome::failure();
    if (alts.size() > 1) return StepOutcome::choice(origin, std::move(alts));
    impose(alts.front().constraints);
    if (!outcomes.front().empty()) return StepOutcome::thrown(outcomes.front());
    return std::nullopt;
  }

  // Handles a pending decision left by an earlier choice. Returns an outcome
  // for the throw side, nullopt when execution should proceed, and sets
  // `fresh` when no decision has been made yet.
  std::optional<StepOutcome> take_pending(VmState& s, bool& fresh) {
    fresh = false;
    if (s.pending == Pending::Throw) {
      std::string name = s.pending_exception;
      s.pending = Pending::None;
      return StepOutcome::thrown(name);
    }
    if (s.pending == Pending::Proceed) {
      s.pending = Pending::None;
      return std::nullopt;
    }
    fresh = true;
    return std::nullopt;
  }

  std::optional<StepOutcome> check_bounds(VmState& s, ArrayId a, const Expr& idx) {
    bool fresh = false;
    if (auto o = take_pending(s, fresh)) return o;
    if (!fresh) return std::nullopt;
    Expr len = heap_.length_expr(a);
    Expr last = len.is_const() ? Expr::constant(len.value() - 1) : Expr::sub(len, Expr::constant(1));
    return decide(s, ChoiceOrigin::Bounds,
                  {{{make_constraint(Relation::Ge, idx, Expr::constant(0)), make_constraint(Relation::Le, idx, last)}, ""},
                   {{make_constraint(Relation::Ge, idx, len)}, kIndexOutOfBounds},
                   {{make_constraint(Relation::Lt, idx, Expr::constant(0))}, kIndexOutOfBounds}});
  }

  // Branches over the first open variable of `idx`; every alternative
  // re-executes the current instruction with bounds already settled.
  StepOutcome label_index(VmState& s, const Expr& idx) {
    std::vector<VarId> vars;
    collect_index_vars(idx, vars);
    collect_vars(idx, vars);
    for (VarId v : vars) {
      const IntDomain& d = heap_.domain(v);
      if (d.is_singleton()) continue;
      if (d.size() > options_.label_budget)
        throw Error(ErrorKind::BudgetExceeded, "labeling index variable '" + heap_.var(v).name + "' needs " +
                                                   std::to_string(d.size()) + " branches");
      std::vector<Alternative> alts;
      d.for_each_value([&](Value x) {
        VmState next = s;
        next.pending = Pending::Proceed;
        alts.push_back({{make_constraint(Relation::Eq, Expr::var(v), Expr::constant(x))}, std::move(next)});
        return true;
      });
      return StepOutcome::choice(ChoiceOrigin::Label, std::move(alts));
    }
    throw Error(ErrorKind::Invariant, "non-constant index without open variables");
  }

  void require_index_mode(const Instruction& ins, const Expr& idx) {
    if (solver_.strategy() == Strategy::Forbid && !idx.is_const())
      throw Error(ErrorKind::ForbiddenFreeIndex, "line " + std::to_string(ins.line) + ": array index '" +
                                                     to_string(idx, heap_.names()) + "' is not a constant");
  }

  bool labels_indices(ArrayId a) const {
    return solver_.strategy() == Strategy::Label || heap_.array(a).kind.is_array();
  }

  StepOutcome aload(VmState& s, const Instruction& ins) {
    const auto* arr = std::get_if<ArrayId>(&peek(s, 1, ins));
    const auto* raw = std::get_if<Expr>(&peek(s, 0, ins));
    if (!arr || !raw) format_error(ins, "expected an array reference and an int index");
    const ArrayId a = *arr;
    auto idx = heap_.simplify(*raw);
    if (!idx) return StepOutcome::failure();
    require_index_mode(ins, *idx);
    if (auto o = check_bounds(s, a, *idx)) return *o;

    if (!idx->is_const()) {
      heap_.track(*idx);
      if (labels_indices(a)) return label_index(s, *idx);
    }
    s.stack.resize(s.stack.size() - 2);
    if (heap_.array(a).kind.is_array()) {
      s.stack.emplace_back(std::get<ArrayId>(heap_.element_at(a, idx->value())));
    } else {
      s.stack.emplace_back(heap_.read(a, *idx));
    }
    ++s.pc;
    return StepOutcome::proceed();
  }

  StepOutcome astore(VmState& s, const Instruction& ins) {
    const auto* arr = std::get_if<ArrayId>(&peek(s, 2, ins));
    const auto* raw = std::get_if<Expr>(&peek(s, 1, ins));
    if (!arr || !raw) format_error(ins, "expected an array reference, an int index and a value");
    const ArrayId a = *arr;
    const StackValue value = peek(s, 0, ins);
    const bool nested = heap_.array(a).kind.is_array();
    if (nested != std::holds_alternative<ArrayId>(value) || std::holds_alternative<FreeMarker>(value))
      format_error(ins, "stored value does not match the element type " + heap_.array(a).kind.to_string());
    auto idx = heap_.simplify(*raw);
    if (!idx) return StepOutcome::failure();
    require_index_mode(ins, *idx);
    if (auto o = check_bounds(s, a, *idx)) return *o;

    if (!idx->is_const()) {
      heap_.track(*idx);
      if (labels_indices(a)) return label_index(s, *idx);
    }
    s.stack.resize(s.stack.size() - 3);
    if (nested) {
      heap_.bind_element(a, idx->value(), std::get<ArrayId>(value));
    } else {
      auto v = heap_.simplify(std::get<Expr>(value));
      if (!v) return StepOutcome::failure();
      if (solver_.strategy() == Strategy::Label) {
        heap_.bind_element(a, idx->value(), *v);
      } else {
        // Symbolic reads already taken from this array must keep seeing the
        // old contents, so writes become layers instead of base updates.
        heap_.push_layer(a, *idx, *v);
      }
    }
    ++s.pc;
    return StepOutcome::proceed();
  }

  StepOutcome new_fixed(VmState& s, const Instruction& ins) {
    const auto* raw = std::get_if<Expr>(&peek(s, 0, ins));
    if (!raw) format_error(ins, "expected an int length");
    auto len = heap_.simplify(*raw);
    if (!len) return StepOutcome::failure();
    if (!len->is_const()) {
      bool fresh = false;
      if (auto o = take_pending(s, fresh)) return *o;
      if (fresh) {
        auto o = decide(s, ChoiceOrigin::NegativeSize,
                        {{{make_constraint(Relation::Ge, *len, Expr::constant(0)),
                           make_constraint(Relation::Le, *len, Expr::constant(heap_.config().max_len))},
                          ""},
                         {{make_constraint(Relation::Lt, *len, Expr::constant(0))}, kNegativeArraySize}});
        if (o) return *o;
      }
      len = heap_.simplify(*len);
      if (!len) return StepOutcome::failure();
    }
    Expr length = *len;
    if (!length.is_const() && !length.is_var()) {
      VarId t = heap_.new_int_var("len", 0, heap_.config().max_len);
      if (solver_.add_constraint(make_constraint(Relation::Eq, Expr::var(t), length)) ==
          ConsistencyResult::Inconsistent)
        return StepOutcome::failure();
      length = heap_.simplify(Expr::var(t)).value_or(Expr::var(t));
    }
    auto a = heap_.new_fixed_array(length, ins.free_elements, ins.kind);
    if (!a) return StepOutcome::thrown(kNegativeArraySize);
    s.stack.back() = *a;
    ++s.pc;
    return StepOutcome::proceed();
  }

  StepOutcome ifcmp(VmState& s, const Instruction& ins) {
    Expr rhs_raw = pop_int(s, ins);
    Expr lhs_raw = pop_int(s, ins);
    auto lhs = heap_.simplify(lhs_raw);
    auto rhs = heap_.simplify(rhs_raw);
    if (!lhs || !rhs) return StepOutcome::failure();
    if (lhs->is_const() && rhs->is_const()) {
      s.pc = holds(ins.relation, lhs->value(), rhs->value()) ? ins.target : s.pc + 1;
      return StepOutcome::proceed();
    }
    Constraint c = make_constraint(ins.relation, *lhs, *rhs);
    const bool yes = solver_.possible({c});
    const bool no = solver_.possible({c.negated()});
    if (yes && no) {
      VmState taken = s;
      taken.pc = ins.target;
      VmState fallthrough = s;
      fallthrough.pc = s.pc + 1;
      return StepOutcome::choice(ChoiceOrigin::Branch, {{{c}, std::move(taken)}, {{c.negated()}, std::move(fallthrough)}});
    }
    if (!yes && !no) return StepOutcome::failure();
    impose({yes ? c : c.negated()});
    s.pc = yes ? ins.target : s.pc + 1;
    return StepOutcome::proceed();
  }

  const Program& program_;
  Heap& heap_;
  Solver& solver_;
  VmOptions options_;
};

}  // namespace fal

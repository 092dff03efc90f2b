// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "fal/error.hpp"
#include "fal/expr.hpp"

namespace fal {

using Bindings = std::map<VarId, Value>;
using ConcreteArrays = std::map<ArrayId, std::vector<Value>>;

/// Evaluates `e` with every variable bound and every array given as its
/// concrete base contents. This is the ground truth the solver is checked
/// against, so it shares no code with propagation or simplification.
inline Value eval_concrete(const Expr& e, const Bindings& bindings, const ConcreteArrays& arrays) {
  auto checked = [](bool overflow, Value v) {
    if (overflow) throw Error(ErrorKind::Overflow, "integer overflow in concrete evaluation");
    return v;
  };
  switch (e.op()) {
    case ExprOp::Const:
      return e.value();
    case ExprOp::Var: {
      auto it = bindings.find(e.var_id());
      if (it == bindings.end())
        throw Error(ErrorKind::MissingBinding, "no value for variable v" + std::to_string(e.var_id().value));
      return it->second;
    }
    case ExprOp::Add: {
      Value r;
      bool o = __builtin_add_overflow(eval_concrete(e.lhs(), bindings, arrays),
                                      eval_concrete(e.rhs(), bindings, arrays), &r);
      return checked(o, r);
    }
    case ExprOp::Sub: {
      Value r;
      bool o = __builtin_sub_overflow(eval_concrete(e.lhs(), bindings, arrays),
                                      eval_concrete(e.rhs(), bindings, arrays), &r);
      return checked(o, r);
    }
    case ExprOp::Mul: {
      Value r;
      bool o = __builtin_mul_overflow(eval_concrete(e.lhs(), bindings, arrays),
                                      eval_concrete(e.rhs(), bindings, arrays), &r);
      return checked(o, r);
    }
    case ExprOp::Select: {
      auto it = arrays.find(e.array());
      if (it == arrays.end())
        throw Error(ErrorKind::MissingBinding, "no contents for array arr" + std::to_string(e.array().value));
      Value k = eval_concrete(e.index(), bindings, arrays);
      if (k < 0 || k >= static_cast<Value>(it->second.size()))
        throw Error(ErrorKind::Bounds, "index " + std::to_string(k) + " outside array of length " +
                                           std::to_string(it->second.size()));
      return it->second[static_cast<std::size_t>(k)];
    }
    case ExprOp::StoreView: {
      Value inner = eval_concrete(e.index(), bindings, arrays);
      Value at = eval_concrete(e.store_index(), bindings, arrays);
      if (inner == at) return eval_concrete(e.store_value(), bindings, arrays);
      return eval_concrete(e.under(), bindings, arrays);
    }
  }
  throw Error(ErrorKind::Invariant, "unknown expression node");
}

inline bool holds_concrete(const Constraint& c, const Bindings& bindings, const ConcreteArrays& arrays) {
  return holds(c.relation, eval_concrete(c.lhs, bindings, arrays), eval_concrete(c.rhs, bindings, arrays));
}

}  // namespace fal

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fal/domain.hpp"

namespace fal {

struct VarId {
  std::uint32_t value = 0;
  friend auto operator<=>(const VarId&, const VarId&) = default;
};

struct ArrayId {
  std::uint32_t value = 0;
  friend auto operator<=>(const ArrayId&, const ArrayId&) = default;
};

/// Element type of a free array: `int`, or an array of a nested kind.
/// Depth 0 is `int[]`, depth 1 is `int[][]`, and so on.
class ElementKind {
 public:
  static constexpr ElementKind integer() { return ElementKind(0); }
  static constexpr ElementKind array_of(ElementKind inner) { return ElementKind(inner.depth_ + 1); }

  constexpr bool is_int() const { return depth_ == 0; }
  constexpr bool is_array() const { return depth_ > 0; }
  constexpr int depth() const { return depth_; }
  constexpr ElementKind inner() const { return ElementKind(depth_ > 0 ? depth_ - 1 : 0); }

  std::string to_string() const {
    std::string s = "int";
    for (int k = 0; k < depth_; ++k) s += "[]";
    return s;
  }

  friend constexpr bool operator==(ElementKind, ElementKind) = default;

 private:
  constexpr explicit ElementKind(int depth) : depth_(depth) {}
  int depth_;
};

enum class ExprOp { Const, Var, Add, Sub, Mul, Select, StoreView };

namespace detail {
struct ExprNode;
}

/// Immutable symbolic integer expression. Copies share structure.
///
/// `Select(a, i)` reads the base contents of array `a` at a symbolic index.
/// `StoreView(a, under, si, sv, i)` reads index `i` of the array version
/// obtained by writing `sv` at `si` into the version whose read at `i` is
/// `under`.
class Expr {
 public:
  Expr();

  static Expr constant(Value v);
  static Expr var(VarId id);
  static Expr add(Expr a, Expr b);
  static Expr sub(Expr a, Expr b);
  static Expr mul(Expr a, Expr b);
  static Expr select(ArrayId array, Expr index);
  static Expr store_view(ArrayId array, Expr under, Expr store_index, Expr store_value, Expr inner_index);

  ExprOp op() const;
  bool is_const() const { return op() == ExprOp::Const; }
  bool is_var() const { return op() == ExprOp::Var; }
  Value value() const;
  VarId var_id() const;
  ArrayId array() const;

  const Expr& lhs() const;
  const Expr& rhs() const;
  // Select: the read index. StoreView: the inner (read) index.
  const Expr& index() const;
  const Expr& under() const;
  const Expr& store_index() const;
  const Expr& store_value() const;

  std::size_t hash() const;
  bool same_as(const Expr& other) const;

  friend bool operator==(const Expr& a, const Expr& b) { return a.same_as(b); }

 private:
  friend Expr make_expr(detail::ExprNode node);
  explicit Expr(std::shared_ptr<const detail::ExprNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const detail::ExprNode> node_;
};

namespace detail {
struct ExprNode {
  ExprOp op = ExprOp::Const;
  Value value = 0;
  VarId var{};
  ArrayId array{};
  std::vector<Expr> kids;
  std::size_t hash = 0;
};

inline std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}
}  // namespace detail

inline Expr make_expr(detail::ExprNode node) {
  std::size_t h = (static_cast<std::size_t>(node.op) + 1) * 1000003u;
  h = detail::mix(h, std::hash<Value>{}(node.value));
  h = detail::mix(h, node.var.value);
  h = detail::mix(h, node.array.value);
  for (const auto& k : node.kids) h = detail::mix(h, k.hash());
  node.hash = h;
  return Expr(std::make_shared<const detail::ExprNode>(std::move(node)));
}

inline Expr::Expr() : Expr(constant(0)) {}

inline Expr Expr::constant(Value v) {
  detail::ExprNode n;
  n.op = ExprOp::Const;
  n.value = v;
  return make_expr(std::move(n));
}

inline Expr Expr::var(VarId id) {
  detail::ExprNode n;
  n.op = ExprOp::Var;
  n.var = id;
  return make_expr(std::move(n));
}

namespace detail {
inline Expr binary(ExprOp op, Expr a, Expr b) {
  ExprNode n;
  n.op = op;
  n.kids = {std::move(a), std::move(b)};
  return make_expr(std::move(n));
}
}  // namespace detail

inline Expr Expr::add(Expr a, Expr b) { return detail::binary(ExprOp::Add, std::move(a), std::move(b)); }
inline Expr Expr::sub(Expr a, Expr b) { return detail::binary(ExprOp::Sub, std::move(a), std::move(b)); }
inline Expr Expr::mul(Expr a, Expr b) { return detail::binary(ExprOp::Mul, std::move(a), std::move(b)); }

inline Expr Expr::select(ArrayId array, Expr index) {
  detail::ExprNode n;
  n.op = ExprOp::Select;
  n.array = array;
  n.kids = {std::move(index)};
  return make_expr(std::move(n));
}

inline Expr Expr::store_view(ArrayId array, Expr under, Expr store_index, Expr store_value, Expr inner_index) {
  detail::ExprNode n;
  n.op = ExprOp::StoreView;
  n.array = array;
  n.kids = {std::move(under), std::move(store_index), std::move(store_value), std::move(inner_index)};
  return make_expr(std::move(n));
}

inline ExprOp Expr::op() const { return node_->op; }
inline Value Expr::value() const { return node_->value; }
inline VarId Expr::var_id() const { return node_->var; }
inline ArrayId Expr::array() const { return node_->array; }
inline const Expr& Expr::lhs() const { return node_->kids.at(0); }
inline const Expr& Expr::rhs() const { return node_->kids.at(1); }
inline const Expr& Expr::index() const { return op() == ExprOp::StoreView ? node_->kids.at(3) : node_->kids.at(0); }
inline const Expr& Expr::under() const { return node_->kids.at(0); }
inline const Expr& Expr::store_index() const { return node_->kids.at(1); }
inline const Expr& Expr::store_value() const { return node_->kids.at(2); }
inline std::size_t Expr::hash() const { return node_->hash; }

inline bool Expr::same_as(const Expr& other) const {
  if (node_ == other.node_) return true;
  const auto& a = *node_;
  const auto& b = *other.node_;
  if (a.hash != b.hash || a.op != b.op || a.value != b.value || a.var != b.var || a.array != b.array ||
      a.kids.size() != b.kids.size())
    return false;
  for (std::size_t k = 0; k < a.kids.size(); ++k)
    if (!a.kids[k].same_as(b.kids[k])) return false;
  return true;
}

namespace detail {
inline Value checked_fold(ExprOp op, Value a, Value b) {
  Value r = 0;
  bool overflow = op == ExprOp::Add   ? __builtin_add_overflow(a, b, &r)
                  : op == ExprOp::Sub ? __builtin_sub_overflow(a, b, &r)
                                      : __builtin_mul_overflow(a, b, &r);
  if (overflow) throw Error(ErrorKind::Overflow, "integer overflow while folding constants");
  return r;
}
}  // namespace detail

// Folding builders: two constants fold, nothing else is rewritten.
inline Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return Expr::constant(detail::checked_fold(ExprOp::Add, a.value(), b.value()));
  return Expr::add(a, b);
}
inline Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return Expr::constant(detail::checked_fold(ExprOp::Sub, a.value(), b.value()));
  return Expr::sub(a, b);
}
inline Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return Expr::constant(detail::checked_fold(ExprOp::Mul, a.value(), b.value()));
  return Expr::mul(a, b);
}

/// Calls `fn` on every node, parents before children.
template <typename Fn>
void visit(const Expr& e, Fn&& fn) {
  fn(e);
  switch (e.op()) {
    case ExprOp::Const:
    case ExprOp::Var:
      return;
    case ExprOp::Add:
    case ExprOp::Sub:
    case ExprOp::Mul:
      visit(e.lhs(), fn);
      visit(e.rhs(), fn);
      return;
    case ExprOp::Select:
      visit(e.index(), fn);
      return;
    case ExprOp::StoreView:
      visit(e.under(), fn);
      visit(e.store_index(), fn);
      visit(e.store_value(), fn);
      visit(e.index(), fn);
      return;
  }
}

inline void append_unique(std::vector<VarId>& out, VarId v) {
  if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
}

/// Variables of `e` in first-occurrence order.
inline void collect_vars(const Expr& e, std::vector<VarId>& out) {
  visit(e, [&](const Expr& n) {
    if (n.is_var()) append_unique(out, n.var_id());
  });
}

inline std::vector<VarId> vars_of(const Expr& e) {
  std::vector<VarId> out;
  collect_vars(e, out);
  return out;
}

/// Variables occurring inside an array index position (Select index,
/// StoreView store/read index).
inline void collect_index_vars(const Expr& e, std::vector<VarId>& out) {
  visit(e, [&](const Expr& n) {
    if (n.op() == ExprOp::Select) {
      collect_vars(n.index(), out);
    } else if (n.op() == ExprOp::StoreView) {
      collect_vars(n.store_index(), out);
      collect_vars(n.index(), out);
    }
  });
}

/// True if `e` reads an array at a non-constant index.
inline bool has_free_index(const Expr& e) {
  bool found = false;
  visit(e, [&](const Expr& n) {
    if (n.op() == ExprOp::Select && !n.index().is_const()) found = true;
    if (n.op() == ExprOp::StoreView && (!n.index().is_const() || !n.store_index().is_const())) found = true;
  });
  return found;
}

inline bool is_ground(const Expr& e) {
  bool ground = true;
  visit(e, [&](const Expr& n) {
    if (n.op() == ExprOp::Var || n.op() == ExprOp::Select || n.op() == ExprOp::StoreView) ground = false;
  });
  return ground;
}

enum class Relation { Eq, Ne, Lt, Le, Gt, Ge };

constexpr Relation complement(Relation r) {
  switch (r) {
    case Relation::Eq: return Relation::Ne;
    case Relation::Ne: return Relation::Eq;
    case Relation::Lt: return Relation::Ge;
    case Relation::Ge: return Relation::Lt;
    case Relation::Le: return Relation::Gt;
    case Relation::Gt: return Relation::Le;
  }
  return r;
}

constexpr bool holds(Relation r, Value a, Value b) {
  switch (r) {
    case Relation::Eq: return a == b;
    case Relation::Ne: return a != b;
    case Relation::Lt: return a < b;
    case Relation::Le: return a <= b;
    case Relation::Gt: return a > b;
    case Relation::Ge: return a >= b;
  }
  return false;
}

constexpr const char* symbol(Relation r) {
  switch (r) {
    case Relation::Eq: return "==";
    case Relation::Ne: return "!=";
    case Relation::Lt: return "<";
    case Relation::Le: return "<=";
    case Relation::Gt: return ">";
    case Relation::Ge: return ">=";
  }
  return "?";
}

struct Constraint {
  Relation relation = Relation::Eq;
  Expr lhs;
  Expr rhs;
  // Set only by the delayed strategy for constraints with a free index.
  bool delayed = false;

  Constraint negated() const { return {complement(relation), lhs, rhs, false}; }
};

inline Constraint make_constraint(Relation r, Expr lhs, Expr rhs) { return {r, std::move(lhs), std::move(rhs), false}; }

inline std::vector<VarId> vars_of(const Constraint& c) {
  std::vector<VarId> out;
  collect_vars(c.lhs, out);
  collect_vars(c.rhs, out);
  return out;
}

inline bool has_free_index(const Constraint& c) { return has_free_index(c.lhs) || has_free_index(c.rhs); }

struct NameResolver {
  std::function<std::string(VarId)> var = [](VarId v) { return "v" + std::to_string(v.value); };
  std::function<std::string(ArrayId)> array = [](ArrayId a) { return "arr" + std::to_string(a.value); };
};

namespace detail {
inline int precedence(ExprOp op) {
  switch (op) {
    case ExprOp::Add:
    case ExprOp::Sub: return 1;
    case ExprOp::Mul: return 2;
    default: return 3;
  }
}
}  // namespace detail

inline std::string to_string(const Expr& e, const NameResolver& names = {}) {
  auto wrap = [&](const Expr& child, int parent, bool right) {
    std::string s = to_string(child, names);
    int p = detail::precedence(child.op());
    if (p < parent || (right && p == parent && p < 3 && child.op() != ExprOp::Mul)) return "(" + s + ")";
    return s;
  };
  switch (e.op()) {
    case ExprOp::Const: return std::to_string(e.value());
    case ExprOp::Var: return names.var(e.var_id());
    case ExprOp::Add: return wrap(e.lhs(), 1, false) + " + " + wrap(e.rhs(), 1, true);
    case ExprOp::Sub: return wrap(e.lhs(), 1, false) + " - " + wrap(e.rhs(), 1, true);
    case ExprOp::Mul: return wrap(e.lhs(), 2, false) + " * " + wrap(e.rhs(), 2, true);
    case ExprOp::Select: return names.array(e.array()) + "[" + to_string(e.index(), names) + "]";
    case ExprOp::StoreView:
      return "store(" + to_string(e.under(), names) + " | " + to_string(e.store_index(), names) +
             " := " + to_string(e.store_value(), names) + ")[" + to_string(e.index(), names) + "]";
  }
  return "?";
}

inline std::string to_string(const Constraint& c, const NameResolver& names = {}) {
  return to_string(c.lhs, names) + " " + symbol(c.relation) + " " + to_string(c.rhs, names);
}

}  // namespace fal

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fal/domain.hpp"
#include "fal/error.hpp"
#include "fal/expr.hpp"

namespace fal {

struct HeapConfig {
  // Domain of `int` logic variables that carry no explicit bounds.
  Value int_min = std::numeric_limits<std::int32_t>::min();
  Value int_max = std::numeric_limits<std::int32_t>::max();
  // Length bound of free arrays declared without one.
  Value max_len = 16;
};

struct IntVar {
  VarId id;
  std::string name;
  IntDomain domain;
};

// Int-kind elements are expressions (a fresh variable, a constant, or
// whatever was stored); array-kind elements are nested arrays.
using Element = std::variant<Expr, ArrayId>;

struct StoreLayer {
  Expr index;
  Expr value;
};

struct FreeArray {
  ArrayId id;
  ElementKind kind = ElementKind::integer();
  VarId length_var;
  Value max_len = 0;
  bool free_elements = true;
  std::string name;
  bool named = false;
  std::map<Value, Element> elements;
  // Symbolic writes, oldest first. Reads resolve newest-first.
  std::vector<StoreLayer> layers;
};

/// Owns every logic variable and free array of one search instance. All
/// mutation is recorded on a trail so `undo_to(mark)` restores the exact
/// earlier state.
class Heap {
 public:
  explicit Heap(HeapConfig config = {}) : config_(config) {
    if (config_.int_min > config_.int_max) throw Error(ErrorKind::InvalidDomain, "empty default int domain");
    if (config_.max_len < 0) throw Error(ErrorKind::InvalidArgument, "negative max length");
  }

  const HeapConfig& config() const { return config_; }

  VarId new_int_var(std::string name, Value lo, Value hi) {
    if (lo > hi)
      throw Error(ErrorKind::InvalidDomain,
                  "variable '" + name + "' has empty domain [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    VarId id{static_cast<std::uint32_t>(vars_.size())};
    vars_.push_back({id, std::move(name), IntDomain::range(lo, hi)});
    trail_.push_back(VarCreated{});
    return id;
  }

  VarId new_int_var(std::string name) { return new_int_var(std::move(name), config_.int_min, config_.int_max); }

  ArrayId new_free_array(ElementKind kind, Value max_len) {
    if (max_len < 0) throw Error(ErrorKind::InvalidArgument, "negative array length bound " + std::to_string(max_len));
    ArrayId id = next_array_id();
    VarId len = new_int_var(default_array_name(id) + ".length", 0, max_len);
    push_array(id, kind, len, max_len, true);
    return id;
  }

  /// `len` must be a constant or a variable. A negative constant yields
  /// nullopt (the caller raises NegativeArraySizeException). A variable
  /// length is aliased, not copied, and narrowed to [0, max_len].
  std::optional<ArrayId> new_fixed_array(const Expr& len, bool free_elements, ElementKind kind) {
    ArrayId id = next_array_id();
    if (len.is_const()) {
      if (len.value() < 0) return std::nullopt;
      VarId lv = new_int_var(default_array_name(id) + ".length", len.value(), len.value());
      push_array(id, kind, lv, len.value(), free_elements);
      return id;
    }
    if (!len.is_var()) throw Error(ErrorKind::InvalidArgument, "array length must be a constant or a variable");
    VarId lv = len.var_id();
    IntDomain narrowed = domain(lv).intersect(0, config_.max_len);
    if (narrowed.empty()) return std::nullopt;
    set_domain(lv, narrowed);
    push_array(id, kind, lv, config_.max_len, free_elements);
    return id;
  }

  /// Items are constants (or any int expression); nullopt marks a free item.
  ArrayId array_from_initializer(std::span<const std::optional<Expr>> items) {
    ArrayId id = next_array_id();
    auto n = static_cast<Value>(items.size());
    VarId lv = new_int_var(default_array_name(id) + ".length", n, n);
    push_array(id, ElementKind::integer(), lv, n, true);
    for (std::size_t k = 0; k < items.size(); ++k) {
      Expr e = items[k] ? *items[k]
                        : Expr::var(new_int_var(default_array_name(id) + "[" + std::to_string(k) + "]"));
      arrays_.back().elements.emplace(static_cast<Value>(k), e);
    }
    return id;
  }

  /// Lazily materializes element `k`; repeated calls return the same element.
  Element element_at(ArrayId a, Value k) {
    FreeArray& arr = array_mut(a);
    if (k < 0 || k >= arr.max_len)
      throw Error(ErrorKind::Invariant, "element " + std::to_string(k) + " outside [0, " + std::to_string(arr.max_len) +
                                            ") of " + arr.name);
    if (auto it = arr.elements.find(k); it != arr.elements.end()) return it->second;
    std::string elem_name = arr.name + "[" + std::to_string(k) + "]";
    Element fresh;
    if (arr.kind.is_int()) {
      fresh = arr.free_elements ? Expr::var(new_int_var(elem_name)) : Expr::constant(0);
    } else {
      ElementKind inner = arr.kind.inner();
      Value bound = arr.max_len;
      ArrayId nested = new_free_array(inner, bound);
      rename_array(nested, elem_name);
      fresh = nested;
    }
    // new_free_array may have reallocated arrays_.
    array_mut(a).elements.emplace(k, fresh);
    trail_.push_back(ElementEntry{a, k, std::nullopt});
    return fresh;
  }

  void bind_element(ArrayId a, Value k, Element value) {
    element_at(a, k);
    FreeArray& arr = array_mut(a);
    auto it = arr.elements.find(k);
    trail_.push_back(ElementEntry{a, k, it->second});
    it->second = std::move(value);
  }

  void push_layer(ArrayId a, Expr index, Expr value) {
    array_mut(a).layers.push_back({std::move(index), std::move(value)});
    trail_.push_back(LayerEntry{a});
  }

  /// Current contents of int array `a` at `index`, resolved through the
  /// symbolic write layers. Constant reads materialize the base element.
  Expr read(ArrayId a, const Expr& index) {
    const FreeArray& arr = array(a);
    if (!arr.kind.is_int()) throw Error(ErrorKind::Invariant, "symbolic read of nested array " + arr.name);
    Expr value = index.is_const() ? element_expr(a, index.value()) : Expr::select(a, index);
    const auto layers = array(a).layers;
    for (const auto& layer : layers) {
      if (layer.index.is_const() && index.is_const()) {
        if (layer.index.value() == index.value()) value = layer.value;
      } else if (layer.index.same_as(index)) {
        value = layer.value;
      } else {
        value = Expr::store_view(a, value, layer.index, layer.value, index);
      }
    }
    return value;
  }

  /// Substitutes singleton variables, folds constants, and resolves reads
  /// whose index became constant. Returns nullopt when a read index lies
  /// outside the array's current length range.
  std::optional<Expr> simplify(const Expr& e) {
    try {
      return simplify_rec(e);
    } catch (const OutOfRange&) {
      return std::nullopt;
    }
  }

  std::optional<Constraint> simplify(const Constraint& c) {
    auto l = simplify(c.lhs);
    if (!l) return std::nullopt;
    auto r = simplify(c.rhs);
    if (!r) return std::nullopt;
    return Constraint{c.relation, *l, *r, c.delayed};
  }

  Expr length_expr(ArrayId a) const {
    const IntDomain& d = domain(array(a).length_var);
    if (d.is_singleton()) return Expr::constant(d.min());
    return Expr::var(array(a).length_var);
  }

  const IntDomain& domain(VarId v) const { return var(v).domain; }

  /// Trailed domain update; returns true if the domain changed.
  bool set_domain(VarId v, IntDomain d) {
    IntVar& iv = var_mut(v);
    if (iv.domain == d) return false;
    trail_.push_back(DomainEntry{v, iv.domain});
    iv.domain = std::move(d);
    return true;
  }

  void rename_array(ArrayId a, std::string name) {
    FreeArray& arr = array_mut(a);
    trail_.push_back(ArrayRename{a, arr.name, arr.named});
    arr.name = name;
    arr.named = true;
    IntVar& len = var_mut(arr.length_var);
    if (len.name == default_array_name(a) + ".length") {
      trail_.push_back(VarRename{len.id, len.name});
      len.name = name + ".length";
    }
  }

  // Non-constant index expressions of array accesses made on the current
  // path. Their values identify distinct solutions at a leaf.
  void track(const Expr& index) {
    for (const auto& t : tracked_)
      if (t.same_as(index)) return;
    tracked_.push_back(index);
    trail_.push_back(TrackEntry{});
  }
  const std::vector<Expr>& tracked() const { return tracked_; }

  const IntVar& var(VarId v) const {
    if (v.value >= vars_.size()) throw Error(ErrorKind::Invariant, "unknown variable v" + std::to_string(v.value));
    return vars_[v.value];
  }

  const FreeArray& array(ArrayId a) const {
    if (a.value >= arrays_.size()) throw Error(ErrorKind::Invariant, "unknown array arr" + std::to_string(a.value));
    return arrays_[a.value];
  }

  std::size_t var_count() const { return vars_.size(); }
  std::size_t array_count() const { return arrays_.size(); }

  std::size_t mark() const { return trail_.size(); }

  void undo_to(std::size_t mark) {
    if (mark > trail_.size()) throw Error(ErrorKind::Invariant, "undo past the end of the trail");
    while (trail_.size() > mark) {
      std::visit([this](auto& entry) { undo(entry); }, trail_.back());
      trail_.pop_back();
    }
  }

  NameResolver names() const {
    NameResolver r;
    r.var = [this](VarId v) { return v.value < vars_.size() ? vars_[v.value].name : "v" + std::to_string(v.value); };
    r.array = [this](ArrayId a) {
      return a.value < arrays_.size() ? arrays_[a.value].name : "arr" + std::to_string(a.value);
    };
    return r;
  }

  static std::string default_array_name(ArrayId a) { return "arr" + std::to_string(a.value); }

 private:
  struct OutOfRange {};

  struct DomainEntry {
    VarId var;
    IntDomain previous;
  };
  struct VarCreated {};
  struct ArrayCreated {};
  struct ElementEntry {
    ArrayId array;
    Value index;
    std::optional<Element> previous;
  };
  struct LayerEntry {
    ArrayId array;
  };
  struct ArrayRename {
    ArrayId array;
    std::string previous;
    bool previously_named;
  };
  struct VarRename {
    VarId var;
    std::string previous;
  };
  struct TrackEntry {};

  using TrailEntry =
      std::variant<DomainEntry, VarCreated, ArrayCreated, ElementEntry, LayerEntry, ArrayRename, VarRename, TrackEntry>;

  void undo(DomainEntry& e) { vars_[e.var.value].domain = std::move(e.previous); }
  void undo(VarCreated&) { vars_.pop_back(); }
  void undo(ArrayCreated&) { arrays_.pop_back(); }
  void undo(ElementEntry& e) {
    auto& elements = arrays_[e.array.value].elements;
    if (e.previous) {
      elements.insert_or_assign(e.index, std::move(*e.previous));
    } else {
      elements.erase(e.index);
    }
  }
  void undo(LayerEntry& e) { arrays_[e.array.value].layers.pop_back(); }
  void undo(ArrayRename& e) {
    arrays_[e.array.value].name = std::move(e.previous);
    arrays_[e.array.value].named = e.previously_named;
  }
  void undo(VarRename& e) { vars_[e.var.value].name = std::move(e.previous); }
  void undo(TrackEntry&) { tracked_.pop_back(); }

  ArrayId next_array_id() const { return ArrayId{static_cast<std::uint32_t>(arrays_.size())}; }

  void push_array(ArrayId id, ElementKind kind, VarId length, Value max_len, bool free_elements) {
    FreeArray arr;
    arr.id = id;
    arr.kind = kind;
    arr.length_var = length;
    arr.max_len = max_len;
    arr.free_elements = free_elements;
    arr.name = default_array_name(id);
    arrays_.push_back(std::move(arr));
    trail_.push_back(ArrayCreated{});
  }

  IntVar& var_mut(VarId v) {
    if (v.value >= vars_.size()) throw Error(ErrorKind::Invariant, "unknown variable v" + std::to_string(v.value));
    return vars_[v.value];
  }

  FreeArray& array_mut(ArrayId a) {
    if (a.value >= arrays_.size()) throw Error(ErrorKind::Invariant, "unknown array arr" + std::to_string(a.value));
    return arrays_[a.value];
  }

  Expr element_expr(ArrayId a, Value k) {
    Element el = element_at(a, k);
    if (const Expr* e = std::get_if<Expr>(&el)) return *e;
    throw Error(ErrorKind::Invariant, "int read of nested array element");
  }

  static Value fold(ExprOp op, Value a, Value b) {
    Value r = 0;
    bool overflow = false;
    switch (op) {
      case ExprOp::Add: overflow = __builtin_add_overflow(a, b, &r); break;
      case ExprOp::Sub: overflow = __builtin_sub_overflow(a, b, &r); break;
      case ExprOp::Mul: overflow = __builtin_mul_overflow(a, b, &r); break;
      default: break;
    }
    if (overflow) throw Error(ErrorKind::Overflow, "integer overflow while folding constants");
    return r;
  }

  Expr simplify_rec(const Expr& e) {
    switch (e.op()) {
      case ExprOp::Const:
        return e;
      case ExprOp::Var: {
        const IntDomain& d = domain(e.var_id());
        if (d.is_singleton()) return Expr::constant(d.min());
        return e;
      }
      case ExprOp::Add:
      case ExprOp::Sub:
      case ExprOp::Mul: {
        Expr l = simplify_rec(e.lhs());
        Expr r = simplify_rec(e.rhs());
        if (l.is_const() && r.is_const()) return Expr::constant(fold(e.op(), l.value(), r.value()));
        if (l.same_as(e.lhs()) && r.same_as(e.rhs())) return e;
        if (e.op() == ExprOp::Add) return Expr::add(l, r);
        if (e.op() == ExprOp::Sub) return Expr::sub(l, r);
        return Expr::mul(l, r);
      }
      case ExprOp::Select: {
        Expr idx = simplify_rec(e.index());
        if (idx.is_const()) {
          const FreeArray& arr = array(e.array());
          Value k = idx.value();
          const IntDomain& len = domain(arr.length_var);
          if (len.empty() || k < 0 || k >= len.max() || k >= arr.max_len) throw OutOfRange{};
          return simplify_rec(element_expr(e.array(), k));
        }
        if (idx.same_as(e.index())) return e;
        return Expr::select(e.array(), idx);
      }
      case ExprOp::StoreView: {
        Expr inner = simplify_rec(e.index());
        Expr at = simplify_rec(e.store_index());
        if (inner.is_const() && at.is_const()) {
          return inner.value() == at.value() ? simplify_rec(e.store_value()) : simplify_rec(e.under());
        }
        if (inner.same_as(at)) return simplify_rec(e.store_value());
        Expr under = simplify_rec(e.under());
        Expr value = simplify_rec(e.store_value());
        return Expr::store_view(e.array(), under, at, value, inner);
      }
    }
    throw Error(ErrorKind::Invariant, "unknown expression node");
  }

  HeapConfig config_;
  std::vector<IntVar> vars_;
  std::vector<FreeArray> arrays_;
  std::vector<Expr> tracked_;
  std::vector<TrailEntry> trail_;
};

}  // namespace fal

// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <functional>
#include <random>
#include <set>

#include "fal/eval.hpp"
#include "fal/fd_solver.hpp"
#include "support/properties.hpp"

using namespace fal;

namespace {

Constraint cons(Relation r, Expr a, Expr b) { return make_constraint(r, std::move(a), std::move(b)); }

struct Fixture {
  explicit Fixture(Strategy s = Strategy::Symbolic, SolverLimits limits = {})
      : heap(HeapConfig{-100, 100, 8}), solver(heap, s, limits) {}
  Heap heap;
  FdSolver solver;
};

}  // namespace

TEST_CASE("push and pop restore domains", "[solver]") {
  Fixture f;
  VarId x = f.heap.new_int_var("x", 0, 10);
  CHECK(f.solver.push_level() == 1);
  CHECK(f.solver.push_level() == 2);
  CHECK(f.solver.add_constraint(cons(Relation::Eq, Expr::var(x), Expr::constant(2))) == ConsistencyResult::Consistent);
  CHECK(f.heap.domain(x) == IntDomain::singleton(2));
  f.solver.pop_level();
  CHECK(f.heap.domain(x) == IntDomain::range(0, 10));
  f.solver.pop_level();
  CHECK(f.solver.depth() == 0);
  CHECK_THROWS_AS(f.solver.pop_level(), Error);
}

TEST_CASE("x < 5 narrows x to [0,4]", "[solver]") {
  Fixture f;
  VarId x = f.heap.new_int_var("x", 0, 10);
  CHECK(f.solver.add_constraint(cons(Relation::Lt, Expr::var(x), Expr::constant(5))) == ConsistencyResult::Consistent);
  CHECK(f.heap.domain(x) == IntDomain::range(0, 4));
}

TEST_CASE("0 <= number <= 5 narrows number to [0,5]", "[solver]") {
  Fixture f;
  VarId n = f.heap.new_int_var("number", -100, 100);
  CHECK(f.solver.add_constraint(cons(Relation::Ge, Expr::var(n), Expr::constant(0))) == ConsistencyResult::Consistent);
  CHECK(f.solver.add_constraint(cons(Relation::Le, Expr::var(n), Expr::constant(5))) == ConsistencyResult::Consistent);
  CHECK(f.heap.domain(n) == IntDomain::range(0, 5));
}

TEST_CASE("x = y + 1 with disjoint shifted ranges is inconsistent", "[solver]") {
  Fixture f;
  VarId x = f.heap.new_int_var("x", 0, 3);
  VarId y = f.heap.new_int_var("y", 5, 9);
  CHECK(f.solver.add_constraint(cons(Relation::Eq, Expr::var(x), Expr::var(y) + Expr::constant(1))) ==
        ConsistencyResult::Inconsistent);
}

TEST_CASE("x = 2y narrows to the brute-force bounds", "[solver]") {
  Fixture f;
  VarId x = f.heap.new_int_var("x", 0, 9);
  VarId y = f.heap.new_int_var("y", 0, 9);
  REQUIRE(f.solver.add_constraint(cons(Relation::Eq, Expr::var(x), Expr::constant(2) * Expr::var(y))) ==
          ConsistencyResult::Consistent);
  Value xlo = 100, xhi = -100, ylo = 100, yhi = -100;
  for (Value a = 0; a <= 9; ++a)
    for (Value b = 0; b <= 9; ++b)
      if (a == 2 * b) {
        xlo = std::min(xlo, a), xhi = std::max(xhi, a);
        ylo = std::min(ylo, b), yhi = std::max(yhi, b);
      }
  CHECK(f.heap.domain(x).min() == xlo);
  CHECK(f.heap.domain(x).max() == xhi);
  CHECK(f.heap.domain(y).min() == ylo);
  CHECK(f.heap.domain(y).max() == yhi);
}

TEST_CASE("no constraints leave domains unchanged", "[solver]") {
  Fixture f;
  VarId x = f.heap.new_int_var("x", -3, 3);
  CHECK(f.solver.consistent() == ConsistencyResult::Consistent);
  CHECK(f.heap.domain(x) == IntDomain::range(-3, 3));
}

TEST_CASE("symbolic free-index constraints", "[solver]") {
  Fixture f;
  ArrayId a = *f.heap.new_fixed_array(Expr::constant(2), true, ElementKind::integer());
  VarId i = f.heap.new_int_var("i", 0, 1);
  VarId j = f.heap.new_int_var("j", 0, 1);
  Expr ai = Expr::select(a, Expr::var(i)), aj = Expr::select(a, Expr::var(j));

  SECTION("a[i] < a[i] is inconsistent") {
    CHECK(f.solver.add_constraint(cons(Relation::Lt, ai, ai)) == ConsistencyResult::Inconsistent);
  }
  SECTION("a[i] > a[j] has a witness") {
    CHECK(f.solver.add_constraint(cons(Relation::Gt, ai, aj)) == ConsistencyResult::Consistent);
  }
  SECTION("a[i] > a[j] fails once a[0] = a[1] = 3") {
    REQUIRE(f.solver.add_constraint(cons(Relation::Eq, f.heap.read(a, Expr::constant(0)), Expr::constant(3))) ==
            ConsistencyResult::Consistent);
    REQUIRE(f.solver.add_constraint(cons(Relation::Eq, f.heap.read(a, Expr::constant(1)), Expr::constant(3))) ==
            ConsistencyResult::Consistent);
    CHECK_FALSE(f.solver.enumerate_array_check(cons(Relation::Gt, ai, aj)));
    CHECK(f.solver.add_constraint(cons(Relation::Gt, ai, aj)) == ConsistencyResult::Inconsistent);
  }
  SECTION("a later constraint re-checks an earlier free-index one") {
    REQUIRE(f.solver.add_constraint(cons(Relation::Gt, ai, aj)) == ConsistencyResult::Consistent);
    REQUIRE(f.solver.add_constraint(cons(Relation::Eq, f.heap.read(a, Expr::constant(0)), Expr::constant(3))) ==
            ConsistencyResult::Consistent);
    CHECK(f.solver.add_constraint(cons(Relation::Eq, f.heap.read(a, Expr::constant(1)), Expr::constant(3))) ==
          ConsistencyResult::Inconsistent);
  }
}

TEST_CASE("forbid strategy rejects free-index constraints", "[solver]") {
  Fixture f(Strategy::Forbid);
  ArrayId a = *f.heap.new_fixed_array(Expr::constant(2), true, ElementKind::integer());
  VarId i = f.heap.new_int_var("i", 0, 1);
  try {
    f.solver.add_constraint(cons(Relation::Gt, Expr::select(a, Expr::var(i)), Expr::constant(0)));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ForbiddenFreeIndex);
  }
  CHECK(f.solver.add_constraint(cons(Relation::Gt, f.heap.read(a, Expr::constant(0)), Expr::constant(0))) ==
        ConsistencyResult::Consistent);
}

TEST_CASE("enumeration budget is enforced", "[solver]") {
  Fixture f(Strategy::Symbolic, SolverLimits{10});
  ArrayId a = *f.heap.new_fixed_array(Expr::constant(8), true, ElementKind::integer());
  VarId i = f.heap.new_int_var("i", 0, 7);
  VarId j = f.heap.new_int_var("j", 0, 7);
  try {
    f.solver.add_constraint(cons(Relation::Gt, Expr::select(a, Expr::var(i)), Expr::select(a, Expr::var(j))));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BudgetExceeded);
  }
}

TEST_CASE("delayed constraints wait for singleton indices", "[solver]") {
  Fixture f(Strategy::Delayed);
  ArrayId a = *f.heap.new_fixed_array(Expr::constant(3), true, ElementKind::integer());
  VarId i = f.heap.new_int_var("i", 0, 2);
  VarId j = f.heap.new_int_var("j", 0, 2);
  Expr ai = Expr::select(a, Expr::var(i)), aj = Expr::select(a, Expr::var(j));

  SECTION("index narrowing promotes the constraint only when every index is fixed") {
    CHECK(f.solver.add_constraint(cons(Relation::Lt, ai, aj)) == ConsistencyResult::DelayedAccepted);
    CHECK(f.solver.pending_delayed() == 1);
    REQUIRE(f.solver.add_constraint(cons(Relation::Eq, Expr::var(i), Expr::constant(2))) !=
            ConsistencyResult::Inconsistent);
    CHECK(f.solver.pending_delayed() == 1);
    CHECK(f.solver.stats().delayed_singleton_checks == 0);
    REQUIRE(f.solver.add_constraint(cons(Relation::Eq, Expr::var(j), Expr::constant(0))) !=
            ConsistencyResult::Inconsistent);
    CHECK(f.solver.pending_delayed() == 0);
    CHECK(f.solver.stats().delayed_singleton_checks == 1);
  }
  SECTION("a labeling trigger checks and empties the queue") {
    REQUIRE(f.solver.add_constraint(cons(Relation::Lt, ai, aj)) == ConsistencyResult::DelayedAccepted);
    CHECK(f.solver.check_delayed(DelayTrigger::labeling()) == ConsistencyResult::Consistent);
    CHECK(f.solver.pending_delayed() == 0);
    CHECK(f.solver.stats().delayed_label_checks == 1);
  }
  SECTION("a[i] < a[i] fails at the labeling trigger") {
    REQUIRE(f.solver.add_constraint(cons(Relation::Lt, ai, ai)) == ConsistencyResult::DelayedAccepted);
    CHECK(f.solver.check_delayed(DelayTrigger::labeling()) == ConsistencyResult::Inconsistent);
  }
  SECTION("popping a level restores the queue") {
    f.solver.push_level();
    REQUIRE(f.solver.add_constraint(cons(Relation::Lt, ai, aj)) == ConsistencyResult::DelayedAccepted);
    f.solver.pop_level();
    CHECK(f.solver.pending_delayed() == 0);
  }
}

TEST_CASE("labeling enumerates in ascending order", "[solver]") {
  Fixture f;
  VarId x = f.heap.new_int_var("x", 0, 2);
  auto all = f.solver.label_all(LabelPlan{{x}, {}, {}, true});
  REQUIRE(all.size() == 3);
  for (Value k = 0; k < 3; ++k) CHECK(all[static_cast<std::size_t>(k)].at(x) == k);
}

TEST_CASE("labeling number in [0,5] gives result 2*number in order", "[solver]") {
  Fixture f;
  VarId n = f.heap.new_int_var("number", 0, 5);
  Expr result = Expr::constant(2) * Expr::var(n);
  std::vector<Value> values;
  f.solver.label(LabelPlan{{}, {}, {result}, true}, [&] {
    auto s = f.heap.simplify(result);
    values.push_back(s && s->is_const() ? s->value() : -1);
    return true;
  });
  CHECK(values == std::vector<Value>{0, 2, 4, 6, 8, 10});
}

TEST_CASE("labeling a[0] < a[1] over elements in [0,1] gives a single array", "[solver]") {
  Heap heap(HeapConfig{0, 1, 4});
  FdSolver solver(heap, Strategy::Symbolic);
  ArrayId a = *heap.new_fixed_array(Expr::constant(2), true, ElementKind::integer());
  REQUIRE(solver.add_constraint(cons(Relation::Lt, heap.read(a, Expr::constant(0)), heap.read(a, Expr::constant(1)))) ==
          ConsistencyResult::Consistent);
  std::vector<std::vector<Value>> seen;
  solver.label(LabelPlan{{}, {a}, {}, true}, [&] {
    seen.push_back(fixed_base_arrays(heap).at(a));
    return true;
  });
  REQUIRE(seen.size() == 1);
  CHECK(seen[0] == std::vector<Value>{0, 1});
}

TEST_CASE("solution_check rejects a violating binding", "[solver]") {
  VarId x{0};
  std::vector<Constraint> cs{cons(Relation::Lt, Expr::var(x), Expr::constant(5))};
  CHECK(solution_check({{x, 3}}, {}, cs));
  CHECK_FALSE(solution_check({{x, 7}}, {}, cs));
  CHECK_FALSE(solution_check({}, {}, cs));
}

TEST_CASE("labeling is sound and complete against brute force", "[solver][property]") {
  const Strategy strategy = GENERATE(Strategy::Label, Strategy::Symbolic, Strategy::Delayed);
  CAPTURE(to_string(strategy));
  std::mt19937_64 rng(7 + static_cast<int>(strategy));
  auto pick = [&](Value lo, Value hi) { return std::uniform_int_distribution<Value>(lo, hi)(rng); };

  for (int round = 0; round < 150; ++round) {
    Heap heap(HeapConfig{-2, 2, 3});
    FdSolver solver(heap, strategy, SolverLimits{100000});
    VarId x = heap.new_int_var("x", -2, 2);
    VarId y = heap.new_int_var("y", -2, 2);
    VarId i = heap.new_int_var("i", 0, 2);
    VarId j = heap.new_int_var("j", 0, 2);
    ArrayId a = *heap.new_fixed_array(Expr::constant(3), true, ElementKind::integer());
    std::vector<VarId> elems;
    for (Value k = 0; k < 3; ++k) {
      VarId e = std::get<Expr>(heap.element_at(a, k)).var_id();
      heap.set_domain(e, IntDomain::range(0, 2));
      elems.push_back(e);
    }
    std::vector<VarId> all{x, y, i, j, elems[0], elems[1], elems[2]};

    auto term = [&]() -> Expr {
      switch (pick(0, 7)) {
        case 0: return Expr::constant(pick(-2, 2));
        case 1: return Expr::var(x);
        case 2: return Expr::var(y);
        case 3: return Expr::var(x) + Expr::var(y);
        case 4: return Expr::constant(2) * Expr::var(x) - Expr::var(y);
        case 5: return Expr::select(a, Expr::var(i));
        case 6: return Expr::select(a, Expr::var(j));
        default: return heap.read(a, Expr::constant(pick(0, 2)));
      }
    };
    std::vector<Constraint> cs;
    const int n = static_cast<int>(pick(1, 3));
    for (int k = 0; k < n; ++k) cs.push_back(cons(static_cast<Relation>(pick(0, 5)), term(), term()));

    // Brute force over the 7 variables.
    std::set<std::vector<Value>> expected;
    std::vector<Value> cur(all.size());
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
      if (k == all.size()) {
        Bindings b;
        for (std::size_t m = 0; m < all.size(); ++m) b[all[m]] = cur[m];
        ConcreteArrays arr{{a, {cur[4], cur[5], cur[6]}}};
        if (solution_check(b, arr, cs)) expected.insert(cur);
        return;
      }
      const IntDomain& d = heap.domain(all[k]);
      for (Value v = d.min(); v <= d.max(); ++v) {
        cur[k] = v;
        rec(k + 1);
      }
    };
    rec(0);

    bool inconsistent = false;
    for (const auto& c : cs) {
      if (solver.add_constraint(c) == ConsistencyResult::Inconsistent) {
        inconsistent = true;
        break;
      }
    }
    std::string text;
    for (const auto& c : cs) text += to_string(c, heap.names()) + "; ";
    INFO("round " << round << ": " << text);

    if (!expected.empty()) {
      REQUIRE_FALSE(inconsistent);
      // Propagation never removes a value that takes part in a solution.
      for (const auto& sol : expected)
        for (std::size_t m = 0; m < all.size(); ++m) REQUIRE(heap.domain(all[m]).contains(sol[m]));
    }
    if (inconsistent) continue;

    std::vector<std::vector<Value>> labeled;
    solver.label(LabelPlan{all, {}, {}, true}, [&] {
      Bindings b = fixed_bindings(heap);
      std::vector<Value> row;
      for (VarId v : all) row.push_back(b.at(v));
      labeled.push_back(row);
      REQUIRE(solution_check(b, fixed_base_arrays(heap), solver.constraints()));
      return true;
    });
    CHECK(std::is_sorted(labeled.begin(), labeled.end()));
    CHECK(std::set<std::vector<Value>>(labeled.begin(), labeled.end()).size() == labeled.size());
    CHECK(std::set<std::vector<Value>>(labeled.begin(), labeled.end()) == expected);
  }
}

TEST_CASE("1000 push/add/pop sequences restore every domain", "[solver][property]") {
  props::Report rep = props::trail_restore(1000, 99);
  INFO(rep.first_failure);
  CHECK(rep.cases == 1000);
  CHECK(rep.failures == 0);
}

TEST_CASE("push/add/pop restoration under the delayed strategy", "[solver][property]") {
  props::Report rep = props::trail_restore(300, 5, Strategy::Delayed);
  INFO(rep.first_failure);
  CHECK(rep.failures == 0);
}

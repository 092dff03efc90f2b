// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fal/error.hpp"
#include "fal/fd_solver.hpp"
#include "fal/heap.hpp"
#include "fal/program.hpp"
#include "fal/solver.hpp"
#include "fal/vm.hpp"

namespace fal {

struct SearchConfig {
  Strategy strategy = Strategy::Symbolic;
  // nullopt collects every solution.
  std::optional<std::size_t> max_solutions;
  Value max_len = 16;
  std::uint64_t step_budget = 1'000'000;
  std::uint64_t enum_budget = 1'000'000;
  bool label_on_solution = true;
  Value int_min = std::numeric_limits<std::int32_t>::min();
  Value int_max = std::numeric_limits<std::int32_t>::max();
  // Re-verify every labeled solution with solution_check.
  bool check = false;
};

enum class LeafKind { Value, Exception, Failure };

constexpr const char* to_string(LeafKind k) {
  switch (k) {
    case LeafKind::Value: return "value";
    case LeafKind::Exception: return "exception";
    case LeafKind::Failure: return "failure";
  }
  return "?";
}

struct SolutionRecord {
  LeafKind kind = LeafKind::Value;
  std::string exception;
  std::optional<Value> value;
  std::optional<std::vector<Value>> array_value;
  // Returned expression (or array name) before labeling.
  std::string symbolic;
  std::map<std::string, Value> bindings;
  std::map<std::string, std::vector<Value>> arrays;
  // Path constraints and domains of the program's int locals, both as they
  // stood when the leaf was reached.
  std::vector<std::string> constraints;
  std::map<std::string, std::string> domains;
  bool labeled = false;
  std::optional<bool> check_passed;
};

struct SearchStats {
  std::map<std::string, std::uint64_t> choices;
  std::uint64_t failures = 0;
  std::uint64_t values = 0;
  std::uint64_t exceptions = 0;
  std::uint64_t steps = 0;
  std::uint64_t max_depth = 0;
  std::uint64_t check_failures = 0;
  SolverStats solver;

  std::uint64_t choice_count(ChoiceOrigin o) const {
    auto it = choices.find(to_string(o));
    return it == choices.end() ? 0 : it->second;
  }
};

struct SearchResult {
  std::vector<SolutionRecord> solutions;
  SearchStats stats;
};

/// One encapsulated search over a program: depth-first, first alternative
/// first, with every alternative explored at its own solver level.
class SearchEngine {
 public:
  SearchEngine(Program program, SearchConfig config)
      : program_(std::move(program)),
        config_(config),
        heap_(HeapConfig{config.int_min, config.int_max, config.max_len}),
        solver_(heap_, config.strategy, SolverLimits{config.enum_budget}),
        vm_(program_, heap_, solver_, VmOptions{config.enum_budget}) {
    if (config.step_budget == 0 || config.enum_budget == 0)
      throw Error(ErrorKind::InvalidArgument, "budgets must be positive");
  }

  SearchResult get_all_solutions() {
    result_ = {};
    solver_.backtrack_to(0);
    // Root-level work gets its own level too, so the store ends pristine.
    solver_.push_level();
    try {
      explore(vm_.initial(), 0);
    } catch (...) {
      solver_.backtrack_to(0);
      throw;
    }
    solver_.backtrack_to(0);
    result_.stats.solver = solver_.stats();
    return std::move(result_);
  }

  SearchEngine(const SearchEngine&) = delete;
  SearchEngine& operator=(const SearchEngine&) = delete;

  Heap& heap() { return heap_; }
  FdSolver& solver() { return solver_; }

 private:
  bool done() const { return config_.max_solutions && result_.solutions.size() >= *config_.max_solutions; }

  void explore(VmState s, std::uint64_t depth) {
    result_.stats.max_depth = std::max(result_.stats.max_depth, depth);
    while (true) {
      if (s.steps >= config_.step_budget)
        throw Error(ErrorKind::BudgetExceeded,
                    "path exceeded the step budget of " + std::to_string(config_.step_budget) + " instructions");
      StepOutcome out = vm_.step(s);
      ++result_.stats.steps;
      switch (out.kind) {
        case StepOutcome::Kind::Continue:
          continue;
        case StepOutcome::Kind::Choice:
          ++result_.stats.choices[to_string(out.origin)];
          for (auto& alt : out.alternatives) {
            if (done()) return;
            const std::size_t level = solver_.depth();
            solver_.push_level();
            try {
              bool ok = true;
              for (const auto& c : alt.constraints) {
                if (solver_.add_constraint(c) == ConsistencyResult::Inconsistent) {
                  ok = false;
                  break;
                }
              }
              if (ok) {
                explore(std::move(alt.state), depth + 1);
              } else {
                ++result_.stats.failures;
              }
            } catch (...) {
              solver_.backtrack_to(level);
              throw;
            }
            solver_.backtrack_to(level);
          }
          return;
        case StepOutcome::Kind::Failure:
          ++result_.stats.failures;
          return;
        case StepOutcome::Kind::Solution:
        case StepOutcome::Kind::Exception:
          leaf(out, s);
          return;
      }
    }
  }

  void leaf(const StepOutcome& out, const VmState& s) {
    const std::size_t level = solver_.depth();
    solver_.push_level();
    try {
      leaf_at_level(out, s);
    } catch (...) {
      solver_.backtrack_to(level);
      throw;
    }
    solver_.backtrack_to(level);
  }

  void leaf_at_level(const StepOutcome& out, const VmState& s) {
    if (config_.strategy == Strategy::Delayed) {
      if (config_.label_on_solution) {
        if (solver_.check_delayed(DelayTrigger::labeling()) == ConsistencyResult::Inconsistent) {
          ++result_.stats.failures;
          return;
        }
      } else if (solver_.pending_delayed() > 0) {
        throw Error(ErrorKind::PendingDelayed, std::to_string(solver_.pending_delayed()) +
                                                   " delayed constraint(s) still unchecked when leaving the search");
      }
    }

    SolutionRecord base;
    base.kind = out.kind == StepOutcome::Kind::Exception ? LeafKind::Exception : LeafKind::Value;
    base.exception = out.exception;
    const NameResolver names = heap_.names();
    for (const auto& c : solver_.constraints()) base.constraints.push_back(to_string(c, names));

    std::optional<Expr> value_expr;
    std::optional<ArrayId> value_array;
    if (out.value) {
      if (const Expr* e = std::get_if<Expr>(&*out.value)) {
        value_expr = heap_.simplify(*e);
        if (!value_expr) {
          ++result_.stats.failures;
          return;
        }
        base.symbolic = to_string(*value_expr, names);
      } else if (const ArrayId* a = std::get_if<ArrayId>(&*out.value)) {
        value_array = *a;
        base.symbolic = heap_.array(*a).name;
      }
    } else {
      base.symbolic = out.exception;
    }

    LabelPlan witness;
    std::vector<std::pair<std::string, Expr>> int_locals;
    std::vector<std::pair<std::string, ArrayId>> array_locals;
    for (const auto& [name, v] : s.locals) {
      if (const Expr* e = std::get_if<Expr>(&v)) {
        int_locals.emplace_back(name, *e);
        witness.exprs.push_back(*e);
        if (auto se = heap_.simplify(*e)) base.domains[name] = describe_domain(*se);
      } else if (const ArrayId* a = std::get_if<ArrayId>(&v); a && heap_.array(*a).kind.is_int()) {
        array_locals.emplace_back(name, *a);
        witness.arrays.push_back(*a);
      }
    }
    if (value_expr) witness.exprs.push_back(*value_expr);
    if (value_array && heap_.array(*value_array).kind.is_int()) witness.arrays.push_back(*value_array);

    if (!config_.label_on_solution) {
      record(base, value_expr, value_array, int_locals, array_locals, false);
      return;
    }

    // Distinct solutions are distinct values of the accessed indices and of
    // the returned value; everything else gets a single witness.
    LabelPlan keys;
    keys.constraint_vars = false;
    keys.exprs = heap_.tracked();
    if (value_expr) keys.exprs.push_back(*value_expr);
    if (value_array) keys.exprs.push_back(Expr::var(heap_.array(*value_array).length_var));

    std::uint64_t emitted = 0;
    solver_.label(keys, [&] {
      solver_.label(witness, [&] {
        record(base, value_expr, value_array, int_locals, array_locals, true);
        ++emitted;
        return false;
      });
      return !done();
    });
    if (emitted == 0) ++result_.stats.failures;
  }

  std::string describe_domain(const Expr& e) const {
    if (e.is_const()) return "{" + std::to_string(e.value()) + "}";
    if (e.is_var()) return heap_.domain(e.var_id()).to_string();
    return to_string(e, heap_.names());
  }

  std::optional<Value> concrete(const Expr& e) {
    auto s = heap_.simplify(e);
    if (s && s->is_const()) return s->value();
    return std::nullopt;
  }

  std::optional<std::vector<Value>> contents(ArrayId a) {
    const IntDomain& len = heap_.domain(heap_.array(a).length_var);
    if (!len.is_singleton()) return std::nullopt;
    std::vector<Value> out;
    for (Value k = 0; k < len.min(); ++k) {
      auto v = concrete(heap_.read(a, Expr::constant(k)));
      if (!v) return std::nullopt;
      out.push_back(*v);
    }
    return out;
  }

  void record(const SolutionRecord& base, const std::optional<Expr>& value_expr,
              const std::optional<ArrayId>& value_array, const std::vector<std::pair<std::string, Expr>>& int_locals,
              const std::vector<std::pair<std::string, ArrayId>>& array_locals, bool labeled) {
    SolutionRecord r = base;
    r.labeled = labeled;
    if (value_expr) r.value = concrete(*value_expr);
    if (value_array && heap_.array(*value_array).kind.is_int()) r.array_value = contents(*value_array);
    for (const auto& [name, e] : int_locals)
      if (auto v = concrete(e)) r.bindings[name] = *v;
    for (const auto& [name, a] : array_locals)
      if (auto c = contents(a)) r.arrays[name] = std::move(*c);
    if (labeled && config_.check) {
      bool ok = solution_check(fixed_bindings(heap_), fixed_base_arrays(heap_), solver_.constraints());
      r.check_passed = ok;
      if (!ok) ++result_.stats.check_failures;
    }
    if (r.kind == LeafKind::Exception) {
      ++result_.stats.exceptions;
    } else {
      ++result_.stats.values;
    }
    result_.solutions.push_back(std::move(r));
  }

  const Program program_;
  SearchConfig config_;
  Heap heap_;
  FdSolver solver_;
  Vm vm_;
  SearchResult result_;
};

inline SearchResult get_all_solutions(const Program& program, const SearchConfig& config) {
  SearchEngine engine(program, config);
  return engine.get_all_solutions();
}

inline std::optional<SolutionRecord> get_one_solution(const Program& program, SearchConfig config) {
  config.max_solutions = 1;
  SearchEngine engine(program, config);
  auto result = engine.get_all_solutions();
  if (result.solutions.empty()) return std::nullopt;
  return result.solutions.front();
}

}  // namespace fal

// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "fal/fal.hpp"
#include "support/corpus.hpp"

using namespace fal;

namespace {

std::vector<Value> values(const SearchResult& r) {
  std::vector<Value> out;
  for (const auto& s : r.solutions)
    if (s.value) out.push_back(*s.value);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("number doubling returns 0..10 step 2 under every strategy", "[search]") {
  const Strategy s = GENERATE(Strategy::Label, Strategy::Symbolic, Strategy::Delayed);
  for (const char* file : {"listing2.fal", "listing3.fal"}) {
    CAPTURE(file, to_string(s));
    SearchConfig c;
    c.strategy = s;
    c.check = true;
    SearchResult r = get_all_solutions(corpus::load(file), c);
    CHECK(values(r) == std::vector<Value>{0, 2, 4, 6, 8, 10});
    CHECK(r.stats.check_failures == 0);
  }
}

TEST_CASE("an unconditional return has one solution", "[search]") {
  SearchResult r = get_all_solutions(parse_program("CONST 1\nRETURN\n"), {});
  REQUIRE(r.solutions.size() == 1);
  CHECK(*r.solutions[0].value == 1);
  CHECK(r.stats.choices.empty());
}

TEST_CASE("an always failing program has no solutions", "[search]") {
  Program p = parse_program("FREEINT x 0 3\nLOAD x\nCONST 9\nIFCMP gt yes\nFAIL\nLABEL yes\nCONST 1\nRETURN\n");
  CHECK(get_all_solutions(p, {}).solutions.empty());
  CHECK_FALSE(get_one_solution(p, {}));
}

TEST_CASE("length bound keeps every labeled length at most five", "[search]") {
  SearchConfig c;
  c.check = true;
  SearchResult r = get_all_solutions(corpus::load("listing4.fal"), c);
  REQUIRE_FALSE(r.solutions.empty());
  for (const auto& s : r.solutions) {
    REQUIRE(s.value);
    CHECK(*s.value <= 5);
    CHECK(s.arrays.at("arr").size() == static_cast<std::size_t>(*s.value));
  }
  CHECK(values(r) == std::vector<Value>{0, 1, 2, 3, 4, 5});
  CHECK(r.stats.failures >= 1);
}

TEST_CASE("first solution of the doubling program is 0", "[search]") {
  auto one = get_one_solution(corpus::load("listing3.fal"), {});
  REQUIRE(one);
  CHECK(*one->value == 0);
}

TEST_CASE("permutation sort returns the sorted input first", "[search]") {
  SearchConfig c;
  c.max_len = 8;
  for (const char* file : {"sort3.fal", "sort4.fal"}) {
    CAPTURE(file);
    auto one = get_one_solution(corpus::load(file), c);
    REQUIRE(one);
    REQUIRE(one->array_value);
    CHECK(std::is_sorted(one->array_value->begin(), one->array_value->end()));
  }
}

TEST_CASE("search is deterministic", "[search]") {
  const Strategy s = GENERATE(Strategy::Label, Strategy::Symbolic, Strategy::Delayed);
  for (const auto& e : corpus::small_programs()) {
    CAPTURE(e.file, to_string(s));
    Program p = corpus::load(e.file);
    SearchResult a = get_all_solutions(p, corpus::config_for(e, s));
    SearchResult b = get_all_solutions(p, corpus::config_for(e, s));
    REQUIRE(a.solutions.size() == b.solutions.size());
    for (std::size_t k = 0; k < a.solutions.size(); ++k) {
      CHECK(a.solutions[k].value == b.solutions[k].value);
      CHECK(a.solutions[k].array_value == b.solutions[k].array_value);
      CHECK(a.solutions[k].bindings == b.solutions[k].bindings);
      CHECK(a.solutions[k].arrays == b.solutions[k].arrays);
      CHECK(a.solutions[k].constraints == b.solutions[k].constraints);
    }
  }
}

TEST_CASE("every labeled solution passes the independent check", "[search]") {
  const Strategy s = GENERATE(Strategy::Label, Strategy::Symbolic, Strategy::Delayed);
  for (const auto& e : corpus::small_programs()) {
    CAPTURE(e.file, to_string(s));
    SearchResult r = get_all_solutions(corpus::load(e.file), corpus::config_for(e, s));
    CHECK(r.stats.check_failures == 0);
    for (const auto& sol : r.solutions) {
      CHECK(sol.labeled);
      CHECK(sol.check_passed == std::optional<bool>(true));
    }
  }
}

TEST_CASE("the search leaves the store as it found it", "[search]") {
  for (const auto& e : corpus::small_programs()) {
    CAPTURE(e.file);
    SearchEngine engine(corpus::load(e.file), corpus::config_for(e, Strategy::Symbolic));
    engine.get_all_solutions();
    CHECK(engine.solver().depth() == 0);
    CHECK(engine.heap().var_count() == 0);
    CHECK(engine.heap().array_count() == 0);
    CHECK(engine.solver().active().empty());
  }
}

TEST_CASE("bounds choice on a free index", "[search]") {
  SearchConfig c;
  c.strategy = Strategy::Symbolic;
  c.label_on_solution = false;
  SearchResult r = get_all_solutions(corpus::load("bounds.fal"), c);
  CHECK(r.stats.choice_count(ChoiceOrigin::Bounds) == 1);
  REQUIRE(r.solutions.size() == 2);
  CHECK(r.solutions[0].kind == LeafKind::Value);
  CHECK(r.solutions[0].domains.at("i") == "[0..2]");
  CHECK(r.solutions[1].kind == LeafKind::Exception);
  CHECK(r.solutions[1].exception == kIndexOutOfBounds);
  CHECK(r.solutions[1].domains.at("i") == "[3..7]");
}

TEST_CASE("max_solutions stops the search early", "[search]") {
  SearchConfig c;
  c.max_solutions = 2;
  SearchResult r = get_all_solutions(corpus::load("listing3.fal"), c);
  CHECK(values(r) == std::vector<Value>{0, 2});
}

TEST_CASE("pending delayed constraints are an error without labeling", "[search]") {
  SearchConfig c;
  c.strategy = Strategy::Delayed;
  c.label_on_solution = false;
  c.int_min = 0;
  c.int_max = 3;
  try {
    get_all_solutions(corpus::load("listing1.fal"), c);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PendingDelayed);
  }
}

TEST_CASE("the step budget bounds a looping path", "[search]") {
  SearchConfig c;
  c.step_budget = 1000;
  Program loop = parse_program("LABEL top\nGOTO top\n");
  try {
    get_all_solutions(loop, c);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BudgetExceeded);
  }
}

TEST_CASE("zero budgets are rejected", "[search]") {
  SearchConfig c;
  c.enum_budget = 0;
  CHECK_THROWS_AS(get_all_solutions(parse_program("CONST 1\nRETURN\n"), c), Error);
}

// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "fal/domain.hpp"
#include "fal/error.hpp"

using fal::IntDomain;
using fal::Interval;
using fal::Value;

namespace {

std::set<Value> values_of(const IntDomain& d) {
  std::set<Value> out;
  d.for_each_value([&](Value v) {
    out.insert(v);
    return true;
  });
  return out;
}

}  // namespace

TEST_CASE("range and singleton domains", "[domain]") {
  auto d = IntDomain::range(-2, 3);
  CHECK(d.min() == -2);
  CHECK(d.max() == 3);
  CHECK(d.size() == 6);
  CHECK_FALSE(d.is_singleton());
  CHECK(IntDomain::singleton(7).is_singleton());
  CHECK(IntDomain::singleton(7).to_string() == "{7}");
}

TEST_CASE("from_intervals merges overlapping and adjacent parts", "[domain]") {
  auto d = IntDomain::from_intervals({{5, 6}, {0, 2}, {3, 3}, {10, 12}, {11, 11}});
  CHECK(d.well_formed());
  REQUIRE(d.intervals().size() == 3);
  CHECK(d.intervals()[0] == Interval{0, 3});
  CHECK(d.intervals()[1] == Interval{5, 6});
  CHECK(d.intervals()[2] == Interval{10, 12});
}

TEST_CASE("remove splits an interval", "[domain]") {
  auto d = IntDomain::range(0, 4).remove(2);
  CHECK(d.size() == 4);
  CHECK_FALSE(d.contains(2));
  CHECK(d.intervals().size() == 2);
  CHECK(d.remove(0).min() == 1);
  CHECK(IntDomain::singleton(3).remove(3).empty());
}

TEST_CASE("intersect with a range and with a domain", "[domain]") {
  auto d = IntDomain::range(0, 10).remove(5);
  CHECK(values_of(d.intersect(4, 6)) == std::set<Value>{4, 6});
  auto e = IntDomain::from_intervals({{-3, 1}, {6, 20}});
  CHECK(values_of(d.intersect(e)) == std::set<Value>{0, 1, 6, 7, 8, 9, 10});
  CHECK(d.intersect(11, 20).empty());
}

TEST_CASE("next_at_least skips holes", "[domain]") {
  auto d = IntDomain::from_intervals({{0, 1}, {5, 6}});
  Value out = 0;
  REQUIRE(d.next_at_least(2, out));
  CHECK(out == 5);
  CHECK_FALSE(d.next_at_least(7, out));
}

TEST_CASE("min and max of an empty domain throw", "[domain]") {
  IntDomain empty = IntDomain::range(1, 1).remove(1);
  CHECK_THROWS_AS(empty.min(), fal::Error);
  CHECK_THROWS_AS(empty.max(), fal::Error);
}

TEST_CASE("domain operations agree with a set model", "[domain][property]") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<Value> val(-8, 8);
  for (int round = 0; round < 500; ++round) {
    Value lo = val(rng);
    Value hi = lo + std::uniform_int_distribution<Value>(0, 10)(rng);
    IntDomain d = IntDomain::range(lo, hi);
    std::set<Value> model;
    for (Value v = lo; v <= hi; ++v) model.insert(v);
    for (int op = 0; op < 8; ++op) {
      Value a = val(rng), b = val(rng);
      switch (rng() % 3) {
        case 0:
          d = d.remove(a);
          model.erase(a);
          break;
        case 1: {
          Value l = std::min(a, b), h = std::max(a, b);
          d = d.intersect(l, h);
          std::erase_if(model, [&](Value v) { return v < l || v > h; });
          break;
        }
        default: {
          IntDomain other = IntDomain::from_intervals({{std::min(a, b), std::max(a, b)}, {b + 3, b + 5}});
          std::set<Value> kept;
          for (Value v : model)
            if (other.contains(v)) kept.insert(v);
          d = d.intersect(other);
          model = kept;
        }
      }
      REQUIRE(d.well_formed());
      REQUIRE(values_of(d) == model);
      REQUIRE(d.size() == model.size());
      if (!model.empty()) {
        REQUIRE(d.min() == *model.begin());
        REQUIRE(d.max() == *model.rbegin());
      }
    }
  }
}

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fal/error.hpp"

namespace fal {

using Value = std::int64_t;

// Bounds arithmetic saturates at +/- kUnbounded. Domains never reach it.
inline constexpr Value kUnbounded = Value{1} << 62;

inline Value saturate(__int128 v) {
  if (v >= kUnbounded) return kUnbounded;
  if (v <= -kUnbounded) return -kUnbounded;
  return static_cast<Value>(v);
}

inline Value sat_add(Value a, Value b) { return saturate(__int128{a} + b); }
inline Value sat_sub(Value a, Value b) { return saturate(__int128{a} - b); }
inline Value sat_mul(Value a, Value b) { return saturate(__int128{a} * b); }

struct Interval {
  Value lo;
  Value hi;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Finite set of integers kept as sorted, disjoint, non-adjacent closed
/// intervals. An empty list is the failed domain.
class IntDomain {
 public:
  IntDomain() = default;

  static IntDomain range(Value lo, Value hi) {
    IntDomain d;
    if (lo <= hi) d.intervals_.push_back({lo, hi});
    return d;
  }

  static IntDomain singleton(Value v) { return range(v, v); }

  static IntDomain from_intervals(std::vector<Interval> parts) {
    std::sort(parts.begin(), parts.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    IntDomain d;
    for (const auto& p : parts) {
      if (p.lo > p.hi) continue;
      if (!d.intervals_.empty() && p.lo <= sat_add(d.intervals_.back().hi, 1)) {
        d.intervals_.back().hi = std::max(d.intervals_.back().hi, p.hi);
      } else {
        d.intervals_.push_back(p);
      }
    }
    return d;
  }

  bool empty() const { return intervals_.empty(); }
  bool is_singleton() const { return intervals_.size() == 1 && intervals_[0].lo == intervals_[0].hi; }

  Value min() const {
    if (empty()) throw Error(ErrorKind::Invariant, "min() of empty domain");
    return intervals_.front().lo;
  }

  Value max() const {
    if (empty()) throw Error(ErrorKind::Invariant, "max() of empty domain");
    return intervals_.back().hi;
  }

  // Number of values, saturating at UINT64_MAX.
  std::uint64_t size() const {
    std::uint64_t total = 0;
    for (const auto& iv : intervals_) {
      unsigned __int128 n = static_cast<unsigned __int128>(__int128{iv.hi} - iv.lo + 1);
      unsigned __int128 sum = n + total;
      if (sum > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
      total = static_cast<std::uint64_t>(sum);
    }
    return total;
  }

  bool contains(Value v) const {
    auto it = std::upper_bound(intervals_.begin(), intervals_.end(), v,
                               [](Value x, const Interval& iv) { return x < iv.lo; });
    if (it == intervals_.begin()) return false;
    --it;
    return v <= it->hi;
  }

  IntDomain intersect(Value lo, Value hi) const {
    IntDomain d;
    for (const auto& iv : intervals_) {
      Value a = std::max(iv.lo, lo);
      Value b = std::min(iv.hi, hi);
      if (a <= b) d.intervals_.push_back({a, b});
    }
    return d;
  }

  IntDomain intersect(const IntDomain& other) const {
    IntDomain d;
    std::size_t i = 0, j = 0;
    while (i < intervals_.size() && j < other.intervals_.size()) {
      const auto& a = intervals_[i];
      const auto& b = other.intervals_[j];
      Value lo = std::max(a.lo, b.lo);
      Value hi = std::min(a.hi, b.hi);
      if (lo <= hi) d.intervals_.push_back({lo, hi});
      if (a.hi < b.hi) ++i; else ++j;
    }
    return d;
  }

  IntDomain remove(Value v) const {
    IntDomain d;
    for (const auto& iv : intervals_) {
      if (v < iv.lo || v > iv.hi) {
        d.intervals_.push_back(iv);
        continue;
      }
      if (iv.lo < v) d.intervals_.push_back({iv.lo, v - 1});
      if (v < iv.hi) d.intervals_.push_back({v + 1, iv.hi});
    }
    return d;
  }

  // Smallest member >= v, if any.
  bool next_at_least(Value v, Value& out) const {
    for (const auto& iv : intervals_) {
      if (iv.hi < v) continue;
      out = std::max(iv.lo, v);
      return true;
    }
    return false;
  }

  template <typename Fn>
  void for_each_value(Fn&& fn) const {
    for (const auto& iv : intervals_) {
      for (Value v = iv.lo;; ++v) {
        if (!fn(v)) return;
        if (v == iv.hi) break;
      }
    }
  }

  const std::vector<Interval>& intervals() const { return intervals_; }

  bool well_formed() const {
    for (std::size_t k = 0; k < intervals_.size(); ++k) {
      if (intervals_[k].lo > intervals_[k].hi) return false;
      if (k > 0 && intervals_[k].lo <= sat_add(intervals_[k - 1].hi, 1)) return false;
    }
    return true;
  }

  std::string to_string() const {
    if (empty()) return "{}";
    if (is_singleton()) return "{" + std::to_string(intervals_[0].lo) + "}";
    std::ostringstream out;
    out << '[';
    for (std::size_t k = 0; k < intervals_.size(); ++k) {
      if (k > 0) out << ',';
      out << intervals_[k].lo;
      if (intervals_[k].hi != intervals_[k].lo) out << ".." << intervals_[k].hi;
    }
    out << ']';
    return out.str();
  }

  friend bool operator==(const IntDomain&, const IntDomain&) = default;

 private:
  std::vector<Interval> intervals_;
};

}  // namespace fal

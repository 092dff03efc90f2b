// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fal {

enum class ErrorKind {
  InvalidDomain,
  InvalidArgument,
  Invariant,
  MissingBinding,
  Bounds,
  Overflow,
  ForbiddenFreeIndex,
  BudgetExceeded,
  PendingDelayed,
  ProgramFormat,
  Parse,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDomain: return "invalid-domain";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Invariant: return "invariant-violation";
    case ErrorKind::MissingBinding: return "missing-binding";
    case ErrorKind::Bounds: return "bounds";
    case ErrorKind::Overflow: return "overflow";
    case ErrorKind::ForbiddenFreeIndex: return "forbidden-free-index";
    case ErrorKind::BudgetExceeded: return "budget-exceeded";
    case ErrorKind::PendingDelayed: return "pending-delayed-constraints";
    case ErrorKind::ProgramFormat: return "program-format";
    case ErrorKind::Parse: return "parse";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fal

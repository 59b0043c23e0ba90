#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wval {

/// Malformed scenario, parameter out of range, dimension mismatch.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exhaustive enumeration or DP exceeded its node budget.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(const std::string& what, std::size_t nodes)
      : std::runtime_error(what), nodes_(nodes) {}
  std::size_t nodes() const { return nodes_; }

 private:
  std::size_t nodes_;
};

/// The requested horizon does not cover the evaluation's support and no
/// tail bound is available.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline constexpr std::size_t kDefaultNodeBudget = 2'000'000;

}  // namespace wval

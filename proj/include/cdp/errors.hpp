#pragma once

#include <stdexcept>
#include <string>

namespace cdp {

// Every failure the toolkit raises derives from one of the standard exception
// families, so callers can catch either the precise type or the std base.

struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct TooFewPoints : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NotConvex : std::domain_error {
  using std::domain_error::domain_error;
};

struct Unbounded : std::domain_error {
  using std::domain_error::domain_error;
};

struct BadModulus : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NoActions : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NoConjugate : std::logic_error {
  using std::logic_error::logic_error;
};

struct BudgetExceeded : std::length_error {
  using std::length_error::length_error;
};

struct BadParams : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace cdp

#pragma once

#include <stdexcept>
#include <string>

namespace loopalg {

// Bad input: malformed files, unknown symbols, d^2 != 0, unsolvable requests.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A checked identity failed on concrete data. Always a defect, never user error.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace loopalg

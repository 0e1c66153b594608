#pragma once

#include <stdexcept>
#include <string>

namespace phrasemuf {

/// Bad or unreadable input: malformed records, dangling references, I/O.
/// The CLI maps this to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A domain invariant was violated (duplicate ids, zero vectors,
/// inconsistent bins). The CLI maps this to exit code 2.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace phrasemuf

#pragma once

#include <stdexcept>
#include <string>

namespace forge {

// Malformed input, bad configuration, or a violated precondition.
// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A stage failed at runtime: I/O trouble, exhausted client retries, or a
// downstream failure. The CLI maps this to exit code 2.
class StageError : public std::runtime_error {
 public:
  explicit StageError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace forge

#ifndef WARPGUARD_ERRORS_H_
#define WARPGUARD_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace warpguard {

// IR text that does not conform to the grammar, or references an undefined
// label/buffer or an out-of-range register. line() is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A structurally invalid program, layout, plan or profile.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The fault-free run did not complete, so there is no golden output to
// compare against.
class GoldenRunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace warpguard

#endif  // WARPGUARD_ERRORS_H_

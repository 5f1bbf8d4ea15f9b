#ifndef AEENC_ERRORS_H_
#define AEENC_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aeenc {

// Malformed input file. Carries the 1-based line number of the offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a cross-record invariant (dangling
// reference, duplicate id, cycle).
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A fact could not be embedded by the configured base provider.
class LookupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aeenc

#endif  // AEENC_ERRORS_H_

#ifndef UNRANK_ERROR_H_
#define UNRANK_ERROR_H_

#include <stdexcept>
#include <string>

namespace unrank {

// Malformed input: unknown ids, violated dataset invariants, bad config values.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Feature or weight dimensions disagree with a scorer's shape.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A loss, score or gradient became non-finite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad command line or unknown method name.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace unrank

#endif  // UNRANK_ERROR_H_

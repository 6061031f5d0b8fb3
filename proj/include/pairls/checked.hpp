#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pairls {

/// Raised when a 64-bit signed intermediate leaves its range. Instances that
/// trigger it are rejected instead of being evaluated with wrapped values.
class OverflowError : public std::overflow_error {
 public:
  explicit OverflowError(const std::string& what)
      : std::overflow_error("integer overflow: " + what) {}
};

namespace checked {

inline int64_t add(int64_t a, int64_t b) {
  int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw OverflowError("addition");
  return r;
}

inline int64_t sub(int64_t a, int64_t b) {
  int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) throw OverflowError("subtraction");
  return r;
}

inline int64_t mul(int64_t a, int64_t b) {
  int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("multiplication");
  return r;
}

inline int64_t neg(int64_t a) { return sub(0, a); }

// Floor and ceiling division; b != 0.
inline int64_t floor_div(int64_t a, int64_t b) {
  if (b == -1) return neg(a);
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline int64_t ceil_div(int64_t a, int64_t b) {
  if (b == -1) return neg(a);
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) == (b < 0))) ++q;
  return q;
}

}  // namespace checked
}  // namespace pairls

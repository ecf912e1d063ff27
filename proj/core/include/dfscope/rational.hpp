#pragma once

#include <cstdint>
#include <numeric>
#include <string>

namespace dfscope {

// Exact non-negative rational for recovery audit values. The condition
// checks must stay exact; floating point would round e.g. 35/2 or 92.6
// into something untestable.
struct Rational {
  int64_t num = 0;
  int64_t den = 1;

  Rational() = default;
  Rational(int64_t n, int64_t d) : num(n), den(d) {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  explicit Rational(int64_t n) : num(n), den(1) {}

  bool is_integer() const { return den == 1; }
  int64_t floor_value() const {
    // num may be negative; round toward negative infinity.
    return num >= 0 ? num / den : -((-num + den - 1) / den);
  }

  // "35/2" for non-integers, "2" otherwise.
  std::string to_string() const {
    if (is_integer()) {
      return std::to_string(num);
    }
    return std::to_string(num) + "/" + std::to_string(den);
  }

  // One decimal place, truncated toward zero: 92.60.. -> "92.6",
  // 80.66.. -> "80.6". Matches how non-integral filter counts are reported.
  std::string to_decimal_1dp() const {
    if (is_integer()) {
      return std::to_string(num);
    }
    const int64_t tenths = 10 * num / den;
    return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
  }

  bool operator==(const Rational&) const = default;
};

}  // namespace dfscope

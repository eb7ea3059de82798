#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace reasonprobe {

class DecimalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact base-10 number: value = mantissa * 10^-scale.
///
/// Values are kept normalized (no trailing fractional zeros, no negative
/// zero), so structural equality is numeric equality.
class Decimal {
 public:
  static constexpr int kMaxScale = 18;

  Decimal() = default;
  Decimal(std::int64_t mantissa, int scale);

  static Decimal from_int(std::int64_t v) { return Decimal(v, 0); }

  /// Parses "[+-]digits[.digits][e[+-]digits]". Throws DecimalError on
  /// anything else or when the value does not fit 18 significant digits.
  static Decimal parse(std::string_view text);

  /// Shortest round-trip rendering of a binary double, then parsed exactly.
  static Decimal from_double(double v);

  std::int64_t mantissa() const { return mantissa_; }
  int scale() const { return scale_; }
  bool is_zero() const { return mantissa_ == 0; }
  Decimal abs() const { return Decimal(mantissa_ < 0 ? -mantissa_ : mantissa_, scale_); }

  std::string to_string() const;
  double to_double() const;

  friend bool operator==(const Decimal&, const Decimal&) = default;

 private:
  void normalize();

  std::int64_t mantissa_ = 0;
  int scale_ = 0;
};

/// Numeric comparison across scales; exact.
int compare(const Decimal& a, const Decimal& b);

}  // namespace reasonprobe

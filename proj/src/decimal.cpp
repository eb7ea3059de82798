#include "reasonprobe/decimal.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace reasonprobe {

namespace {

constexpr int kMaxDigits = 18;

__int128 pow10_i128(int e) {
  __int128 r = 1;
  for (int i = 0; i < e; ++i) r *= 10;
  return r;
}

}  // namespace

Decimal::Decimal(std::int64_t mantissa, int scale) : mantissa_(mantissa), scale_(scale) {
  if (scale < 0 || scale > kMaxScale) throw DecimalError("decimal scale out of range");
  normalize();
}

void Decimal::normalize() {
  while (scale_ > 0 && mantissa_ % 10 == 0) {
    mantissa_ /= 10;
    --scale_;
  }
  if (mantissa_ == 0) scale_ = 0;
}

Decimal Decimal::parse(std::string_view text) {
  const std::string original(text);
  auto fail = [&](const char* why) {
    return DecimalError("not a decimal number (" + std::string(why) + "): '" + original + "'");
  };
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    negative = text[i] == '-';
    ++i;
  }
  std::string digits;
  int frac_digits = 0;
  bool seen_digit = false;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    digits.push_back(text[i++]);
    seen_digit = true;
  }
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      digits.push_back(text[i++]);
      ++frac_digits;
      seen_digit = true;
    }
  }
  if (!seen_digit) throw fail("no digits");
  long exponent = 0;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    const char* first = text.data() + i;
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, exponent);
    if (ec != std::errc{} || ptr == first) throw fail("bad exponent");
    i = static_cast<std::size_t>(ptr - text.data());
  }
  if (i != text.size()) throw fail("trailing characters");

  long scale = frac_digits - exponent;
  std::size_t lead = digits.find_first_not_of('0');
  if (lead == std::string::npos) return Decimal{};
  digits.erase(0, lead);
  while (!digits.empty() && digits.back() == '0') {
    digits.pop_back();
    --scale;
  }
  if (digits.size() > static_cast<std::size_t>(kMaxDigits)) throw fail("too many significant digits");
  if (scale < 0) {
    if (static_cast<long>(digits.size()) - scale > kMaxDigits) throw fail("magnitude too large");
    digits.append(static_cast<std::size_t>(-scale), '0');
    scale = 0;
  }
  if (scale > kMaxScale) throw fail("magnitude too small");
  std::int64_t m = std::strtoll(digits.c_str(), nullptr, 10);
  return Decimal(negative ? -m : m, static_cast<int>(scale));
}

Decimal Decimal::from_double(double v) {
  if (!std::isfinite(v)) throw DecimalError("non-finite number");
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw DecimalError("cannot render number");
  return parse(std::string_view(buf.data(), static_cast<std::size_t>(ptr - buf.data())));
}

std::string Decimal::to_string() const {
  std::string digits = std::to_string(mantissa_ < 0 ? -mantissa_ : mantissa_);
  if (scale_ > 0) {
    if (digits.size() <= static_cast<std::size_t>(scale_))
      digits.insert(0, static_cast<std::size_t>(scale_) - digits.size() + 1, '0');
    digits.insert(digits.size() - static_cast<std::size_t>(scale_), 1, '.');
  }
  return mantissa_ < 0 ? "-" + digits : digits;
}

double Decimal::to_double() const { return std::strtod(to_string().c_str(), nullptr); }

int compare(const Decimal& a, const Decimal& b) {
  const int s = std::max(a.scale(), b.scale());
  const __int128 x = static_cast<__int128>(a.mantissa()) * pow10_i128(s - a.scale());
  const __int128 y = static_cast<__int128>(b.mantissa()) * pow10_i128(s - b.scale());
  return x < y ? -1 : (x > y ? 1 : 0);
}

}  // namespace reasonprobe

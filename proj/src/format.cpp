#include "reasonprobe/format.hpp"

namespace reasonprobe {

std::int64_t percent_tenths(std::int64_t count, std::int64_t total) {
  if (total == 0) return 0;
  // round(1000 * count / total), half away from zero
  const std::int64_t num = 1000 * (count < 0 ? -count : count);
  std::int64_t q = (2 * num + total) / (2 * total);
  return count < 0 ? -q : q;
}

std::string format_percent_number(std::int64_t count, std::int64_t total) {
  const std::int64_t t = percent_tenths(count, total);
  const std::int64_t a = t < 0 ? -t : t;
  return (t < 0 ? "-" : "") + std::to_string(a / 10) + "." + std::to_string(a % 10);
}

std::string format_percent(std::int64_t count, std::int64_t total) {
  return format_percent_number(count, total) + "%";
}

}  // namespace reasonprobe

#pragma once

#include <cstdint>
#include <string>

namespace reasonprobe {

/// Tenths of a percent of count/total, rounded half away from zero, using
/// integer arithmetic only. Returns 0 when total is 0.
std::int64_t percent_tenths(std::int64_t count, std::int64_t total);

/// "49.7%" style one-decimal rendering of count/total.
std::string format_percent(std::int64_t count, std::int64_t total);

/// Same rendering, without the percent sign.
std::string format_percent_number(std::int64_t count, std::int64_t total);

}  // namespace reasonprobe

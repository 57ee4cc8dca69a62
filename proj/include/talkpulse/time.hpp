#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace talkpulse {

/// UTC instant with second resolution.
using Timestamp = std::chrono::sys_seconds;
/// UTC calendar day.
using Day = std::chrono::sys_days;

inline constexpr double kSecondsPerDay = 86400.0;

/// Parses "YYYY-MM-DDTHH:MM:SSZ". Returns nullopt on any deviation from
/// that exact shape or on out-of-range fields (e.g. 2009-02-30).
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// Parses "YYYY-MM-DD".
std::optional<Day> parse_day(std::string_view text);

/// Builds a timestamp from calendar fields, validating each of them.
std::optional<Timestamp> make_timestamp(int year, unsigned month, unsigned day,
                                        unsigned hour = 0, unsigned minute = 0,
                                        unsigned second = 0);

std::string format_timestamp(Timestamp ts);
std::string format_day(Day day);

inline Day day_of(Timestamp ts) { return std::chrono::floor<std::chrono::days>(ts); }

/// Signed difference b - a in fractional days.
inline double days_between(Timestamp a, Timestamp b) {
  return static_cast<double>((b - a).count()) / kSecondsPerDay;
}

inline long days_between(Day a, Day b) { return static_cast<long>((b - a).count()); }

/// Earliest timestamp accepted for edit events (2001-01-01T00:00:00Z).
Timestamp earliest_valid_timestamp();

}  // namespace talkpulse

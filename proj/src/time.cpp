#include "talkpulse/time.hpp"

#include <charconv>
#include <cstdio>

namespace talkpulse {

namespace {

bool read_uint(std::string_view text, std::size_t pos, std::size_t width, unsigned& out) {
  if (pos + width > text.size()) return false;
  for (std::size_t i = pos; i < pos + width; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + width, out);
  return ec == std::errc{} && ptr == text.data() + pos + width;
}

}  // namespace

std::optional<Timestamp> make_timestamp(int year, unsigned month, unsigned day,
                                        unsigned hour, unsigned minute, unsigned second) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                           std::chrono::day{day}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 59) return std::nullopt;
  return sys_days{ymd} + hours{hour} + minutes{minute} + seconds{second};
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SSZ
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text[16] != ':' || text[19] != 'Z') {
    return std::nullopt;
  }
  unsigned y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!read_uint(text, 0, 4, y) || !read_uint(text, 5, 2, mo) || !read_uint(text, 8, 2, d) ||
      !read_uint(text, 11, 2, h) || !read_uint(text, 14, 2, mi) || !read_uint(text, 17, 2, s)) {
    return std::nullopt;
  }
  return make_timestamp(static_cast<int>(y), mo, d, h, mi, s);
}

std::optional<Day> parse_day(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  unsigned y = 0, mo = 0, d = 0;
  if (!read_uint(text, 0, 4, y) || !read_uint(text, 5, 2, mo) || !read_uint(text, 8, 2, d)) {
    return std::nullopt;
  }
  auto ts = make_timestamp(static_cast<int>(y), mo, d);
  if (!ts) return std::nullopt;
  return day_of(*ts);
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const Day day = day_of(ts);
  const year_month_day ymd{day};
  const hh_mm_ss hms{ts - day};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

std::string format_day(Day day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Timestamp earliest_valid_timestamp() { return *make_timestamp(2001, 1, 1); }

}  // namespace talkpulse

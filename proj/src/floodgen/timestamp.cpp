#include "floodcast/floodgen/timestamp.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace floodcast {

Timestamp make_timestamp(int year, unsigned month, unsigned day, unsigned hour, unsigned minute) {
  using namespace std::chrono;
  const sys_days d{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
  return static_cast<Timestamp>(d.time_since_epoch().count()) * 1440 + hour * 60 + minute;
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  Timestamp days = ts / 1440;
  Timestamp rem = ts % 1440;
  if (rem < 0) {
    rem += 1440;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 60),
                static_cast<int>(rem % 60));
  return buf;
}

namespace {
bool read_uint(std::string_view s, std::size_t pos, std::size_t len, unsigned& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return true;
}
}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view s) {
  if (s.size() != 16) return std::nullopt;
  const char sep = s[4];
  if ((sep != '-' && sep != '/') || s[7] != sep) return std::nullopt;
  if (s[10] != ' ' && s[10] != 'T') return std::nullopt;
  if (s[13] != ':') return std::nullopt;
  unsigned y = 0, mo = 0, d = 0, h = 0, mi = 0;
  if (!read_uint(s, 0, 4, y) || !read_uint(s, 5, 2, mo) || !read_uint(s, 8, 2, d) || !read_uint(s, 11, 2, h) ||
      !read_uint(s, 14, 2, mi)) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(y)} / std::chrono::month{mo} /
                                        std::chrono::day{d}};
  if (!ymd.ok() || h > 23 || mi > 59) return std::nullopt;
  return make_timestamp(static_cast<int>(y), mo, d, h, mi);
}

}  // namespace floodcast

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace floodcast {

// Minutes since 1970-01-01 00:00 UTC.
using Timestamp = std::int64_t;

inline constexpr Timestamp kStepMinutes = 30;

Timestamp make_timestamp(int year, unsigned month, unsigned day, unsigned hour = 0, unsigned minute = 0);

// "YYYY-MM-DD HH:MM"
std::string format_timestamp(Timestamp ts);

// Accepts "YYYY-MM-DD HH:MM", "YYYY-MM-DDTHH:MM" and "YYYY/MM/DD HH:MM".
std::optional<Timestamp> parse_timestamp(std::string_view text);

}  // namespace floodcast

#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace gr {

using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

inline constexpr Timestamp kEpoch{};

constexpr Seconds days(std::int64_t n) { return Seconds{n * 86400}; }
constexpr Seconds minutes(std::int64_t n) { return Seconds{n * 60}; }

// Accepts "YYYY-MM-DDTHH:MM:SS[.fff](Z|+HH:MM|-HH:MM)"; a space is also
// accepted as the date/time separator. Fractional seconds are truncated.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

// Always UTC with a trailing 'Z', no fractional part.
std::string format_rfc3339(Timestamp ts);

// Parses durations such as "15m", "30min", "180d", "7d", "3600s", "2h".
std::optional<Seconds> parse_duration(std::string_view text);

std::string format_duration(Seconds d);

inline std::int64_t to_unix(Timestamp ts) { return ts.time_since_epoch().count(); }
inline Timestamp from_unix(std::int64_t s) { return Timestamp{Seconds{s}}; }

}  // namespace gr

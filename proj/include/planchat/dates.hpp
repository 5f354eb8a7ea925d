#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace planchat {

/// Day-granular calendar date.
using Date = std::chrono::sys_days;

/// Parses a strict ISO-8601 calendar date (YYYY-MM-DD). Returns nullopt on any
/// deviation from that form or on an invalid day of month.
std::optional<Date> parse_date(std::string_view text);

std::string format_date(Date d);

/// Milliseconds since the Unix epoch; the timestamp unit used for messages and tasks.
using Timestamp = std::int64_t;

Timestamp now_millis();

}  // namespace planchat

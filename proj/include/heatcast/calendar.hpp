#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace heatcast {

using Date = std::chrono::sys_days;
using Timestamp = std::chrono::sys_seconds;

// Accepts "YYYY-MM-DD".
std::optional<Date> parse_date(std::string_view text);

// Accepts "YYYY-MM-DD[ T]HH:MM[:SS]" with an optional trailing "Z".
std::optional<Timestamp> parse_timestamp(std::string_view text);

std::string format_date(Date date);
std::string format_timestamp(Timestamp ts);

int year_of(Date date);
unsigned month_of(Date date);

}  // namespace heatcast

#pragma once

#include <string>
#include <vector>

namespace csht {

// ISO-8601 dates (YYYY-MM-DD) are the calendar currency throughout; the
// lexicographic order of the strings is the chronological order.

/// Days since 1970-01-01 for an ISO date.
long iso_to_days(const std::string& iso);

/// ISO date for a days-since-epoch count.
std::string days_to_iso(long days);

/// True for Monday..Friday.
bool is_weekday(const std::string& iso);

/// US trading days in [startIso, endIso], inclusive: weekdays minus the
/// built-in market holiday table (covers 2018 through mid-2023; dates past
/// the table are plain weekdays).
std::vector<std::string> trading_days(const std::string& start_iso,
                                      const std::string& end_iso);

/// The first `count` trading days starting at startIso.
std::vector<std::string> trading_days_from(const std::string& start_iso,
                                           int count);

}  // namespace csht

#include "csht/calendar.hpp"

#include <cstdio>
#include <stdexcept>
#include <unordered_set>

namespace csht {

namespace {

// Howard Hinnant's civil date algorithms.
long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

void civil_from_days(long z, int& y, int& m, int& d) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long yy = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

// US equity market holidays, 2018 through mid-2023. Includes the
// 2018-12-05 national day of mourning closure.
const std::unordered_set<std::string>& holiday_table() {
  static const std::unordered_set<std::string> holidays = {
      "2018-01-01", "2018-01-15", "2018-02-19", "2018-03-30", "2018-05-28",
      "2018-07-04", "2018-09-03", "2018-11-22", "2018-12-05", "2018-12-25",
      "2019-01-01", "2019-01-21", "2019-02-18", "2019-04-19", "2019-05-27",
      "2019-07-04", "2019-09-02", "2019-11-28", "2019-12-25",
      "2020-01-01", "2020-01-20", "2020-02-17", "2020-04-10", "2020-05-25",
      "2020-07-03", "2020-09-07", "2020-11-26", "2020-12-25",
      "2021-01-01", "2021-01-18", "2021-02-15", "2021-04-02", "2021-05-31",
      "2021-07-05", "2021-09-06", "2021-11-25", "2021-12-24",
      "2022-01-17", "2022-02-21", "2022-04-15", "2022-05-30", "2022-06-20",
      "2022-07-04", "2022-09-05", "2022-11-24", "2022-12-26",
      "2023-01-02", "2023-01-16", "2023-02-20", "2023-04-07", "2023-05-29",
  };
  return holidays;
}

}  // namespace

long iso_to_days(const std::string& iso) {
  int y = 0, m = 0, d = 0;
  if (iso.size() != 10 ||
      std::sscanf(iso.c_str(), "%4d-%2d-%2d", &y, &m, &d) != 3 ||
      m < 1 || m > 12 || d < 1 || d > 31) {
    throw std::invalid_argument("calendar: bad ISO date '" + iso + "'");
  }
  return days_from_civil(y, m, d);
}

std::string days_to_iso(long days) {
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

bool is_weekday(const std::string& iso) {
  const long z = iso_to_days(iso);
  // 1970-01-01 was a Thursday; weekday index 0 = Monday.
  const int wd = static_cast<int>(((z % 7) + 7 + 3) % 7);
  return wd < 5;
}

std::vector<std::string> trading_days(const std::string& start_iso,
                                      const std::string& end_iso) {
  const long a = iso_to_days(start_iso);
  const long b = iso_to_days(end_iso);
  if (a > b) throw std::invalid_argument("calendar: start after end");
  std::vector<std::string> out;
  const auto& holidays = holiday_table();
  for (long z = a; z <= b; ++z) {
    const std::string iso = days_to_iso(z);
    if (is_weekday(iso) && holidays.find(iso) == holidays.end()) out.push_back(iso);
  }
  return out;
}

std::vector<std::string> trading_days_from(const std::string& start_iso,
                                           int count) {
  if (count < 0) throw std::invalid_argument("calendar: negative count");
  std::vector<std::string> out;
  out.reserve(count);
  long z = iso_to_days(start_iso);
  const auto& holidays = holiday_table();
  while (static_cast<int>(out.size()) < count) {
    const std::string iso = days_to_iso(z);
    if (is_weekday(iso) && holidays.find(iso) == holidays.end()) out.push_back(iso);
    ++z;
  }
  return out;
}

}  // namespace csht

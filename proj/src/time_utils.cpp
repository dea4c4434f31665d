// SPDX-License-Identifier: Apache-2.0
#include "dse/time_utils.hpp"

#include <cstdio>

#include "dse/errors.hpp"

namespace dse {

namespace {

constexpr std::int64_t kMicrosPerDay = 86'400'000'000LL;

// Days since 1970-01-01 for a proleptic Gregorian civil date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

bool is_leap(std::int64_t y) {
  return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

unsigned last_day_of_month(std::int64_t y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return kDays[m - 1];
}

class Cursor {
public:
  explicit Cursor(std::string_view s) : s_(s) {}

  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }
  char take() { return done() ? '\0' : s_[pos_++]; }

  bool expect(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  // Reads exactly n digits into out; false if fewer are available.
  bool digits(int n, std::int64_t& out) {
    out = 0;
    for (int i = 0; i < n; ++i) {
      char c = peek();
      if (c < '0' || c > '9') return false;
      out = out * 10 + (c - '0');
      ++pos_;
    }
    return true;
  }

private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

[[noreturn]] void bad_timestamp(std::string_view text) {
  throw ParseError("invalid RFC 3339 timestamp: '" + std::string(text) + "'");
}

}  // namespace

Timestamp parse_rfc3339(std::string_view text) {
  Cursor cur(text);
  std::int64_t year, month, day, hour, minute, second;
  if (!cur.digits(4, year) || !cur.expect('-') || !cur.digits(2, month) ||
      !cur.expect('-') || !cur.digits(2, day)) {
    bad_timestamp(text);
  }
  char sep = cur.take();
  if (sep != 'T' && sep != 't' && sep != ' ') bad_timestamp(text);
  if (!cur.digits(2, hour) || !cur.expect(':') || !cur.digits(2, minute) ||
      !cur.expect(':') || !cur.digits(2, second)) {
    bad_timestamp(text);
  }
  if (month < 1 || month > 12 || day < 1 ||
      day > last_day_of_month(year, static_cast<unsigned>(month)) || hour > 23 ||
      minute > 59 || second > 59) {
    bad_timestamp(text);
  }

  std::int64_t frac_micros = 0;
  if (cur.peek() == '.') {
    cur.take();
    std::int64_t scale = 100'000;
    int count = 0;
    while (cur.peek() >= '0' && cur.peek() <= '9') {
      if (count < 6) frac_micros += (cur.take() - '0') * scale, scale /= 10;
      else cur.take();  // sub-microsecond digits are dropped
      ++count;
    }
    if (count == 0) bad_timestamp(text);
  }

  std::int64_t offset_seconds = 0;
  char tz = cur.take();
  if (tz == 'Z' || tz == 'z') {
    // UTC
  } else if (tz == '+' || tz == '-') {
    std::int64_t oh, om;
    if (!cur.digits(2, oh) || !cur.expect(':') || !cur.digits(2, om)) bad_timestamp(text);
    if (oh > 23 || om > 59) bad_timestamp(text);
    offset_seconds = (oh * 3600 + om * 60) * (tz == '+' ? 1 : -1);
  } else {
    bad_timestamp(text);
  }
  if (!cur.done()) bad_timestamp(text);

  std::int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                      static_cast<unsigned>(day));
  std::int64_t seconds = days * 86400 + hour * 3600 + minute * 60 + second - offset_seconds;
  return Timestamp{seconds * 1'000'000 + frac_micros};
}

std::string format_rfc3339(Timestamp t) {
  std::int64_t days = t.micros / kMicrosPerDay;
  std::int64_t rem = t.micros % kMicrosPerDay;
  if (rem < 0) {
    rem += kMicrosPerDay;
    --days;
  }
  std::int64_t year;
  unsigned month, day;
  civil_from_days(days, year, month, day);
  const std::int64_t secs = rem / 1'000'000;
  const std::int64_t frac = rem % 1'000'000;
  char buf[48];
  if (frac == 0) {
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(year), month, day,
                  static_cast<long long>(secs / 3600),
                  static_cast<long long>(secs / 60 % 60),
                  static_cast<long long>(secs % 60));
  } else {
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lld.%06lldZ",
                  static_cast<long long>(year), month, day,
                  static_cast<long long>(secs / 3600),
                  static_cast<long long>(secs / 60 % 60),
                  static_cast<long long>(secs % 60),
                  static_cast<long long>(frac));
  }
  return buf;
}

}  // namespace dse

#include "discourse/timeutil.hpp"

#include <cstdio>

#include "discourse/error.hpp"

namespace discourse {
namespace {

int digits(std::string_view s, std::size_t pos, std::size_t n) {
  if (pos + n > s.size()) throw ContractViolation("truncated date/time");
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') throw ContractViolation("non-digit in date/time");
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

void expect(std::string_view s, std::size_t pos, char c) {
  if (pos >= s.size() || s[pos] != c)
    throw ContractViolation(std::string("expected '") + c + "' in date/time");
}

std::chrono::sys_days parse_date(std::string_view s) {
  using namespace std::chrono;
  const int y = digits(s, 0, 4);
  expect(s, 4, '-');
  const int m = digits(s, 5, 2);
  expect(s, 7, '-');
  const int d = digits(s, 8, 2);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw ContractViolation("invalid calendar date: " + std::string(s.substr(0, 10)));
  return sys_days{ymd};
}

}  // namespace

Day Day::parse(std::string_view iso) {
  if (iso.size() != 10) throw ContractViolation("expected YYYY-MM-DD, got '" + std::string(iso) + "'");
  return Day(parse_date(iso));
}

std::string Day::iso() const {
  const std::chrono::year_month_day ymd{days_};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Day Day::week_start() const {
  const std::chrono::weekday wd{days_};
  const int since_monday = static_cast<int>((wd.c_encoding() + 6) % 7);
  return *this - since_monday;
}

Timestamp parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  const auto date = parse_date(s);
  if (s.size() < 19 || (s[10] != 'T' && s[10] != 't' && s[10] != ' '))
    throw ContractViolation("expected time part in '" + std::string(s) + "'");
  const int hh = digits(s, 11, 2);
  expect(s, 13, ':');
  const int mm = digits(s, 14, 2);
  expect(s, 16, ':');
  const int ss = digits(s, 17, 2);
  if (hh > 23 || mm > 59 || ss > 60) throw ContractViolation("time out of range");
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
  }
  if (pos >= s.size()) throw ContractViolation("timestamp lacks UTC offset");
  int offset_min = 0;
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    const int sign = s[pos] == '-' ? -1 : 1;
    const int oh = digits(s, pos + 1, 2);
    expect(s, pos + 3, ':');
    const int om = digits(s, pos + 4, 2);
    offset_min = sign * (oh * 60 + om);
    pos += 6;
  } else {
    throw ContractViolation("bad UTC offset in '" + std::string(s) + "'");
  }
  if (pos != s.size()) throw ContractViolation("trailing characters in timestamp");
  return Timestamp{date} + hours(hh) + minutes(mm) + seconds(ss) - minutes(offset_min);
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const hh_mm_ss<seconds> tod{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", Day(day).iso().c_str(),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

}  // namespace discourse

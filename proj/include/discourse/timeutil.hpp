#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace discourse {

using Timestamp = std::chrono::sys_seconds;

/// A UTC calendar date.
class Day {
 public:
  Day() = default;
  explicit Day(std::chrono::sys_days d) : days_(d) {}

  /// Parses strict `YYYY-MM-DD`; throws ContractViolation otherwise.
  static Day parse(std::string_view iso);
  static Day of(Timestamp t) { return Day(std::chrono::floor<std::chrono::days>(t)); }

  std::string iso() const;
  std::chrono::sys_days sys_days() const { return days_; }
  Day operator+(int n) const { return Day(days_ + std::chrono::days(n)); }
  Day operator-(int n) const { return Day(days_ - std::chrono::days(n)); }
  int operator-(Day other) const { return static_cast<int>((days_ - other.days_).count()); }

  /// Monday of the ISO week containing this day.
  Day week_start() const;

  auto operator<=>(const Day&) const = default;

 private:
  std::chrono::sys_days days_{};
};

/// Parses RFC 3339 timestamps: `YYYY-MM-DDTHH:MM:SS` followed by `Z` or a
/// `+HH:MM`/`-HH:MM` offset. Fractional seconds are truncated.
Timestamp parse_timestamp(std::string_view s);

/// `YYYY-MM-DDTHH:MM:SSZ`
std::string format_timestamp(Timestamp t);

}  // namespace discourse

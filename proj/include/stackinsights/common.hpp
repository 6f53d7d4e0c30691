#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stackinsights {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for invalid configuration or arguments; the CLI maps it to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

using Timestamp = std::chrono::sys_time<std::chrono::microseconds>;

// RFC 3339 in UTC, e.g. "2015-10-21T09:28:37Z"; fractional seconds are
// emitted only when nonzero.
std::string format_rfc3339(Timestamp t);

// Accepts 'T' or ' ' as the date/time separator, optional fractional seconds,
// and a 'Z' or +hh:mm offset (a missing zone is read as UTC).
Timestamp parse_rfc3339(std::string_view text);

double days_between(Timestamp from, Timestamp to);

}  // namespace stackinsights

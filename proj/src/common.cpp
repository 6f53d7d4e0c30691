#include "stackinsights/common.hpp"
#include "stackinsights/rng.hpp"

#include <charconv>
#include <cstdio>

namespace stackinsights {

namespace {

int parse_int(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) throw Error("bad timestamp: " + std::string(text));
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
  if (ec != std::errc{} || ptr != text.data() + pos + len) {
    throw Error("bad timestamp: " + std::string(text));
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) throw Error("bad timestamp: " + std::string(text));
}

}  // namespace

std::string format_rfc3339(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss<microseconds> tod{t - day};
  char buf[48];
  int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                        static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                        static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                        static_cast<int>(tod.seconds().count()));
  std::string out(buf, static_cast<std::size_t>(n));
  if (const auto us = tod.subseconds().count(); us != 0) {
    std::snprintf(buf, sizeof buf, ".%06lld", static_cast<long long>(us));
    out += buf;
  }
  out += 'Z';
  return out;
}

Timestamp parse_rfc3339(std::string_view text) {
  using namespace std::chrono;
  const int y = parse_int(text, 0, 4);
  expect(text, 4, '-');
  const int mo = parse_int(text, 5, 2);
  expect(text, 7, '-');
  const int d = parse_int(text, 8, 2);
  if (text.size() < 19 || (text[10] != 'T' && text[10] != 't' && text[10] != ' ')) {
    throw Error("bad timestamp: " + std::string(text));
  }
  const int h = parse_int(text, 11, 2);
  expect(text, 13, ':');
  const int mi = parse_int(text, 14, 2);
  expect(text, 16, ':');
  const int s = parse_int(text, 17, 2);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) throw Error("bad timestamp: " + std::string(text));

  std::size_t pos = 19;
  long long micros = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      if (digits < 6) {
        micros = micros * 10 + (text[pos] - '0');
        ++digits;
      }
      ++pos;
    }
    if (digits == 0) throw Error("bad timestamp: " + std::string(text));
    for (; digits < 6; ++digits) micros *= 10;
  }
  minutes offset{0};
  if (pos < text.size()) {
    const char z = text[pos];
    if ((z == 'Z' || z == 'z') && pos + 1 == text.size()) {
      pos = text.size();
    } else if ((z == '+' || z == '-') && pos + 6 == text.size()) {
      const int oh = parse_int(text, pos + 1, 2);
      expect(text, pos + 3, ':');
      const int om = parse_int(text, pos + 4, 2);
      offset = minutes{oh * 60 + om};
      if (z == '-') offset = -offset;
    } else {
      throw Error("bad timestamp: " + std::string(text));
    }
  }
  return Timestamp{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{s} + microseconds{micros} - offset;
}

double days_between(Timestamp from, Timestamp to) {
  return std::chrono::duration<double, std::ratio<86400>>(to - from).count();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stage) {
  return splitmix64(master ^ fnv1a64(stage));
}

}  // namespace stackinsights

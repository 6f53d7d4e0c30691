#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include <unistd.h>

#include <doctest.h>

#include "stackinsights/common.hpp"
#include "stackinsights/rng.hpp"
#include "stackinsights/scan.hpp"

namespace testing {

inline constexpr int kCases = 1000;

// Runs `body` on `cases` generators derived from `seed`; the failing case index is reported.
template <typename Body>
void for_all(std::uint64_t seed, Body&& body, int cases = kCases) {
  for (int c = 0; c < cases; ++c) {
    stackinsights::Rng rng(stackinsights::splitmix64(seed * 1000003u + static_cast<std::uint64_t>(c)));
    CAPTURE(c);
    body(rng);
  }
}

class TempDir {
 public:
  explicit TempDir(std::string_view tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("si-test-" + std::string(tag) + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, std::string_view content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline stackinsights::Timestamp at(std::string_view rfc3339) { return stackinsights::parse_rfc3339(rfc3339); }

inline stackinsights::Timestamp days_before(stackinsights::Timestamp t, double days) {
  return t - std::chrono::microseconds(static_cast<std::int64_t>(days * 86400e6));
}

inline std::string random_word(stackinsights::Rng& rng, std::size_t max_len = 8) {
  static constexpr std::string_view letters = "abcdefghijklmnopqrstuvwxyz";
  std::string w;
  const std::size_t n = 1 + rng.below(max_len);
  for (std::size_t i = 0; i < n; ++i) w += letters[rng.below(letters.size())];
  return w;
}

// Arbitrary but valid metadata record; times lie within ~4 years before `now`.
inline stackinsights::FileMeta random_file(stackinsights::Rng& rng, stackinsights::Timestamp now,
                                           std::string volume = "V1") {
  static constexpr std::string_view exts[] = {".txt", ".csv", ".docx", ".xml", ".sql", ".bin", ".log", ""};
  stackinsights::FileMeta f;
  f.volume_id = std::move(volume);
  f.file_name = random_word(rng) + "_" + random_word(rng) + std::to_string(rng.below(100));
  f.extension = std::string(exts[rng.below(std::size(exts))]);
  f.file_name += f.extension;
  const std::size_t depth = rng.below(4);
  for (std::size_t d = 0; d < depth; ++d) f.path += (d ? "/" : "") + random_word(rng, 4);
  f.user_folder = stackinsights::first_segment(f.path);
  f.created = days_before(now, rng.uniform() * 1500);
  const auto after = [&](stackinsights::Timestamp t) {
    const auto gap = std::chrono::duration_cast<std::chrono::microseconds>(now - t);
    return t + std::chrono::microseconds(static_cast<std::int64_t>(rng.uniform() * static_cast<double>(gap.count())));
  };
  f.last_modified = after(f.created);
  f.changed = after(f.last_modified);
  f.last_accessed = after(f.last_modified);
  f.file_size = rng.below(1u << 24);
  f.bytes_used = (f.file_size + 4095) / 4096 * 4096;
  return f;
}

}  // namespace testing

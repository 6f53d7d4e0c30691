#include "stackinsights/scan.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "stackinsights/csv.hpp"

namespace stackinsights {

namespace fs = std::filesystem;

namespace {

Timestamp from_statx(const struct statx_timestamp& ts) {
  using namespace std::chrono;
  return Timestamp{seconds{ts.tv_sec} + duration_cast<microseconds>(nanoseconds{ts.tv_nsec})};
}

std::string generic_relative(const fs::path& p) {
  std::string s = p.generic_string();
  if (s == ".") s.clear();
  return s;
}

}  // namespace

std::string extension_of(std::string_view file_name) {
  const auto dot = file_name.rfind('.');
  if (dot == std::string_view::npos) return {};
  std::string ext(file_name.substr(dot));
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::string first_segment(std::string_view path) {
  return std::string(path.substr(0, path.find('/')));
}

ScanResult scan_volume(const fs::path& root, std::string_view volume_id) {
  std::error_code ec;
  if (!fs::is_directory(root, ec) || ::access(root.c_str(), R_OK | X_OK) != 0) {
    throw Error("volume root is missing or unreadable: " + root.string());
  }
  ScanResult result;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
  if (ec) throw Error("cannot open volume root " + root.string() + ": " + ec.message());

  for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) {
      result.skipped.push_back({it->path().string(), ec.message()});
      ec.clear();
      continue;
    }
    const fs::directory_entry& entry = *it;
    if (entry.is_symlink(ec) || !entry.is_regular_file(ec)) continue;

    const fs::path rel = entry.path().lexically_relative(root);
    struct statx sx {};
    if (::statx(AT_FDCWD, entry.path().c_str(), AT_SYMLINK_NOFOLLOW,
                STATX_BASIC_STATS | STATX_BTIME, &sx) != 0) {
      result.skipped.push_back({rel.generic_string(), "stat failed"});
      continue;
    }
    if (::access(entry.path().c_str(), R_OK) != 0) {
      result.skipped.push_back({rel.generic_string(), "unreadable"});
      continue;
    }

    FileMeta meta;
    meta.volume_id = std::string(volume_id);
    meta.file_name = entry.path().filename().string();
    meta.extension = extension_of(meta.file_name);
    meta.path = generic_relative(rel.parent_path());
    meta.user_folder = first_segment(meta.path);
    meta.file_size = sx.stx_size;
    meta.bytes_used = (sx.stx_mask & STATX_BLOCKS) ? sx.stx_blocks * 512ULL : sx.stx_size;

    const bool has_mtime = sx.stx_mask & STATX_MTIME;
    meta.last_modified = has_mtime ? from_statx(sx.stx_mtime) : Timestamp{};
    auto pick = [&](unsigned mask, const struct statx_timestamp& ts) {
      if (sx.stx_mask & mask) return from_statx(ts);
      meta.timestamps_substituted = true;
      return meta.last_modified;
    };
    meta.last_accessed = pick(STATX_ATIME, sx.stx_atime);
    meta.changed = pick(STATX_CTIME, sx.stx_ctime);
    meta.created = pick(STATX_BTIME, sx.stx_btime);
    // Copies and restores keep the old mtime but get a fresh birth time.
    meta.created = std::min(meta.created, meta.last_modified);
    if (!has_mtime) meta.timestamps_substituted = true;
    result.files.push_back(std::move(meta));
  }

  std::sort(result.files.begin(), result.files.end(), [](const FileMeta& a, const FileMeta& b) {
    return std::tie(a.path, a.file_name) < std::tie(b.path, b.file_name);
  });
  return result;
}

nlohmann::json to_json(const FileMeta& m) {
  return nlohmann::json{{"volume_id", m.volume_id},
                        {"file_name", m.file_name},
                        {"extension", m.extension},
                        {"path", m.path},
                        {"last_accessed", format_rfc3339(m.last_accessed)},
                        {"created", format_rfc3339(m.created)},
                        {"changed", format_rfc3339(m.changed)},
                        {"last_modified", format_rfc3339(m.last_modified)},
                        {"file_size", m.file_size},
                        {"bytes_used", m.bytes_used},
                        {"user_folder", m.user_folder},
                        {"timestamps_substituted", m.timestamps_substituted}};
}

FileMeta file_meta_from_json(const nlohmann::json& j) {
  auto field = [&](const char* name) -> const nlohmann::json& {
    auto it = j.find(name);
    if (it == j.end()) throw Error(std::string("missing field `") + name + "`");
    return *it;
  };
  auto size_field = [&](const char* name) {
    const auto& v = field(name);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw Error(std::string("field `") + name + "` must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  };
  FileMeta m;
  m.volume_id = field("volume_id").get<std::string>();
  m.file_name = field("file_name").get<std::string>();
  m.extension = field("extension").get<std::string>();
  m.path = field("path").get<std::string>();
  m.last_accessed = parse_rfc3339(field("last_accessed").get<std::string>());
  m.created = parse_rfc3339(field("created").get<std::string>());
  m.changed = parse_rfc3339(field("changed").get<std::string>());
  m.last_modified = parse_rfc3339(field("last_modified").get<std::string>());
  m.file_size = size_field("file_size");
  m.bytes_used = size_field("bytes_used");
  m.user_folder = field("user_folder").get<std::string>();
  m.timestamps_substituted = j.value("timestamps_substituted", false);
  return m;
}

std::size_t write_corpus(std::span<const FileMeta> records, std::ostream& out) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  return records.size();
}

std::size_t write_corpus(std::span<const FileMeta> records, const fs::path& dest) {
  std::ofstream out(dest, std::ios::binary);
  if (!out) throw Error("cannot write corpus: " + dest.string());
  const auto n = write_corpus(records, out);
  if (!out) throw Error("write failed: " + dest.string());
  return n;
}

std::vector<FileMeta> read_corpus(std::istream& in) {
  std::vector<FileMeta> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(file_meta_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw Error("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::vector<FileMeta> read_corpus(const fs::path& src) {
  std::ifstream in(src, std::ios::binary);
  if (!in) throw Error("cannot read corpus: " + src.string());
  return read_corpus(in);
}

std::vector<IopsSample> read_iops(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = csv::split_line(line);
  if (header != std::vector<std::string>{"volume_id", "hour_start", "io_ops"}) {
    throw Error("iops csv: expected header volume_id,hour_start,io_ops");
  }
  std::map<std::pair<std::string, Timestamp>, std::uint64_t> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = csv::split_line(line);
    const std::string where = "iops csv row " + std::to_string(row);
    if (f.size() != 3) throw Error(where + ": expected 3 fields");
    long long ops = 0;
    try {
      std::size_t used = 0;
      ops = std::stoll(f[2], &used);
      if (used != f[2].size()) throw Error("trailing characters");
    } catch (const std::exception&) {
      throw Error(where + ": io_ops is not an integer");
    }
    if (ops < 0) throw Error(where + ": negative io_ops " + f[2]);
    Timestamp hour;
    try {
      hour = parse_rfc3339(f[1]);
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
    if (!rows.emplace(std::make_pair(f[0], hour), static_cast<std::uint64_t>(ops)).second) {
      throw Error(where + ": duplicate sample for volume " + f[0] + " at " + f[1]);
    }
  }
  std::vector<IopsSample> samples;
  samples.reserve(rows.size());
  for (auto& [key, ops] : rows) samples.push_back({key.first, key.second, ops});
  return samples;
}

std::vector<IopsSample> load_iops(const fs::path& src) {
  std::ifstream in(src);
  if (!in) throw Error("cannot read iops file: " + src.string());
  return read_iops(in);
}

void write_iops(std::span<const IopsSample> samples, std::ostream& out) {
  out << "volume_id,hour_start,io_ops\n";
  for (const auto& s : samples) {
    out << csv::escape(s.volume_id) << ',' << format_rfc3339(s.hour_start) << ',' << s.io_ops << '\n';
  }
}

}  // namespace stackinsights

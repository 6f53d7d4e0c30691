#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stackinsights/common.hpp"

namespace stackinsights {

/// Metadata of one file on a volume.
///
/// `path` is the directory part relative to the volume root, '/'-separated,
/// and never contains the file name. `user_folder` is the first segment of
/// `path` (empty for files at the root). When the source filesystem cannot
/// report a timestamp it is replaced by `last_modified` and
/// `timestamps_substituted` is set.
struct FileMeta {
  std::string volume_id;
  std::string file_name;
  std::string extension;
  std::string path;
  Timestamp last_accessed{};
  Timestamp created{};
  Timestamp changed{};
  Timestamp last_modified{};
  std::uint64_t file_size = 0;
  std::uint64_t bytes_used = 0;
  std::string user_folder;
  bool timestamps_substituted = false;

  std::string relative_path() const { return path.empty() ? file_name : path + "/" + file_name; }

  bool operator==(const FileMeta&) const = default;
};

struct SkippedFile {
  std::string path;
  std::string reason;
};

struct ScanResult {
  std::vector<FileMeta> files;
  std::vector<SkippedFile> skipped;
};

// Lowercased substring from the last '.', empty when the name has none.
std::string extension_of(std::string_view file_name);

std::string first_segment(std::string_view path);

// Walks `root` recursively without following symlinks. Records come back
// sorted by (path, file_name). A birth time later than the modification time
// is replaced by the modification time. Throws Error if the root is missing or unreadable.
ScanResult scan_volume(const std::filesystem::path& root, std::string_view volume_id);

nlohmann::json to_json(const FileMeta& meta);
FileMeta file_meta_from_json(const nlohmann::json& j);

std::size_t write_corpus(std::span<const FileMeta> records, std::ostream& out);
std::size_t write_corpus(std::span<const FileMeta> records, const std::filesystem::path& dest);
std::vector<FileMeta> read_corpus(std::istream& in);
std::vector<FileMeta> read_corpus(const std::filesystem::path& src);

struct IopsSample {
  std::string volume_id;
  Timestamp hour_start{};
  std::uint64_t io_ops = 0;

  bool operator==(const IopsSample&) const = default;
};

// CSV with header `volume_id,hour_start,io_ops`. The result is grouped by
// volume and sorted by hour; negative counts and duplicate (volume, hour)
// pairs are rejected.
std::vector<IopsSample> read_iops(std::istream& in);
std::vector<IopsSample> load_iops(const std::filesystem::path& src);
void write_iops(std::span<const IopsSample> samples, std::ostream& out);

}  // namespace stackinsights

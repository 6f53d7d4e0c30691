#include "stackinsights/hotness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "stackinsights/csv.hpp"

namespace stackinsights {

namespace {

using days = std::chrono::days;

constexpr auto kOneYear = days{365};
constexpr auto kThreeYears = days{3 * 365};
constexpr auto kTwoWeeks = days{14};

std::vector<std::string> top3(const std::map<std::string, std::uint64_t>& totals) {
  std::vector<std::pair<std::string, std::uint64_t>> v(totals.begin(), totals.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size() && i < 3; ++i) out.push_back(v[i].first);
  return out;
}

// Files without an extension are listed under this name in CSV reports.
constexpr std::string_view kNoExtension = "(none)";

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += i ? ";" : "";
    out += items[i].empty() ? std::string(kNoExtension) : items[i];
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(';', start);
    auto item = s.substr(start, pos - start);
    out.push_back(item == kNoExtension ? std::string() : std::move(item));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

const std::vector<std::string> kCsvHeader = {
    "volume_id", "total_size", "total_file_count", "total_file_size", "top3_extensions_by_size",
    "top3_extensions_by_count", "pct_not_modified_1y_count", "pct_not_modified_1y_size", "pct_not_modified_3y_count",
    "pct_not_modified_3y_size", "pct_not_accessed_1y_count", "pct_not_accessed_1y_size", "pct_not_accessed_3y_count",
    "pct_not_accessed_3y_size", "pct_not_accessed_after_2w_count", "pct_not_accessed_after_2w_size", "io_density",
    "io_density_min", "io_density_max"};

std::array<double VolumeProfile::*, 13> real_fields() {
  return {&VolumeProfile::pct_not_modified_1y_count,       &VolumeProfile::pct_not_modified_1y_size,
          &VolumeProfile::pct_not_modified_3y_count,       &VolumeProfile::pct_not_modified_3y_size,
          &VolumeProfile::pct_not_accessed_1y_count,       &VolumeProfile::pct_not_accessed_1y_size,
          &VolumeProfile::pct_not_accessed_3y_count,       &VolumeProfile::pct_not_accessed_3y_size,
          &VolumeProfile::pct_not_accessed_after_2w_count, &VolumeProfile::pct_not_accessed_after_2w_size,
          &VolumeProfile::io_density,                      &VolumeProfile::io_density_min,
          &VolumeProfile::io_density_max};
}

std::uint64_t parse_u64(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size() || s.front() == '-') throw Error("bad");
    return v;
  } catch (const std::exception&) {
    throw Error(where + ": '" + s + "' is not a nonnegative integer");
  }
}

}  // namespace

std::string_view to_string(HotnessBand band) {
  switch (band) {
    case HotnessBand::Cold: return "cold";
    case HotnessBand::Warm: return "warm";
    case HotnessBand::Hot: return "hot";
  }
  return "hot";
}

DensityStats io_density(std::span<const IopsSample> samples, double volume_size_bytes) {
  if (!(volume_size_bytes > 0)) throw Error("io_density: volume size must be positive");
  if (samples.empty()) throw Error("io_density: no IOPS samples");
  const double gb = volume_size_bytes / kBytesPerGB;
  DensityStats s{0, std::numeric_limits<double>::infinity(), 0};
  for (const auto& sample : samples) {
    const double d = static_cast<double>(sample.io_ops) / 3600.0 / gb;
    s.mean += d;
    s.min = std::min(s.min, d);
    s.max = std::max(s.max, d);
  }
  s.mean /= static_cast<double>(samples.size());
  return s;
}

bool not_accessed_after_2w(const FileMeta& file) { return file.last_accessed <= file.created + kTwoWeeks; }

VolumeProfile aggregate_volume(std::span<const FileMeta> files, Timestamp now, std::span<const IopsSample> samples,
                               std::uint64_t total_size) {
  if (files.empty()) throw Error("aggregate_volume: no files");
  VolumeProfile p;
  p.volume_id = files.front().volume_id;
  std::map<std::string, std::uint64_t> bytes_by_ext;
  struct Tally {
    std::uint64_t count = 0, size = 0;
    void add(const FileMeta& f) {
      ++count;
      size += f.file_size;
    }
  } mod1, mod3, acc1, acc3, after2w;
  for (const auto& f : files) {
    if (f.volume_id != p.volume_id) {
      throw Error("aggregate_volume: mixed volume ids " + p.volume_id + " and " + f.volume_id);
    }
    ++p.total_file_count;
    p.total_file_size += f.file_size;
    ++p.extension_counts[f.extension];
    bytes_by_ext[f.extension] += f.file_size;
    if (f.last_modified < now - kOneYear) mod1.add(f);
    if (f.last_modified < now - kThreeYears) mod3.add(f);
    if (f.last_accessed < now - kOneYear) acc1.add(f);
    if (f.last_accessed < now - kThreeYears) acc3.add(f);
    if (not_accessed_after_2w(f)) after2w.add(f);
  }
  const auto pct = [](std::uint64_t part, std::uint64_t whole) {
    return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
  };
  const auto fill = [&](const Tally& t, double& by_count, double& by_size) {
    by_count = pct(t.count, p.total_file_count);
    by_size = pct(t.size, p.total_file_size);
  };
  fill(mod1, p.pct_not_modified_1y_count, p.pct_not_modified_1y_size);
  fill(mod3, p.pct_not_modified_3y_count, p.pct_not_modified_3y_size);
  fill(acc1, p.pct_not_accessed_1y_count, p.pct_not_accessed_1y_size);
  fill(acc3, p.pct_not_accessed_3y_count, p.pct_not_accessed_3y_size);
  fill(after2w, p.pct_not_accessed_after_2w_count, p.pct_not_accessed_after_2w_size);
  p.top3_extensions_by_size = top3(bytes_by_ext);
  p.top3_extensions_by_count = top3(p.extension_counts);

  p.total_size = total_size > 0 ? total_size : p.total_file_size;
  std::vector<IopsSample> own;
  for (const auto& s : samples) {
    if (s.volume_id == p.volume_id) own.push_back(s);
  }
  if (!own.empty()) {
    const auto d = io_density(own, static_cast<double>(p.total_size));
    p.io_density = d.mean;
    p.io_density_min = d.min;
    p.io_density_max = d.max;
  }
  return p;
}

std::vector<VolumeProfile> aggregate_volumes(std::span<const FileMeta> files, Timestamp now,
                                             std::span<const IopsSample> samples,
                                             const std::map<std::string, std::uint64_t>& sizes) {
  std::map<std::string, std::vector<FileMeta>> by_volume;
  for (const auto& f : files) by_volume[f.volume_id].push_back(f);
  std::vector<VolumeProfile> out;
  for (const auto& [id, group] : by_volume) {
    const auto it = sizes.find(id);
    out.push_back(aggregate_volume(group, now, samples, it == sizes.end() ? 0 : it->second));
  }
  return out;
}

std::map<std::string, std::uint64_t> read_volume_sizes(const std::filesystem::path& src) {
  std::ifstream in(src);
  if (!in) throw Error("cannot read volume sizes: " + src.string());
  std::string line;
  if (!std::getline(in, line) || csv::split_line(line) != std::vector<std::string>{"volume_id", "total_size"}) {
    throw Error(src.string() + ": expected header volume_id,total_size");
  }
  std::map<std::string, std::uint64_t> sizes;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = csv::split_line(line);
    const std::string where = src.string() + " row " + std::to_string(row);
    if (f.size() != 2) throw Error(where + ": expected 2 fields");
    sizes[f[0]] = parse_u64(f[1], where);
  }
  return sizes;
}

nlohmann::json to_json(const VolumeProfile& p) {
  nlohmann::json j = {{"volume_id", p.volume_id},
                      {"total_size", p.total_size},
                      {"total_file_count", p.total_file_count},
                      {"total_file_size", p.total_file_size},
                      {"top3_extensions_by_size", p.top3_extensions_by_size},
                      {"top3_extensions_by_count", p.top3_extensions_by_count}};
  const auto fields = real_fields();
  for (std::size_t k = 0; k < fields.size(); ++k) j[kCsvHeader[6 + k]] = p.*fields[k];
  j["extension_counts"] = p.extension_counts;
  return j;
}

VolumeProfile volume_profile_from_json(const nlohmann::json& j) {
  VolumeProfile p;
  p.volume_id = j.at("volume_id").get<std::string>();
  p.total_size = j.at("total_size").get<std::uint64_t>();
  p.total_file_count = j.at("total_file_count").get<std::uint64_t>();
  p.total_file_size = j.at("total_file_size").get<std::uint64_t>();
  p.top3_extensions_by_size = j.at("top3_extensions_by_size").get<std::vector<std::string>>();
  p.top3_extensions_by_count = j.at("top3_extensions_by_count").get<std::vector<std::string>>();
  const auto fields = real_fields();
  for (std::size_t k = 0; k < fields.size(); ++k) p.*fields[k] = j.at(kCsvHeader[6 + k]).get<double>();
  if (j.contains("extension_counts")) {
    p.extension_counts = j.at("extension_counts").get<std::map<std::string, std::uint64_t>>();
  }
  return p;
}

void write_profiles_csv(std::span<const VolumeProfile> profiles, std::ostream& out) {
  for (std::size_t k = 0; k < kCsvHeader.size(); ++k) out << (k ? "," : "") << kCsvHeader[k];
  out << '\n';
  const auto fields = real_fields();
  for (const auto& p : profiles) {
    out << csv::escape(p.volume_id) << ',' << p.total_size << ',' << p.total_file_count << ',' << p.total_file_size
        << ',' << csv::escape(join(p.top3_extensions_by_size)) << ',' << csv::escape(join(p.top3_extensions_by_count));
    for (const auto field : fields) out << ',' << csv::number(p.*field);
    out << '\n';
  }
}

std::vector<VolumeProfile> read_profiles_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || csv::split_line(line) != kCsvHeader) throw Error("profiles csv: unexpected header");
  std::vector<VolumeProfile> out;
  const auto fields = real_fields();
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = csv::split_line(line);
    const std::string where = "profiles csv row " + std::to_string(row);
    if (f.size() != kCsvHeader.size()) throw Error(where + ": expected " + std::to_string(kCsvHeader.size()) + " fields");
    VolumeProfile p;
    p.volume_id = f[0];
    p.total_size = parse_u64(f[1], where);
    p.total_file_count = parse_u64(f[2], where);
    p.total_file_size = parse_u64(f[3], where);
    p.top3_extensions_by_size = split_list(f[4]);
    p.top3_extensions_by_count = split_list(f[5]);
    for (std::size_t k = 0; k < fields.size(); ++k) {
      try {
        p.*fields[k] = csv::parse_number(f[6 + k]);
      } catch (const std::exception& e) {
        throw Error(where + ": " + e.what());
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_profiles_json(std::span<const VolumeProfile> profiles, std::ostream& out) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : profiles) arr.push_back(to_json(p));
  out << arr.dump(2) << '\n';
}

std::vector<VolumeProfile> read_profiles_json(std::istream& in) {
  nlohmann::json arr;
  try {
    in >> arr;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("profiles json: ") + e.what());
  }
  std::vector<VolumeProfile> out;
  for (const auto& j : arr) out.push_back(volume_profile_from_json(j));
  return out;
}

Eigen::MatrixXd volume_points(std::span<const VolumeProfile> profiles) {
  const auto fields = real_fields();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(profiles.size()), 12);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& p = profiles[i];
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < 10; ++k) m(r, static_cast<Eigen::Index>(k)) = p.*fields[k];
    m(r, 10) = std::log10(1.0 + static_cast<double>(p.total_file_count));
    m(r, 11) = std::log10(1.0 + static_cast<double>(p.total_size));
  }
  for (Eigen::Index c = 0; c < m.cols() && m.rows() > 0; ++c) {
    const double lo = m.col(c).minCoeff(), hi = m.col(c).maxCoeff();
    if (hi > lo) m.col(c) = (m.col(c).array() - lo) / (hi - lo);
    else m.col(c).setZero();
  }
  return m;
}

}  // namespace stackinsights

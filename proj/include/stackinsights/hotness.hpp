#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "stackinsights/scan.hpp"

namespace stackinsights {

inline constexpr double kBytesPerGB = 1e9;

struct DensityStats {
  double mean = 0;  // IO per second per GB, averaged over hours
  double min = 0;
  double max = 0;
};

// Hourly density is (io_ops / 3600) / (volume_size / 1e9). Throws on a zero
// size or an empty series.
DensityStats io_density(std::span<const IopsSample> samples, double volume_size_bytes);

enum class HotnessBand { Cold, Warm, Hot };

struct HotnessBands {
  double cold_below = 0.01;
  double warm_below = 0.1;

  HotnessBand classify(double density) const {
    if (density < cold_below) return HotnessBand::Cold;
    return density < warm_below ? HotnessBand::Warm : HotnessBand::Hot;
  }
};

std::string_view to_string(HotnessBand band);

struct VolumeProfile {
  std::string volume_id;
  std::uint64_t total_size = 0;  // provisioned capacity
  std::uint64_t total_file_count = 0;
  std::uint64_t total_file_size = 0;
  std::vector<std::string> top3_extensions_by_size;
  std::vector<std::string> top3_extensions_by_count;
  double pct_not_modified_1y_count = 0, pct_not_modified_1y_size = 0;
  double pct_not_modified_3y_count = 0, pct_not_modified_3y_size = 0;
  double pct_not_accessed_1y_count = 0, pct_not_accessed_1y_size = 0;
  double pct_not_accessed_3y_count = 0, pct_not_accessed_3y_size = 0;
  double pct_not_accessed_after_2w_count = 0, pct_not_accessed_after_2w_size = 0;
  double io_density = 0;
  double io_density_min = 0;
  double io_density_max = 0;
  std::map<std::string, std::uint64_t> extension_counts;

  bool operator==(const VolumeProfile&) const = default;
};

// The file was never accessed later than two weeks after its creation.
bool not_accessed_after_2w(const FileMeta& file);

// `samples` may hold other volumes' series; only matching ones are used. With
// no samples the density fields stay 0. A zero `total_size` falls back to the
// total file size.
VolumeProfile aggregate_volume(std::span<const FileMeta> files, Timestamp now, std::span<const IopsSample> samples,
                               std::uint64_t total_size = 0);

// One profile per volume id in `files`, in id order.
std::vector<VolumeProfile> aggregate_volumes(std::span<const FileMeta> files, Timestamp now,
                                             std::span<const IopsSample> samples,
                                             const std::map<std::string, std::uint64_t>& sizes);

// CSV `volume_id,total_size` of provisioned volume capacities in bytes.
std::map<std::string, std::uint64_t> read_volume_sizes(const std::filesystem::path& src);

nlohmann::json to_json(const VolumeProfile& p);
VolumeProfile volume_profile_from_json(const nlohmann::json& j);

void write_profiles_csv(std::span<const VolumeProfile> profiles, std::ostream& out);
std::vector<VolumeProfile> read_profiles_csv(std::istream& in);
void write_profiles_json(std::span<const VolumeProfile> profiles, std::ostream& out);
std::vector<VolumeProfile> read_profiles_json(std::istream& in);

// Clustering coordinates per volume: the ten percentages, log10 of the file
// count and log10 of the total size, each min-max normalized over the set.
Eigen::MatrixXd volume_points(std::span<const VolumeProfile> profiles);

}  // namespace stackinsights

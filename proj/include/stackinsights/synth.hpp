#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stackinsights/common.hpp"

namespace stackinsights {

struct SyntheticVolume {
  std::string id;
  std::size_t files = 0;
  double sensitive_rate = 0.5;
  double io_density = 0.005;        // target IO/s per GB
  std::uint64_t total_size = 0;     // provisioned bytes
  double stale_share = 0.5;         // files last modified over a year ago
};

/// Parameters of a generated corpus. The defaults give seven volumes and
/// 21,000 files whose extensions and name tokens each agree with the planted
/// label with probability `signal`.
struct CorpusSpec {
  std::vector<SyntheticVolume> volumes;
  double signal = 0.9;
  double binary_share = 0.03;     // undecodable files, labeled unknown
  std::optional<double> sensitive_rate;  // overrides every volume's rate
  Timestamp now{};
  std::uint64_t seed = 42;
  int iops_hours = 672;  // four weeks

  static CorpusSpec defaults();
};

struct CorpusSummary {
  std::size_t files = 0;
  std::size_t sensitive = 0;
  std::size_t non_sensitive = 0;
  std::size_t unknown = 0;
};

// Writes `volumes/<id>/...`, `manifest.csv` (volume_id,path,file_name,label
// from scanning the written bytes with the default dictionary), `iops.csv`,
// `volumes.csv` and a ready-to-run `pipeline.toml`. Throws if `dest` exists
// and is not empty.
CorpusSummary gen_corpus(const CorpusSpec& spec, const std::filesystem::path& dest);

}  // namespace stackinsights

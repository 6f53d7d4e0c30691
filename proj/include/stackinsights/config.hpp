#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stackinsights/dictionary.hpp"
#include "stackinsights/features.hpp"
#include "stackinsights/hotness.hpp"
#include "stackinsights/learn.hpp"
#include "stackinsights/sample.hpp"

namespace stackinsights {

struct VolumeRoot {
  std::string id;
  std::filesystem::path root;
};

struct PlanThresholds {
  double x = 0.01;       // IO/s per GB, volume level
  double user_x = 0.5;   // fraction of files accessed in the past year, user level
  double y = 0.5;        // sensitivity
};

enum class SampleScope { All, Representatives };

/// Settings for every pipeline stage, read from one TOML file. Relative
/// paths are resolved against the file's directory. Per-stage seeds are
/// derived from `seed` by stage name.
struct PipelineConfig {
  std::vector<VolumeRoot> volumes;
  std::optional<std::filesystem::path> dictionary;
  std::optional<std::filesystem::path> iops;
  std::optional<std::filesystem::path> volume_sizes;
  std::optional<std::filesystem::path> truth;  // manifest with true labels, for evaluation only
  std::filesystem::path output_dir = "out";
  std::optional<Timestamp> now;
  std::uint64_t seed = 42;

  LabelRule label_rule;
  FeatureOptions features;
  SamplingConfig sampling;
  SampleScope scope = SampleScope::All;
  TrainConfig train;
  HotnessBands bands;
  PlanThresholds thresholds;
  int volume_clusters = 3;

  // Re-derives the stage seeds from `seed`.
  void propagate_seed();
  // Checks ranges and that referenced paths exist; throws ConfigError.
  void validate() const;
};

PipelineConfig parse_pipeline_config(std::string_view toml_text, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& src);

// A `[sampling]` table (or top-level sampling keys) from a TOML file.
SamplingConfig load_sampling_config(const std::filesystem::path& src);

SampleScope sample_scope_from_string(std::string_view s);
ClassWeight class_weight_from_string(std::string_view s);
LabelRule::Mode label_mode_from_string(std::string_view s);

}  // namespace stackinsights
